"""Dataset access for simulator-generated envelope/density pairs.

A dataset directory is whatever `qus simulate` leaves behind: a
``manifest.json`` listing env/den raster pairs plus the master seed and
per-sample spawn keys. Those keys identify the generative stream, so
they double as the fingerprint used to refuse train/test overlap.

Envelopes are divided by their own mean before entering the network;
density is a physical per-resolution-cell quantity while envelope
amplitude carries arbitrary system gain, so the input must not leak
absolute scale.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import torch
from torch.utils.data import Dataset

from .raster import read_raster


class DatasetError(ValueError):
    """Manifest or sample pair is unusable."""


def load_manifest(root) -> dict:
    root = Path(root)
    path = root / "manifest.json"
    if not path.exists():
        raise DatasetError(f"no manifest.json under {root}")
    try:
        manifest = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DatasetError(f"{path}: invalid JSON: {exc}") from exc
    if not isinstance(manifest, dict) or "samples" not in manifest:
        raise DatasetError(f"{path}: missing samples list")
    if "master_seed" not in manifest:
        raise DatasetError(f"{path}: missing master_seed")
    if not manifest["samples"]:
        raise DatasetError(f"{path}: empty dataset")
    return manifest


def sample_fingerprint(manifest: dict) -> set[tuple]:
    """Identity of each sample's generative stream: (master seed, spawn key)."""
    seed = manifest["master_seed"]
    return {(seed, tuple(s["spawn_key"])) for s in manifest["samples"]}


def normalize_envelope(env: np.ndarray) -> np.ndarray:
    mean = float(env.mean())
    if not np.isfinite(mean) or mean <= 0:
        raise DatasetError(f"envelope mean {mean} is not usable for normalization")
    return np.asarray(env, dtype=np.float32) / mean


class PairDataset(Dataset):
    """Loads every pair into memory; datasets here are desk-scale."""

    def __init__(self, root):
        self.root = Path(root)
        self.manifest = load_manifest(self.root)
        self.pairs: list[tuple[torch.Tensor, torch.Tensor]] = []
        self.spacing: tuple[float, float] | None = None
        for rec in self.manifest["samples"]:
            env = read_raster(self.root / rec["envelope"])
            den = read_raster(self.root / rec["density"])
            if env.data.shape != den.data.shape:
                raise DatasetError(
                    f"{rec['envelope']}: envelope dims {env.data.shape} "
                    f"!= density dims {den.data.shape}"
                )
            if self.spacing is None:
                self.spacing = env.spacing
            x = torch.from_numpy(normalize_envelope(env.data))[None]
            y = torch.from_numpy(den.data.astype(np.float32))[None]
            self.pairs.append((x, y))

    @property
    def fingerprint(self) -> set[tuple]:
        return sample_fingerprint(self.manifest)

    def __len__(self) -> int:
        return len(self.pairs)

    def __getitem__(self, idx: int) -> tuple[torch.Tensor, torch.Tensor]:
        return self.pairs[idx]
