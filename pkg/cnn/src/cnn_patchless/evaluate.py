"""Test-set evaluation with train/test overlap refusal."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .data import load_manifest, sample_fingerprint
from .raster import read_raster


class ManifestOverlapError(ValueError):
    """Test samples share a generative stream with the training set."""


@dataclass(frozen=True)
class SampleMetrics:
    rmse: float
    rrmse: float
    mae: float


@dataclass(frozen=True)
class MetricsReport:
    per_sample: tuple[SampleMetrics, ...]

    def _column(self, name: str) -> np.ndarray:
        return np.array([getattr(m, name) for m in self.per_sample])

    def table(self) -> str:
        lines = [f"{'metric':<8}{'mean':>10}{'std':>10}"]
        for name in ("rmse", "rrmse", "mae"):
            col = self._column(name)
            lines.append(f"{name.upper():<8}{col.mean():>10.4f}{col.std():>10.4f}")
        return "\n".join(lines)

    def mean(self, name: str) -> float:
        return float(self._column(name).mean())


def _sample_metrics(pred: np.ndarray, truth: np.ndarray) -> SampleMetrics:
    err = pred.astype(np.float64) - truth.astype(np.float64)
    rmse = float(np.sqrt(np.mean(err**2)))
    return SampleMetrics(
        rmse=rmse,
        rrmse=rmse / float(truth.mean()),
        mae=float(np.mean(np.abs(err))),
    )


def evaluate(predictor, dataset_root) -> MetricsReport:
    """Per-sample RMSE/RRMSE/MAE of `predictor` over a labeled dataset.

    `predictor` is anything with a ``predict(envelope) -> map`` method;
    if it also carries a ``train_fingerprint``, any sample overlap with
    the test manifest is refused rather than silently inflating scores.
    """
    root = Path(dataset_root)
    manifest = load_manifest(root)
    trained_on = getattr(predictor, "train_fingerprint", None)
    if trained_on:
        overlap = set(trained_on) & sample_fingerprint(manifest)
        if overlap:
            raise ManifestOverlapError(
                f"{len(overlap)} of {len(manifest['samples'])} test samples "
                f"were in the training set (master seed "
                f"{manifest['master_seed']}); evaluation would not be held-out"
            )
    rows = []
    for rec in manifest["samples"]:
        env = read_raster(root / rec["envelope"])
        truth = read_raster(root / rec["density"])
        pred = predictor.predict(env.data)
        if pred.shape != truth.data.shape:
            raise ValueError(
                f"{rec['envelope']}: prediction dims {pred.shape} "
                f"!= truth dims {truth.data.shape}"
            )
        rows.append(_sample_metrics(pred, truth.data))
    return MetricsReport(per_sample=tuple(rows))
