"""Training loop and checkpoint plumbing."""

from __future__ import annotations

import logging
import os
import tempfile
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import torch
from torch.utils.data import DataLoader, Subset

from .data import PairDataset, normalize_envelope
from .loss import EmptyMaskError, loss_log10_mse
from .model import DensityNet, pad_to_stride, unpad

log = logging.getLogger(__name__)

_OPTIMIZERS = {"radam": torch.optim.RAdam, "adam": torch.optim.Adam}
_BACKBONES = ("encdec",)


class ConfigurationError(ValueError):
    """Training configuration out of range or unknown."""


class DivergenceError(RuntimeError):
    """Loss stopped being finite."""

    def __init__(self, message: str, epoch: int, step: int, value: float):
        super().__init__(message)
        self.epoch = epoch
        self.step = step
        self.value = value


class CheckpointError(ValueError):
    """Checkpoint payload unusable or inconsistent."""


@dataclass(frozen=True)
class TrainConfig:
    dataset: str
    epochs: int = 200
    batch_size: int = 4
    learning_rate: float = 3e-3
    optimizer: str = "radam"
    lr_schedule: str = "constant"
    backbone: str = "encdec"
    base_channels: int = 16
    depth: int = 2
    val_fraction: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 1:
            raise ConfigurationError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 1:
            raise ConfigurationError(f"batch_size must be >= 1, got {self.batch_size}")
        if not self.learning_rate > 0:
            raise ConfigurationError(
                f"learning_rate must be > 0, got {self.learning_rate}"
            )
        if self.optimizer not in _OPTIMIZERS:
            raise ConfigurationError(
                f"optimizer must be one of {sorted(_OPTIMIZERS)}, "
                f"got {self.optimizer!r}"
            )
        if self.lr_schedule not in ("constant", "cosine"):
            raise ConfigurationError(
                f"lr_schedule must be 'constant' or 'cosine', "
                f"got {self.lr_schedule!r}"
            )
        if self.backbone not in _BACKBONES:
            raise ConfigurationError(f"unknown backbone {self.backbone!r}")
        if not 0.0 <= self.val_fraction < 1.0:
            raise ConfigurationError(
                f"val_fraction must be in [0, 1), got {self.val_fraction}"
            )


@dataclass
class Checkpoint:
    """Weights plus everything needed to run them without the dataset."""

    state_dict: dict
    config: dict
    history: dict = field(default_factory=lambda: {"train": [], "val": []})
    train_fingerprint: set = field(default_factory=set)
    _model: DensityNet | None = field(default=None, repr=False, compare=False)

    def model(self) -> DensityNet:
        if self._model is None:
            net = DensityNet(
                base_channels=self.config["base_channels"],
                depth=self.config["depth"],
            )
            try:
                net.load_state_dict(self.state_dict)
            except RuntimeError as exc:
                raise CheckpointError(f"weights do not fit config: {exc}") from exc
            net.eval()
            self._model = net
        return self._model

    def predict(self, envelope: np.ndarray) -> np.ndarray:
        """Envelope frame -> positive density map of the same dims."""
        net = self.model()
        x = torch.from_numpy(normalize_envelope(np.asarray(envelope)))[None, None]
        x, pads = pad_to_stride(x, net.stride)
        with torch.no_grad():
            z = unpad(net(x), pads)
        return np.power(10.0, z[0, 0].numpy()).astype(np.float32)


def train(cfg: TrainConfig) -> Checkpoint:
    torch.manual_seed(cfg.seed)
    dataset = PairDataset(cfg.dataset)

    n_val = int(round(cfg.val_fraction * len(dataset)))
    if n_val:
        order = np.random.default_rng(cfg.seed).permutation(len(dataset))
        train_set = Subset(dataset, order[n_val:].tolist())
        val_set = Subset(dataset, order[:n_val].tolist())
    else:
        train_set = dataset
        val_set = dataset  # no holdout: validation curve tracks the train set

    loader = DataLoader(
        train_set,
        batch_size=cfg.batch_size,
        shuffle=True,
        generator=torch.Generator().manual_seed(cfg.seed),
    )
    net = DensityNet(base_channels=cfg.base_channels, depth=cfg.depth)
    opt = _OPTIMIZERS[cfg.optimizer](net.parameters(), lr=cfg.learning_rate)
    sched = None
    if cfg.lr_schedule == "cosine":
        sched = torch.optim.lr_scheduler.CosineAnnealingLR(opt, T_max=cfg.epochs)

    history = {"train": [], "val": []}
    for epoch in range(cfg.epochs):
        net.train()
        batch_losses = []
        for step, (x, y) in enumerate(loader):
            opt.zero_grad()
            z = net(x)
            try:
                loss = loss_log10_mse(torch.pow(10.0, z), y)
            except EmptyMaskError as exc:
                # output underflowed out of the positive range: same failure
                raise DivergenceError(
                    f"network output collapsed to non-positive values at "
                    f"epoch {epoch + 1}, step {step + 1}; "
                    f"lower the learning rate",
                    epoch=epoch + 1, step=step + 1, value=float("nan"),
                ) from exc
            value = float(loss.detach())
            if not np.isfinite(value):
                raise DivergenceError(
                    f"loss {value} at epoch {epoch + 1}, step {step + 1}; "
                    f"lower the learning rate",
                    epoch=epoch + 1, step=step + 1, value=value,
                )
            loss.backward()
            opt.step()
            batch_losses.append(value)
        if sched is not None:
            sched.step()
        history["train"].append(float(np.mean(batch_losses)))
        history["val"].append(_eval_loss(net, val_set))
        log.info("epoch %4d/%d  train %.6f  val %.6f", epoch + 1, cfg.epochs,
                 history["train"][-1], history["val"][-1])

    return Checkpoint(
        state_dict=net.state_dict(),
        config=asdict(cfg),
        history=history,
        train_fingerprint=dataset.fingerprint,
    )


def _eval_loss(net: DensityNet, dataset) -> float:
    net.eval()
    losses = []
    with torch.no_grad():
        for x, y in DataLoader(dataset, batch_size=8):
            losses.append(float(loss_log10_mse(torch.pow(10.0, net(x)), y)))
    return float(np.mean(losses))


def save_checkpoint(ckpt: Checkpoint, path) -> Path:
    """Atomic write: a crash mid-save never leaves a torn checkpoint."""
    path = Path(path)
    payload = {
        "state_dict": ckpt.state_dict,
        "config": ckpt.config,
        "history": ckpt.history,
        "train_fingerprint": sorted(
            [seed, list(key)] for seed, key in ckpt.train_fingerprint
        ),
    }
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            torch.save(payload, fh)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def load_checkpoint(path) -> Checkpoint:
    path = Path(path)
    try:
        payload = torch.load(path, map_location="cpu", weights_only=True)
    except FileNotFoundError:
        raise
    except Exception as exc:
        raise CheckpointError(f"{path}: unreadable checkpoint: {exc}") from exc
    missing = {"state_dict", "config", "history"} - set(payload)
    if missing:
        raise CheckpointError(f"{path}: missing fields {sorted(missing)}")
    fingerprint = {
        (seed, tuple(key)) for seed, key in payload.get("train_fingerprint", [])
    }
    return Checkpoint(
        state_dict=payload["state_dict"],
        config=payload["config"],
        history=payload["history"],
        train_fingerprint=fingerprint,
    )
