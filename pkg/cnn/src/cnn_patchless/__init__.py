"""Patchless scatterer-density regression on qushk-format rasters."""

from .data import DatasetError, PairDataset, load_manifest, sample_fingerprint
from .evaluate import ManifestOverlapError, MetricsReport, SampleMetrics, evaluate
from .infer import infer
from .loss import EmptyMaskError, loss_log10_mse, valid_mask
from .model import DensityNet, pad_to_stride, unpad
from .raster import Raster, RasterFormatError, read_raster, write_raster
from .train import (Checkpoint, CheckpointError, ConfigurationError,
                    DivergenceError, TrainConfig, load_checkpoint,
                    save_checkpoint, train)

__version__ = "0.1.0"

__all__ = [
    "Checkpoint",
    "CheckpointError",
    "ConfigurationError",
    "DatasetError",
    "DensityNet",
    "DivergenceError",
    "EmptyMaskError",
    "ManifestOverlapError",
    "MetricsReport",
    "PairDataset",
    "Raster",
    "RasterFormatError",
    "SampleMetrics",
    "TrainConfig",
    "evaluate",
    "infer",
    "load_checkpoint",
    "load_manifest",
    "loss_log10_mse",
    "pad_to_stride",
    "read_raster",
    "sample_fingerprint",
    "save_checkpoint",
    "train",
    "unpad",
    "valid_mask",
    "write_raster",
    "__version__",
]
