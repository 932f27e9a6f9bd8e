"""Quantitative ultrasound toolkit around the homodyned-K envelope model.

Simulate speckle from scatterer grids, estimate (alpha, k) from envelope
patches via the X/U log-moment statistics, and assemble parametric maps.
"""

from __future__ import annotations

from .errors import (
    ConfigurationError,
    DegenerateDataError,
    EmptyMapError,
    FitError,
    InsufficientDataError,
    NumericalError,
    ParameterError,
    QushkError,
    RasterFormatError,
)
from .hk_model import (
    ALPHA_BOUNDS,
    K_BOUNDS,
    HKParams,
    SampleBatch,
    hk_pdf,
    hk_population_xu,
    hk_sample,
    hk_theoretical_xu,
)
from .xu_estimator import (
    EnvelopeMoments,
    HKEstimate,
    SolverConfig,
    XUStats,
    compute_xu,
    envelope_moments,
    estimate_xu,
)
from .field_simulator import (
    DatasetConfig,
    DensityMap,
    EnvelopeFrame,
    PhantomSpec,
    PSFSpec,
    Region,
    TRFGrid,
    build_trf,
    density_ground_truth,
    detect_envelope,
    generate_dataset,
    lag1_correlation,
    psf_kernel,
    simulate_frame,
    skip_decimate,
    synthesize_rf,
)
from .parametric_imaging import (
    EvalMetrics,
    GainCurve,
    ParametricMap,
    PatchConfig,
    PatchWindow,
    UncertaintyMap,
    aggregate_frames,
    alpha_estimator,
    apply_gain,
    estimate_map,
    eval_metrics,
    fit_gain,
    partition_patches,
)
from .raster import Raster, read_raster, write_raster
from .config import RunConfig, load_config
from ._backend import active_backend

__version__ = "0.1.0"

__all__ = [
    "ALPHA_BOUNDS",
    "K_BOUNDS",
    "ConfigurationError",
    "DatasetConfig",
    "DegenerateDataError",
    "DensityMap",
    "EmptyMapError",
    "EnvelopeFrame",
    "EnvelopeMoments",
    "EvalMetrics",
    "FitError",
    "GainCurve",
    "HKEstimate",
    "HKParams",
    "InsufficientDataError",
    "NumericalError",
    "ParameterError",
    "ParametricMap",
    "PatchConfig",
    "PatchWindow",
    "PhantomSpec",
    "PSFSpec",
    "QushkError",
    "Raster",
    "RasterFormatError",
    "Region",
    "RunConfig",
    "SampleBatch",
    "SolverConfig",
    "TRFGrid",
    "UncertaintyMap",
    "XUStats",
    "active_backend",
    "aggregate_frames",
    "alpha_estimator",
    "apply_gain",
    "build_trf",
    "compute_xu",
    "density_ground_truth",
    "detect_envelope",
    "envelope_moments",
    "estimate_map",
    "estimate_xu",
    "eval_metrics",
    "fit_gain",
    "generate_dataset",
    "hk_pdf",
    "hk_population_xu",
    "hk_sample",
    "hk_theoretical_xu",
    "lag1_correlation",
    "load_config",
    "partition_patches",
    "psf_kernel",
    "read_raster",
    "simulate_frame",
    "skip_decimate",
    "synthesize_rf",
    "write_raster",
    "__version__",
]
