"""Patch-based parametric maps, gain normalization, frame aggregation, metrics.

The map pipeline is estimator-agnostic: `estimate_map` slides overlapping
windows over an envelope frame, runs any scalar estimator per window, and
rasterizes by averaging every window that covers a pixel. Reference-phantom
gain removal fits a smooth positive depth curve and divides it out.
Multi-frame aggregation produces a mean map and a coefficient-of-variation
uncertainty map; metrics compare a map against ground truth.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Sequence

import numpy as np

from .errors import (
    ConfigurationError,
    DegenerateDataError,
    EmptyMapError,
    FitError,
    InsufficientDataError,
    ParameterError,
)
from .field_simulator import DensityMap, EnvelopeFrame
from .xu_estimator import SolverConfig, estimate_xu


@dataclass(frozen=True)
class PatchConfig:
    """Window geometry: extent per axis, overlap fraction, validity floor.

    ``patch_extent`` is in the same units as the frame spacing (samples
    when spacing is 1). A window is only estimated when it holds at least
    ``min_valid_samples`` strictly positive amplitudes.
    """

    patch_extent: tuple[float, float]
    overlap_fraction: float = 0.75
    min_valid_samples: int = 16

    def __post_init__(self):
        ea, el = float(self.patch_extent[0]), float(self.patch_extent[1])
        if not (ea > 0 and el > 0):
            raise ParameterError(f"patch_extent must be positive, got {self.patch_extent}")
        object.__setattr__(self, "patch_extent", (ea, el))
        if not (0.0 <= self.overlap_fraction < 1.0):
            raise ParameterError(
                f"overlap_fraction must lie in [0, 1), got {self.overlap_fraction}"
            )
        if self.min_valid_samples < 16:
            raise ParameterError(
                f"min_valid_samples must be >= 16, got {self.min_valid_samples}"
            )


@dataclass(frozen=True)
class PatchWindow:
    """Half-open pixel window [a0, a1) x [l0, l1) and its center pixel."""

    a0: int
    a1: int
    l0: int
    l1: int

    @property
    def center(self) -> tuple[int, int]:
        return ((self.a0 + self.a1 - 1) // 2, (self.l0 + self.l1 - 1) // 2)


def partition_patches(
    frame_dims: tuple[int, int],
    spacing: tuple[float, float],
    cfg: PatchConfig,
) -> list[PatchWindow]:
    """Regular window grid with stride = extent * (1 - overlap).

    Offsets are rounded to pixels; when the last regular window stops
    short of the frame edge an extra border-flush window is added, so
    every pixel is covered.
    """
    n_a, n_l = int(frame_dims[0]), int(frame_dims[1])
    ext_a = max(1, int(round(cfg.patch_extent[0] / float(spacing[0]))))
    ext_l = max(1, int(round(cfg.patch_extent[1] / float(spacing[1]))))
    if ext_a > n_a or ext_l > n_l:
        raise ConfigurationError(
            f"patch {ext_a}x{ext_l} samples exceeds frame {n_a}x{n_l}"
        )

    def offsets(extent: int, dim: int) -> list[int]:
        stride = extent * (1.0 - cfg.overlap_fraction)
        if stride <= 0:  # overlap 1 is excluded by config, guard anyway
            stride = 1.0
        n_steps = int(np.floor((dim - extent) / stride))
        offs = [int(round(i * stride)) for i in range(n_steps + 1)]
        if offs[-1] + extent < dim:
            offs.append(dim - extent)
        return sorted(set(offs))

    return [
        PatchWindow(a0=a, a1=a + ext_a, l0=l, l1=l + ext_l)
        for a in offsets(ext_a, n_a)
        for l in offsets(ext_l, n_l)
    ]


@dataclass(frozen=True)
class ParametricMap:
    """Estimates rasterized at frame resolution.

    Invalid pixels hold NaN and are False in ``validity``; they are never
    silently zero. ``alignment`` records the source frame geometry.
    """

    data: np.ndarray
    validity: np.ndarray
    alignment: dict = field(default_factory=dict)

    def __post_init__(self):
        d = np.asarray(self.data, dtype=np.float64)
        v = np.asarray(self.validity, dtype=bool)
        if d.shape != v.shape or d.ndim != 2:
            raise ParameterError("data and validity must be matching 2D arrays")
        if not np.all(np.isfinite(d[v])):
            raise ParameterError("valid pixels must be finite")
        d.flags.writeable = False
        v.flags.writeable = False
        object.__setattr__(self, "data", d)
        object.__setattr__(self, "validity", v)

    @property
    def valid_fraction(self) -> float:
        return float(self.validity.mean()) if self.validity.size else 0.0


@dataclass(frozen=True)
class UncertaintyMap:
    """Per-pixel coefficient of variation across frames; 0 where frames agree."""

    data: np.ndarray
    validity: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.data, dtype=np.float64)
        v = np.asarray(self.validity, dtype=bool)
        if d.shape != v.shape or d.ndim != 2:
            raise ParameterError("data and validity must be matching 2D arrays")
        if np.any(d[v] < 0.0):
            raise ParameterError("uncertainty must be >= 0 on valid pixels")
        d.flags.writeable = False
        v.flags.writeable = False
        object.__setattr__(self, "data", d)
        object.__setattr__(self, "validity", v)


def alpha_estimator(solver_cfg: SolverConfig | None = None) -> Callable[[np.ndarray], float]:
    """Per-window estimator returning alpha_hat from the XU solver."""
    cfg = solver_cfg if solver_cfg is not None else SolverConfig()

    def run(values: np.ndarray) -> float:
        return estimate_xu(values, cfg).alpha_hat

    return run


def estimate_map(
    frame: EnvelopeFrame,
    cfg: PatchConfig,
    estimator: Callable[[np.ndarray], float],
) -> ParametricMap:
    """Run ``estimator`` per window and average overlapping windows per pixel.

    Windows with fewer than ``min_valid_samples`` positive amplitudes, and
    windows where the estimator reports degenerate or insufficient data,
    are dropped. If every window drops, the map is empty and that is an
    error rather than an all-NaN raster.
    """
    windows = partition_patches(frame.dims, frame.spacing, cfg)
    data = frame.data
    acc = np.zeros(data.shape, dtype=np.float64)
    cover = np.zeros(data.shape, dtype=np.int64)
    n_valid = 0
    for win in windows:
        block = data[win.a0 : win.a1, win.l0 : win.l1]
        if int(np.count_nonzero(block > 0.0)) < cfg.min_valid_samples:
            continue
        try:
            value = float(estimator(block.ravel()))
        except (DegenerateDataError, InsufficientDataError):
            continue
        if not np.isfinite(value):
            continue
        acc[win.a0 : win.a1, win.l0 : win.l1] += value
        cover[win.a0 : win.a1, win.l0 : win.l1] += 1
        n_valid += 1
    if n_valid == 0:
        raise EmptyMapError(
            f"no valid patch among {len(windows)} "
            f"(min_valid_samples = {cfg.min_valid_samples})"
        )
    validity = cover > 0
    out = np.full(data.shape, np.nan)
    out[validity] = acc[validity] / cover[validity]
    return ParametricMap(
        data=out,
        validity=validity,
        alignment={
            "frame_dims": list(frame.dims),
            "spacing": list(frame.spacing),
            "patch_extent": list(cfg.patch_extent),
            "overlap_fraction": cfg.overlap_fraction,
            "windows": len(windows),
            "valid_windows": n_valid,
        },
    )


@dataclass(frozen=True)
class GainCurve:
    """Fitted positive gain per depth row."""

    depth_axis: np.ndarray
    fitted_values: np.ndarray
    fit_meta: dict = field(default_factory=dict)

    def __post_init__(self):
        d = np.asarray(self.depth_axis, dtype=np.int64)
        f = np.asarray(self.fitted_values, dtype=np.float64)
        if d.shape != f.shape or d.ndim != 1:
            raise ParameterError("depth_axis and fitted_values must be matching 1D arrays")
        if np.any(f <= 0.0) or not np.all(np.isfinite(f)):
            raise ParameterError("fitted gain must be finite and > 0 everywhere")
        d.flags.writeable = False
        f.flags.writeable = False
        object.__setattr__(self, "depth_axis", d)
        object.__setattr__(self, "fitted_values", f)


_GAIN_POLY_DEGREE = 4


def fit_gain(reference_frames: Sequence[EnvelopeFrame]) -> GainCurve:
    """Depth-gain curve from reference frames.

    The per-depth mean amplitude (over frames and lateral position) is fit
    with a degree-4 polynomial on its log and exponentiated, which keeps
    the curve positive by construction.
    """
    frames = list(reference_frames)
    if not frames:
        raise ParameterError("need at least one reference frame")
    dims = frames[0].dims
    for f in frames[1:]:
        if f.dims != dims:
            raise ConfigurationError(f"reference frames differ in dims: {f.dims} vs {dims}")
    profile = np.mean([f.data.mean(axis=1) for f in frames], axis=0)
    zero_rows = np.flatnonzero(profile <= 0.0)
    if zero_rows.size:
        raise FitError(
            f"{zero_rows.size} depth rows have zero mean amplitude "
            f"(first few: {zero_rows[:8].tolist()}); cannot fit a log-domain curve",
            bad_rows=zero_rows.tolist(),
        )
    depth = np.arange(dims[0])
    poly = np.polynomial.Polynomial.fit(depth, np.log(profile), deg=_GAIN_POLY_DEGREE)
    fitted = np.exp(poly(depth))
    return GainCurve(
        depth_axis=depth,
        fitted_values=fitted,
        fit_meta={
            "family": f"exp(poly{_GAIN_POLY_DEGREE}(log amplitude))",
            "coefficients": poly.convert().coef.tolist(),
            "n_frames": len(frames),
        },
    )


def apply_gain(frame: EnvelopeFrame, curve: GainCurve) -> EnvelopeFrame:
    """Divide each depth row by the fitted gain."""
    if curve.fitted_values.size != frame.dims[0]:
        raise ConfigurationError(
            f"gain curve length {curve.fitted_values.size} != frame axial dim {frame.dims[0]}"
        )
    provenance = dict(frame.provenance)
    provenance["gain_normalized"] = curve.fit_meta.get("family", "gain curve")
    return EnvelopeFrame(
        data=frame.data / curve.fitted_values[:, None],
        spacing=frame.spacing,
        provenance=provenance,
    )


def aggregate_frames(
    maps: Sequence[ParametricMap],
) -> tuple[ParametricMap, UncertaintyMap]:
    """Pixelwise mean and coefficient of variation over N_f frames.

    The uncertainty is the population standard deviation (1/N_f inside the
    square root) divided by the mean. Pixels where any frame is invalid,
    or where the mean is zero, are flagged invalid. Where all frames agree
    the uncertainty is exactly zero, including the single-frame case.
    """
    maps = list(maps)
    n_f = len(maps)
    if n_f < 1:
        raise ParameterError("need at least one map to aggregate")
    dims = maps[0].data.shape
    for m in maps[1:]:
        if m.data.shape != dims:
            raise ConfigurationError(f"map dims differ: {m.data.shape} vs {dims}")
    stack = np.stack([m.data for m in maps], axis=0)
    valid = np.logical_and.reduce([m.validity for m in maps])

    mean = stack.mean(axis=0)
    dev = np.sqrt(np.mean((stack - mean[None, :, :]) ** 2, axis=0))
    agree = np.ptp(stack, axis=0) == 0.0
    dev[agree] = 0.0  # all frames equal; keep the invariant exact

    nonzero = mean != 0.0
    ok = valid & nonzero
    unc = np.full(dims, np.nan)
    unc[ok] = dev[ok] / mean[ok]
    mean_out = np.where(valid, mean, np.nan)

    return (
        ParametricMap(data=mean_out, validity=ok, alignment=dict(maps[0].alignment)),
        UncertaintyMap(data=unc, validity=ok),
    )


class EvalMetrics(NamedTuple):
    rmse: float
    rrmse: float
    mae: float


def eval_metrics(predicted: ParametricMap, truth: DensityMap) -> EvalMetrics:
    """RMSE, RRMSE, MAE over the valid pixels.

    RRMSE is RMSE divided by the mean true value, which makes it
    dimensionless and comparable across density scales.
    """
    if predicted.data.shape != truth.data.shape:
        raise ConfigurationError(
            f"map dims {predicted.data.shape} != truth dims {truth.data.shape}"
        )
    mask = predicted.validity
    if not mask.any():
        raise EmptyMapError("no valid pixels to evaluate")
    err = predicted.data[mask] - truth.data[mask]
    rmse = float(np.sqrt(np.mean(err**2)))
    mae = float(np.mean(np.abs(err)))
    mean_truth = float(truth.data[mask].mean())
    if mean_truth == 0.0:
        raise DegenerateDataError("mean true value is zero; RRMSE undefined")
    return EvalMetrics(rmse=rmse, rrmse=rmse / mean_truth, mae=mae)
