"""Log-moment statistics of envelope samples and their inversion to (alpha, k).

X and U compress an intensity sample I = A^2 into two scale-free numbers,

    X = <I log I> / <I> - <log I>
    U = <log I> - log <I>

(natural log throughout; U <= 0 by Jensen). `estimate_xu` inverts them on
the tabulated homodyned-K surface by nested bisection.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateDataError, InsufficientDataError, ParameterError
from .hk_model import ALPHA_BOUNDS, K_BOUNDS, SampleBatch, xu_table
from ._kernels import solve_xu, xu_moment_sums


@dataclass(frozen=True)
class XUStats:
    """The two log-moment statistics and the sample counts behind them.

    ``n_samples`` counts the strictly positive amplitudes actually used;
    ``n_zeros`` counts the exact zeros that were removed first.
    """

    x: float
    u: float
    n_samples: int
    n_zeros: int = 0


@dataclass(frozen=True)
class SolverConfig:
    """Bracket bounds and stopping policy for the nested bisection."""

    alpha_bounds: tuple[float, float] = ALPHA_BOUNDS
    k_bounds: tuple[float, float] = K_BOUNDS
    tolerance: float = 1e-3
    max_iterations: int = 60

    def __post_init__(self):
        a_lo, a_hi = self.alpha_bounds
        k_lo, k_hi = self.k_bounds
        if not (ALPHA_BOUNDS[0] <= a_lo < a_hi <= ALPHA_BOUNDS[1]):
            raise ParameterError(
                f"alpha_bounds must be ordered and within {ALPHA_BOUNDS}, got {self.alpha_bounds}"
            )
        if not (K_BOUNDS[0] <= k_lo < k_hi <= K_BOUNDS[1]):
            raise ParameterError(
                f"k_bounds must be ordered and within {K_BOUNDS}, got {self.k_bounds}"
            )
        if not (np.isfinite(self.tolerance) and self.tolerance > 0.0):
            raise ParameterError(f"tolerance must be > 0, got {self.tolerance}")
        if self.max_iterations < 1:
            raise ParameterError(f"max_iterations must be >= 1, got {self.max_iterations}")


@dataclass(frozen=True)
class HKEstimate:
    """Solver output: the matched point, its residual, and how it was reached.

    ``residual`` is max(|X error|, |U error|) re-evaluated from the
    theoretical surface at (alpha_hat, k_hat). ``bounds_hit`` flags any
    clamp against the bracket; ``iterations`` totals bisection steps
    across the outer, inner, and bracket-trimming loops. ``converged``
    means the residual met the configured tolerance.
    """

    alpha_hat: float
    k_hat: float
    residual: float
    iterations: int
    bounds_hit: bool
    converged: bool
    stats: XUStats = field(repr=False, default=None)


def _as_values(samples) -> np.ndarray:
    if isinstance(samples, SampleBatch):
        return samples.values
    return SampleBatch(values=samples).values


def compute_xu(samples) -> XUStats:
    """Sample X and U from a batch of amplitudes.

    Exact zeros are dropped first (log of zero) and reported in the
    result. Fewer than two positive amplitudes cannot form the statistics;
    a batch whose positive amplitudes are all identical carries X = U = 0
    exactly, which no distribution fit can use, so it is rejected as
    degenerate with those values attached.
    """
    values = _as_values(samples)
    n_pos, n_zeros, s_i, s_li, s_ili, vmin, vmax = xu_moment_sums(values)
    if n_pos < 2:
        raise InsufficientDataError(
            f"need at least 2 positive amplitudes, got {n_pos} "
            f"(plus {n_zeros} zeros removed)",
            n_usable=n_pos,
            n_zeros=n_zeros,
        )
    if vmin == vmax:
        raise DegenerateDataError(
            "all usable amplitudes are identical; X = U = 0 carries no information",
            x=0.0,
            u=0.0,
        )
    mean_i = s_i / n_pos
    mean_li = s_li / n_pos
    x = s_ili / s_i - mean_li
    u = mean_li - np.log(mean_i)
    # Jensen guarantees the signs; trim float dust so the invariants are exact.
    return XUStats(x=max(float(x), 0.0), u=min(float(u), 0.0), n_samples=n_pos, n_zeros=n_zeros)


def estimate_xu(samples, solver_cfg: SolverConfig | None = None) -> HKEstimate:
    """Invert sample (X, U) to (alpha_hat, k_hat) by nested bisection.

    The outer loop bisects alpha in the log domain along the curve where
    the inner loop has already matched X by bisecting k (X falls strictly
    as k grows, so that solve is always well posed); the sign of the U
    residual steers the outer loop. The outer bracket is first trimmed to
    the alpha range where the observed X is reachable with k in bounds.
    When the observed pair lies outside the surface entirely the nearest
    boundary point is returned with ``bounds_hit`` set; no input reaching
    this function fails.

    Both loops run to full bracket depth rather than stopping at the
    tolerance: U varies by less than the tolerance across wide alpha
    spans, and accepting the first midpoint inside tolerance there would
    bias the estimate toward the bracket center.
    """
    cfg = solver_cfg if solver_cfg is not None else SolverConfig()
    stats = compute_xu(samples)
    log_alphas, ks, tab_x, tab_u = xu_table()
    a_hat, k_hat, residual, hit, iters = solve_xu(
        stats.x,
        stats.u,
        log_alphas,
        ks,
        tab_x,
        tab_u,
        cfg.alpha_bounds[0],
        cfg.alpha_bounds[1],
        cfg.k_bounds[0],
        cfg.k_bounds[1],
        cfg.max_iterations,
    )
    return HKEstimate(
        alpha_hat=float(a_hat),
        k_hat=float(k_hat),
        residual=float(residual),
        iterations=int(iters),
        bounds_hit=bool(hit),
        converged=bool(residual <= cfg.tolerance),
        stats=stats,
    )


@dataclass(frozen=True)
class EnvelopeMoments:
    """Diagnostic amplitude statistics: SNR, skewness, kurtosis."""

    snr: float
    skewness: float
    kurtosis: float


def envelope_moments(samples) -> EnvelopeMoments:
    """SNR (mean over std), skewness, and kurtosis of the amplitudes.

    Central moments are population normalized (divide by n). Needs at
    least four samples and a non-constant batch.
    """
    values = _as_values(samples)
    if values.size < 4:
        raise InsufficientDataError(
            f"need at least 4 amplitudes, got {values.size}", n_usable=int(values.size)
        )
    mu = float(values.mean())
    d = values - mu
    m2 = float((d * d).mean())
    if m2 == 0.0:
        raise DegenerateDataError("amplitudes are constant; moments are undefined")
    sd = np.sqrt(m2)
    return EnvelopeMoments(
        snr=mu / sd,
        skewness=float((d**3).mean()) / m2**1.5,
        kurtosis=float((d**4).mean()) / m2**2,
    )
