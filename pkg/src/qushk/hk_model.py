"""Homodyned-K envelope model.

The model describes an envelope amplitude A whose intensity I = A squared
mixes a coherent power component with diffuse scattering whose effective
scatterer number fluctuates. Parameters: coherent amplitude ``epsilon``,
diffuse scale ``sigma2``, clustering parameter ``alpha``. The derived ratio
k = epsilon^2 / (2 sigma2 alpha) measures coherent against diffuse power,
and m = epsilon^2 + 2 sigma2 alpha is the mean intensity.

Three views of the same distribution live here: the density (`hk_pdf`),
the sampler (`hk_sample`), and the population log-moment statistics
(`hk_population_xu`, tabulated and interpolated by `hk_theoretical_xu`).
"""

from __future__ import annotations

import threading
from dataclasses import dataclass

import numpy as np
from scipy.special import exp1, gammaincc, gammaln, i0e, psi

from .errors import NumericalError, ParameterError
from ._kernels import interp_xu

EULER_GAMMA = 0.5772156649015329

# Solver and table domain. Outside it the model is not distinguishable from
# its Rayleigh/Rice limits at realistic sample counts.
ALPHA_BOUNDS = (0.5, 100.0)
K_BOUNDS = (0.0, 10.0)

ALPHA_GRID = np.geomspace(ALPHA_BOUNDS[0], ALPHA_BOUNDS[1], 64)
# Quadratic spacing: X and U bend hardest near k = 0, so nodes cluster there.
K_GRID = K_BOUNDS[1] * (np.arange(33) / 32.0) ** 2
LOG_ALPHA_GRID = np.log(ALPHA_GRID)

_QUAD_ORDER = 20
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(_QUAD_ORDER)

_TABLE_LOCK = threading.Lock()
_TABLE: tuple[np.ndarray, np.ndarray] | None = None


@dataclass(frozen=True)
class HKParams:
    """Distribution parameters: epsilon >= 0, sigma2 > 0, alpha > 0."""

    epsilon: float
    sigma2: float
    alpha: float

    def __post_init__(self):
        eps = float(self.epsilon)
        s2 = float(self.sigma2)
        a = float(self.alpha)
        if not (np.isfinite(eps) and eps >= 0.0):
            raise ParameterError(f"epsilon must be finite and >= 0, got {self.epsilon}")
        if not (np.isfinite(s2) and s2 > 0.0):
            raise ParameterError(f"sigma2 must be finite and > 0, got {self.sigma2}")
        if not (np.isfinite(a) and a > 0.0):
            raise ParameterError(f"alpha must be finite and > 0, got {self.alpha}")
        object.__setattr__(self, "epsilon", eps)
        object.__setattr__(self, "sigma2", s2)
        object.__setattr__(self, "alpha", a)

    @property
    def k(self) -> float:
        """Coherent-to-diffuse power ratio epsilon^2 / (2 sigma2 alpha)."""
        return self.epsilon**2 / (2.0 * self.sigma2 * self.alpha)

    @property
    def mean_intensity(self) -> float:
        """E[A^2] = epsilon^2 + 2 sigma2 alpha."""
        return self.epsilon**2 + 2.0 * self.sigma2 * self.alpha

    @classmethod
    def from_alpha_k(cls, alpha: float, k: float, mean_intensity: float = 1.0) -> "HKParams":
        """Build parameters from (alpha, k) at a chosen mean intensity."""
        if not (np.isfinite(alpha) and alpha > 0.0):
            raise ParameterError(f"alpha must be finite and > 0, got {alpha}")
        if not (np.isfinite(k) and k >= 0.0):
            raise ParameterError(f"k must be finite and >= 0, got {k}")
        if not (np.isfinite(mean_intensity) and mean_intensity > 0.0):
            raise ParameterError(f"mean_intensity must be > 0, got {mean_intensity}")
        eps = np.sqrt(k * mean_intensity / (1.0 + k))
        s2 = mean_intensity / (2.0 * alpha * (1.0 + k))
        return cls(epsilon=float(eps), sigma2=float(s2), alpha=float(alpha))


@dataclass(frozen=True)
class SampleBatch:
    """An ordered batch of nonnegative envelope amplitudes."""

    values: np.ndarray

    def __post_init__(self):
        v = np.ascontiguousarray(np.asarray(self.values, dtype=np.float64).ravel())
        if v.size and not np.all(np.isfinite(v)):
            raise ParameterError("amplitudes must be finite")
        if v.size and v.min() < 0.0:
            raise ParameterError("amplitudes must be >= 0")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @property
    def count(self) -> int:
        return int(self.values.size)

    def __len__(self) -> int:
        return self.count


def _gamma_loggrid(alpha: float) -> tuple[np.ndarray, np.ndarray]:
    """Nodes w and weights for E over w ~ Gamma(alpha, 1), in log space.

    Composite Gauss-Legendre panels over t = log w. The support bounds
    cover the Gamma mass to far below double precision for any alpha > 0;
    panel width shrinks with alpha so the sharpening peak stays resolved.
    """
    t_lo = np.log(alpha) - 45.0 / alpha - 14.0 / np.sqrt(alpha) - 3.0
    t_hi = np.log(alpha + 45.0 * np.sqrt(alpha) + 90.0) + 0.5
    delta = min(0.75, 1.6 / np.sqrt(alpha))
    n_panels = int(np.ceil((t_hi - t_lo) / delta))
    edges = np.linspace(t_lo, t_hi, n_panels + 1)
    half = 0.5 * (edges[1] - edges[0])
    mid = 0.5 * (edges[:-1] + edges[1:])
    t = (mid[:, None] + half * _GL_NODES[None, :]).ravel()
    wt = np.broadcast_to(half * _GL_WEIGHTS[None, :], (n_panels, _QUAD_ORDER)).ravel()
    # Gamma density times dw/dt collected in one exponent.
    return np.exp(t), wt * np.exp(alpha * t - np.exp(t) - gammaln(alpha))


def hk_pdf(a, params: HKParams):
    """Density of the envelope amplitude at ``a``.

    Evaluated by compounding: conditional on the Gamma(alpha, 1) mixer w
    the amplitude is Rice with scale sigma2 * w, and the closed-form Rice
    density is integrated over w by fixed high-order quadrature. This is
    exactly equivalent to the Bessel-integral form of the density (the
    Gamma Laplace transform supplies its (1 + u^2 sigma2 / 2)^(-alpha)
    factor) but avoids truncating an oscillatory integral.

    ``a`` may be a scalar or an array; the return matches its shape.
    Note the density is unbounded at a = epsilon when alpha <= 0.5 and
    epsilon > 0; values returned there are large but finite.
    """
    if not isinstance(params, HKParams):
        raise ParameterError("params must be an HKParams instance")
    a_arr = np.asarray(a, dtype=np.float64)
    if not np.all(np.isfinite(a_arr)):
        raise ParameterError("amplitude must be finite")
    if a_arr.size and a_arr.min() < 0.0:
        raise ParameterError("amplitude must be >= 0")

    w, qw = _gamma_loggrid(params.alpha)
    tail = float(gammaincc(params.alpha, w[-1]))
    s2 = params.sigma2 * w  # per-node Rice scale
    flat = a_arr.ravel()[None, :]
    s2col = s2[:, None]
    with np.errstate(over="ignore", under="ignore"):
        z = flat * params.epsilon / s2col
        rice = flat / s2col * np.exp(-((flat - params.epsilon) ** 2) / (2.0 * s2col)) * i0e(z)
        dens = qw @ rice
    if not np.all(np.isfinite(dens)) or tail > 1e-8:
        raise NumericalError(
            "mixing quadrature did not converge",
            truncation_point=float(w[-1]),
            estimated_tail=tail,
        )
    dens = dens.reshape(a_arr.shape)
    return float(dens) if np.isscalar(a) or a_arr.shape == () else dens


def hk_sample(params: HKParams, n: int, seed) -> SampleBatch:
    """Draw n amplitudes via the compound construction.

    w ~ Gamma(alpha, scale 1), then X, Y ~ Normal(0, sigma2 w) and
    A = hypot(epsilon + X, Y). The Gamma variates come from numpy's
    Generator (Marsaglia-Tsang squeeze; shapes below 1 are boosted from
    shape + 1 with a uniform power factor). Deterministic given seed.
    """
    if not isinstance(params, HKParams):
        raise ParameterError("params must be an HKParams instance")
    n = int(n)
    if n < 0:
        raise ParameterError(f"n must be >= 0, got {n}")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    w = rng.gamma(params.alpha, 1.0, n)
    s = np.sqrt(params.sigma2 * w)
    x = params.epsilon + rng.standard_normal(n) * s
    y = rng.standard_normal(n) * s
    return SampleBatch(values=np.hypot(x, y))


def hk_population_xu(alpha: float, k: float) -> tuple[float, float]:
    """Exact population X and U at unit mean intensity, any alpha > 0, k >= 0.

    Conditional on the mixer w the intensity is noncentral chi-square with
    two degrees of freedom, whose log moments reduce to the exponential
    integral: with s2 the conditional diffuse power and mu = eps^2/(2 s2),

        E[log I | w]   = log(eps^2) + E1(mu)
        E[I log I | w] = (2 s2 + eps^2)(log(eps^2) + E1(mu)) + 2 s2 (2 - exp(-mu))

    and the Gamma expectation over w is taken by the same fixed quadrature
    the density uses. At k = 0 both statistics have closed forms. This
    function is the ground truth the lookup table is built from; it is not
    restricted to the table domain.
    """
    alpha = float(alpha)
    k = float(k)
    if not (np.isfinite(alpha) and alpha > 0.0):
        raise ParameterError(f"alpha must be finite and > 0, got {alpha}")
    if not (np.isfinite(k) and k >= 0.0):
        raise ParameterError(f"k must be finite and >= 0, got {k}")
    if k == 0.0:
        return 1.0 + 1.0 / alpha, float(psi(alpha) - np.log(alpha) - EULER_GAMMA)
    eps2 = k / (1.0 + k)
    sigma2 = 1.0 / (2.0 * alpha * (1.0 + k))
    w, qw = _gamma_loggrid(alpha)
    s2 = sigma2 * w
    mu = eps2 / (2.0 * s2)
    with np.errstate(over="ignore", under="ignore"):
        e1 = exp1(mu)
        expm = np.exp(-mu)
    base = np.log(eps2) + e1
    e_logi = float(qw @ base)
    e_ilogi = float(qw @ ((2.0 * s2 + eps2) * base + 2.0 * s2 * (2.0 - expm)))
    return e_ilogi - e_logi, e_logi


def _build_table() -> tuple[np.ndarray, np.ndarray]:
    nk = K_GRID.size
    tab_x = np.empty((ALPHA_GRID.size, nk))
    tab_u = np.empty_like(tab_x)
    kcols = K_GRID[1:]
    eps2 = kcols / (1.0 + kcols)
    log_eps2 = np.log(eps2)
    for i, alpha in enumerate(ALPHA_GRID):
        tab_x[i, 0] = 1.0 + 1.0 / alpha
        tab_u[i, 0] = psi(alpha) - np.log(alpha) - EULER_GAMMA
        sigma2 = 1.0 / (2.0 * alpha * (1.0 + kcols))
        w, qw = _gamma_loggrid(alpha)
        s2 = sigma2[None, :] * w[:, None]
        mu = eps2[None, :] / (2.0 * s2)
        with np.errstate(over="ignore", under="ignore"):
            e1 = exp1(mu)
            expm = np.exp(-mu)
        base = log_eps2[None, :] + e1
        e_logi = qw @ base
        e_ilogi = qw @ ((2.0 * s2 + eps2[None, :]) * base + 2.0 * s2 * (2.0 - expm))
        tab_x[i, 1:] = e_ilogi - e_logi
        tab_u[i, 1:] = e_logi
    tab_x.flags.writeable = False
    tab_u.flags.writeable = False
    return tab_x, tab_u


def xu_table() -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """The (log alpha grid, k grid, X table, U table) solver surface.

    Built once per process on first use, then shared read-only.
    """
    global _TABLE
    if _TABLE is None:
        with _TABLE_LOCK:
            if _TABLE is None:
                _TABLE = _build_table()
    tab_x, tab_u = _TABLE
    return LOG_ALPHA_GRID, K_GRID, tab_x, tab_u


def hk_theoretical_xu(alpha: float, k: float) -> tuple[float, float]:
    """Tabulated population (X, U) at (alpha, k), bilinear in (log alpha, k).

    Restricted to the solver domain; see `hk_population_xu` for the exact
    unrestricted evaluation.
    """
    alpha = float(alpha)
    k = float(k)
    if not (np.isfinite(alpha) and ALPHA_BOUNDS[0] <= alpha <= ALPHA_BOUNDS[1]):
        raise ParameterError(
            f"alpha must lie in [{ALPHA_BOUNDS[0]}, {ALPHA_BOUNDS[1]}], got {alpha}"
        )
    if not (np.isfinite(k) and K_BOUNDS[0] <= k <= K_BOUNDS[1]):
        raise ParameterError(f"k must lie in [{K_BOUNDS[0]}, {K_BOUNDS[1]}], got {k}")
    log_alphas, ks, tab_x, tab_u = xu_table()
    x, u = interp_xu(np.log(alpha), k, log_alphas, ks, tab_x, tab_u)
    return float(x), float(u)
