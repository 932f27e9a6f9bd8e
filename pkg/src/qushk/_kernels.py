"""Hot numeric kernels, compiled with numba when the active backend allows.

Every function here is written in the flat, loop-heavy style that numba's
nopython mode accepts, then optionally rebound to its compiled version at
import time. The interpreted functions are the same objects, so the two
backends run the same algorithm; summation order differs only in the
moment reduction, where the interpreted path uses numpy's pairwise sum.

Table layout used by the solver kernels: ``log_alphas`` ascending,
``ks`` ascending, ``tab_x``/``tab_u`` of shape (len(log_alphas), len(ks)).
"""

from __future__ import annotations

import numpy as np

from ._backend import USE_NUMBA


def interp_xu(log_a, k, log_alphas, ks, tab_x, tab_u):
    """Bilinear lookup of (X, U) at (log alpha, k), clamped to the grid."""
    na = log_alphas.shape[0]
    nk = ks.shape[0]
    ia = np.searchsorted(log_alphas, log_a) - 1
    if ia < 0:
        ia = 0
    if ia > na - 2:
        ia = na - 2
    jk = np.searchsorted(ks, k) - 1
    if jk < 0:
        jk = 0
    if jk > nk - 2:
        jk = nk - 2
    fa = (log_a - log_alphas[ia]) / (log_alphas[ia + 1] - log_alphas[ia])
    fk = (k - ks[jk]) / (ks[jk + 1] - ks[jk])
    if fa < 0.0:
        fa = 0.0
    elif fa > 1.0:
        fa = 1.0
    if fk < 0.0:
        fk = 0.0
    elif fk > 1.0:
        fk = 1.0
    w00 = (1.0 - fa) * (1.0 - fk)
    w10 = fa * (1.0 - fk)
    w01 = (1.0 - fa) * fk
    w11 = fa * fk
    x = (
        w00 * tab_x[ia, jk]
        + w10 * tab_x[ia + 1, jk]
        + w01 * tab_x[ia, jk + 1]
        + w11 * tab_x[ia + 1, jk + 1]
    )
    u = (
        w00 * tab_u[ia, jk]
        + w10 * tab_u[ia + 1, jk]
        + w01 * tab_u[ia, jk + 1]
        + w11 * tab_u[ia + 1, jk + 1]
    )
    return x, u


def match_k(log_a, x_obs, k_lo, k_hi, max_iter, log_alphas, ks, tab_x, tab_u):
    """Bisect k so the tabulated X at this alpha matches x_obs.

    X falls strictly as k grows at fixed alpha, so the bracket never
    needs reorienting. Returns (k, clamped, steps); clamped means x_obs
    lies outside what [k_lo, k_hi] can reach at this alpha.
    """
    x_at_lo, _ = interp_xu(log_a, k_lo, log_alphas, ks, tab_x, tab_u)
    x_at_hi, _ = interp_xu(log_a, k_hi, log_alphas, ks, tab_x, tab_u)
    if x_obs >= x_at_lo:
        return k_lo, x_obs > x_at_lo, 0
    if x_obs <= x_at_hi:
        return k_hi, x_obs < x_at_hi, 0
    lo = k_lo
    hi = k_hi
    n = 0
    for _ in range(max_iter):
        n += 1
        mid = 0.5 * (lo + hi)
        x_mid, _ = interp_xu(log_a, mid, log_alphas, ks, tab_x, tab_u)
        if x_mid > x_obs:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi), False, n


def alpha_edge(x_obs, k_edge, a_lo, a_hi, max_iter, log_alphas, ks, tab_x, tab_u):
    """Root of X(alpha, k_edge) = x_obs in alpha, bisected in log alpha.

    Used to trim the outer bracket to the region where x_obs stays
    reachable with k inside its bounds.
    """
    lo = a_lo
    hi = a_hi
    r_lo, _ = interp_xu(np.log(lo), k_edge, log_alphas, ks, tab_x, tab_u)
    r_lo -= x_obs
    n = 0
    for _ in range(max_iter):
        n += 1
        mid = np.sqrt(lo * hi)
        r_mid, _ = interp_xu(np.log(mid), k_edge, log_alphas, ks, tab_x, tab_u)
        r_mid -= x_obs
        if (r_mid > 0.0) == (r_lo > 0.0):
            lo = mid
            r_lo = r_mid
        else:
            hi = mid
    return np.sqrt(lo * hi), n


def solve_xu(x_obs, u_obs, log_alphas, ks, tab_x, tab_u, a_lo, a_hi, k_lo, k_hi, max_iter):
    """Invert observed (X, U) to (alpha, k) on the tabulated surface.

    Outer bisection walks alpha along the curve where X already matches
    (inner bisection on k); the residual on U decides the direction. Both
    loops always run to full depth: the surface is nearly flat in places,
    and accepting the first midpoint inside tolerance biases the result.

    Returns (alpha_hat, k_hat, residual, bounds_hit, steps) where residual
    is max(|X error|, |U error|) re-evaluated at the returned point.
    """
    it = 0
    la_lo = np.log(a_lo)
    la_hi = np.log(a_hi)

    # X spans widest at the alpha lower bound; beyond that band no alpha helps.
    x_top, _ = interp_xu(la_lo, k_lo, log_alphas, ks, tab_x, tab_u)
    x_bot, _ = interp_xu(la_lo, k_hi, log_alphas, ks, tab_x, tab_u)
    if x_obs >= x_top:
        k_hat, _, n = match_k(la_lo, x_obs, k_lo, k_hi, max_iter, log_alphas, ks, tab_x, tab_u)
        it += n
        xt, ut = interp_xu(la_lo, k_hat, log_alphas, ks, tab_x, tab_u)
        rx = abs(xt - x_obs)
        ru = abs(ut - u_obs)
        return a_lo, k_hat, (rx if rx > ru else ru), True, it
    if x_obs <= x_bot:
        k_hat, _, n = match_k(la_hi, x_obs, k_lo, k_hi, max_iter, log_alphas, ks, tab_x, tab_u)
        it += n
        xt, ut = interp_xu(la_hi, k_hat, log_alphas, ks, tab_x, tab_u)
        rx = abs(xt - x_obs)
        ru = abs(ut - u_obs)
        return a_hi, k_hat, (rx if rx > ru else ru), True, it

    # Trim the upper end of the alpha bracket to where x_obs is reachable.
    a_hi_eff = a_hi
    x_hi_klo, _ = interp_xu(la_hi, k_lo, log_alphas, ks, tab_x, tab_u)
    x_hi_khi, _ = interp_xu(la_hi, k_hi, log_alphas, ks, tab_x, tab_u)
    if x_obs > x_hi_klo:
        a_hi_eff, n = alpha_edge(x_obs, k_lo, a_lo, a_hi, max_iter, log_alphas, ks, tab_x, tab_u)
        it += n
    elif x_obs < x_hi_khi:
        a_hi_eff, n = alpha_edge(x_obs, k_hi, a_lo, a_hi, max_iter, log_alphas, ks, tab_x, tab_u)
        it += n

    k_at_lo, _, n = match_k(la_lo, x_obs, k_lo, k_hi, max_iter, log_alphas, ks, tab_x, tab_u)
    it += n
    _, u_at_lo = interp_xu(la_lo, k_at_lo, log_alphas, ks, tab_x, tab_u)
    r_lo = u_at_lo - u_obs
    la_hi_eff = np.log(a_hi_eff)
    k_at_hi, _, n = match_k(la_hi_eff, x_obs, k_lo, k_hi, max_iter, log_alphas, ks, tab_x, tab_u)
    it += n
    _, u_at_hi = interp_xu(la_hi_eff, k_at_hi, log_alphas, ks, tab_x, tab_u)
    r_hi = u_at_hi - u_obs

    if r_lo <= 0.0:
        a_hat = a_lo
        k_hat = k_at_lo
        hit = True
    elif r_hi >= 0.0:
        a_hat = a_hi_eff
        k_hat = k_at_hi
        hit = True
    else:
        lo = a_lo
        hi = a_hi_eff
        for _ in range(max_iter):
            it += 1
            mid = np.sqrt(lo * hi)
            k_mid, _, n = match_k(np.log(mid), x_obs, k_lo, k_hi, max_iter, log_alphas, ks, tab_x, tab_u)
            it += n
            _, u_mid = interp_xu(np.log(mid), k_mid, log_alphas, ks, tab_x, tab_u)
            if u_mid - u_obs > 0.0:
                lo = mid
            else:
                hi = mid
        a_hat = np.sqrt(lo * hi)
        k_hat, k_clamped, n = match_k(np.log(a_hat), x_obs, k_lo, k_hi, max_iter, log_alphas, ks, tab_x, tab_u)
        it += n
        hit = k_clamped

    xt, ut = interp_xu(np.log(a_hat), k_hat, log_alphas, ks, tab_x, tab_u)
    rx = abs(xt - x_obs)
    ru = abs(ut - u_obs)
    return a_hat, k_hat, (rx if rx > ru else ru), hit, it


def xu_moment_sums(values):
    """One pass over amplitudes: zero count plus the three log-moment sums.

    Returns (n_pos, n_zero, sum I, sum log I, sum I log I, min A, max A)
    over the strictly positive entries, with I = A squared.
    """
    n = values.shape[0]
    n_pos = 0
    n_zero = 0
    s_i = 0.0
    s_li = 0.0
    s_ili = 0.0
    vmin = np.inf
    vmax = -np.inf
    for idx in range(n):
        a = values[idx]
        if a == 0.0:
            n_zero += 1
            continue
        i = a * a
        li = np.log(i)
        s_i += i
        s_li += li
        s_ili += i * li
        if a < vmin:
            vmin = a
        if a > vmax:
            vmax = a
        n_pos += 1
    return n_pos, n_zero, s_i, s_li, s_ili, vmin, vmax


def _xu_moment_sums_vectorized(values):
    pos = values > 0.0
    n_pos = int(np.count_nonzero(pos))
    n_zero = values.size - n_pos
    if n_pos == 0:
        return 0, n_zero, 0.0, 0.0, 0.0, np.inf, -np.inf
    v = values[pos]
    i = v * v
    li = np.log(i)
    return (
        n_pos,
        n_zero,
        float(i.sum()),
        float(li.sum()),
        float((i * li).sum()),
        float(v.min()),
        float(v.max()),
    )


if USE_NUMBA:
    from numba import njit

    interp_xu = njit(cache=True)(interp_xu)
    match_k = njit(cache=True)(match_k)
    alpha_edge = njit(cache=True)(alpha_edge)
    solve_xu = njit(cache=True)(solve_xu)
    xu_moment_sums = njit(cache=True)(xu_moment_sums)
else:
    xu_moment_sums = _xu_moment_sums_vectorized
