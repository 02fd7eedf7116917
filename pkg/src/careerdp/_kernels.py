"""Compiled scalar kernels shared by the Beta-lattice solvers.

Terminal periods are represented by a zero continuation table rather than a
flag: the gap and value formulas then reduce to their one-shot forms exactly.
"""

import numpy as np
from numba import njit

from .betadist import TINY_CUTOFF, _trunc_mean

# preferences are passed to kernels as (rho, knots_x, knots_u); rho > 0 means
# CRRA and the knot arrays are ignored, rho <= 0 means tabulated


@njit(cache=True)
def _u_scalar(rho, kx, ku, x):
    if rho > 0.0:
        return x ** rho
    return np.interp(x, kx, ku)


@njit(cache=True)
def _interp_unit(values, x):
    # linear interpolation on the uniform theta grid over [0, 1]
    n = values.size
    pos = x * (n - 1)
    if pos <= 0.0:
        return values[0]
    if pos >= n - 1:
        return values[n - 1]
    i = int(pos)
    frac = pos - i
    return values[i] * (1.0 - frac) + values[i + 1] * frac


@njit(cache=True)
def _wage_at(a, b, soph, c):
    if not soph:
        return a / (a + b)
    if c <= 0.0:
        return 0.0
    if c > 1.0:
        c = 1.0
    return _trunc_mean(a, b, c)


@njit(cache=True)
def _gap_at(theta, a, b, soph, rho, kx, ku, delta, vup, vdn, vsame):
    w = _wage_at(a, b, soph, theta)
    uw = _u_scalar(rho, kx, ku, w)
    cu = _interp_unit(vup, theta)
    cd = _interp_unit(vdn, theta)
    cs = _interp_unit(vsame, theta)
    return theta + delta * (theta * cu + (1.0 - theta) * cd) - uw - delta * cs


@njit(cache=True)
def _bisect_state(a, b, soph, rho, kx, ku, delta, vup, vdn, vsame, lo, hi, tol):
    # caller guarantees gap(lo) < 0 < gap(hi)
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if _gap_at(mid, a, b, soph, rho, kx, ku, delta, vup, vdn, vsame) < 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@njit(cache=True)
def _solve_state(a, b, soph, rho, kx, ku, delta, vup, vdn, vsame, tol):
    # returns (cutoff, wage, ok); mirrors model.solve_cutoff including the
    # clamp order (full employment checked first, then the empty pool)
    g1 = _gap_at(1.0, a, b, soph, rho, kx, ku, delta, vup, vdn, vsame)
    if np.isnan(g1):
        return np.nan, np.nan, False
    if g1 <= 0.0:
        return 1.0, _wage_at(a, b, soph, 1.0), True
    g0 = _gap_at(TINY_CUTOFF, a, b, soph, rho, kx, ku, delta, vup, vdn, vsame)
    if np.isnan(g0):
        return np.nan, np.nan, False
    if g0 < 0.0:
        c = _bisect_state(
            a, b, soph, rho, kx, ku, delta, vup, vdn, vsame, TINY_CUTOFF, 1.0, tol
        )
        return c, _wage_at(a, b, soph, c), True
    # gap >= 0 at both ends: the empty pool is self-consistent, but an interior
    # indifference point may coexist (the gap can dip negative when one public
    # failure leads to a better-paying pool than the current state offers, so
    # even the lowest types walk away from a vanishing trial wage).  Prefer the
    # interior point: scan for the last probe where the gap is negative and
    # bisect the sign change above it; fall back to the corner only when the
    # gap is nonnegative everywhere.  Probe ladder must stay in lockstep with
    # model.solve_cutoff_from_parts.
    lo = -1.0
    hi = 1.0
    for p in (1e-10, 1e-8, 1e-7, 1e-6, 1e-5, 1e-4, 2.5e-4, 5e-4):
        gp = _gap_at(p, a, b, soph, rho, kx, ku, delta, vup, vdn, vsame)
        if np.isnan(gp):
            return np.nan, np.nan, False
        if gp < 0.0:
            lo = p
            hi = 1.0
        elif lo > 0.0 and hi == 1.0 and p > lo:
            hi = p
    for k in range(1, 1024):
        p = k / 1024.0
        gp = _gap_at(p, a, b, soph, rho, kx, ku, delta, vup, vdn, vsame)
        if np.isnan(gp):
            return np.nan, np.nan, False
        if gp < 0.0:
            lo = p
            hi = 1.0
        elif lo > 0.0 and hi == 1.0 and p > lo:
            hi = p
    if lo < 0.0:
        return 0.0, _wage_at(a, b, soph, 0.0), True
    c = _bisect_state(a, b, soph, rho, kx, ku, delta, vup, vdn, vsame, lo, hi, tol)
    return c, _wage_at(a, b, soph, c), True


def prefs_arrays(prefs):
    """Pack Preferences for kernel calls."""
    if prefs.rho is not None:
        empty = np.empty(0, dtype=np.float64)
        return float(prefs.rho), empty, empty
    return -1.0, np.asarray(prefs.knots_x, dtype=np.float64), np.asarray(
        prefs.knots_u, dtype=np.float64
    )
