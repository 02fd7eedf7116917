"""Beta-Bernoulli belief primitives.

Public beliefs about the worker's success rate are Beta(alpha, beta) and are
updated by observed successes and failures. This module holds the belief
state type, the conjugate update, and the incomplete-beta machinery behind
truncated posterior means (the sophisticated wage is a ratio of lower
incomplete beta integrals).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

from numba import njit

__all__ = [
    "BetaParams",
    "Drift",
    "posterior_mean",
    "update",
    "one_step_drift",
    "incomplete_beta",
    "truncated_mean",
    "truncated_mean_derivative",
]

# Cutoffs below this are reported as 0; keeps the pool-pricing fixed point
# bracketed away from the degenerate empty pool at 0.
TINY_CUTOFF = 1e-12


@dataclass(frozen=True)
class BetaParams:
    """Beta(alpha, beta) public belief state. Both parameters must be positive."""

    alpha: float
    beta: float

    def __post_init__(self):
        a, b = float(self.alpha), float(self.beta)
        if not (math.isfinite(a) and math.isfinite(b) and a > 0.0 and b > 0.0):
            raise ValueError(f"Beta parameters must be positive and finite, got ({a}, {b})")
        object.__setattr__(self, "alpha", a)
        object.__setattr__(self, "beta", b)


class Drift(NamedTuple):
    up: float
    down: float


# ---------------------------------------------------------------------------
# compiled kernels
# ---------------------------------------------------------------------------

_EPS = 3e-16
_FPMIN = 1e-300
_MAXIT = 500


@njit(cache=True)
def _betacf(a, b, x):
    # Continued fraction for the regularized incomplete beta, evaluated with
    # the modified Lentz scheme. Caller guarantees 0 < x < 1 and the
    # convergence-friendly branch x < (a+1)/(a+b+2).
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _FPMIN:
        d = _FPMIN
    d = 1.0 / d
    h = d
    for m in range(1, _MAXIT + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = 1.0 + aa / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = 1.0 + aa / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            break
    return h


@njit(cache=True)
def _lbeta(a, b):
    return math.lgamma(a) + math.lgamma(b) - math.lgamma(a + b)


@njit(cache=True)
def _reg_inc_beta(x, a, b):
    # regularized I_x(a, b), symmetry switch at the usual threshold
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    ln_pre = a * math.log(x) + b * math.log1p(-x) - _lbeta(a, b)
    if x < (a + 1.0) / (a + b + 2.0):
        return math.exp(ln_pre) * _betacf(a, b, x) / a
    return 1.0 - math.exp(ln_pre) * _betacf(b, a, 1.0 - x) / b


@njit(cache=True)
def _ln_inc_beta_lower(x, a, b):
    # log of the unregularized lower integral B(x; a, b). The small-x branch
    # stays in log space so ratios of tiny integrals (truncated means near 0)
    # do not underflow.
    if x >= 1.0:
        return _lbeta(a, b)
    if x < (a + 1.0) / (a + b + 2.0):
        return (
            a * math.log(x)
            + b * math.log1p(-x)
            - math.log(a)
            + math.log(_betacf(a, b, x))
        )
    ln_pre = a * math.log(x) + b * math.log1p(-x) - _lbeta(a, b)
    q = math.exp(ln_pre) * _betacf(b, a, 1.0 - x) / b
    if q >= 1.0:
        q = 1.0 - 1e-16
    return math.log1p(-q) + _lbeta(a, b)


@njit(cache=True)
def _trunc_mean(a, b, c):
    if c >= 1.0:
        return a / (a + b)
    return math.exp(_ln_inc_beta_lower(c, a + 1.0, b) - _ln_inc_beta_lower(c, a, b))


@njit(cache=True)
def _trunc_mean_deriv(a, b, c):
    # m'(c) = f(c)/F(c) * (c - m(c)); the density/CDF ratio is scale free so
    # regularized forms are fine.
    ln_f = (a - 1.0) * math.log(c) + (b - 1.0) * math.log1p(-c) - _lbeta(a, b)
    ln_cdf = _ln_inc_beta_lower(c, a, b) - _lbeta(a, b)
    return math.exp(ln_f - ln_cdf) * (c - _trunc_mean(a, b, c))


# ---------------------------------------------------------------------------
# public interface
# ---------------------------------------------------------------------------


def posterior_mean(p: BetaParams) -> float:
    """Mean success rate under the belief, alpha / (alpha + beta)."""
    return p.alpha / (p.alpha + p.beta)


def update(p: BetaParams, success: bool) -> BetaParams:
    """Conjugate update after one public self-employment outcome."""
    if success:
        return BetaParams(p.alpha + 1.0, p.beta)
    return BetaParams(p.alpha, p.beta + 1.0)


def one_step_drift(p: BetaParams) -> Drift:
    """Belief-mean movements after one success (up) or one failure (down).

    Both are positive and shrink like 1/(alpha+beta)^2 as evidence accumulates,
    which is what makes deep states quasi-static.
    """
    k = p.alpha + p.beta
    return Drift(up=p.beta / (k * (k + 1.0)), down=p.alpha / (k * (k + 1.0)))


def incomplete_beta(c: float, a: float, b: float) -> float:
    """Unregularized lower incomplete beta, integral of t^(a-1)(1-t)^(b-1) on [0, c]."""
    if not (a > 0.0 and b > 0.0 and math.isfinite(a) and math.isfinite(b)):
        raise ValueError(f"shape parameters must be positive, got a={a}, b={b}")
    if not (0.0 <= c <= 1.0):
        raise ValueError(f"integration endpoint must lie in [0, 1], got c={c}")
    if c == 0.0:
        return 0.0
    if c == 1.0:
        return math.exp(_lbeta(a, b))
    return math.exp(_ln_inc_beta_lower(c, a, b))


def truncated_mean(p: BetaParams, c: float) -> float:
    """Mean of the belief restricted to [0, c]; equals posterior_mean at c = 1.

    This is the sophisticated posted wage when the applicant pool is the set
    of types at or below the cutoff c. Strictly increasing in c and strictly
    below c itself.
    """
    if not (0.0 < c <= 1.0):
        raise ValueError(f"truncation point must lie in (0, 1], got c={c}")
    return _trunc_mean(p.alpha, p.beta, c)


def truncated_mean_derivative(p: BetaParams, c: float) -> float:
    """d/dc of truncated_mean, via the identity m'(c) = f(c)/F(c) (c - m(c))."""
    if not (0.0 < c < 1.0):
        raise ValueError(f"derivative is defined on the open interval, got c={c}")
    return _trunc_mean_deriv(p.alpha, p.beta, c)
