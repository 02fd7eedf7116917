"""Single-state career choice: utilities, wage regimes, and the cutoff solver.

Each period a worker of private quality theta either works self-employed,
which pays a public Bernoulli(theta) outcome and moves the belief, or takes
an opaque flat-wage job, which pays u(wage) and leaves the belief frozen.
The difference in continuation utility is strictly increasing in theta and
strictly decreasing in the posted wage, so the optimal rule is a cutoff:
employment at and below it, self-employment above it. Ties go to employment.

Two wage-posting regimes are supported. A naive market pays the posterior
mean of the public belief. A sophisticated market anticipates that only
types at or below the cutoff apply and pays the mean of the belief truncated
to that pool, which makes the cutoff a fixed point. The fixed point is
located by bisecting on the sign of the gap evaluated at the pool-priced
wage. Over short horizons that sign changes exactly once; over long
horizons the empty pool can become self-consistent as well (one public
failure may lead to a better-paying pool than the current state offers, so
every type rejects a vanishing wage), in which case the interior pooling
point is selected and the empty-pool corner is reserved for states where no
cutoff retains its marginal applicant.

Risk aversion direction, under the u(0) = 0, u(1) = 1 normalization used
throughout: making u more concave raises u(w) for every wage in (0, 1), so
employment becomes relatively more attractive and the cutoff weakly rises.
For CRRA preferences this means cutoffs are weakly decreasing in the
exponent rho.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable

import numpy as np

from .betadist import TINY_CUTOFF, BetaParams, posterior_mean, truncated_mean, update

__all__ = [
    "PricingRegime",
    "Preferences",
    "CutoffWage",
    "SolverFailureError",
    "utility",
    "indifference_gap",
    "solve_cutoff",
    "solve_cutoff_from_parts",
    "zero_continuation",
]

BRACKET_TOL = 1e-10

# continuation(theta, state) -> value of entering next period at `state`
Continuation = Callable[[float, BetaParams], float]


class PricingRegime(str, Enum):
    NAIVE = "naive"
    SOPHISTICATED = "sophisticated"


class SolverFailureError(RuntimeError):
    """Raised when the cutoff bisection cannot make sense of its inputs."""


@dataclass(frozen=True)
class Preferences:
    """Flow utility over wages in [0, 1], normalized so u(0) = 0 and u(1) = 1.

    Either CRRA with exponent rho in (0, 1] (rho = 1 is risk neutral), or a
    tabulated increasing concave function interpolated linearly between knots.
    Exactly one of the two forms is set.
    """

    rho: float | None = None
    knots_x: tuple[float, ...] | None = None
    knots_u: tuple[float, ...] | None = None

    @classmethod
    def crra(cls, rho: float) -> "Preferences":
        if not (0.0 < rho <= 1.0):
            raise ValueError(f"CRRA exponent must lie in (0, 1], got {rho}")
        return cls(rho=float(rho))

    @classmethod
    def tabulated(cls, points) -> "Preferences":
        pts = sorted((float(x), float(u)) for x, u in points)
        xs = tuple(x for x, _ in pts)
        us = tuple(u for _, u in pts)
        if len(xs) < 2 or xs[0] != 0.0 or xs[-1] != 1.0:
            raise ValueError("tabulated preferences need knots spanning [0, 1]")
        if us[0] != 0.0 or us[-1] != 1.0:
            raise ValueError("tabulated preferences must satisfy u(0) = 0 and u(1) = 1")
        if any(x1 <= x0 for x0, x1 in zip(xs, xs[1:])):
            raise ValueError("knot abscissae must be strictly increasing")
        if any(u1 <= u0 for u0, u1 in zip(us, us[1:])):
            raise ValueError("tabulated utility must be strictly increasing")
        slopes = [(u1 - u0) / (x1 - x0) for (x0, u0), (x1, u1) in zip(pts, pts[1:])]
        if any(s1 > s0 + 1e-12 for s0, s1 in zip(slopes, slopes[1:])):
            raise ValueError("tabulated utility must be concave (chord slopes non-increasing)")
        return cls(knots_x=xs, knots_u=us)

    def __post_init__(self):
        has_crra = self.rho is not None
        has_tab = self.knots_x is not None
        if has_crra == has_tab:
            raise ValueError("preferences are either CRRA or tabulated, not both or neither")


def utility(prefs: Preferences, x: float) -> float:
    """Flow utility of a sure payment x in [0, 1]."""
    if not (0.0 <= x <= 1.0):
        raise ValueError(f"utility argument must lie in [0, 1], got {x}")
    if prefs.rho is not None:
        return x ** prefs.rho
    return float(np.interp(x, prefs.knots_x, prefs.knots_u))


@dataclass(frozen=True)
class CutoffWage:
    """A solved state policy: employment iff theta <= cutoff, at the posted wage."""

    cutoff: float
    wage: float


def zero_continuation(theta: float, state: BetaParams) -> float:
    """Terminal continuation, used for last-period and quasi-static solves."""
    return 0.0


def indifference_gap(
    theta: float,
    state: BetaParams,
    wage: float,
    continuation: Continuation,
    prefs: Preferences,
    delta: float,
) -> float:
    """Self-employment minus employment continuation utility at a given wage.

    Positive means the worker strictly prefers self-employment. Strictly
    increasing in theta for model-consistent continuations and strictly
    decreasing in wage.
    """
    if not (0.0 <= theta <= 1.0):
        raise ValueError(f"theta must lie in [0, 1], got {theta}")
    if not (0.0 <= delta < 1.0):
        raise ValueError(f"discount factor must lie in [0, 1), got {delta}")
    up = update(state, True)
    down = update(state, False)
    value_s = theta + delta * (
        theta * continuation(theta, up) + (1.0 - theta) * continuation(theta, down)
    )
    value_e = utility(prefs, wage) + delta * continuation(theta, state)
    return value_s - value_e


def solve_cutoff_from_parts(
    gap: Callable[[float, float], float],
    wage_at: Callable[[float], float],
    *,
    tol: float = BRACKET_TOL,
) -> CutoffWage:
    """Generic cutoff bisection over gap(theta, wage_at(theta)).

    `wage_at(c)` is the wage the market posts when the marginal applicant is
    c (a constant for naive pricing, the truncated pool mean for
    sophisticated pricing, and a discrete pool mean for the grid engine).
    Clamps to 1 when even the best type prefers employment. When the gap is
    also positive just above the empty pool, an interior indifference point
    may still coexist with the empty-pool corner (deep in long horizons one
    public failure can lead to a better-paying pool than the current state,
    so every type walks away from a vanishing trial wage while a pooling
    point at a higher wage remains self-consistent). The interior point is
    preferred; the corner is returned only when the gap is nonnegative on
    the whole probe ladder, i.e. no pool at any cutoff retains its marginal
    member. A NaN gap means the supplied continuation is broken and raises
    SolverFailureError.
    """

    def signed(theta: float) -> float:
        g = gap(theta, wage_at(theta))
        if math.isnan(g):
            raise SolverFailureError(
                f"indifference gap evaluated to NaN at theta={theta}; "
                "continuation values are not usable"
            )
        return g

    def bisect(lo: float, hi: float) -> CutoffWage:
        while hi - lo > tol:
            mid = 0.5 * (lo + hi)
            if signed(mid) < 0.0:
                lo = mid
            else:
                hi = mid
        cut = 0.5 * (lo + hi)
        return CutoffWage(cut, wage_at(cut))

    if signed(1.0) <= 0.0:
        return CutoffWage(1.0, wage_at(1.0))
    if signed(TINY_CUTOFF) < 0.0:
        return bisect(TINY_CUTOFF, 1.0)
    # probe ladder kept in lockstep with _kernels._solve_state: bracket the
    # sign change above the last negative probe, if any
    lo, hi = -1.0, 1.0
    ladder = (1e-10, 1e-8, 1e-7, 1e-6, 1e-5, 1e-4, 2.5e-4, 5e-4)
    for p in list(ladder) + [k / 1024.0 for k in range(1, 1024)]:
        if signed(p) < 0.0:
            lo, hi = p, 1.0
        elif lo > 0.0 and hi == 1.0 and p > lo:
            hi = p
    if lo < 0.0:
        return CutoffWage(0.0, wage_at(0.0))
    return bisect(lo, hi)


def solve_cutoff(
    state: BetaParams,
    regime: PricingRegime,
    continuation: Continuation,
    prefs: Preferences,
    delta: float,
    *,
    tol: float = BRACKET_TOL,
) -> CutoffWage:
    """Solve one state's employment cutoff and posted wage under a regime.

    Naive pricing fixes the wage at the posterior mean and bisects the gap in
    theta. Sophisticated pricing prices the pool at the trial cutoff itself,
    so the bisection tracks the fixed point; the empty-pool wage at cutoff 0
    is 0 by convention.
    """

    def g(theta: float, wage: float) -> float:
        return indifference_gap(theta, state, wage, continuation, prefs, delta)

    if regime == PricingRegime.NAIVE:
        mean = posterior_mean(state)
        return solve_cutoff_from_parts(g, lambda c: mean, tol=tol)
    if regime == PricingRegime.SOPHISTICATED:
        def pool_wage(c: float) -> float:
            if c <= 0.0:
                return 0.0
            return truncated_mean(state, c)
        return solve_cutoff_from_parts(g, pool_wage, tol=tol)
    raise ValueError(f"unknown pricing regime: {regime!r}")
