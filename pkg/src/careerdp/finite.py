"""Finite-horizon backward induction on the exact Beta belief lattice.

With T decision dates the reachable public states at date t are the prior
advanced by s successes and f failures with s + f <= t (employment freezes
the state, so only self-employment periods advance it). The solver walks
dates backward, solving every reachable state's cutoff and posted wage
against the next date's value table, which is held on a fine uniform theta
grid. Stored policies evaluate values exactly by recursing on the stored
cutoff rule, so no value tables need to be retained.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from ._kernels import _solve_state, _u_scalar, prefs_arrays
from .betadist import BetaParams
from .model import CutoffWage, Preferences, PricingRegime, SolverFailureError, utility

__all__ = [
    "FiniteHorizonSpec",
    "FinitePolicy",
    "UnreachableStateError",
    "solve_finite",
    "branch_wages",
    "value_at",
]

DEFAULT_GRID_SIZE = 4097


class UnreachableStateError(ValueError):
    """The queried state cannot occur at the queried date under this prior."""


@dataclass(frozen=True)
class FiniteHorizonSpec:
    periods: int
    prior: BetaParams
    delta: float
    prefs: Preferences
    regime: PricingRegime

    def __post_init__(self):
        if not (isinstance(self.periods, int) and self.periods >= 1):
            raise ValueError(f"periods must be a positive integer, got {self.periods}")
        if not (0.0 <= self.delta < 1.0):
            raise ValueError(f"discount factor must lie in [0, 1), got {self.delta}")


def _tri_index(i: int, j: int, t: int) -> int:
    # row of state offset (i, j) in the date-t triangle, states ordered by
    # success count then failure count
    return i * (t + 1) - (i * (i - 1)) // 2 + j


@njit(cache=True)
def _solve_date_kernel(grid, v_next, up_ix, dn_ix, same_ix, alphas, betas, soph,
                       rho, kx, ku, delta, tol):
    n = alphas.size
    G = grid.size
    cuts = np.empty(n)
    wags = np.empty(n)
    v = np.empty((n, G))
    ok = True
    for s in range(n):
        a = alphas[s]
        b = betas[s]
        vup = v_next[up_ix[s]]
        vdn = v_next[dn_ix[s]]
        vsm = v_next[same_ix[s]]
        c, w, good = _solve_state(a, b, soph, rho, kx, ku, delta, vup, vdn, vsm, tol)
        if not good:
            ok = False
        cuts[s] = c
        wags[s] = w
        uw = _u_scalar(rho, kx, ku, w)
        for g in range(G):
            th = grid[g]
            ue = uw + delta * vsm[g]
            us = th + delta * (th * vup[g] + (1.0 - th) * vdn[g])
            v[s, g] = ue if ue >= us else us
    return cuts, wags, v, ok


def solve_finite(spec: FiniteHorizonSpec, *, grid_size: int = DEFAULT_GRID_SIZE) -> "FinitePolicy":
    """Backward induction over all reachable states; returns the full policy."""
    if grid_size < 65:
        raise ValueError(f"value grid too coarse to trust interpolation, got {grid_size}")
    T = spec.periods
    grid = np.linspace(0.0, 1.0, grid_size)
    rho, kx, ku = prefs_arrays(spec.prefs)
    soph = spec.regime == PricingRegime.SOPHISTICATED
    # the date after the last decision has value zero everywhere
    v_next = np.zeros((1, grid_size))
    tables: list[dict[tuple[int, int], CutoffWage]] = [dict() for _ in range(T)]
    for t in range(T - 1, -1, -1):
        states = [(i, j) for i in range(t + 1) for j in range(t + 1 - i)]
        n = len(states)
        alphas = np.array([spec.prior.alpha + i for i, j in states], dtype=np.float64)
        betas = np.array([spec.prior.beta + j for i, j in states], dtype=np.float64)
        if t == T - 1:
            up_ix = np.zeros(n, dtype=np.int64)
            dn_ix = np.zeros(n, dtype=np.int64)
            same_ix = np.zeros(n, dtype=np.int64)
        else:
            up_ix = np.array([_tri_index(i + 1, j, t + 1) for i, j in states], dtype=np.int64)
            dn_ix = np.array([_tri_index(i, j + 1, t + 1) for i, j in states], dtype=np.int64)
            same_ix = np.array([_tri_index(i, j, t + 1) for i, j in states], dtype=np.int64)
        cuts, wags, v, ok = _solve_date_kernel(
            grid, v_next, up_ix, dn_ix, same_ix, alphas, betas, soph, rho, kx, ku,
            spec.delta, 1e-10,
        )
        if not ok:
            raise SolverFailureError(f"cutoff solve produced NaN at date {t}")
        tables[t] = {states[s]: CutoffWage(float(cuts[s]), float(wags[s])) for s in range(n)}
        v_next = v
    return FinitePolicy(spec=spec, tables=tuple(tables))


@dataclass(frozen=True)
class FinitePolicy:
    """Per-date cutoff and wage for every reachable public state."""

    spec: FiniteHorizonSpec
    tables: tuple[dict[tuple[int, int], CutoffWage], ...]

    def _offsets(self, date: int, state: BetaParams) -> tuple[int, int]:
        if not (0 <= date < self.spec.periods):
            raise ValueError(f"date {date} outside horizon 0..{self.spec.periods - 1}")
        di = state.alpha - self.spec.prior.alpha
        dj = state.beta - self.spec.prior.beta
        i, j = round(di), round(dj)
        if abs(di - i) > 1e-9 or abs(dj - j) > 1e-9 or i < 0 or j < 0 or i + j > date:
            raise UnreachableStateError(
                f"state ({state.alpha}, {state.beta}) is not reachable at date {date} "
                f"from prior ({self.spec.prior.alpha}, {self.spec.prior.beta})"
            )
        return i, j

    def states(self, date: int) -> list[BetaParams]:
        if not (0 <= date < self.spec.periods):
            raise ValueError(f"date {date} outside horizon 0..{self.spec.periods - 1}")
        return [
            BetaParams(self.spec.prior.alpha + i, self.spec.prior.beta + j)
            for i, j in sorted(self.tables[date])
        ]

    def cutoff_wage(self, date: int, state: BetaParams) -> CutoffWage:
        key = self._offsets(date, state)
        return self.tables[date][key]

    def value(self, date: int, theta: float, state: BetaParams) -> float:
        """Exact continuation value of following the stored policy from here."""
        if not (0.0 <= theta <= 1.0):
            raise ValueError(f"theta must lie in [0, 1], got {theta}")
        i0, j0 = self._offsets(date, state)
        T = self.spec.periods
        delta = self.spec.delta
        prefs = self.spec.prefs
        memo: dict[tuple[int, int, int], float] = {}

        def recurse(t: int, i: int, j: int) -> float:
            if t == T:
                return 0.0
            key = (t, i, j)
            got = memo.get(key)
            if got is not None:
                return got
            cw = self.tables[t][(i, j)]
            if theta <= cw.cutoff:
                val = utility(prefs, cw.wage) + delta * recurse(t + 1, i, j)
            else:
                val = theta + delta * (
                    theta * recurse(t + 1, i + 1, j)
                    + (1.0 - theta) * recurse(t + 1, i, j + 1)
                )
            memo[key] = val
            return val

        return recurse(date, i0, j0)


def branch_wages(policy: FinitePolicy, date: int, history) -> CutoffWage:
    """Cutoff and wage at the state reached by a public outcome history.

    `history` lists the self-employment outcomes before `date` (truthy for
    success). It cannot contain more outcomes than elapsed dates.
    """
    outcomes = [bool(x) for x in history]
    if len(outcomes) > date:
        raise ValueError(
            f"history of length {len(outcomes)} cannot precede date {date}"
        )
    i = sum(outcomes)
    j = len(outcomes) - i
    state = BetaParams(policy.spec.prior.alpha + i, policy.spec.prior.beta + j)
    return policy.cutoff_wage(date, state)


def value_at(policy: FinitePolicy, date: int, theta: float, state: BetaParams) -> float:
    return policy.value(date, theta, state)
