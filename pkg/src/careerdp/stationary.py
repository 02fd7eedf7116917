"""Stationary career policy by value iteration on a bounded belief lattice.

The public belief can drift only one observation per period, so the
infinite-horizon problem is solved on the lattice of states reachable within
`max_depth` outcomes of the prior. States at the depth cap keep the
quasi-static value max{theta, u(w)}/(1 - delta), where w is the static wage
at that state: one-step belief drift shrinks like 1/(alpha+beta)^2, so deep
states are nearly static and the closure error can be bounded by doubling
the depth. Interior states are updated by Jacobi sweeps: each sweep solves
every state's cutoff and wage against the previous value table, then
rewrites the table with those wages. Residuals are tracked in sup norm;
non-convergence is reported on the solution rather than raised.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Optional

import numpy as np
from numba import njit

from ._kernels import _solve_state, _u_scalar, prefs_arrays
from .betadist import BetaParams, _reg_inc_beta
from .finite import DEFAULT_GRID_SIZE, _tri_index
from .model import (
    CutoffWage,
    Preferences,
    PricingRegime,
    SolverFailureError,
    utility,
)

__all__ = [
    "LatticeSpec",
    "StationarySolution",
    "SweepPoint",
    "value_iterate",
    "absorbing_region",
    "sweep",
]

MIN_GRID_SIZE = 257


@dataclass(frozen=True)
class LatticeSpec:
    """Lattice, preferences, and iteration controls for the stationary solve."""

    prior: BetaParams
    max_depth: int
    delta: float
    prefs: Preferences
    regime: PricingRegime
    theta_grid_size: int = DEFAULT_GRID_SIZE
    tolerance: float = 1e-10
    max_sweeps: int = 10_000

    def __post_init__(self) -> None:
        if not isinstance(self.max_depth, int) or self.max_depth < 1:
            raise ValueError(f"max_depth must be a positive integer, got {self.max_depth}")
        if not 0.0 < self.delta < 1.0:
            raise ValueError(f"delta must lie in (0, 1), got {self.delta}")
        if not isinstance(self.theta_grid_size, int) or self.theta_grid_size < MIN_GRID_SIZE:
            raise ValueError(
                f"theta_grid_size must be an integer >= {MIN_GRID_SIZE}, "
                f"got {self.theta_grid_size}"
            )
        if not self.tolerance > 0.0:
            raise ValueError(f"tolerance must be positive, got {self.tolerance}")
        if not isinstance(self.max_sweeps, int) or self.max_sweeps < 1:
            raise ValueError(f"max_sweeps must be a positive integer, got {self.max_sweeps}")

    def states(self) -> list[tuple[int, int]]:
        N = self.max_depth
        return [(i, j) for i in range(N + 1) for j in range(N + 1 - i)]


@njit(cache=True)
def _vi_sweep(grid, v_old, v_new, up_ix, dn_ix, interior, alphas, betas, soph,
              rho, kx, ku, delta, tol, cuts, wags):
    n = alphas.size
    G = grid.size
    residual = 0.0
    for s in range(n):
        if not interior[s]:
            continue
        a = alphas[s]
        b = betas[s]
        vup = v_old[up_ix[s]]
        vdn = v_old[dn_ix[s]]
        cut, wag, ok = _solve_state(a, b, soph, rho, kx, ku, delta, vup, vdn,
                                    v_old[s], tol)
        if not ok:
            return np.nan, False
        cuts[s] = cut
        wags[s] = wag
        uw = _u_scalar(rho, kx, ku, wag)
        for g in range(G):
            th = grid[g]
            stay = uw + delta * v_old[s, g]
            go = th + delta * (th * vup[g] + (1.0 - th) * vdn[g])
            val = stay if stay >= go else go
            v_new[s, g] = val
            diff = abs(val - v_old[s, g])
            if diff > residual:
                residual = diff
    return residual, True


@dataclass(frozen=True)
class StationarySolution:
    """Converged (or best-effort) stationary cutoff map and value table."""

    spec: LatticeSpec
    converged: bool
    sweeps_used: int
    sup_norm_residual: float
    residual_history: tuple[float, ...]
    tables: dict[tuple[int, int], CutoffWage]
    values: np.ndarray = field(repr=False)

    def _offsets(self, state: BetaParams) -> tuple[int, int]:
        di = state.alpha - self.spec.prior.alpha
        dj = state.beta - self.spec.prior.beta
        i, j = round(di), round(dj)
        if (
            abs(di - i) > 1e-9
            or abs(dj - j) > 1e-9
            or i < 0
            or j < 0
            or i + j > self.spec.max_depth
        ):
            raise ValueError(
                f"state ({state.alpha}, {state.beta}) is not on the lattice of "
                f"depth {self.spec.max_depth} over prior "
                f"({self.spec.prior.alpha}, {self.spec.prior.beta})"
            )
        return i, j

    def states(self) -> list[BetaParams]:
        return [
            BetaParams(self.spec.prior.alpha + i, self.spec.prior.beta + j)
            for i, j in sorted(self.tables)
        ]

    def cutoff_wage(self, state: BetaParams) -> CutoffWage:
        return self.tables[self._offsets(state)]

    def value(self, theta: float, state: BetaParams) -> float:
        if not (0.0 <= theta <= 1.0):
            raise ValueError(f"theta must lie in [0, 1], got {theta}")
        i, j = self._offsets(state)
        row = self.values[_tri_index(i, j, self.spec.max_depth)]
        grid = np.linspace(0.0, 1.0, self.spec.theta_grid_size)
        return float(np.interp(theta, grid, row))


def _closure_tables(spec: LatticeSpec, grid: np.ndarray):
    """Static cutoffs/wages and quasi-static value rows for every state."""
    rho, kx, ku = prefs_arrays(spec.prefs)
    soph = spec.regime == PricingRegime.SOPHISTICATED
    zeros = np.zeros(grid.size)
    states = spec.states()
    n = len(states)
    cuts = np.empty(n)
    wags = np.empty(n)
    rows = np.empty((n, grid.size))
    annuity = 1.0 / (1.0 - spec.delta)
    for s, (i, j) in enumerate(states):
        a = spec.prior.alpha + i
        b = spec.prior.beta + j
        cut, wag, ok = _solve_state(a, b, soph, rho, kx, ku, spec.delta,
                                    zeros, zeros, zeros, spec.tolerance)
        if not ok:
            raise SolverFailureError(
                f"static cutoff solve produced NaN at state ({a}, {b})"
            )
        cuts[s] = cut
        wags[s] = wag
        uw = utility(spec.prefs, wag)
        rows[s] = np.maximum(grid, uw) * annuity
    return cuts, wags, rows


def value_iterate(spec: LatticeSpec) -> StationarySolution:
    """Iterate cutoffs and values jointly until the table stops moving."""
    grid = np.linspace(0.0, 1.0, spec.theta_grid_size)
    states = spec.states()
    N = spec.max_depth
    index = {sk: _tri_index(sk[0], sk[1], N) for sk in states}
    order = sorted(index, key=index.get)

    alphas = np.array([spec.prior.alpha + i for i, j in order])
    betas = np.array([spec.prior.beta + j for i, j in order])
    interior = np.array([i + j < N for i, j in order])
    up_ix = np.array(
        [index[(i + 1, j)] if i + j < N else index[(i, j)] for i, j in order],
        dtype=np.int64,
    )
    dn_ix = np.array(
        [index[(i, j + 1)] if i + j < N else index[(i, j)] for i, j in order],
        dtype=np.int64,
    )

    cuts, wags, v = _closure_tables(spec, grid)
    rho, kx, ku = prefs_arrays(spec.prefs)
    soph = spec.regime == PricingRegime.SOPHISTICATED
    v_new = v.copy()
    history: list[float] = []
    converged = False
    sweeps = 0
    residual = np.inf
    while sweeps < spec.max_sweeps:
        residual, ok = _vi_sweep(grid, v, v_new, up_ix, dn_ix, interior,
                                 alphas, betas, soph, rho, kx, ku, spec.delta,
                                 spec.tolerance, cuts, wags)
        if not ok:
            raise SolverFailureError(f"cutoff solve produced NaN on sweep {sweeps}")
        v, v_new = v_new, v
        sweeps += 1
        history.append(float(residual))
        if residual <= spec.tolerance:
            converged = True
            break
    # final policy pass against the settled table, so reported cutoffs are
    # consistent with the values actually returned
    final_res, ok = _vi_sweep(grid, v, v_new, up_ix, dn_ix, interior, alphas,
                              betas, soph, rho, kx, ku, spec.delta,
                              spec.tolerance, cuts, wags)
    if not ok:
        raise SolverFailureError("cutoff solve produced NaN on the policy pass")
    tables = {
        sk: CutoffWage(float(cuts[index[sk]]), float(wags[index[sk]]))
        for sk in states
    }
    return StationarySolution(
        spec=spec,
        converged=converged,
        sweeps_used=sweeps,
        sup_norm_residual=float(residual),
        residual_history=tuple(history),
        tables=tables,
        values=v_new,
    )


class AbsorbingMass(NamedTuple):
    cutoff: float
    mass: float


def absorbing_region(sol: StationarySolution) -> dict[BetaParams, AbsorbingMass]:
    """Per-state cutoff and prior probability of landing at or below it.

    Once a worker takes the opaque job the public state freezes, future
    cutoffs at that state never fall, and the choice repeats itself, so
    {theta <= cutoff(state)} is exactly the set absorbed into employment.
    """
    if not sol.converged:
        raise ValueError(
            "absorbing region requires a converged solution; residual "
            f"{sol.sup_norm_residual:.3e} after {sol.sweeps_used} sweeps"
        )
    out: dict[BetaParams, AbsorbingMass] = {}
    for state in sol.states():
        cw = sol.cutoff_wage(state)
        if cw.cutoff <= 0.0:
            mass = 0.0
        elif cw.cutoff >= 1.0:
            mass = 1.0
        else:
            mass = float(_reg_inc_beta(cw.cutoff, state.alpha, state.beta))
        out[state] = AbsorbingMass(cw.cutoff, mass)
    return out


class SweepPoint(NamedTuple):
    value: float
    solution: Optional[StationarySolution]
    error: Optional[str]


def sweep(spec: LatticeSpec, parameter: str, values: Iterable[float]) -> list[SweepPoint]:
    """Re-solve across one parameter axis, capturing per-point failures."""
    if parameter not in ("delta", "rho", "depth"):
        raise ValueError(f"parameter must be one of delta, rho, depth, got {parameter!r}")
    if parameter == "rho" and spec.prefs.rho is None:
        raise ValueError("rho sweep requires CRRA preferences")
    out: list[SweepPoint] = []
    for raw in values:
        value = float(raw)
        try:
            if parameter == "delta":
                pt = LatticeSpec(
                    spec.prior, spec.max_depth, value, spec.prefs, spec.regime,
                    spec.theta_grid_size, spec.tolerance, spec.max_sweeps,
                )
            elif parameter == "rho":
                pt = LatticeSpec(
                    spec.prior, spec.max_depth, spec.delta,
                    Preferences.crra(value), spec.regime,
                    spec.theta_grid_size, spec.tolerance, spec.max_sweeps,
                )
            else:
                pt = LatticeSpec(
                    spec.prior, int(value), spec.delta, spec.prefs, spec.regime,
                    spec.theta_grid_size, spec.tolerance, spec.max_sweeps,
                )
            out.append(SweepPoint(value, value_iterate(pt), None))
        except (ValueError, SolverFailureError) as exc:
            out.append(SweepPoint(value, None, str(exc)))
    return out
