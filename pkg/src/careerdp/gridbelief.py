"""Discrete-grid belief engine for the partially observed employment variant.

The conjugate engine lives on Beta states and requires the flat-wage job to
be fully opaque. Letting employment emit a coarse public signal breaks
conjugacy, so beliefs here are carried as explicit mass vectors on a theta
grid and updated by pointwise Bayes products. Signal informativeness phi
interpolates between the opaque baseline (phi = 0, the signal is pure base
rate) and an almost-transparent job (phi near 1, the signal approaches the
self-employment outcome itself).

Updates commute: a belief reached by any interleaving of s successes, f
failures, and z1/z0 employment signals is the same, so the solve tree
collapses to a lattice keyed by the four counts and the date of a node is
the sum of its counts. Finite horizons run plain backward induction over
that lattice; the stationary variant caps the update depth, closes the cap
with the quasi-static value max{theta, u(w)}/(1 - delta), and sweeps
Jacobi-style exactly like the conjugate lattice solver.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Optional, Union

import numpy as np

from .betadist import BetaParams, _reg_inc_beta
from .model import (
    BRACKET_TOL,
    CutoffWage,
    Preferences,
    PricingRegime,
    solve_cutoff_from_parts,
    utility,
)

__all__ = [
    "DEFAULT_BELIEF_POINTS",
    "DEFAULT_NODE_BUDGET",
    "BeliefVector",
    "DegenerateBeliefError",
    "SignalSpec",
    "FiniteGridHorizon",
    "StationaryGridHorizon",
    "GridNode",
    "GridPolicy",
    "bayes_update",
    "discretize_beta",
    "firm_signal_update",
    "persistent_employment_mass",
    "solve_grid",
]

DEFAULT_BELIEF_POINTS = 2001
DEFAULT_VALUE_POINTS = 1025
DEFAULT_NODE_BUDGET = 10**6

# smallest admissible posterior normalizer before an update is declared
# mass-wiping
_NORMALIZER_FLOOR = 1e-300


class DegenerateBeliefError(ValueError):
    """An update left (numerically) no posterior mass anywhere."""


@dataclass(frozen=True)
class BeliefVector:
    """Probability masses on a strictly increasing talent grid in [0, 1]."""

    grid: np.ndarray
    mass: np.ndarray

    def __post_init__(self) -> None:
        grid = np.asarray(self.grid, dtype=np.float64)
        mass = np.asarray(self.mass, dtype=np.float64)
        if grid.ndim != 1 or grid.size < 2 or mass.shape != grid.shape:
            raise ValueError("grid and mass must be 1-D arrays of equal length >= 2")
        if grid[0] < 0.0 or grid[-1] > 1.0 or not np.all(np.diff(grid) > 0.0):
            raise ValueError("grid must be strictly increasing within [0, 1]")
        if np.any(mass < 0.0) or not np.all(np.isfinite(mass)):
            raise ValueError("masses must be finite and nonnegative")
        total = float(mass.sum())
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"masses must sum to 1 within 1e-12, got {total!r}")
        grid.setflags(write=False)
        mass.setflags(write=False)
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "mass", mass)

    def mean(self) -> float:
        return float(self.mass @ self.grid)

    def mass_at_or_below(self, cutoff: float) -> float:
        k = int(np.searchsorted(self.grid, cutoff, side="right"))
        return float(self.mass[:k].sum())

    def truncated_mean(self, cutoff: float) -> float:
        """Mean talent of the pool at or below `cutoff`; 0 if the pool is empty."""
        k = int(np.searchsorted(self.grid, cutoff, side="right"))
        pool = float(self.mass[:k].sum())
        if pool <= 0.0:
            return 0.0
        return float(self.mass[:k] @ self.grid[:k]) / pool


@dataclass(frozen=True)
class SignalSpec:
    """Employment-signal law Pr(z=1 | theta) = phi*theta + (1-phi)*zbar."""

    phi: float
    zbar: float = 0.5

    def __post_init__(self) -> None:
        if not 0.0 <= self.phi < 1.0:
            raise ValueError(f"phi must lie in [0, 1), got {self.phi}")
        if not 0.0 < self.zbar < 1.0:
            raise ValueError(f"zbar must lie in (0, 1), got {self.zbar}")

    def success_probability(self, theta):
        return self.phi * theta + (1.0 - self.phi) * self.zbar


def discretize_beta(params: BetaParams, points: int = DEFAULT_BELIEF_POINTS) -> BeliefVector:
    """Cell-integral discretization of a Beta belief onto a uniform grid.

    Each node carries the exact Beta probability of its cell (edges at the
    midpoints between nodes), which stays well defined even when the density
    is unbounded at an endpoint.
    """
    if points < 3:
        raise ValueError(f"need at least 3 grid points, got {points}")
    grid = np.linspace(0.0, 1.0, points)
    edges = np.empty(points + 1)
    edges[0] = 0.0
    edges[-1] = 1.0
    edges[1:-1] = 0.5 * (grid[:-1] + grid[1:])
    cdf = np.array([_reg_inc_beta(e, params.alpha, params.beta) for e in edges])
    mass = np.diff(cdf)
    return BeliefVector(grid, mass / mass.sum())


def bayes_update(
    b: BeliefVector,
    likelihood: Union[Callable[[np.ndarray], np.ndarray], np.ndarray],
) -> BeliefVector:
    """Reweight by a per-point outcome probability and renormalize."""
    lk = np.asarray(likelihood(b.grid) if callable(likelihood) else likelihood,
                    dtype=np.float64)
    if lk.shape != b.grid.shape:
        raise ValueError("likelihood must provide one value per grid point")
    if np.any(lk < 0.0) or np.any(lk > 1.0) or not np.all(np.isfinite(lk)):
        raise ValueError("likelihood values must lie in [0, 1]")
    posterior = b.mass * lk
    normalizer = float(posterior.sum())
    if normalizer <= _NORMALIZER_FLOOR:
        raise DegenerateBeliefError(
            f"update wiped out the posterior (normalizer {normalizer!r})"
        )
    return BeliefVector(b.grid, posterior / normalizer)


def firm_signal_update(b: BeliefVector, sig: SignalSpec, z: int) -> BeliefVector:
    p1 = sig.success_probability(b.grid)
    return bayes_update(b, p1 if z else 1.0 - p1)


@dataclass(frozen=True)
class FiniteGridHorizon:
    periods: int

    def __post_init__(self) -> None:
        if not isinstance(self.periods, int) or self.periods < 1:
            raise ValueError(f"periods must be a positive integer, got {self.periods}")


@dataclass(frozen=True)
class StationaryGridHorizon:
    max_updates: int
    tolerance: float = 1e-8
    max_sweeps: int = 2000

    def __post_init__(self) -> None:
        if not isinstance(self.max_updates, int) or self.max_updates < 1:
            raise ValueError(
                f"max_updates must be a positive integer, got {self.max_updates}"
            )
        if not self.tolerance > 0.0:
            raise ValueError(f"tolerance must be positive, got {self.tolerance}")
        if not isinstance(self.max_sweeps, int) or self.max_sweeps < 1:
            raise ValueError(
                f"max_sweeps must be a positive integer, got {self.max_sweeps}"
            )


GridHorizon = Union[FiniteGridHorizon, StationaryGridHorizon]

# count keys: (successes, failures, z=1 signals, z=0 signals)
Counts = tuple[int, int, int, int]


class GridNode(NamedTuple):
    belief: BeliefVector
    cutoff: float
    wage: float
    employment_mass: float


@dataclass(frozen=True)
class GridPolicy:
    """Per-node cutoffs over the belief lattice reached by public updates."""

    sig: SignalSpec
    delta: float
    prefs: Preferences
    regime: PricingRegime
    horizon: GridHorizon
    nodes: dict[Counts, GridNode] = field(repr=False)
    converged: bool = True
    sweeps_used: int = 0

    @property
    def root(self) -> GridNode:
        return self.nodes[(0, 0, 0, 0)]

    def node(self, counts: Counts) -> GridNode:
        key = tuple(int(c) for c in counts)
        if len(key) != 4 or any(c < 0 for c in key) or key not in self.nodes:
            raise ValueError(f"no solved node at counts {counts!r}")
        return self.nodes[key]

    def cutoff_wage(self, counts: Counts) -> CutoffWage:
        node = self.node(counts)
        return CutoffWage(node.cutoff, node.wage)


def persistent_employment_mass(policy: GridPolicy) -> float:
    """Root-belief mass of types that take the wage job and never leave it.

    A worker who keeps choosing employment walks the signal-only lattice of
    nodes and exits the first time the type exceeds a node's cutoff, so the
    never-exit set is bounded by the lowest cutoff on that lattice. With an
    uninformative signal the walk stands still and this is just the root
    employment mass; an informative signal spreads the walk over nodes whose
    cutoffs differ, which is what distinguishes taking the job from
    disappearing into it.
    """
    floor = min(
        node.cutoff
        for counts, node in policy.nodes.items()
        if counts[0] == 0 and counts[1] == 0
    )
    return policy.root.belief.mass_at_or_below(floor)


def _lattice_size(depth: int) -> int:
    # count tuples with sum <= depth
    return math.comb(depth + 4, 4)


def _level(total: int) -> list[Counts]:
    return [
        (s, f, z1, total - s - f - z1)
        for s in range(total + 1)
        for f in range(total + 1 - s)
        for z1 in range(total + 1 - s - f)
    ]


def _node_belief(prior: BeliefVector, sig: SignalSpec, counts: Counts) -> BeliefVector:
    s, f, z1, z0 = counts
    grid = prior.grid
    p1 = sig.success_probability(grid)
    log_w = np.zeros_like(grid)
    with np.errstate(divide="ignore", invalid="ignore"):
        for n, arr in ((s, grid), (f, 1.0 - grid), (z1, p1), (z0, 1.0 - p1)):
            if n:
                log_w = log_w + n * np.log(arr)
    weights = np.where(np.isfinite(log_w), np.exp(log_w), 0.0)
    posterior = prior.mass * weights
    normalizer = float(posterior.sum())
    if normalizer <= _NORMALIZER_FLOOR:
        raise DegenerateBeliefError(
            f"belief at counts {counts} has no posterior mass"
        )
    return BeliefVector(grid, posterior / normalizer)


def _solve_node(
    belief: BeliefVector,
    regime: PricingRegime,
    prefs: Preferences,
    delta: float,
    vgrid: np.ndarray,
    sig: SignalSpec,
    rows,
    tol: float,
) -> tuple[CutoffWage, np.ndarray]:
    """One node's cutoff/wage plus its value row on the theta grid.

    `rows` is None for a terminal/static node, else the tuple of child value
    rows (up, dn, z1, z0) on `vgrid`.
    """
    if regime == PricingRegime.NAIVE:
        mean = belief.mean()
        wage_fn = lambda c: mean
    else:
        wage_fn = lambda c: belief.truncated_mean(c) if c > 0.0 else 0.0

    if rows is None:
        def g(theta: float, wage: float) -> float:
            return theta - utility(prefs, wage)
    else:
        row_up, row_dn, row_z1, row_z0 = rows

        def g(theta: float, wage: float) -> float:
            vup = np.interp(theta, vgrid, row_up)
            vdn = np.interp(theta, vgrid, row_dn)
            vz1 = np.interp(theta, vgrid, row_z1)
            vz0 = np.interp(theta, vgrid, row_z0)
            p1 = sig.success_probability(theta)
            go = theta + delta * (theta * vup + (1.0 - theta) * vdn)
            stay = utility(prefs, wage) + delta * (p1 * vz1 + (1.0 - p1) * vz0)
            return go - stay

    cw = solve_cutoff_from_parts(g, wage_fn, tol=tol)
    uw = utility(prefs, cw.wage)
    if rows is None:
        value = np.maximum(vgrid, uw)
    else:
        p1 = sig.success_probability(vgrid)
        go = vgrid + delta * (vgrid * row_up + (1.0 - vgrid) * row_dn)
        stay = uw + delta * (p1 * row_z1 + (1.0 - p1) * row_z0)
        value = np.maximum(go, stay)
    return cw, value


def solve_grid(
    prior: BeliefVector,
    sig: SignalSpec,
    delta: float,
    prefs: Preferences,
    regime: PricingRegime,
    horizon: GridHorizon,
    *,
    value_points: int = DEFAULT_VALUE_POINTS,
    node_budget: int = DEFAULT_NODE_BUDGET,
    tol: float = BRACKET_TOL,
) -> GridPolicy:
    """Backward induction (finite) or capped value iteration (stationary)."""
    if not isinstance(horizon, (FiniteGridHorizon, StationaryGridHorizon)):
        raise ValueError(f"horizon must be a grid horizon, got {horizon!r}")
    stationary = isinstance(horizon, StationaryGridHorizon)
    if stationary:
        if not 0.0 < delta < 1.0:
            raise ValueError(f"stationary solves need delta in (0, 1), got {delta}")
        depth = horizon.max_updates
    else:
        if not 0.0 <= delta < 1.0:
            raise ValueError(f"delta must lie in [0, 1), got {delta}")
        depth = horizon.periods - 1
    if value_points < 3:
        raise ValueError(f"need at least 3 value grid points, got {value_points}")
    if _lattice_size(depth) > node_budget:
        raise ValueError(
            f"belief lattice needs {_lattice_size(depth)} nodes, "
            f"over the node budget {node_budget}"
        )

    vgrid = np.linspace(0.0, 1.0, value_points)
    beliefs: dict[Counts, BeliefVector] = {}
    for total in range(depth + 1):
        for key in _level(total):
            beliefs[key] = _node_belief(prior, sig, key)

    def children(key: Counts) -> tuple[Counts, Counts, Counts, Counts]:
        s, f, z1, z0 = key
        return ((s + 1, f, z1, z0), (s, f + 1, z1, z0),
                (s, f, z1 + 1, z0), (s, f, z1, z0 + 1))

    solved: dict[Counts, CutoffWage] = {}

    if not stationary:
        values: dict[Counts, np.ndarray] = {}
        for total in range(depth, -1, -1):
            level_values: dict[Counts, np.ndarray] = {}
            for key in _level(total):
                rows = None
                if total < depth:
                    rows = tuple(values[c] for c in children(key))
                cw, row = _solve_node(beliefs[key], regime, prefs, delta,
                                      vgrid, sig, rows, tol)
                solved[key] = cw
                level_values[key] = row
            values = level_values
        converged, sweeps = True, 0
    else:
        keys = [k for total in range(depth + 1) for k in _level(total)]
        annuity = 1.0 / (1.0 - delta)
        values = {}
        for key in keys:
            cw, _ = _solve_node(beliefs[key], regime, prefs, delta, vgrid,
                                sig, None, tol)
            solved[key] = cw
            values[key] = np.maximum(vgrid, utility(prefs, cw.wage)) * annuity
        interior = [k for k in keys if sum(k) < depth]
        converged = False
        sweeps = 0
        while sweeps < horizon.max_sweeps:
            new_values = dict(values)
            residual = 0.0
            for key in interior:
                rows = tuple(values[c] for c in children(key))
                cw, row = _solve_node(beliefs[key], regime, prefs, delta,
                                      vgrid, sig, rows, tol)
                solved[key] = cw
                residual = max(residual, float(np.max(np.abs(row - values[key]))))
                new_values[key] = row
            values = new_values
            sweeps += 1
            if residual <= horizon.tolerance:
                converged = True
                break
        # policy pass against the settled table
        for key in interior:
            rows = tuple(values[c] for c in children(key))
            cw, _ = _solve_node(beliefs[key], regime, prefs, delta, vgrid,
                                sig, rows, tol)
            solved[key] = cw

    nodes = {
        key: GridNode(
            beliefs[key],
            solved[key].cutoff,
            solved[key].wage,
            beliefs[key].mass_at_or_below(solved[key].cutoff),
        )
        for key in solved
    }
    return GridPolicy(
        sig=sig,
        delta=delta,
        prefs=prefs,
        regime=regime,
        horizon=horizon,
        nodes=nodes,
        converged=converged,
        sweeps_used=sweeps,
    )
