"""Seeded trajectory simulation under solved policies.

Each path draws (or is handed) a true talent, then walks the model timing:
query the policy's cutoff at the current public state, go self-employed when
talent clears it, otherwise take the wage job. Self-employment realizes a
public Bernoulli(theta) outcome and moves the state; the wage job pays the
posted wage and leaves the state alone, so under a stationary policy a path
that takes the job once faces the identical state, cutoff, and decision every
period after, and absorption is exact rather than approximate.

Reproducibility: path i uses an independent generator spawned from
(seed, spawn_key=(i,)), so the trajectory collection is bit-identical across
schedulers and does not change when paths are batched differently.

Recorded period utility is the realized flow: the outcome itself (0 or 1)
when self-employed, wage utility when employed. Expected flow at a
self-employment period is therefore the path's talent.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple, Optional, Sequence, Union

import numpy as np

from .betadist import BetaParams, update
from .finite import FinitePolicy
from .model import utility
from .stationary import StationarySolution

__all__ = [
    "Action",
    "PeriodRecord",
    "SimSpec",
    "SummaryStats",
    "ThetaSource",
    "Trajectory",
    "UnconvergedPolicyError",
    "aggregate",
    "simulate",
]

MAX_SEED = 2**64 - 1


class UnconvergedPolicyError(ValueError):
    """Simulation was asked to run under a policy that did not converge."""


class Action(Enum):
    SELF_EMPLOYED = "S"
    EMPLOYED = "E"


class PeriodRecord(NamedTuple):
    date: int
    state: BetaParams
    action: Action
    outcome: Optional[bool]  # None on employed periods
    wage: Optional[float]  # None on self-employed periods
    utility: float


Trajectory = tuple[PeriodRecord, ...]

Policy = Union[FinitePolicy, StationarySolution]


@dataclass(frozen=True)
class ThetaSource:
    """Talent for each path: a fixed value, or the policy prior when unset."""

    theta: Optional[float] = None

    def __post_init__(self) -> None:
        if self.theta is not None:
            t = float(self.theta)
            if not 0.0 <= t <= 1.0:
                raise ValueError(f"fixed talent must lie in [0, 1], got {self.theta}")
            object.__setattr__(self, "theta", t)

    @classmethod
    def from_prior(cls) -> "ThetaSource":
        return cls(None)

    @classmethod
    def fixed(cls, theta: float) -> "ThetaSource":
        return cls(theta)


@dataclass(frozen=True, eq=False)
class SimSpec:
    policy: Policy
    n_paths: int
    horizon: int
    seed: int
    theta_source: ThetaSource = ThetaSource()

    def __post_init__(self) -> None:
        if not isinstance(self.n_paths, int) or self.n_paths < 1:
            raise ValueError(f"n_paths must be a positive integer, got {self.n_paths}")
        if not isinstance(self.horizon, int) or self.horizon < 1:
            raise ValueError(f"horizon must be a positive integer, got {self.horizon}")
        if not isinstance(self.seed, int) or not 0 <= self.seed <= MAX_SEED:
            raise ValueError(f"seed must be an unsigned 64-bit integer, got {self.seed}")
        if isinstance(self.policy, StationarySolution):
            if not self.policy.converged:
                raise UnconvergedPolicyError(
                    "stationary policy did not converge "
                    f"(residual {self.policy.sup_norm_residual!r})"
                )
            # a path can accumulate horizon - 1 public updates before its
            # last decision, all of which must stay on the solved lattice
            if self.policy.spec.max_depth < self.horizon - 1:
                raise ValueError(
                    f"horizon {self.horizon} can walk off a lattice of depth "
                    f"{self.policy.spec.max_depth}; deepen the solve or shorten the run"
                )
        elif isinstance(self.policy, FinitePolicy):
            if self.horizon > self.policy.spec.periods:
                raise ValueError(
                    f"horizon {self.horizon} exceeds the {self.policy.spec.periods}"
                    "-period policy"
                )
        else:
            raise ValueError(f"policy must be a solved policy, got {self.policy!r}")


def _path_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(index,)))


def simulate(spec: SimSpec) -> list[Trajectory]:
    """Simulate spec.n_paths independent trajectories of length spec.horizon."""
    prior = spec.policy.spec.prior
    prefs = spec.policy.spec.prefs
    stationary = isinstance(spec.policy, StationarySolution)

    paths: list[Trajectory] = []
    for i in range(spec.n_paths):
        rng = _path_rng(spec.seed, i)
        theta = spec.theta_source.theta
        if theta is None:
            theta = float(rng.beta(prior.alpha, prior.beta))

        state = prior
        records: list[PeriodRecord] = []
        for date in range(spec.horizon):
            cw = (spec.policy.cutoff_wage(state) if stationary
                  else spec.policy.cutoff_wage(date, state))
            if theta > cw.cutoff:
                success = bool(rng.random() < theta)
                records.append(PeriodRecord(date, state, Action.SELF_EMPLOYED,
                                            success, None, float(success)))
                state = update(state, success)
            else:
                # ties take the job, same as the cutoff solver
                records.append(PeriodRecord(date, state, Action.EMPLOYED,
                                            None, cw.wage, utility(prefs, cw.wage)))
        paths.append(tuple(records))
    return paths


class SummaryStats(NamedTuple):
    """Order-insensitive aggregates of a trajectory collection."""

    n_paths: int
    horizon: int
    s_share_by_date: np.ndarray
    absorption_times: np.ndarray  # first employed date per path, -1 if never
    hazard_run_lengths: np.ndarray
    hazard: np.ndarray  # P(take the job next period | trailing failure run)
    hazard_exposures: np.ndarray
    wage_by_state: dict[BetaParams, float]
    first_outcome_wage_gap: Optional[float]


def aggregate(trajectories: Sequence[Trajectory]) -> SummaryStats:
    """Summary statistics behind the model's observable implications.

    The trailing-failure hazard conditions on a path still self-employed at
    the end of a date, after that date's outcome extended or reset its run of
    consecutive failures, and asks how often the next action is employment.
    The first-outcome wage gap is the mean observed wage one success above
    the starting state minus one failure below it, None until both states
    have been seen paying a wage.
    """
    if len(trajectories) == 0:
        raise ValueError("need at least one trajectory")
    horizon = len(trajectories[0])
    if any(len(t) != horizon for t in trajectories):
        raise ValueError("trajectories must share a horizon")

    s_counts = np.zeros(horizon, dtype=np.int64)
    absorption = np.full(len(trajectories), -1, dtype=np.int64)
    exposures: dict[int, int] = {}
    entries: dict[int, int] = {}
    wage_totals: dict[BetaParams, list] = {}

    for p, records in enumerate(trajectories):
        run = 0
        for t, rec in enumerate(records):
            if rec.action is Action.SELF_EMPLOYED:
                s_counts[t] += 1
                run = run + 1 if rec.outcome is False else 0
                if t + 1 < horizon:
                    exposures[run] = exposures.get(run, 0) + 1
                    if records[t + 1].action is Action.EMPLOYED:
                        entries[run] = entries.get(run, 0) + 1
            else:
                if absorption[p] < 0:
                    absorption[p] = t
                bucket = wage_totals.setdefault(rec.state, [0.0, 0])
                bucket[0] += rec.wage
                bucket[1] += 1

    runs = np.array(sorted(exposures), dtype=np.int64)
    hazard = np.array([entries.get(r, 0) / exposures[r] for r in runs])
    wage_by_state = {s: total / n for s, (total, n) in wage_totals.items()}

    start = trajectories[0][0].state
    up, dn = update(start, True), update(start, False)
    gap = None
    if up in wage_by_state and dn in wage_by_state:
        gap = wage_by_state[up] - wage_by_state[dn]

    return SummaryStats(
        n_paths=len(trajectories),
        horizon=horizon,
        s_share_by_date=s_counts / len(trajectories),
        absorption_times=absorption,
        hazard_run_lengths=runs,
        hazard=hazard,
        hazard_exposures=np.array([exposures[r] for r in runs], dtype=np.int64),
        wage_by_state=wage_by_state,
        first_outcome_wage_gap=gap,
    )
