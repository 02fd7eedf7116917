"""Command-line surface: reproduce | solve | simulate | sweep.

Exit codes: 0 success (and, for reproduce, every check passing), 1 bad
configuration or arguments, 2 solver failure or an unconverged result,
3 a reproduce check failing.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from typing import Optional, Sequence

from .betadist import BetaParams
from .finite import FiniteHorizonSpec, FinitePolicy, solve_finite
from .gridbelief import GridPolicy
from .model import Preferences, PricingRegime, SolverFailureError
from .runio import (
    ConfigError,
    RunConfig,
    build_policy,
    config_hash,
    ensure_outdir,
    fmt_float,
    lattice_spec,
    load_config,
    write_json,
    write_table,
)
from .simulate import SimSpec, ThetaSource, UnconvergedPolicyError, aggregate, simulate
from .stationary import StationarySolution
from .stationary import sweep as sweep_lattice

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_SOLVER = 2
EXIT_CHECK = 3

FINITE_HEADER = ("date", "alpha", "beta", "regime", "cutoff", "wage")
STATIONARY_HEADER = ("alpha", "beta", "regime", "cutoff", "wage")
GRID_HEADER = ("successes", "failures", "signals_up", "signals_down",
               "regime", "cutoff", "wage")
TRAJECTORY_HEADER = ("path", "date", "alpha", "beta", "action", "outcome",
                     "wage", "utility")


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on bad flags, which this tool reserves
    # for solver failures; route argument problems through ConfigError
    def error(self, message):
        raise ConfigError(message)


def _say(quiet: bool, text: str) -> None:
    if not quiet:
        print(text)


# ---------------------------------------------------------------------------
# reproduce
# ---------------------------------------------------------------------------

class _Check:
    def __init__(self, label, computed, reference, checks):
        self.label = label
        self.computed = computed
        self.reference = reference
        self.checks = checks  # (target, tolerance) pairs, all must hold

    @property
    def passed(self) -> bool:
        return all(abs(self.computed - t) <= tol for t, tol in self.checks)


def _reproduction_checks() -> list[_Check]:
    """The built-in three-period calibration checked against its benchmarks.

    Terminal cutoff rows must hit the closed forms to 1e-9 and sit within
    half a printed digit of the rounded benchmark values; later rows carry
    the looser tolerances of values published to fewer digits.
    """
    prior = BetaParams(1, 1)
    prefs = Preferences.crra(0.5)
    pol = {
        regime: solve_finite(FiniteHorizonSpec(3, prior, 0.95, prefs, regime))
        for regime in PricingRegime
    }
    naive, soph = pol[PricingRegime.NAIVE], pol[PricingRegime.SOPHISTICATED]
    up, dn = BetaParams(2, 1), BetaParams(1, 2)

    def cut(policy, date, state):
        return policy.cutoff_wage(date, state).cutoff

    def wage(policy, date, state):
        return policy.cutoff_wage(date, state).wage

    return [
        _Check("terminal naive cutoff at (1,1)", cut(naive, 2, prior), 0.707,
               [(math.sqrt(1 / 2), 1e-9), (0.707, 5e-4)]),
        _Check("terminal naive cutoff at (2,1)", cut(naive, 2, up), 0.817,
               [(math.sqrt(2 / 3), 1e-9), (0.817, 5e-4)]),
        _Check("terminal naive cutoff at (1,2)", cut(naive, 2, dn), 0.577,
               [(math.sqrt(1 / 3), 1e-9), (0.577, 5e-4)]),
        _Check("terminal sophisticated cutoff at (1,1)", cut(soph, 2, prior),
               0.5, [(0.5, 1e-9)]),
        _Check("terminal sophisticated cutoff at (2,1)", cut(soph, 2, up),
               0.667, [(2 / 3, 1e-9)]),
        _Check("terminal sophisticated cutoff at (1,2)", cut(soph, 2, dn),
               0.451, [(0.451, 2e-3)]),
        _Check("date-1 naive cutoff at (1,1)", cut(naive, 1, prior), 0.656,
               [(0.656, 3e-3)]),
        _Check("date-1 sophisticated cutoff at (1,1)", cut(soph, 1, prior),
               0.42, [(0.42, 1e-2)]),
        _Check("date-1 sophisticated wage after a success", wage(soph, 1, up),
               0.407, [(0.407, 5e-3)]),
        _Check("date-1 sophisticated wage after a failure", wage(soph, 1, dn),
               0.177, [(0.177, 5e-3)]),
        _Check("date-1 naive wage after a success", wage(naive, 1, up),
               2 / 3, [(2 / 3, 1e-15)]),
        _Check("date-1 naive wage after a failure", wage(naive, 1, dn),
               1 / 3, [(1 / 3, 1e-15)]),
    ]


def _cmd_reproduce(args) -> int:
    checks = _reproduction_checks()
    width = max(len(c.label) for c in checks)
    failures = 0
    for c in checks:
        verdict = "PASS" if c.passed else "FAIL"
        failures += verdict == "FAIL"
        _say(args.quiet,
             f"{c.label:<{width}}  computed {c.computed:.5f}  "
             f"reference {c.reference:.3f}  |err| {abs(c.computed - c.reference):.2e}"
             f"  {verdict}")
    _say(args.quiet,
         f"{len(checks) - failures} of {len(checks)} checks passed")
    return EXIT_OK if failures == 0 else EXIT_CHECK


# ---------------------------------------------------------------------------
# solve
# ---------------------------------------------------------------------------

def _out_of(args, cfg: RunConfig) -> tuple[str, str]:
    outdir = ensure_outdir(args.out or cfg.output.directory)
    fmt = args.format or cfg.output.format
    return outdir, fmt


def _write_finite(policy: FinitePolicy, cfg, outdir, fmt, meta, quiet) -> None:
    rows = []
    for date in range(policy.spec.periods):
        for state in policy.states(date):
            cw = policy.cutoff_wage(date, state)
            rows.append((date, state.alpha, state.beta, cfg.model.regime,
                         cw.cutoff, cw.wage))
    path = os.path.join(outdir, f"policy_finite.{fmt}")
    if fmt == "csv":
        write_table(path, FINITE_HEADER, rows, meta)
    else:
        write_json(path, {"policy": [dict(zip(FINITE_HEADER, r)) for r in rows]},
                   meta)
    _say(quiet, f"wrote {path} ({len(rows)} states)")


def _write_stationary(policy: StationarySolution, cfg, outdir, fmt, meta,
                      quiet) -> None:
    rows = [
        (state.alpha, state.beta, cfg.model.regime,
         policy.cutoff_wage(state).cutoff, policy.cutoff_wage(state).wage)
        for state in policy.states()
    ]
    path = os.path.join(outdir, f"policy_stationary.{fmt}")
    if fmt == "csv":
        write_table(path, STATIONARY_HEADER, rows, meta)
    else:
        write_json(path,
                   {"policy": [dict(zip(STATIONARY_HEADER, r)) for r in rows]},
                   meta)
    _say(quiet, f"wrote {path} ({len(rows)} states)")


def _write_grid(policy: GridPolicy, cfg, outdir, fmt, meta, quiet) -> None:
    rows = [
        (*counts, cfg.model.regime, node.cutoff, node.wage)
        for counts, node in sorted(policy.nodes.items(),
                                   key=lambda kv: (sum(kv[0]), kv[0]))
    ]
    path = os.path.join(outdir, f"policy_grid.{fmt}")
    if fmt == "csv":
        write_table(path, GRID_HEADER, rows, meta)
    else:
        write_json(path, {"policy": [dict(zip(GRID_HEADER, r)) for r in rows]},
                   meta)
    _say(quiet, f"wrote {path} ({len(rows)} nodes)")


def _cmd_solve(args) -> int:
    cfg = load_config(args.config)
    outdir, fmt = _out_of(args, cfg)
    policy = build_policy(cfg)
    meta = {"config": config_hash(cfg), "solver": cfg.solver.kind}

    status = EXIT_OK
    if isinstance(policy, StationarySolution):
        meta.update(converged=policy.converged, sweeps=policy.sweeps_used,
                    residual=fmt_float(policy.sup_norm_residual))
        _say(args.quiet,
             f"stationary solve: converged={policy.converged} "
             f"sweeps={policy.sweeps_used} "
             f"residual={policy.sup_norm_residual:.3e}")
        if not policy.converged:
            status = EXIT_SOLVER
        _write_stationary(policy, cfg, outdir, fmt, meta, args.quiet)
    elif isinstance(policy, GridPolicy):
        meta.update(converged=policy.converged, sweeps=policy.sweeps_used)
        if not policy.converged:
            _say(args.quiet,
                 f"grid solve did not converge within {policy.sweeps_used} sweeps")
            status = EXIT_SOLVER
        _write_grid(policy, cfg, outdir, fmt, meta, args.quiet)
    else:
        _write_finite(policy, cfg, outdir, fmt, meta, args.quiet)
    return status


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------

def _cmd_simulate(args) -> int:
    cfg = load_config(args.config)
    if cfg.simulate is None:
        raise ConfigError("simulate command needs a simulate section")
    if cfg.solver.kind not in ("finite", "stationary"):
        raise ConfigError(
            f"simulation runs under a finite or stationary policy, "
            f"not {cfg.solver.kind!r}")
    outdir, fmt = _out_of(args, cfg)
    policy = build_policy(cfg)

    seed = args.seed if args.seed is not None else cfg.simulate.seed
    source = (ThetaSource.from_prior() if cfg.simulate.theta is None
              else ThetaSource.fixed(cfg.simulate.theta))
    spec = SimSpec(policy, cfg.simulate.n_paths, cfg.simulate.horizon, seed,
                   source)
    paths = simulate(spec)
    stats = aggregate(paths)
    meta = {"config": config_hash(cfg), "seed": seed}

    rows = [
        (p, r.date, r.state.alpha, r.state.beta, r.action.value, r.outcome,
         r.wage, r.utility)
        for p, rec in enumerate(paths)
        for r in rec
    ]
    traj_path = os.path.join(outdir, f"trajectories.{fmt}")
    if fmt == "csv":
        write_table(traj_path, TRAJECTORY_HEADER, rows, meta)
    else:
        write_json(traj_path,
                   {"trajectories": [dict(zip(TRAJECTORY_HEADER, r)) for r in rows]},
                   meta)

    absorbed = stats.absorption_times[stats.absorption_times >= 0]
    distribution = sorted(
        (int(t), int((stats.absorption_times == t).sum()))
        for t in set(stats.absorption_times.tolist())
    )
    agg_path = os.path.join(outdir, "aggregate.json")
    write_json(agg_path, {
        "n_paths": stats.n_paths,
        "horizon": stats.horizon,
        "self_employment_share_by_date": stats.s_share_by_date.tolist(),
        "absorption_time_distribution": [
            {"date": t, "paths": n} for t, n in distribution
        ],
        "never_absorbed": int((stats.absorption_times < 0).sum()),
        "mean_absorption_time": (float(absorbed.mean()) if absorbed.size else None),
        "hazard_by_trailing_failure_run": [
            {"run": int(r), "exposures": int(n), "hazard": float(h)}
            for r, n, h in zip(stats.hazard_run_lengths,
                               stats.hazard_exposures, stats.hazard)
        ],
        "mean_wage_by_state": [
            {"alpha": s.alpha, "beta": s.beta, "wage": w}
            for s, w in sorted(stats.wage_by_state.items(),
                               key=lambda kv: (kv[0].alpha, kv[0].beta))
        ],
        "first_outcome_wage_gap": stats.first_outcome_wage_gap,
    }, meta)
    _say(args.quiet, f"wrote {traj_path} ({len(rows)} records) and {agg_path}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# sweep
# ---------------------------------------------------------------------------

_SWEEP_DIRECTION = {"delta": "decreasing", "rho": "decreasing",
                    "depth": "increasing"}


def _cmd_sweep(args) -> int:
    cfg = load_config(args.config)
    if cfg.sweep is None:
        raise ConfigError("sweep command needs a sweep section")
    if cfg.solver.kind != "stationary":
        raise ConfigError("sweep runs over the stationary solver")
    outdir, fmt = _out_of(args, cfg)

    points = sweep_lattice(lattice_spec(cfg), cfg.sweep.parameter,
                           cfg.sweep.values)
    meta = {"config": config_hash(cfg), "parameter": cfg.sweep.parameter}

    rows = []
    roots = []
    clean = True
    for pt in points:
        if pt.solution is None:
            _say(args.quiet, f"{cfg.sweep.parameter}={pt.value:g}: error: {pt.error}")
            clean = False
            continue
        sol = pt.solution
        root = sol.cutoff_wage(cfg.model.prior)
        roots.append(root.cutoff)
        clean = clean and sol.converged
        _say(args.quiet,
             f"{cfg.sweep.parameter}={pt.value:g}: root cutoff {root.cutoff:.6f}"
             f" wage {root.wage:.6f} (converged={sol.converged},"
             f" sweeps={sol.sweeps_used})")
        for state in sol.states():
            cw = sol.cutoff_wage(state)
            rows.append((pt.value, state.alpha, state.beta, cfg.model.regime,
                         cw.cutoff, cw.wage))

    header = (cfg.sweep.parameter, *STATIONARY_HEADER)
    path = os.path.join(outdir, f"sweep.{fmt}")
    if fmt == "csv":
        write_table(path, header, rows, meta)
    else:
        write_json(path, {"sweep": [dict(zip(header, r)) for r in rows]}, meta)

    direction = _SWEEP_DIRECTION[cfg.sweep.parameter]
    cmp = ((lambda a, b: b <= a + 1e-12) if direction == "decreasing"
           else (lambda a, b: b >= a - 1e-12))
    monotone = all(cmp(a, b) for a, b in zip(roots, roots[1:]))
    _say(args.quiet,
         f"root cutoff weakly {direction} in {cfg.sweep.parameter}: "
         f"{'yes' if monotone else 'NO'}")
    _say(args.quiet, f"wrote {path} ({len(rows)} rows)")
    return EXIT_OK if clean else EXIT_SOLVER


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def _build_parser() -> _Parser:
    parser = _Parser(prog="careerdp",
                     description="Solve, simulate, and check the career model.")
    sub = parser.add_subparsers(dest="command", required=True)

    rep = sub.add_parser("reproduce",
                         help="check the built-in calibration against its benchmarks")
    rep.add_argument("--quiet", action="store_true")
    rep.set_defaults(func=_cmd_reproduce)

    for name, func, with_seed in (("solve", _cmd_solve, False),
                                  ("simulate", _cmd_simulate, True),
                                  ("sweep", _cmd_sweep, False)):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="path to a run config JSON")
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--format", default=None, choices=("csv", "json"))
        p.add_argument("--quiet", action="store_true")
        if with_seed:
            p.add_argument("--seed", type=int, default=None,
                           help="override the config seed")
        p.set_defaults(func=func)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except ConfigError as exc:
        print(f"careerdp: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except UnconvergedPolicyError as exc:
        print(f"careerdp: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except ValueError as exc:
        print(f"careerdp: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SolverFailureError as exc:
        print(f"careerdp: solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
