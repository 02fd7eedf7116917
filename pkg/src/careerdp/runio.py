"""Run configuration and result serialization for the command line.

A run is described by a single JSON document with a versioned schema. Parsing
is strict: unknown keys are rejected with the offending path, every field is
type-checked before any model object is built, and defaults are materialized
on parse so that parse(serialize(config)) round-trips exactly. Numeric tables
are written as CSV with a fixed header per table kind and every output file
carries the config hash (and seed, where one applies) so a result can be
re-run exactly.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass, field
from typing import Any, Optional, Sequence

from .betadist import BetaParams
from .finite import FiniteHorizonSpec, solve_finite
from .gridbelief import (
    FiniteGridHorizon,
    SignalSpec,
    StationaryGridHorizon,
    discretize_beta,
    solve_grid,
)
from .model import Preferences, PricingRegime
from .stationary import LatticeSpec, value_iterate

__all__ = [
    "SCHEMA_VERSION",
    "ConfigError",
    "ModelConfig",
    "SolverConfig",
    "SignalConfig",
    "SimulateConfig",
    "SweepConfig",
    "OutputConfig",
    "RunConfig",
    "build_policy",
    "config_hash",
    "fmt_float",
    "load_config",
    "write_json",
    "write_table",
]

SCHEMA_VERSION = 1

SOLVER_KINDS = ("finite", "stationary", "grid_finite", "grid_stationary")
REGIMES = {"naive": PricingRegime.NAIVE, "sophisticated": PricingRegime.SOPHISTICATED}
FORMATS = ("csv", "json")
SWEEP_PARAMETERS = ("delta", "rho", "depth")


class ConfigError(ValueError):
    """A run configuration failed schema validation."""


def _require_keys(section: dict, path: str, required: Sequence[str],
                  optional: Sequence[str] = ()) -> None:
    if not isinstance(section, dict):
        raise ConfigError(f"{path} must be an object")
    unknown = set(section) - set(required) - set(optional)
    if unknown:
        raise ConfigError(f"{path}: unknown key(s) {sorted(unknown)}")
    missing = [k for k in required if k not in section]
    if missing:
        raise ConfigError(f"{path}: missing key(s) {missing}")


def _number(section: dict, path: str, key: str, default=None) -> float:
    if key not in section:
        return default
    v = section[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{path}.{key} must be a number, got {v!r}")
    return float(v)


def _integer(section: dict, path: str, key: str, default=None) -> int:
    if key not in section:
        return default
    v = section[key]
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigError(f"{path}.{key} must be an integer, got {v!r}")
    return v


def _choice(section: dict, path: str, key: str, choices: Sequence[str],
            default=None) -> str:
    v = section.get(key, default)
    if v not in choices:
        raise ConfigError(f"{path}.{key} must be one of {list(choices)}, got {v!r}")
    return v


@dataclass(frozen=True)
class ModelConfig:
    prior_alpha: float
    prior_beta: float
    delta: float
    rho: float
    regime: str

    @classmethod
    def from_dict(cls, d: dict) -> "ModelConfig":
        _require_keys(d, "model", ("prior", "delta", "rho", "regime"))
        prior = d["prior"]
        if (not isinstance(prior, list) or len(prior) != 2
                or any(isinstance(x, bool) or not isinstance(x, (int, float))
                       for x in prior)):
            raise ConfigError(f"model.prior must be a [alpha, beta] pair, got {prior!r}")
        return cls(
            prior_alpha=float(prior[0]),
            prior_beta=float(prior[1]),
            delta=_number(d, "model", "delta"),
            rho=_number(d, "model", "rho"),
            regime=_choice(d, "model", "regime", tuple(REGIMES)),
        )

    def to_dict(self) -> dict:
        return {
            "prior": [self.prior_alpha, self.prior_beta],
            "delta": self.delta,
            "rho": self.rho,
            "regime": self.regime,
        }

    @property
    def prior(self) -> BetaParams:
        return BetaParams(self.prior_alpha, self.prior_beta)

    @property
    def prefs(self) -> Preferences:
        return Preferences.crra(self.rho)

    @property
    def pricing(self) -> PricingRegime:
        return REGIMES[self.regime]


@dataclass(frozen=True)
class SolverConfig:
    kind: str
    periods: Optional[int] = None
    max_depth: Optional[int] = None
    grid_size: int = 4097
    tolerance: float = 1e-10
    max_sweeps: int = 10_000
    belief_points: int = 2001
    value_points: int = 1025

    _BY_KIND = {
        "finite": (("kind", "periods"), ()),
        "stationary": (("kind", "max_depth"), ("grid_size", "tolerance", "max_sweeps")),
        "grid_finite": (("kind", "periods"), ("belief_points", "value_points")),
        "grid_stationary": (("kind", "max_depth"),
                            ("tolerance", "max_sweeps", "belief_points", "value_points")),
    }

    @classmethod
    def from_dict(cls, d: dict) -> "SolverConfig":
        if not isinstance(d, dict):
            raise ConfigError("solver must be an object")
        kind = _choice(d, "solver", "kind", SOLVER_KINDS)
        required, optional = cls._BY_KIND[kind]
        _require_keys(d, "solver", required, optional)
        defaults = cls(kind=kind)
        return cls(
            kind=kind,
            periods=_integer(d, "solver", "periods"),
            max_depth=_integer(d, "solver", "max_depth"),
            grid_size=_integer(d, "solver", "grid_size", defaults.grid_size),
            tolerance=_number(d, "solver", "tolerance", defaults.tolerance),
            max_sweeps=_integer(d, "solver", "max_sweeps", defaults.max_sweeps),
            belief_points=_integer(d, "solver", "belief_points", defaults.belief_points),
            value_points=_integer(d, "solver", "value_points", defaults.value_points),
        )

    def to_dict(self) -> dict:
        required, optional = self._BY_KIND[self.kind]
        out = {k: getattr(self, k) for k in required}
        out.update({k: getattr(self, k) for k in optional})
        return out


@dataclass(frozen=True)
class SignalConfig:
    phi: float
    zbar: float = 0.5

    @classmethod
    def from_dict(cls, d: dict) -> "SignalConfig":
        _require_keys(d, "signal", ("phi",), ("zbar",))
        return cls(phi=_number(d, "signal", "phi"),
                   zbar=_number(d, "signal", "zbar", 0.5))

    def to_dict(self) -> dict:
        return {"phi": self.phi, "zbar": self.zbar}

    @property
    def spec(self) -> SignalSpec:
        return SignalSpec(self.phi, self.zbar)


@dataclass(frozen=True)
class SimulateConfig:
    n_paths: int
    horizon: int
    seed: int
    theta: Optional[float] = None

    @classmethod
    def from_dict(cls, d: dict) -> "SimulateConfig":
        _require_keys(d, "simulate", ("n_paths", "horizon", "seed"), ("theta",))
        theta = d.get("theta")
        if theta is not None:
            theta = _number(d, "simulate", "theta")
        return cls(
            n_paths=_integer(d, "simulate", "n_paths"),
            horizon=_integer(d, "simulate", "horizon"),
            seed=_integer(d, "simulate", "seed"),
            theta=theta,
        )

    def to_dict(self) -> dict:
        return {"n_paths": self.n_paths, "horizon": self.horizon,
                "seed": self.seed, "theta": self.theta}


@dataclass(frozen=True)
class SweepConfig:
    parameter: str
    values: tuple

    @classmethod
    def from_dict(cls, d: dict) -> "SweepConfig":
        _require_keys(d, "sweep", ("parameter", "values"))
        parameter = _choice(d, "sweep", "parameter", SWEEP_PARAMETERS)
        values = d["values"]
        if (not isinstance(values, list) or not values
                or any(isinstance(v, bool) or not isinstance(v, (int, float))
                       for v in values)):
            raise ConfigError("sweep.values must be a nonempty list of numbers")
        return cls(parameter=parameter, values=tuple(float(v) for v in values))

    def to_dict(self) -> dict:
        return {"parameter": self.parameter, "values": list(self.values)}


@dataclass(frozen=True)
class OutputConfig:
    directory: str = "."
    format: str = "csv"

    @classmethod
    def from_dict(cls, d: dict) -> "OutputConfig":
        _require_keys(d, "output", (), ("directory", "format"))
        directory = d.get("directory", ".")
        if not isinstance(directory, str):
            raise ConfigError(f"output.directory must be a string, got {directory!r}")
        return cls(directory=directory,
                   format=_choice(d, "output", "format", FORMATS, "csv"))

    def to_dict(self) -> dict:
        return {"directory": self.directory, "format": self.format}


@dataclass(frozen=True)
class RunConfig:
    model: ModelConfig
    solver: SolverConfig
    signal: Optional[SignalConfig] = None
    simulate: Optional[SimulateConfig] = None
    sweep: Optional[SweepConfig] = None
    output: OutputConfig = field(default_factory=OutputConfig)

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        _require_keys(d, "config", ("schema_version", "model", "solver"),
                      ("signal", "simulate", "sweep", "output"))
        version = d["schema_version"]
        if version != SCHEMA_VERSION:
            raise ConfigError(
                f"config.schema_version must be {SCHEMA_VERSION}, got {version!r}")
        solver = SolverConfig.from_dict(d["solver"])
        signal = SignalConfig.from_dict(d["signal"]) if "signal" in d else None
        if solver.kind.startswith("grid") and signal is None:
            raise ConfigError(f"solver.kind {solver.kind!r} needs a signal section")
        if signal is not None and not solver.kind.startswith("grid"):
            raise ConfigError(
                f"signal section requires a grid solver, not {solver.kind!r}")
        return cls(
            model=ModelConfig.from_dict(d["model"]),
            solver=solver,
            signal=signal,
            simulate=(SimulateConfig.from_dict(d["simulate"])
                      if "simulate" in d else None),
            sweep=SweepConfig.from_dict(d["sweep"]) if "sweep" in d else None,
            output=(OutputConfig.from_dict(d["output"])
                    if "output" in d else OutputConfig()),
        )

    def to_dict(self) -> dict:
        out: dict[str, Any] = {
            "schema_version": SCHEMA_VERSION,
            "model": self.model.to_dict(),
            "solver": self.solver.to_dict(),
        }
        if self.signal is not None:
            out["signal"] = self.signal.to_dict()
        if self.simulate is not None:
            out["simulate"] = self.simulate.to_dict()
        if self.sweep is not None:
            out["sweep"] = self.sweep.to_dict()
        out["output"] = self.output.to_dict()
        return out


def load_config(path: str) -> RunConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    return RunConfig.from_dict(raw)


def config_hash(cfg: RunConfig) -> str:
    canonical = json.dumps(cfg.to_dict(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:12]


def lattice_spec(cfg: RunConfig) -> LatticeSpec:
    return LatticeSpec(
        cfg.model.prior, cfg.solver.max_depth, cfg.model.delta,
        cfg.model.prefs, cfg.model.pricing,
        cfg.solver.grid_size, cfg.solver.tolerance, cfg.solver.max_sweeps,
    )


def build_policy(cfg: RunConfig):
    """Solve whatever the config's solver section describes.

    Domain errors out of the model constructors (bad delta, bad depth, ...)
    are re-raised as ConfigError so the caller can treat them uniformly as
    bad input rather than solver failure.
    """
    kind = cfg.solver.kind
    try:
        if kind == "finite":
            return solve_finite(FiniteHorizonSpec(
                cfg.solver.periods, cfg.model.prior, cfg.model.delta,
                cfg.model.prefs, cfg.model.pricing))
        if kind == "stationary":
            return value_iterate(lattice_spec(cfg))
        prior = discretize_beta(cfg.model.prior, cfg.solver.belief_points)
        if kind == "grid_finite":
            horizon = FiniteGridHorizon(cfg.solver.periods)
        else:
            horizon = StationaryGridHorizon(
                cfg.solver.max_depth, cfg.solver.tolerance, cfg.solver.max_sweeps)
        return solve_grid(
            prior, cfg.signal.spec, cfg.model.delta, cfg.model.prefs,
            cfg.model.pricing, horizon, value_points=cfg.solver.value_points)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"solver: {exc}") from exc


def fmt_float(x) -> str:
    """17 significant digits: enough to round-trip any double exactly."""
    if x is None:
        return ""
    return f"{float(x):.17g}"


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, float):
        return fmt_float(v)
    return str(v)


def write_table(path: str, header: Sequence[str], rows: Sequence[Sequence],
                meta: dict) -> None:
    """CSV with a `# key=value` provenance comment above the fixed header."""
    tagged = " ".join(f"{k}={v}" for k, v in meta.items())
    lines = [f"# {tagged}", ",".join(header)]
    lines.extend(",".join(_cell(v) for v in row) for row in rows)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def write_json(path: str, payload: dict, meta: dict) -> None:
    body = dict(meta)
    body.update(payload)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(body, fh, indent=2, sort_keys=False)
        fh.write("\n")


def ensure_outdir(directory: str) -> str:
    os.makedirs(directory, exist_ok=True)
    return directory
