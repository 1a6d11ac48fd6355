"""Run configuration: JSON parsing, validation and defaults."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any, Optional

from .errors import ConfigError, InvalidArgument
from .fieldcore import DEFAULT_L, DEFAULT_N, Grid, make_grid
from .model import Coupling, ModelParams

COMMANDS = ("groundstate", "theta-scan", "evolve", "stability", "rearrange-check", "verify")

# allowed keys and their defaults, per section
SECTIONS: dict[str, dict[str, Any]] = {
    "grid": {"L": DEFAULT_L, "n": DEFAULT_N},
    "constraints": {"s": 2.0, "t": 2.0},
    "minimizer": {"dtau": 0.1, "tol": 1e-9, "max_iter": 20000, "initial": "multistart",
                  "multistart": 3, "seed": 0},
    "scan": {"s_values": [1.0, 2.0, 3.0, 4.0], "t_values": [1.0, 2.0, 3.0, 4.0]},
    "evolution": {"dt": 1e-3, "T": 50.0, "sample_stride": 100, "precision": "extended"},
    "initial_state": {"family": "symmetric", "Omega": 1.0, "alpha": 1.0, "beta": 1.0,
                      "tau": 1.0, "sigma": 0.0, "lambda1": 0.0, "lambda2": 0.0, "path": None},
    "stability": {"delta": 1e-2, "seeds": [0, 1, 2, 3, 4], "groundstate": None},
    "rearrange": {"seed": 0, "pairs": 50, "bump_configs": 10},
}
TOP_LEVEL = {"command", "params", "output_dir", "jobs", "snapshots"} | set(SECTIONS)
PARAM_KEYS = {"alpha", "beta", "p", "r", "couplings"}
DEFAULT_PARAMS = {"alpha": 1.0, "beta": 1.0, "p": 4.0, "r": 4.0,
                  "couplings": [{"tau": 1.0, "q": 2.0}]}


def _number(value, name: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{name} must be a number, got {value!r}", name)
    if not math.isfinite(value):
        raise ConfigError(f"{name} must be finite", name)
    return float(value)


def params_from_dict(d: dict) -> ModelParams:
    if not isinstance(d, dict):
        raise ConfigError("params must be a JSON object", "params")
    unknown = set(d) - PARAM_KEYS
    if unknown:
        key = sorted(unknown)[0]
        raise ConfigError(f"unknown key {key!r} in params", f"params.{key}")
    merged = {**DEFAULT_PARAMS, **d}
    vals = {k: _number(merged[k], f"params.{k}") for k in ("alpha", "beta", "p", "r")}
    for k in ("alpha", "beta"):
        if vals[k] <= 0:
            raise ConfigError(f"{k} must be positive", f"params.{k}")
    for k in ("p", "r"):
        if not 2 < vals[k] < 6:
            raise ConfigError(f"{k} out of range (2,6)", f"params.{k}")
    cps = merged["couplings"]
    if not isinstance(cps, list) or not cps:
        raise ConfigError("couplings must be a nonempty list", "params.couplings")
    couplings = []
    for i, c in enumerate(cps):
        name = f"params.couplings[{i}]"
        if not isinstance(c, dict) or set(c) - {"tau", "q"} or not {"tau", "q"} <= set(c):
            raise ConfigError(f"{name} must be an object with keys tau and q", name)
        tau, q = _number(c["tau"], name + ".tau"), _number(c["q"], name + ".q")
        if tau <= 0:
            raise ConfigError("tau must be positive", name + ".tau")
        if not 2 < 2 * q < 6:
            raise ConfigError("2q out of range (2,6)", name + ".q")
        couplings.append(Coupling(tau, q))
    return ModelParams(vals["alpha"], vals["beta"], vals["p"], vals["r"], tuple(couplings))


@dataclass
class RunConfig:
    command: Optional[str]
    params: ModelParams
    grid: Grid
    sections: dict = field(default_factory=dict)
    output_dir: str = "out"
    jobs: int = 1
    snapshots: bool = False

    def section(self, name: str) -> dict:
        return self.sections[name]

    def to_dict(self) -> dict:
        d = {"command": self.command, "params": self.params.to_dict(),
             "grid": self.grid.to_dict(), "output_dir": self.output_dir,
             "jobs": self.jobs, "snapshots": self.snapshots}
        for name, sec in self.sections.items():
            if name != "grid":
                d[name] = dict(sec)
        return d


def _section(name: str, given) -> dict:
    defaults = SECTIONS[name]
    if given is None:
        given = {}
    if not isinstance(given, dict):
        raise ConfigError(f"{name} must be a JSON object", name)
    unknown = set(given) - set(defaults)
    if unknown:
        key = sorted(unknown)[0]
        raise ConfigError(f"unknown key {key!r} in {name}", f"{name}.{key}")
    return {**defaults, **given}


def _validate(sections: dict) -> None:
    c = sections["constraints"]
    for k in ("s", "t"):
        if _number(c[k], f"constraints.{k}") <= 0:
            raise ConfigError(f"constraint {k} must be positive", f"constraints.{k}")
    m = sections["minimizer"]
    for k in ("dtau", "tol"):
        if _number(m[k], f"minimizer.{k}") <= 0:
            raise ConfigError(f"{k} must be positive", f"minimizer.{k}")
    for k in ("max_iter", "multistart"):
        if not isinstance(m[k], int) or m[k] < 1:
            raise ConfigError(f"{k} must be a positive integer", f"minimizer.{k}")
    if m["initial"] not in ("multistart", "gaussian", "sech-ansatz", "random"):
        raise ConfigError(f"unknown initial guess {m['initial']!r}", "minimizer.initial")
    e = sections["evolution"]
    for k in ("dt", "T"):
        if _number(e[k], f"evolution.{k}") <= 0:
            raise ConfigError(f"{k} must be positive", f"evolution.{k}")
    if e["dt"] > e["T"]:
        raise ConfigError("dt exceeds T", "evolution.dt")
    if not isinstance(e["sample_stride"], int) or e["sample_stride"] < 1:
        raise ConfigError("sample_stride must be a positive integer", "evolution.sample_stride")
    if e["precision"] not in ("extended", "double"):
        raise ConfigError("precision must be 'extended' or 'double'", "evolution.precision")
    sc = sections["scan"]
    for k in ("s_values", "t_values"):
        vals = sc[k]
        if not isinstance(vals, list) or not vals:
            raise ConfigError(f"{k} must be a nonempty list", f"scan.{k}")
        for v in vals:
            if _number(v, f"scan.{k}") <= 0:
                raise ConfigError(f"{k} entries must be positive", f"scan.{k}")
    st = sections["stability"]
    if _number(st["delta"], "stability.delta") < 0:
        raise ConfigError("delta must be nonnegative", "stability.delta")
    if not isinstance(st["seeds"], list) or not all(isinstance(s, int) for s in st["seeds"]):
        raise ConfigError("seeds must be a list of integers", "stability.seeds")
    fam = sections["initial_state"]["family"]
    if fam not in ("symmetric", "nguyen", "traveling", "file"):
        raise ConfigError(f"unknown initial-state family {fam!r}", "initial_state.family")


def config_from_dict(d: dict) -> RunConfig:
    if not isinstance(d, dict):
        raise ConfigError("configuration must be a JSON object")
    unknown = set(d) - TOP_LEVEL
    if unknown:
        key = sorted(unknown)[0]
        raise ConfigError(f"unknown key {key!r}", key)
    cmd = d.get("command")
    if cmd is not None and cmd not in COMMANDS:
        raise ConfigError(f"unknown command {cmd!r}", "command")
    params = params_from_dict(d.get("params", {}))
    sections = {name: _section(name, d.get(name)) for name in SECTIONS}
    _validate(sections)
    g = sections["grid"]
    try:
        grid = make_grid(_number(g["L"], "grid.L"), g["n"])
    except InvalidArgument as exc:
        raise ConfigError(str(exc), "grid") from None
    jobs = d.get("jobs", 1)
    if not isinstance(jobs, int) or jobs < 1:
        raise ConfigError("jobs must be a positive integer", "jobs")
    out = d.get("output_dir", "out")
    if not isinstance(out, str):
        raise ConfigError("output_dir must be a string", "output_dir")
    return RunConfig(cmd, params, grid, sections, out, jobs, bool(d.get("snapshots", False)))


def parse_config(text: str) -> RunConfig:
    """Parse and validate a JSON run configuration, filling defaults."""
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON: {exc}") from None
    return config_from_dict(d)
