"""Command-line entry point.

Settings are resolved in this order (later wins): built-in defaults, the
JSON file given with ``--config``, then explicit command-line flags.

Exit codes: 0 success, 1 check failure, 2 configuration error,
3 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import __version__, closed_form, dynamics, groundstate, rearrange, verify
from .config import RunConfig, config_from_dict
from .errors import ConfigError, InvalidArgument, NumericalFailure, SolwaveError
from .fieldcore import State, read_field_csv, write_field_csv
from .model import MultiplierPair

EXIT_OK, EXIT_CHECK, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3

log = logging.getLogger("solwave")


def _dump(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _header(cfg: RunConfig) -> dict:
    return {"version": __version__, "config": cfg.to_dict()}


def _minimizer_cfg(cfg: RunConfig) -> groundstate.MinimizerConfig:
    m = cfg.section("minimizer")
    return groundstate.MinimizerConfig(L=cfg.grid.L, n=cfg.grid.n, dtau=m["dtau"], tol=m["tol"],
                                       max_iter=m["max_iter"], initial=m["initial"],
                                       multistart=m["multistart"], seed=m["seed"])


def _evolution_cfg(cfg: RunConfig) -> dynamics.EvolutionConfig:
    e = cfg.section("evolution")
    return dynamics.EvolutionConfig(dt=e["dt"], T=e["T"], sample_stride=e["sample_stride"])


def _outdir(cfg: RunConfig) -> Path:
    p = Path(cfg.output_dir)
    p.mkdir(parents=True, exist_ok=True)
    return p


def write_profile(out: Path, grid, state: State, stem: str = "profile") -> None:
    write_field_csv(out / f"{stem}_u.csv", grid, state.u)
    write_field_csv(out / f"{stem}_v.csv", grid, state.v)


def read_profile(directory: Path, grid, stem: str = "profile") -> State:
    return State(read_field_csv(directory / f"{stem}_u.csv", grid),
                 read_field_csv(directory / f"{stem}_v.csv", grid))


# -- commands ----------------------------------------------------------------

def cmd_groundstate(cfg: RunConfig) -> int:
    c = cfg.section("constraints")
    gs = groundstate.minimize(cfg.params, groundstate.ConstraintPair(c["s"], c["t"]),
                              _minimizer_cfg(cfg))
    grid = cfg.grid
    conc = groundstate.concentration_profile(grid, gs.profile, groundstate.default_zetas(grid))
    struct = groundstate.structure_check(cfg.params, grid, gs)
    out = _outdir(cfg)
    write_profile(out, grid, gs.profile)
    summary = {**_header(cfg), **gs.summary(), "gamma": conc.gamma_estimate,
               "classification": conc.classification, "structure": struct}
    _dump(out / "groundstate.json", summary)
    print(f"theta={gs.theta:.12g} omega=({gs.multipliers.omega1:.10g}, "
          f"{gs.multipliers.omega2:.10g}) residual={gs.residual:.3e} "
          f"iterations={gs.iterations} -> {out}")
    return EXIT_OK


def cmd_theta_scan(cfg: RunConfig) -> int:
    sc = cfg.section("scan")
    surface = groundstate.theta_scan(cfg.params, sc["s_values"], sc["t_values"],
                                     _minimizer_cfg(cfg), jobs=cfg.jobs)
    out = _outdir(cfg)
    with open(out / "surface.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["s", "t", "theta", "omega1", "omega2", "residual"])
        for row in surface.rows():
            w.writerow([repr(float(row[k])) for k in ("s", "t", "theta", "omega1", "omega2", "residual")])
    sub = groundstate.subadditivity_check(surface)
    _dump(out / "subadditivity.json", {**_header(cfg), **sub})
    failed = [r for r in surface.rows() if not r["converged"]]
    print(f"{len(surface.s_values) * len(surface.t_values) - len(failed)} cells converged, "
          f"{len(failed)} failed; subadditivity checks={sub['checks']} "
          f"min margin={sub['min_margin']} failures={len(sub['failures'])} -> {out}")
    return EXIT_CHECK if sub["failures"] else EXIT_OK


def _initial_state(cfg: RunConfig):
    init = cfg.section("initial_state")
    grid = cfg.grid
    fam = init["family"]
    if fam == "symmetric":
        return closed_form.symmetric_pair(init["alpha"], init["Omega"], grid)
    if fam == "nguyen":
        return closed_form.nguyen_pair(init["alpha"], init["beta"], init["tau"], init["Omega"], grid)
    if fam == "traveling":
        prof = closed_form.symmetric_pair(init["alpha"], init["Omega"], grid)
        spec = closed_form.TravelingWaveSpec(init["Omega"], init["Omega"], init["sigma"],
                                             init["lambda1"], init["lambda2"], prof)
        return closed_form.traveling_wave(grid, spec, 0.0)
    if not init["path"]:
        raise ConfigError("initial_state.family 'file' needs initial_state.path",
                          "initial_state.path")
    return read_profile(Path(init["path"]), grid)


def cmd_evolve(cfg: RunConfig) -> int:
    s0 = _initial_state(cfg)
    ecfg = _evolution_cfg(cfg)
    sT, rep = dynamics.evolve(cfg.params, cfg.grid, s0, ecfg,
                              precision=cfg.section("evolution")["precision"])
    out = _outdir(cfg)
    _dump(out / "trajectory.json", {**_header(cfg), **rep.to_dict()})
    if cfg.snapshots:
        write_profile(out, cfg.grid, s0, "initial")
        write_profile(out, cfg.grid, sT, "final")
    print(f"T={ecfg.T:g} drift Q(u)={rep.drift_q_u:.3e} Q(v)={rep.drift_q_v:.3e} "
          f"H={rep.drift_h:.3e} -> {out}")
    return EXIT_OK


def _stability_seed(args):
    params, grid, gs, delta, ecfg, seed = args
    return dynamics.stability_experiment(params, grid, gs, delta, ecfg, seed=seed)


def load_groundstate(directory: Path, grid) -> groundstate.GroundState:
    """Rebuild a GroundState from the output directory of a ``groundstate`` run."""
    meta = json.loads((directory / "groundstate.json").read_text())
    return groundstate.GroundState(read_profile(directory, grid),
                                   MultiplierPair(meta["omega1"], meta["omega2"]),
                                   meta["theta"], meta["residual"], meta["iterations"],
                                   meta["converged"], meta.get("start", ""))


def cmd_stability(cfg: RunConfig) -> int:
    st = cfg.section("stability")
    grid = cfg.grid
    if st["groundstate"]:
        gs = load_groundstate(Path(st["groundstate"]), grid)
    else:
        c = cfg.section("constraints")
        gs = groundstate.minimize(cfg.params, groundstate.ConstraintPair(c["s"], c["t"]),
                                  _minimizer_cfg(cfg))
    ecfg = _evolution_cfg(cfg)
    tasks = [(cfg.params, grid, gs, st["delta"], ecfg, seed) for seed in st["seeds"]]
    if cfg.jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as ex:
            results = list(ex.map(_stability_seed, tasks))
    else:
        results = [_stability_seed(t) for t in tasks]
    out = _outdir(cfg)
    for rep in results:
        with open(out / f"distance_seed{rep.seed}.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "d"])
            for t, d in zip(rep.times, rep.distance_trace):
                w.writerow([repr(float(t)), repr(float(d))])
        print(f"seed {rep.seed}: max distance {rep.max_distance:.4e}, "
              f"final-quarter ratio {rep.final_quarter_ratio:.3f}")
    summary = {**_header(cfg), "ground_state": gs.summary(),
               "runs": [r.to_dict() for r in results],
               "max_distance": max(r.max_distance for r in results) if results else 0.0}
    _dump(out / "stability.json", summary)
    return EXIT_OK


def cmd_rearrange_check(cfg: RunConfig) -> int:
    r = cfg.section("rearrange")
    rep = rearrange.rearrangement_suite(cfg.grid, seed=r["seed"], pairs=r["pairs"],
                                        bump_configs=r["bump_configs"], params=cfg.params)
    out = _outdir(cfg)
    doc = {**_header(cfg), **rep}
    _dump(out / "rearrange.json", doc)
    ok = (rep["max_ls_error"] < 1e-14 and rep["min_kinetic_margin"] >= -1e-8
          and rep["min_mixed_margin"] >= -1e-8 and rep["min_garineq_margin"] >= 0)
    print(json.dumps({k: v for k, v in rep.items() if k.startswith(("max_", "min_"))},
                     indent=2, sort_keys=True))
    return EXIT_OK if ok else EXIT_CHECK


def cmd_verify(cfg: RunConfig, fast: bool) -> int:
    ok, checks = verify.run_verify(fast=fast)
    print(verify.format_table(checks))
    failing = [c.name for c in checks if not c.passed]
    if failing:
        print("FAILED: " + "; ".join(failing))
    if cfg.output_dir:
        out = _outdir(cfg)
        _dump(out / "verify.json", {"version": __version__, "fast": fast, "passed": ok,
                                    "checks": [c.to_dict() for c in checks]})
    return EXIT_OK if ok else EXIT_CHECK


# -- argument parsing --------------------------------------------------------

def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON run configuration file")
    p.add_argument("--out", dest="output_dir", help="output directory")
    p.add_argument("--alpha", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--tau", type=float, help="single coupling strength (replaces couplings)")
    p.add_argument("--p", type=float)
    p.add_argument("--r", type=float)
    p.add_argument("--q", type=float, help="single coupling exponent (replaces couplings)")
    p.add_argument("--L", type=float, help="domain half-length")
    p.add_argument("--n", type=int, help="number of grid samples")
    p.add_argument("-v", "--verbose", action="store_true")


def _add_minimizer(p):
    p.add_argument("--s", type=float)
    p.add_argument("--t", type=float)
    p.add_argument("--dtau", type=float)
    p.add_argument("--tol", type=float)
    p.add_argument("--max-iter", type=int)
    p.add_argument("--initial", choices=["multistart", "gaussian", "sech-ansatz", "random"])
    p.add_argument("--multistart", type=int)
    p.add_argument("--seed", type=int)


def _add_evolution(p):
    p.add_argument("--dt", type=float)
    p.add_argument("--T", type=float)
    p.add_argument("--sample-stride", type=int)
    p.add_argument("--precision", choices=["extended", "double"])


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="solwave", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("groundstate", help="compute one constrained minimizer")
    _add_common(p)
    _add_minimizer(p)

    p = sub.add_parser("theta-scan", help="scan the minimum energy over (s, t)")
    _add_common(p)
    _add_minimizer(p)
    p.add_argument("--s-values", type=float, nargs="+")
    p.add_argument("--t-values", type=float, nargs="+")
    p.add_argument("--jobs", type=int, default=None,
                   help="parallel workers (default $SOLWAVE_JOBS or 1)")

    p = sub.add_parser("evolve", help="integrate the coupled system in time")
    _add_common(p)
    _add_evolution(p)
    p.add_argument("--family", choices=["symmetric", "nguyen", "traveling", "file"])
    p.add_argument("--Omega", type=float)
    p.add_argument("--sigma", type=float)
    p.add_argument("--state", dest="path",
                   help="directory holding profile_u.csv and profile_v.csv (family 'file')")
    p.add_argument("--snapshots", action="store_true", default=None)

    p = sub.add_parser("stability", help="perturb a ground state and track its orbit distance")
    _add_common(p)
    _add_minimizer(p)
    _add_evolution(p)
    p.add_argument("--delta", type=float)
    p.add_argument("--seeds", type=int, nargs="+")
    p.add_argument("--groundstate", help="output directory of a previous groundstate run")
    p.add_argument("--jobs", type=int, default=None,
                   help="parallel workers (default $SOLWAVE_JOBS or 1)")

    p = sub.add_parser("rearrange-check", help="rearrangement inequality suite")
    _add_common(p)
    p.add_argument("--seed", type=int)
    p.add_argument("--pairs", type=int)

    p = sub.add_parser("verify", help="run the consolidated oracle suite")
    p.add_argument("--fast", action="store_true", help="skip the T=50 stability run")
    p.add_argument("--out", dest="output_dir", help="also write verify.json here")
    p.add_argument("-v", "--verbose", action="store_true")
    return parser


_FLAG_SECTIONS = {
    "s": ("constraints", "s"), "t": ("constraints", "t"),
    "dtau": ("minimizer", "dtau"), "tol": ("minimizer", "tol"),
    "max_iter": ("minimizer", "max_iter"), "initial": ("minimizer", "initial"),
    "multistart": ("minimizer", "multistart"),
    "s_values": ("scan", "s_values"), "t_values": ("scan", "t_values"),
    "dt": ("evolution", "dt"), "T": ("evolution", "T"),
    "sample_stride": ("evolution", "sample_stride"), "precision": ("evolution", "precision"),
    "family": ("initial_state", "family"), "Omega": ("initial_state", "Omega"),
    "sigma": ("initial_state", "sigma"), "path": ("initial_state", "path"),
    "delta": ("stability", "delta"), "seeds": ("stability", "seeds"),
    "groundstate": ("stability", "groundstate"),
    "pairs": ("rearrange", "pairs"),
    "L": ("grid", "L"), "n": ("grid", "n"),
}


def resolve_config(args: argparse.Namespace) -> RunConfig:
    """Merge the config file with explicit flags and validate."""
    d: dict = {}
    if getattr(args, "config", None):
        try:
            d = json.loads(Path(args.config).read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read config file: {exc}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"malformed JSON in {args.config}: {exc}") from None
        if not isinstance(d, dict):
            raise ConfigError("configuration must be a JSON object")
    d = json.loads(json.dumps(d))
    d["command"] = args.command
    vals = vars(args)
    params = dict(d.get("params", {}))
    for k in ("alpha", "beta", "p", "r"):
        if vals.get(k) is not None:
            params[k] = vals[k]
    if vals.get("tau") is not None or vals.get("q") is not None:
        base = (params.get("couplings") or [{"tau": 1.0, "q": 2.0}])[0]
        params["couplings"] = [{"tau": vals.get("tau") if vals.get("tau") is not None else base["tau"],
                                "q": vals.get("q") if vals.get("q") is not None else base["q"]}]
    if params:
        d["params"] = params
    for flag, (section, key) in _FLAG_SECTIONS.items():
        if vals.get(flag) is not None:
            d.setdefault(section, {})
            d[section][key] = vals[flag]
    if vals.get("seed") is not None:
        sec = "rearrange" if args.command == "rearrange-check" else "minimizer"
        d.setdefault(sec, {})["seed"] = vals["seed"]
    if vals.get("output_dir") is not None:
        d["output_dir"] = vals["output_dir"]
    if vals.get("snapshots"):
        d["snapshots"] = True
    if args.command in ("theta-scan", "stability"):
        jobs = vals.get("jobs")
        if jobs is None and "jobs" not in d:
            env = os.environ.get("SOLWAVE_JOBS")
            if env:
                try:
                    jobs = int(env)
                except ValueError:
                    raise ConfigError(f"SOLWAVE_JOBS must be an integer, got {env!r}", "jobs") from None
        if jobs is not None:
            d["jobs"] = jobs
    return config_from_dict(d)


COMMANDS = {
    "groundstate": cmd_groundstate,
    "theta-scan": cmd_theta_scan,
    "evolve": cmd_evolve,
    "stability": cmd_stability,
    "rearrange-check": cmd_rearrange_check,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "verify":
            out = args.output_dir
            cfg = config_from_dict({"command": "verify", "output_dir": out or ""})
            return cmd_verify(cfg, args.fast)
        cfg = resolve_config(args)
        return COMMANDS[args.command](cfg)
    except (ConfigError, InvalidArgument) as exc:
        field = getattr(exc, "field", None)
        print(f"configuration error{f' ({field})' if field else ''}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalFailure as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except SolwaveError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CHECK


if __name__ == "__main__":
    sys.exit(main())
