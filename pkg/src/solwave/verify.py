"""Consolidated oracle suite behind the ``verify`` subcommand."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import closed_form, dynamics, groundstate, rearrange
from .errors import SolwaveError
from .fieldcore import make_grid
from .model import ModelParams, MultiplierPair, el_residual


@dataclass
class Check:
    name: str
    passed: bool
    value: float
    threshold: float
    detail: str = ""

    def to_dict(self) -> dict:
        return {"name": self.name, "passed": bool(self.passed), "value": float(self.value),
                "threshold": float(self.threshold), "detail": self.detail}


def _quartic(alpha=1.0, beta=1.0, tau=1.0) -> ModelParams:
    return ModelParams.simple(alpha=alpha, beta=beta, tau=tau)


def check_closed_forms(grid) -> list[Check]:
    out = []
    for Om in (1.0, 4.0):
        st = closed_form.symmetric_pair(1.0, Om, grid)
        r = el_residual(_quartic(), grid, st, MultiplierPair(Om, Om))
        out.append(Check(f"symmetric_pair(alpha=1, Omega={Om:g}) residual", r < 1e-7, r, 1e-7))
    st = closed_form.nguyen_pair(1.0, 1.0, 3.0, 1.0, grid)
    r = el_residual(_quartic(tau=3.0), grid, st, MultiplierPair(1.0, 1.0))
    out.append(Check("nguyen_pair(1, 1, 3, Omega=1) residual", r < 1e-7, r, 1e-7))
    for a_exp in (2.0, 3.0):
        h, lam = closed_form.single_profile(a_exp, 1.0, 2.0, grid)
        # -2h'' - (a+1) h^a + 2 lam h = 0
        lap = np.fft.ifft(grid.k2 * np.fft.fft(h)).real
        defect = 2 * lap - (a_exp + 1) * h**a_exp + 2 * lam * h
        r = math.sqrt(grid.dx * np.sum(defect**2))
        out.append(Check(f"single_profile(alpha={a_exp:g}) residual", r < 1e-7, r, 1e-7))
    return out


def check_groundstate(grid) -> list[Check]:
    cfg = groundstate.MinimizerConfig(L=grid.L, n=grid.n)
    gs = groundstate.minimize(_quartic(), groundstate.ConstraintPair(2.0, 2.0), cfg)
    ref = closed_form.symmetric_pair(1.0, 1.0, grid)
    d = dynamics.symmetry_distance(grid, gs.profile, ref)[0]
    werr = max(abs(gs.multipliers.omega1 - 1), abs(gs.multipliers.omega2 - 1))
    conc = groundstate.concentration_profile(grid, gs.profile, groundstate.default_zetas(grid))
    ratio = conc.gamma_estimate / 4.0
    return [
        Check("ground state theta = -4/3", abs(gs.theta + 4 / 3) < 1e-6, abs(gs.theta + 4 / 3), 1e-6),
        Check("ground state multipliers = (1,1)", werr < 1e-5, werr, 1e-5),
        Check("ground state orbit distance to (sech, sech)", d < 1e-5, d, 1e-5),
        Check("ground state concentration gamma/(s+t)",
              ratio > 0.999 and conc.classification == "compactness", ratio, 0.999,
              conc.classification),
    ]


def check_rearrangement() -> list[Check]:
    reps = [rearrange.rearrangement_suite(make_grid(n=n)) for n in (1024, 2048)]
    slack = [max(0.0, -r["min_kinetic_margin"]) for r in reps]
    mixed_slack = max(max(0.0, -r["min_mixed_margin"]) for r in reps)
    return [
        Check("rearrangement L^s preservation", reps[0]["max_ls_error"] < 1e-14,
              reps[0]["max_ls_error"], 1e-14),
        Check("Polya-Szego kinetic non-increase", slack[0] <= 1e-8 and slack[1] <= slack[0],
              slack[0], 1e-8, f"slack n=1024 {slack[0]:.3g}, n=2048 {slack[1]:.3g}"),
        Check("mixed-term non-decrease", mixed_slack <= 1e-8, mixed_slack, 1e-8),
        Check("garineq margin", reps[0]["min_garineq_margin"] >= 0,
              reps[0]["min_garineq_margin"], 0.0),
    ]


def check_dynamics(grid) -> list[Check]:
    P = _quartic()
    s0 = closed_form.symmetric_pair(1.0, 1.0, grid)
    cfg = dynamics.EvolutionConfig(dt=1e-3, T=2 * math.pi, sample_stride=500)
    sT, rep = dynamics.evolve(P, grid, s0, cfg)
    d = dynamics.symmetry_distance(grid, sT, s0)[0]
    qdrift = max(rep.drift_q_u, rep.drift_q_v)
    spec = closed_form.TravelingWaveSpec(1.0, 1.0, 0.5, 0.0, 0.0, s0)
    w0 = closed_form.traveling_wave(grid, spec, 0.0)
    wT, _ = dynamics.evolve(P, grid, w0, dynamics.EvolutionConfig(dt=1e-3, T=4.0, sample_stride=4000))
    peak = grid.x[int(np.argmax(np.abs(wT.u)))]
    perr = abs(peak - 4.0)
    return [
        Check("standing wave returns after T=2pi", d < 1e-6, d, 1e-6),
        Check("mass conservation (standing wave)", qdrift < 1e-12, qdrift, 1e-12),
        Check("traveling wave peak displacement 2 sigma T", perr < grid.dx, perr, grid.dx),
    ]


def check_stability(grid) -> list[Check]:
    P = _quartic()
    cfg = groundstate.MinimizerConfig(L=grid.L, n=grid.n)
    gs = groundstate.minimize(P, groundstate.ConstraintPair(2.0, 2.0), cfg)
    rep = dynamics.stability_experiment(P, grid, gs, 1e-2,
                                        dynamics.EvolutionConfig(dt=1e-3, T=50.0, sample_stride=500),
                                        seed=0)
    return [Check("orbital stability max distance (T=50, delta=1e-2)",
                  rep.max_distance < 5e-2, rep.max_distance, 5e-2)]


def run_verify(fast: bool = False) -> tuple[bool, list[Check]]:
    """Run every suite; a suite that raises is recorded as one failed check."""
    grid = make_grid()
    suites = [("closed-form", lambda: check_closed_forms(grid)),
              ("groundstate", lambda: check_groundstate(grid)),
              ("rearrangement", check_rearrangement),
              ("dynamics", lambda: check_dynamics(grid))]
    if not fast:
        suites.append(("stability", lambda: check_stability(grid)))
    checks: list[Check] = []
    for name, fn in suites:
        try:
            checks.extend(fn())
        except (SolwaveError, FloatingPointError) as exc:
            checks.append(Check(f"{name} suite", False, float("nan"), float("nan"),
                                f"{type(exc).__name__}: {exc}"))
    return all(c.passed for c in checks), checks


def format_table(checks: list[Check]) -> str:
    width = max(len(c.name) for c in checks)
    lines = [f"{'check':<{width}}  {'result':<6}  {'value':>11}  {'threshold':>10}"]
    for c in checks:
        lines.append(f"{c.name:<{width}}  {'PASS' if c.passed else 'FAIL':<6}  "
                     f"{c.value:>11.3e}  {c.threshold:>10.3e}"
                     + (f"  {c.detail}" if c.detail else ""))
    return "\n".join(lines)
