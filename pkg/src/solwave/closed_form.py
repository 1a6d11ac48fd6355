"""Exact solution families, used as oracles for the numerical solvers."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import beta as beta_fn

from .errors import InternalError, InvalidArgument, InvalidFamily
from .fieldcore import Grid, State, translate


def sech(x):
    # 1/cosh overflows harmlessly to 0 for |x| > ~710
    with np.errstate(over="ignore"):
        return 1.0 / np.cosh(x)


def _sech_power_integral(m: float) -> float:
    """int_R sech(y)^m dy = B(m/2, 1/2)."""
    return float(beta_fn(m / 2.0, 0.5))


def single_profile_mass(alpha_exp: float, beta_coef: float, lam: float) -> float:
    e = 1.0 / (alpha_exp - 1.0)
    width = math.sqrt(lam) * (alpha_exp - 1.0) / 2.0
    return (lam / beta_coef) ** (2 * e) * _sech_power_integral(4 * e) / width


def single_profile_values(grid: Grid, alpha_exp: float, beta_coef: float, lam: float) -> np.ndarray:
    e = 1.0 / (alpha_exp - 1.0)
    width = math.sqrt(lam) * (alpha_exp - 1.0) / 2.0
    return (lam / beta_coef) ** e * sech(width * grid.x) ** (2 * e)


def solve_lambda(alpha_exp: float, beta_coef: float, s: float, tol: float = 1e-13) -> float:
    """Bisection for the lambda whose profile carries mass s."""
    lo, hi = 1e-12, 1.0
    if single_profile_mass(alpha_exp, beta_coef, lo) > s:
        raise InternalError("mass target below the lower bisection bracket")
    for _ in range(2000):
        if single_profile_mass(alpha_exp, beta_coef, hi) >= s:
            break
        hi *= 2.0
    else:
        raise InternalError("could not bracket lambda")
    # absolute tolerance on lambda, relative once lambda < 1
    while hi - lo > tol * min(1.0, hi):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break  # bracket exhausted at floating-point resolution
        if single_profile_mass(alpha_exp, beta_coef, mid) < s:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def single_profile(alpha_exp: float, beta_coef: float, s: float, grid: Grid):
    """Minimizer h_s of J at mass s, and its frequency lambda.

    h_s = (lam/beta)^(1/(alpha-1)) sech^(2/(alpha-1))(sqrt(lam)(alpha-1)x/2)
    solves -2h'' - (alpha+1) beta h^alpha + 2 lam h = 0.
    """
    if not (1 < alpha_exp < 5):
        raise InvalidArgument(f"exponent must lie in (1,5), got {alpha_exp}")
    if not (beta_coef > 0 and s > 0):
        raise InvalidArgument("coefficient and mass must be positive")
    lam = solve_lambda(alpha_exp, beta_coef, s)
    return single_profile_values(grid, alpha_exp, beta_coef, lam), lam


def symmetric_pair(alpha: float, Omega: float, grid: Grid) -> State:
    """Equal-amplitude pair sqrt(2 Omega/(alpha+1)) sech(sqrt(Omega) x) (tau = 1, quartic)."""
    if not Omega > 0:
        raise InvalidArgument(f"Omega must be positive, got {Omega}")
    if not alpha > -1:
        raise InvalidArgument(f"alpha must exceed -1, got {alpha}")
    phi = math.sqrt(2 * Omega / (alpha + 1)) * sech(math.sqrt(Omega) * grid.x)
    return State(phi, phi.copy())


def nguyen_amplitudes(alpha: float, beta: float, tau: float, Omega: float) -> tuple[float, float]:
    det = tau * tau - alpha * beta
    if det == 0:
        raise InvalidFamily("tau^2 = alpha*beta: family undefined")
    A2 = 2 * Omega * (tau - beta) / det
    B2 = 2 * Omega * (tau - alpha) / det
    if not (A2 > 0 and B2 > 0):
        raise InvalidFamily(
            f"negative amplitude radicand for alpha={alpha}, beta={beta}, tau={tau}")
    return math.sqrt(A2), math.sqrt(B2)


def nguyen_pair(alpha: float, beta: float, tau: float, Omega: float, grid: Grid) -> State:
    """Asymmetric sech pair (A sech, B sech)(sqrt(Omega) x) of the quartic system.

    A^2 = 2 Omega (tau - beta)/(tau^2 - alpha beta), B^2 likewise with alpha.
    """
    if not Omega > 0:
        raise InvalidArgument(f"Omega must be positive, got {Omega}")
    A, B = nguyen_amplitudes(alpha, beta, tau, Omega)
    prof = sech(math.sqrt(Omega) * grid.x)
    return State(A * prof, B * prof)


@dataclass(frozen=True)
class TravelingWaveSpec:
    omega1: float
    omega2: float
    sigma: float
    lambda1: float
    lambda2: float
    profile: State

    def __post_init__(self):
        for f in self.profile:
            if np.iscomplexobj(f) and np.max(np.abs(np.imag(f)), initial=0.0) >= 1e-12:
                raise InvalidArgument("traveling-wave profile must be real-valued")


def traveling_wave(grid: Grid, spec: TravelingWaveSpec, t: float) -> State:
    """Evaluate exp(i(w - sigma^2)t + i sigma x + i lambda) Profile(x - 2 sigma t)."""
    shift = 2 * spec.sigma * t
    out = []
    for prof, w, lam in ((spec.profile.u, spec.omega1, spec.lambda1),
                         (spec.profile.v, spec.omega2, spec.lambda2)):
        moved = translate(grid, np.real(prof).astype(float), shift)
        phase = np.exp(1j * ((w - spec.sigma**2) * t + spec.sigma * grid.x + lam))
        out.append(phase * moved)
    return State(*out)
