"""Energy, masses and Euler-Lagrange machinery for the coupled system.

The energy is

    H(u, v) = |u_x|^2 + |v_x|^2 - (a |u|_p^p + b |v|_r^r + sum_k c_k |uv|_{q_k}^{q_k})

with a = 2 alpha / p, b = 2 beta / r and c_k = 2 tau_k / q_k.  A single
coupling entry gives the classical two-equation system.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import DegenerateConstraint, InvalidArgument
from .fieldcore import Grid, State, integrate, kinetic

EXPONENT_RANGE = (2.0, 6.0)


@dataclass(frozen=True)
class Coupling:
    tau: float
    q: float


@dataclass(frozen=True)
class ModelParams:
    alpha: float
    beta: float
    p: float
    r: float
    couplings: tuple[Coupling, ...] = field(default=(Coupling(1.0, 2.0),))

    def __post_init__(self):
        cps = tuple(c if isinstance(c, Coupling) else Coupling(*c) for c in self.couplings)
        object.__setattr__(self, "couplings", cps)
        self.validate()

    def validate(self) -> None:
        """Raise InvalidArgument unless every positivity and exponent-range condition holds."""
        lo, hi = EXPONENT_RANGE
        for name in ("alpha", "beta"):
            val = getattr(self, name)
            if not (math.isfinite(val) and val > 0):
                raise InvalidArgument(f"{name} must be positive, got {val}")
        for name in ("p", "r"):
            val = getattr(self, name)
            if not (lo < val < hi):
                raise InvalidArgument(f"{name} out of range (2,6): {val}")
        if not self.couplings:
            raise InvalidArgument("couplings must be a nonempty list")
        for c in self.couplings:
            if not (math.isfinite(c.tau) and c.tau > 0):
                raise InvalidArgument(f"tau must be positive, got {c.tau}")
            if not (lo < 2 * c.q < hi):
                raise InvalidArgument(f"q out of range: 2q must lie in (2,6), got q={c.q}")

    @classmethod
    def simple(cls, alpha=1.0, beta=1.0, tau=1.0, p=4.0, r=4.0, q=2.0) -> "ModelParams":
        return cls(alpha, beta, p, r, (Coupling(tau, q),))

    @property
    def a(self) -> float:
        return 2.0 * self.alpha / self.p

    @property
    def b(self) -> float:
        return 2.0 * self.beta / self.r

    @property
    def c(self) -> tuple[float, ...]:
        return tuple(2.0 * cp.tau / cp.q for cp in self.couplings)

    def swapped(self) -> "ModelParams":
        """Parameters with the roles of u and v exchanged."""
        return ModelParams(self.beta, self.alpha, self.r, self.p, self.couplings)

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "beta": self.beta,
            "p": self.p,
            "r": self.r,
            "couplings": [{"tau": c.tau, "q": c.q} for c in self.couplings],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ModelParams":
        from .config import params_from_dict

        return params_from_dict(d)


class MultiplierPair(NamedTuple):
    omega1: float
    omega2: float


def _pow(m: np.ndarray, e: float) -> np.ndarray:
    """m**e for a nonnegative modulus array, with 0**e taken as 0."""
    if e >= 1 and e == int(e):
        return m ** int(e)
    out = np.zeros_like(m, dtype=float)
    nz = m > 0
    out[nz] = np.exp(e * np.log(m[nz]))
    return out


def mass(grid: Grid, f: np.ndarray) -> float:
    return integrate(grid, np.abs(f) ** 2)


def potential_terms(params: ModelParams, grid: Grid, s: State) -> tuple[float, float, list[float]]:
    """Return (|u|_p^p, |v|_r^r, [|uv|_{q_k}^{q_k}])."""
    au, av = np.abs(s.u), np.abs(s.v)
    up = integrate(grid, _pow(au, params.p))
    vr = integrate(grid, _pow(av, params.r))
    mixed = [integrate(grid, _pow(au * av, cp.q)) for cp in params.couplings]
    return up, vr, mixed


def energy(params: ModelParams, grid: Grid, s: State) -> float:
    up, vr, mixed = potential_terms(params, grid, s)
    pot = params.a * up + params.b * vr + sum(c * m for c, m in zip(params.c, mixed))
    return kinetic(grid, s.u) + kinetic(grid, s.v) - pot


def j_functional(grid: Grid, h: np.ndarray, alpha_exp: float, beta_coef: float) -> float:
    """J(h) = |h_x|^2 - beta_coef * int |h|^(alpha_exp + 1)."""
    if not (1 < alpha_exp < 5):
        raise InvalidArgument(f"exponent must lie in (1,5), got {alpha_exp}")
    if not beta_coef > 0:
        raise InvalidArgument(f"coefficient must be positive, got {beta_coef}")
    return kinetic(grid, h) - beta_coef * integrate(grid, _pow(np.abs(h), alpha_exp + 1))


def nonlinear_coefficients(params: ModelParams, au: np.ndarray, av: np.ndarray):
    """Real multipliers ``(Vu, Vv)`` such that the nonlinear terms are Vu*u, Vv*v.

    Vu = alpha |u|^(p-2) + sum_k tau_k |v|^q_k |u|^(q_k-2); zero where |u| = 0.
    """
    vu = params.alpha * _pow(au, params.p - 2)
    vv = params.beta * _pow(av, params.r - 2)
    for cp in params.couplings:
        vu = vu + cp.tau * _pow(av, cp.q) * _pow(au, cp.q - 2)
        vv = vv + cp.tau * _pow(au, cp.q) * _pow(av, cp.q - 2)
    return vu, vv


def _neg_laplacian(grid: Grid, f: np.ndarray) -> np.ndarray:
    g = np.fft.ifft(grid.k2 * np.fft.fft(f))
    return g.real if np.isrealobj(f) else g


def energy_gradient(params: ModelParams, grid: Grid, s: State) -> State:
    """Half the L^2 gradient of H.

    With this normalization the stationarity conditions read
    ``G + omega * component = 0``, and for any direction D
    ``dH(s + eps D)/deps = 2 Re <G, D>``.
    """
    vu, vv = nonlinear_coefficients(params, np.abs(s.u), np.abs(s.v))
    return State(_neg_laplacian(grid, s.u) - vu * s.u,
                 _neg_laplacian(grid, s.v) - vv * s.v)


def pairing(grid: Grid, a: State, b: State) -> complex:
    """L^2 x L^2 inner product, conjugate-linear in the first slot."""
    return complex(grid.dx * (np.vdot(a.u, b.u) + np.vdot(a.v, b.v)))


def multipliers(params: ModelParams, grid: Grid, s: State) -> MultiplierPair:
    """Recover (omega1, omega2) from the integral identities of the EL system."""
    qu, qv = mass(grid, s.u), mass(grid, s.v)
    if qu <= 0 or qv <= 0:
        raise DegenerateConstraint("multipliers need both component masses positive")
    g = energy_gradient(params, grid, s)
    w1 = -grid.dx * np.vdot(s.u, g.u).real / qu
    w2 = -grid.dx * np.vdot(s.v, g.v).real / qv
    return MultiplierPair(float(w1), float(w2))


def el_residual(params: ModelParams, grid: Grid, s: State, m: MultiplierPair) -> float:
    """Sum of the L^2 norms of the defects of both stationary equations."""
    g = energy_gradient(params, grid, s)
    r1 = g.u + m[0] * s.u
    r2 = g.v + m[1] * s.v
    return math.sqrt(integrate(grid, np.abs(r1) ** 2)) + math.sqrt(integrate(grid, np.abs(r2) ** 2))


def negativity_quantities(params: ModelParams, grid: Grid, s: State) -> tuple[float, float]:
    """|u_x|^2 - a|u|_p^p - sum c_k|uv|^q_k and its v counterpart (negative at minimizers)."""
    up, vr, mixed = potential_terms(params, grid, s)
    cm = sum(c * m for c, m in zip(params.c, mixed))
    return (kinetic(grid, s.u) - params.a * up - cm,
            kinetic(grid, s.v) - params.b * vr - cm)
