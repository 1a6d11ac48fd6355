"""Periodic spectral discretization of the real line.

Fields are plain one-dimensional numpy arrays (complex or real) sampled on
a :class:`Grid`; a :class:`State` is the ordered pair ``(u, v)``.  Every
operation here is a pure function of its inputs.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from functools import cached_property
from typing import NamedTuple

import numpy as np

from .errors import InvalidArgument

DEFAULT_L = 20 * math.pi
DEFAULT_N = 1024


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid on ``[-L, L)`` with ``n`` samples."""

    L: float
    n: int

    @property
    def dx(self) -> float:
        return 2.0 * self.L / self.n

    @cached_property
    def x(self) -> np.ndarray:
        x = -self.L + self.dx * np.arange(self.n)
        x.flags.writeable = False
        return x

    @cached_property
    def k(self) -> np.ndarray:
        """Angular wavenumbers in numpy FFT ordering."""
        k = 2.0 * np.pi * np.fft.fftfreq(self.n, d=self.dx)
        k.flags.writeable = False
        return k

    @cached_property
    def k2(self) -> np.ndarray:
        k2 = self.k**2
        k2.flags.writeable = False
        return k2

    @property
    def center_index(self) -> int:
        """Index of the sample at x = 0."""
        return self.n // 2

    def to_dict(self) -> dict:
        return {"L": self.L, "n": self.n}


class State(NamedTuple):
    u: np.ndarray
    v: np.ndarray


def make_grid(L: float = DEFAULT_L, n: int = DEFAULT_N) -> Grid:
    if not (L > 0 and math.isfinite(L)):
        raise InvalidArgument(f"half-length L must be positive, got {L}")
    if int(n) != n or n < 8 or (int(n) & (int(n) - 1)):
        raise InvalidArgument(f"n must be a power of two >= 8, got {n}")
    return Grid(float(L), int(n))


def _check_finite(f: np.ndarray) -> np.ndarray:
    if not np.all(np.isfinite(f)):
        raise InvalidArgument("field contains non-finite samples")
    return f


def integrate(grid: Grid, values: np.ndarray) -> float:
    """Periodic trapezoid rule (equal to dx times the sample sum)."""
    return float(grid.dx * np.sum(values))


def lp_norm(grid: Grid, f: np.ndarray, s: float) -> float:
    if s < 1:
        raise InvalidArgument(f"L^s norm needs s >= 1, got {s}")
    return integrate(grid, np.abs(f) ** s) ** (1.0 / s)


def spectral_derivative(grid: Grid, f: np.ndarray) -> np.ndarray:
    fh = np.fft.fft(f)
    k = grid.k.copy()
    # the Nyquist mode has no well-defined odd derivative; drop it
    k[grid.n // 2] = 0.0
    df = np.fft.ifft(1j * k * fh)
    if np.isrealobj(f):
        return df.real
    return df


def kinetic(grid: Grid, f: np.ndarray) -> float:
    """|f_x|_2^2 evaluated in transform space (Parseval)."""
    fh = np.fft.fft(f)
    return float(grid.dx / grid.n * np.sum(grid.k2 * np.abs(fh) ** 2))


def h1_norm_sq(grid: Grid, f: np.ndarray) -> float:
    fh = np.fft.fft(f)
    return float(grid.dx / grid.n * np.sum((1.0 + grid.k2) * np.abs(fh) ** 2))


def y_norm(grid: Grid, s: State) -> float:
    return math.sqrt(h1_norm_sq(grid, s.u) + h1_norm_sq(grid, s.v))


def translate(grid: Grid, f: np.ndarray, y: float) -> np.ndarray:
    """Return ``f(x - y)`` via the Fourier shift theorem."""
    if y == 0:
        return np.array(f, copy=True)
    shifted = np.fft.ifft(np.fft.fft(f) * np.exp(-1j * grid.k * y))
    return shifted.real if np.isrealobj(f) else shifted


def phase_rotate(f: np.ndarray, theta: float) -> np.ndarray:
    return np.exp(1j * theta) * np.asarray(f)


def helmholtz_invert(grid: Grid, omega: float, f: np.ndarray) -> np.ndarray:
    """Solve ``(omega - d^2/dx^2) g = f`` on the periodic grid."""
    if not omega > 0:
        raise InvalidArgument(f"Helmholtz shift must be positive, got {omega}")
    g = np.fft.ifft(np.fft.fft(f) / (omega + grid.k2))
    return g.real if np.isrealobj(f) else g


def write_state_csv(path, grid: Grid, state: State) -> None:
    """Write a state as CSV with columns x, u_re, u_im, v_re, v_im."""
    u = np.asarray(state.u, dtype=complex)
    v = np.asarray(state.v, dtype=complex)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "u_re", "u_im", "v_re", "v_im"])
        for i in range(grid.n):
            w.writerow([repr(float(c)) for c in
                        (grid.x[i], u[i].real, u[i].imag, v[i].real, v[i].imag)])


def write_field_csv(path, grid: Grid, f: np.ndarray) -> None:
    f = np.asarray(f, dtype=complex)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "re", "im"])
        for i in range(grid.n):
            w.writerow([repr(float(grid.x[i])), repr(float(f[i].real)), repr(float(f[i].imag))])


def read_state_csv(path, grid: Grid) -> State:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if data.shape != (grid.n, 5):
        raise InvalidArgument(
            f"{path}: expected {grid.n} rows of 5 columns, got {data.shape}")
    if not np.allclose(data[:, 0], grid.x, rtol=0, atol=1e-9 * grid.L):
        raise InvalidArgument(f"{path}: x column does not match grid {grid.to_dict()}")
    return State(_check_finite(data[:, 1] + 1j * data[:, 2]),
                 _check_finite(data[:, 3] + 1j * data[:, 4]))


def read_field_csv(path, grid: Grid) -> np.ndarray:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if data.shape != (grid.n, 3):
        raise InvalidArgument(f"{path}: expected {grid.n} rows of 3 columns")
    if not np.allclose(data[:, 0], grid.x, rtol=0, atol=1e-9 * grid.L):
        raise InvalidArgument(f"{path}: x column does not match grid {grid.to_dict()}")
    return _check_finite(data[:, 1] + 1j * data[:, 2])
