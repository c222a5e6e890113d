"""Benchmark problems with exact solutions and spectra.

* Dahlquist ``y' = lam*y``.
* Prothero-Robinson ``y' = lam*(y - cos t) - sin t``, ``lam = -1/eps + xi*i``.
* A damped oscillator driving a slow relaxation (3x3 linear system with one
  slow eigenvalue ``-lam`` and a fast pair ``-1/eps +- i*delta``).
* The focusing cubic Schroedinger equation ``i u_t + u_xx/2 + |u|^2 u = 0`` on a
  periodic interval, discretized by a Fourier pseudo-spectral method.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegeneracyError
from .optimize import Spectrum


@dataclass(frozen=True)
class DahlquistProblem:
    lam: complex
    y0: complex = 1.0

    def rhs(self, t, y):
        return self.lam * y

    def exact(self, t: float) -> complex:
        return complex(self.y0 * np.exp(self.lam * t))


@dataclass(frozen=True)
class ProtheroRobinsonProblem:
    epsilon: float = 1e-6
    xi: float = 20.0
    y0: float = 1.5

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")

    @property
    def lam(self) -> complex:
        return complex(-1.0 / self.epsilon, self.xi)


def pr_rhs(prob: ProtheroRobinsonProblem, t, y):
    """``lam*(y - cos t) - sin t``; ``t`` may be complex (entire extensions of cos, sin)."""
    t = complex(t)
    return prob.lam * (y - np.cos(t)) - np.sin(t)


def pr_exact(prob: ProtheroRobinsonProblem, t):
    t = np.asarray(t, dtype=float)
    return np.cos(t) + (prob.y0 - 1.0) * np.exp(prob.lam * t)


@dataclass(frozen=True)
class DampedOscillatorSystem:
    """``y1' = y2``, ``y2' = -(1/eps^2 + delta^2) y1 - (2/eps) y2``, ``y3' = lam (y1 - y3)``."""

    lam: float = 1.0
    epsilon: float = 0.1
    delta: float = 22.913
    y0: tuple = (4.0, 2.0, 5.0)

    def __post_init__(self):
        if not (self.lam > 0 and self.epsilon > 0 and self.delta > 0):
            raise ValueError("lam, epsilon and delta must be positive")
        if len(self.y0) != 3:
            raise ValueError("y0 must have three components")

    def rhs(self, t, y):
        return dos_matrix(self) @ y


def dos_matrix(prob: DampedOscillatorSystem) -> np.ndarray:
    mu = 1.0 / prob.epsilon
    return np.array([
        [0.0, 1.0, 0.0],
        [-(mu * mu + prob.delta ** 2), -2.0 * mu, 0.0],
        [prob.lam, 0.0, -prob.lam],
    ])


def dos_spectrum(prob: DampedOscillatorSystem) -> Spectrum:
    """``(slow, fast+, fast-) = (-lam, -1/eps + i delta, -1/eps - i delta)``."""
    mu = 1.0 / prob.epsilon
    return Spectrum([-prob.lam, complex(-mu, prob.delta), complex(-mu, -prob.delta)])


def dos_exact(prob: DampedOscillatorSystem, t) -> np.ndarray:
    """``V exp(D t) V^-1 y0``; returns shape ``(3,)`` or ``(len(t), 3)``."""
    A = dos_matrix(prob)
    w, V = np.linalg.eig(A)
    if np.linalg.cond(V) > 1e12:
        raise DegeneracyError("system matrix is numerically defective")
    coef = np.linalg.solve(V, np.asarray(prob.y0, dtype=complex))
    ts = np.atleast_1d(np.asarray(t, dtype=float))
    out = (np.exp(np.outer(ts, w)) * coef) @ V.T
    return out[0] if np.ndim(t) == 0 else out


@dataclass(frozen=True)
class NlsProblem:
    x_min: float = -2.0 * math.pi
    x_max: float = 4.0 * math.pi
    n_modes: int = 100
    t_end: float = 6.0
    x: np.ndarray = field(init=False, repr=False, compare=False)
    k: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.n_modes < 2 or self.n_modes % 2:
            raise ValueError("n_modes must be a positive even integer")
        if not self.x_max > self.x_min:
            raise ValueError("need x_max > x_min")
        n = self.n_modes
        object.__setattr__(self, "x", self.x_min + self.length * np.arange(n) / n)
        # fftfreq puts the Nyquist mode at -n/2
        object.__setattr__(self, "k", 2.0 * math.pi * np.fft.fftfreq(n, d=self.length / n))

    @property
    def length(self) -> float:
        return self.x_max - self.x_min

    @property
    def dx(self) -> float:
        return self.length / self.n_modes

    def rhs(self, t, u):
        return nls_rhs(self, u)


def spectral_second_derivative(prob: NlsProblem, u: np.ndarray) -> np.ndarray:
    return np.fft.ifft(-(prob.k ** 2) * np.fft.fft(u))


def nls_rhs(prob: NlsProblem, u) -> np.ndarray:
    """``i (u_xx/2 + |u|^2 u)`` with a spectral second derivative; no dealiasing."""
    u = np.asarray(u, dtype=complex)
    if u.shape != (prob.n_modes,):
        raise ValueError(f"state must have shape ({prob.n_modes},)")
    return 1j * (0.5 * spectral_second_derivative(prob, u) + np.abs(u) ** 2 * u)


def nls_exact(prob: NlsProblem, t: float) -> np.ndarray:
    """Soliton ``sqrt(2) sech(sqrt(2)(x - t)) exp(i(x + t/2))`` on the grid."""
    x = prob.x
    return math.sqrt(2.0) / np.cosh(math.sqrt(2.0) * (x - t)) * np.exp(1j * (x + 0.5 * t))


def linear_schrodinger_spectrum(prob: NlsProblem) -> Spectrum:
    """Eigenvalues ``-i k^2/2`` of ``u_t = (i/2) u_xx``, one per Fourier mode."""
    return Spectrum(-0.5j * prob.k ** 2)


def relative_l2_error(u: np.ndarray, ref: np.ndarray) -> float:
    return float(np.linalg.norm(u - ref) / np.linalg.norm(ref))


def discrete_mass(prob: NlsProblem, u: np.ndarray) -> float:
    return float(np.sum(np.abs(u) ** 2) * prob.dx)
