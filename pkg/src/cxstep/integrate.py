"""Fixed-step integrators over complex state vectors.

Three families of one-step maps are provided, each with its stability
polynomial so that ``step(lam*y) == Phi(lam*dt)*y`` can be checked directly:

* composed Forward Euler along a :class:`~cxstep.paths.StepPath`,
* the two-stage scheme ``y1 = y + c dt f(y)``, ``y+ = y + dt f(y1)``,
* (complex) Projective Forward Euler: a short chain of inner Euler steps
  followed by extrapolation of the last inner slope over the rest of ``dt``.

Right-hand sides have the signature ``f(t, y) -> ndarray``.  During complex
sub-steps ``t`` itself is complex (it follows the partial sums of the path).
"""
from __future__ import annotations

import csv
import math
import time
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Protocol

import numpy as np

from .errors import DivergenceError
from .paths import StepPath, path_to_polynomial
from .poly import StabilityPolynomial

Rhs = Callable[[complex, np.ndarray], np.ndarray]

DIVERGENCE_LIMIT = 1e12


def _as_state(y) -> np.ndarray:
    return np.atleast_1d(np.asarray(y, dtype=complex))


def _guard(y: np.ndarray, t, substep: int | None, limit: float = DIVERGENCE_LIMIT) -> np.ndarray:
    if not np.all(np.isfinite(y)) or np.max(np.abs(y)) > limit:
        where = "outer update" if substep is None else f"substep {substep}"
        raise DivergenceError(f"state diverged at t = {complex(t).real:.6g} ({where})", time=complex(t).real,
                              substep=substep)
    return y


def composed_euler_step(f: Rhs, t: float, y, dt: float, path: StepPath) -> np.ndarray:
    """Euler sub-steps of size ``w_i*dt``, time advancing along the complex partial sums."""
    if not path.consistent:
        raise ValueError(f"path is not consistent: weights sum to {sum(path.weights)}")
    y = _as_state(y)
    tc = complex(t)
    for i, w in enumerate(path.weights):
        h = w * dt
        y = _guard(y + h * f(tc, y), t, i)
        tc += h
    return y


def two_stage_step(f: Rhs, t: float, y, dt: float, c: complex) -> np.ndarray:
    """``y1 = y + c dt f(t, y)``; returns ``y + dt f(t + c dt, y1)``.

    On ``y' = lam*y`` the amplification is ``1 + z + c z^2``: ``c = 1`` gives the
    real scheme ``1 + z + z^2`` and ``c = (1-i)/2`` the complex one.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    y = _as_state(y)
    c = complex(c)
    y1 = _guard(y + c * dt * f(t, y), t, 0)
    return _guard(y + dt * f(t + c * dt, y1), t, 1)


@dataclass(frozen=True)
class PfeScheme:
    """Projective Forward Euler: inner Euler steps ``inner_dts`` then extrapolation to ``outer_dt``."""

    outer_dt: float
    inner_dts: tuple[complex, ...]

    def __init__(self, outer_dt: float, inner_dts: Iterable):
        inner = tuple(complex(d) for d in inner_dts)
        object.__setattr__(self, "outer_dt", float(outer_dt))
        object.__setattr__(self, "inner_dts", inner)
        if not inner:
            raise ValueError("PFE needs at least one inner step")
        if not self.outer_dt > 0:
            raise ValueError("outer_dt must be positive")
        total = sum(inner)
        if not abs(total) < self.outer_dt:
            raise ValueError(f"inner steps span |{total}| >= outer_dt = {self.outer_dt}")
        if abs(total.imag) > 1e-9 * self.outer_dt:
            warnings.warn(f"inner steps sum to {total}: the extrapolation remainder is complex", stacklevel=2)

    @property
    def K(self) -> int:
        return len(self.inner_dts) - 1

    @property
    def remainder(self) -> complex:
        """Time left for the extrapolation, ``outer_dt - sum(inner_dts)``."""
        return self.outer_dt - sum(self.inner_dts)

    def with_outer_dt(self, dt: float) -> "PfeScheme":
        return PfeScheme(dt, self.inner_dts)


def pfe_step(f: Rhs, t: float, y, scheme: PfeScheme) -> np.ndarray:
    """One outer PFE step.

    With two or more inner steps the extrapolation slope is the last inner
    increment divided by its step size.  With a single inner step the slope is
    ``f`` at the inner state, which is the two-step Euler form of the method.
    """
    y = _as_state(y)
    tc = complex(t)
    prev = y
    for m, d in enumerate(scheme.inner_dts):
        prev, y = y, _guard(y + d * f(tc, y), t, m)
        tc += d
    if len(scheme.inner_dts) == 1:
        slope = f(tc, y)
    else:
        slope = (y - prev) / scheme.inner_dts[-1]
    return _guard(y + scheme.remainder * slope, t, None)


def pfe_stability_polynomial(Lambda: complex, K: int) -> StabilityPolynomial:
    """``(1 + Lambda z)^K (1 + (1 - K Lambda) z)``."""
    if K < 0:
        raise ValueError("K must be non-negative")
    lam = complex(Lambda)
    c = np.array([1.0 + 0j])
    for _ in range(K):
        c = np.convolve(c, [1.0, lam])
    return StabilityPolynomial(np.convolve(c, [1.0, 1.0 - K * lam]))


def pfe_scheme_polynomial(scheme: PfeScheme) -> StabilityPolynomial:
    """Amplification polynomial of ``pfe_step`` for arbitrary inner steps.

    With ``a_m = inner_dts[m]/outer_dt`` and ``M`` inner steps this is
    ``prod_{m<M-1}(1 + a_m z) * (1 + (1 - sum_{m<M-1} a_m) z)``; a single inner
    step ``a`` gives ``(1 + a z)(1 + (1 - a) z)``.
    """
    a = [d / scheme.outer_dt for d in scheme.inner_dts]
    head = a if len(a) == 1 else a[:-1]
    c = np.array([1.0 + 0j])
    for am in head:
        c = np.convolve(c, [1.0, am])
    return StabilityPolynomial(np.convolve(c, [1.0, 1.0 - sum(head)]))


@dataclass(frozen=True)
class ButcherTableau:
    A: np.ndarray
    b: np.ndarray
    c: np.ndarray

    @property
    def stages(self) -> int:
        return len(self.b)

    def stability_function(self, z: complex) -> complex:
        """``1 + z b^T (I - z A)^{-1} 1`` by a dense solve."""
        s = self.stages
        k = np.linalg.solve(np.eye(s) - z * self.A, np.ones(s))
        return complex(1.0 + z * self.b @ k)

    def stability_polynomial(self) -> StabilityPolynomial:
        """Explicit tableaus only: ``sum_j z^j b^T A^(j-1) 1``."""
        if np.any(np.triu(self.A) != 0):
            raise ValueError("tableau is not explicit")
        coeffs = [1.0 + 0j]
        v = np.ones(self.stages, dtype=complex)
        for _ in range(self.stages):
            coeffs.append(complex(self.b @ v))
            v = self.A @ v
        return StabilityPolynomial(coeffs)


def pfe_butcher_tableau(Lambda: float, K: int) -> ButcherTableau:
    """PFE with ``K+1`` equal inner steps written as a ``(K+1)``-stage explicit Runge-Kutta method."""
    if K < 0:
        raise ValueError("K must be non-negative")
    if K >= 1 and not 0 < Lambda <= 1.0 / K:
        raise ValueError("need 0 < Lambda <= 1/K")
    s = K + 1
    A = np.tril(np.full((s, s), float(Lambda)), k=-1)
    b = np.full(s, float(Lambda))
    b[-1] = 1.0 - K * Lambda
    c = Lambda * np.arange(s, dtype=float)
    return ButcherTableau(A, b, c)


class Stepper(Protocol):
    name: str

    def step(self, f: Rhs, t: float, y: np.ndarray, dt: float) -> np.ndarray: ...

    def stability_polynomial(self, dt: float) -> StabilityPolynomial: ...


@dataclass(frozen=True)
class EulerPathStepper:
    path: StepPath
    name: str = "euler_path"

    def step(self, f, t, y, dt):
        return composed_euler_step(f, t, y, dt, self.path)

    def stability_polynomial(self, dt: float = 1.0) -> StabilityPolynomial:
        return path_to_polynomial(self.path)


@dataclass(frozen=True)
class TwoStageStepper:
    c: complex
    name: str = "two_stage"

    def step(self, f, t, y, dt):
        return two_stage_step(f, t, y, dt, self.c)

    def stability_polynomial(self, dt: float = 1.0) -> StabilityPolynomial:
        return StabilityPolynomial([1.0, 1.0, self.c])


@dataclass(frozen=True)
class PfeStepper:
    """PFE with fixed absolute inner steps; the outer step is supplied per call."""

    inner_dts: tuple[complex, ...]
    name: str = "pfe"

    def __init__(self, inner_dts: Iterable, name: str = "pfe"):
        object.__setattr__(self, "inner_dts", tuple(complex(d) for d in inner_dts))
        object.__setattr__(self, "name", name)

    def scheme(self, dt: float) -> PfeScheme:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            return PfeScheme(dt, self.inner_dts)

    def step(self, f, t, y, dt):
        return pfe_step(f, t, y, self.scheme(dt))

    def stability_polynomial(self, dt: float) -> StabilityPolynomial:
        return pfe_scheme_polynomial(self.scheme(dt))


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray  # shape (len(times), dim), complex
    wall_time: float = 0.0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.times) != len(self.states):
            raise ValueError("times and states differ in length")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing")

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]

    def max_imag_residual(self) -> float:
        """Largest imaginary part of any recorded component (meaningful for real problems)."""
        return float(np.max(np.abs(self.states.imag)))

    def to_csv(self, path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        dim = self.states.shape[1]
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t"] + [f"{p}_{k}" for k in range(dim) for p in ("re", "im")])
            for t, y in zip(self.times, self.states):
                row = [f"{t:.12g}"]
                for v in y:
                    row += [f"{v.real + 0.0:.12g}", f"{v.imag + 0.0:.12g}"]  # no "-0"
                w.writerow(row)


def step_times(t0: float, t_end: float, dt: float) -> np.ndarray:
    """Grid ``t0, t0+dt, ...`` with the final step shortened to land on ``t_end``."""
    if not (t_end > t0 and dt > 0):
        raise ValueError("need t_end > t0 and dt > 0")
    n = max(1, math.ceil((t_end - t0) / dt - 1e-9))
    ts = t0 + dt * np.arange(n + 1, dtype=float)
    ts[-1] = t_end
    return ts


def integrate_ivp(stepper: Stepper, f: Rhs, y0, t0: float, t_end: float, dt: float,
                  guard: float = DIVERGENCE_LIMIT) -> Trajectory:
    """Fixed-step driver; raises :class:`DivergenceError` carrying the failing time."""
    ts = step_times(t0, t_end, dt)
    y = _as_state(y0)
    states = np.empty((len(ts), y.size), dtype=complex)
    states[0] = y
    start = time.perf_counter()
    for k in range(len(ts) - 1):
        try:
            y = stepper.step(f, ts[k], y, ts[k + 1] - ts[k])
        except DivergenceError as exc:
            exc.time = float(ts[k])
            raise
        _guard(y, ts[k], None, guard)
        states[k + 1] = y
    wall = time.perf_counter() - start
    return Trajectory(ts, states, wall, {"stepper": stepper.name, "dt": dt})
