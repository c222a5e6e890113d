"""Step-size-optimal stability polynomials with real or complex coefficients.

Given a spectrum, find the largest ``h`` and a polynomial

    Phi(z) = sum_{j<=p} z^j/j! + sum_{j=p+1}^{s} c_j z^j

such that every step size in ``(0, h]`` is stable for every eigenvalue, i.e.
``|Phi(t*lam)| <= 1`` for ``t`` in ``(0, h]``.  Stability of all smaller steps
makes feasibility monotone in ``h``, so the outer search is a bisection.  For a
fixed ``h`` the inner problem ``min_c max_k |Phi(z_k)|`` is convex because
``Phi(z_k)`` is affine in the free coefficients; it is solved on a finite set
of ray samples in epigraph form with SLSQP, and the sample set is grown by
exchange until a dense check of the rays agrees.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy.optimize import minimize

from .errors import InfeasibleError
from .paths import StepPath, _canonical_key, distinct_orderings
from .poly import StabilityPolynomial, evaluate, roots

DOMAINS = ("real", "complex")

# ray parameter samples in (0, 1]; the log-spaced part resolves the tangency at
# the origin for eigenvalues on the imaginary axis
_COARSE = np.unique(np.concatenate([np.arange(1, 49) / 48.0, np.logspace(-6, -1, 12)]))
_DENSE = np.unique(np.concatenate([np.arange(1, 2049) / 2048.0, np.logspace(-7, -1, 97)]))
_MAX_EXCHANGE = 10


@dataclass(frozen=True)
class Spectrum:
    eigenvalues: tuple[complex, ...]

    def __init__(self, eigenvalues: Iterable):
        ev = tuple(complex(v) for v in eigenvalues)
        if not ev:
            raise ValueError("spectrum must be nonempty")
        if not all(math.isfinite(v.real) and math.isfinite(v.imag) for v in ev):
            raise ValueError("eigenvalues must be finite")
        object.__setattr__(self, "eigenvalues", ev)

    def nonzero(self) -> "Spectrum":
        return Spectrum(v for v in self.eigenvalues if v != 0)

    def deduplicated(self, conjugates: bool = False) -> "Spectrum":
        """Drop repeated eigenvalues; with ``conjugates`` also drop one of each conjugate pair."""
        out: list[complex] = []
        for v in self.eigenvalues:
            if v in out or (conjugates and v.conjugate() in out):
                continue
            out.append(v)
        return Spectrum(out)

    def scaled(self, s: float) -> "Spectrum":
        return Spectrum(s * v for v in self.eigenvalues)

    @classmethod
    def from_csv(cls, path) -> "Spectrum":
        vals = []
        with open(path, newline="") as fh:
            rows = [r for r in csv.reader(fh) if r and any(x.strip() for x in r)]
        if rows and rows[0][0].strip().lower() == "re":
            rows = rows[1:]
        for lineno, row in enumerate(rows, start=1):
            if len(row) != 2:
                raise ValueError(f"{path}: row {lineno} must have two columns re,im")
            try:
                vals.append(complex(float(row[0]), float(row[1])))
            except ValueError as exc:
                raise ValueError(f"{path}: row {lineno}: bad number in {row!r}") from exc
        return cls(vals)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["re", "im"])
            for v in self.eigenvalues:
                w.writerow([repr(v.real), repr(v.imag)])


@dataclass(frozen=True)
class OptimizationProblem:
    spectrum: Spectrum
    n_stages: int
    order: int = 1
    coeff_domain: str = "complex"
    tol_h: float = 1e-4
    tol_feas: float = 1e-14
    seed: int = 0

    def __post_init__(self):
        if self.coeff_domain not in DOMAINS:
            raise ValueError(f"coeff_domain must be one of {DOMAINS}")
        if not 1 <= self.order <= self.n_stages:
            raise ValueError("need 1 <= order <= n_stages")
        if not (self.tol_h > 0 and self.tol_feas > 0):
            raise ValueError("tolerances must be positive")
        if any(v == 0 for v in self.spectrum.eigenvalues):
            raise ValueError("zero eigenvalues are trivially stable; remove them")


@dataclass(frozen=True)
class OptimizationResult:
    h_max: float
    polynomial: StabilityPolynomial
    residual: float
    feasible: bool = True

    def free_coefficients(self, order: int) -> list[complex]:
        return list(self.polynomial.coeffs[order + 1:])

    def to_dict(self) -> dict:
        return {
            "h_max": self.h_max,
            "coefficients": [{"re": c.real, "im": c.imag} for c in self.polynomial.coeffs],
            "residual": self.residual,
        }

    def to_json(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")


def taylor_prefix(order: int) -> list[float]:
    return [1.0 / math.factorial(j) for j in range(order + 1)]


def excess(poly: StabilityPolynomial, z) -> np.ndarray:
    """``|Phi(z)|^2 - 1`` evaluated as ``2 Re q + |q|^2`` with ``q = Phi(z) - 1``.

    Avoids the cancellation of ``|Phi|^2 - 1`` for small ``z`` where
    ``|Phi| -> 1``.
    """
    q = evaluate(StabilityPolynomial((0j,) + poly.coeffs[1:]), z) + (poly.coeffs[0] - 1)
    return 2.0 * q.real + q.real ** 2 + q.imag ** 2


@dataclass
class _Inner:
    """Minimax of ``(|Phi(z_k)|^2 - 1) / w_k`` over a fixed point set.

    Free coefficients are scaled by ``rho^m`` (``rho = max|z_k|``) so that
    every column of the design matrix is O(1).
    """

    points: np.ndarray
    weights: np.ndarray
    prefix: Sequence[complex]
    n_stages: int
    domain: str
    rho: float = field(init=False)
    q0: np.ndarray = field(init=False)
    M: np.ndarray = field(init=False)

    def __post_init__(self):
        p0 = len(self.prefix)
        self.rho = float(np.max(np.abs(self.points)))
        pre = StabilityPolynomial(self.prefix)
        self.q0 = evaluate(StabilityPolynomial((0j,) + pre.coeffs[1:]), self.points) + (pre.coeffs[0] - 1)
        zs = self.points / self.rho
        Z = np.stack([zs ** m for m in range(p0, self.n_stages + 1)], axis=1)
        self.M = Z if self.domain == "real" else np.hstack([Z, 1j * Z])

    @property
    def nvar(self) -> int:
        return self.M.shape[1]

    def coefficients(self, x: np.ndarray) -> list[complex]:
        nf = self.n_stages + 1 - len(self.prefix)
        xs = x[:nf] if self.domain == "real" else x[:nf] + 1j * x[nf:]
        return [complex(v) / self.rho ** m for m, v in zip(range(len(self.prefix), self.n_stages + 1), xs)]

    def scaled(self, coeffs: Sequence[complex]) -> np.ndarray:
        nf = self.n_stages + 1 - len(self.prefix)
        cs = np.array([complex(coeffs[i]) * self.rho ** (len(self.prefix) + i) for i in range(nf)])
        return cs.real.copy() if self.domain == "real" else np.concatenate([cs.real, cs.imag])

    def excess(self, x: np.ndarray) -> np.ndarray:
        q = self.q0 + self.M @ x
        return (2.0 * q.real + q.real ** 2 + q.imag ** 2) / self.weights

    def solve_from(self, x0: np.ndarray) -> np.ndarray:
        q0, M = self.q0, self.M

        # epigraph form: minimize u subject to u >= (|Phi(z_k)|^2 - 1) / w_k
        def cons(v):
            return v[-1] - self.excess(v[:-1])

        def cons_jac(v):
            q = q0 + M @ v[:-1]
            g = 2.0 * ((1.0 + np.conj(q))[:, None] * M).real / self.weights[:, None]
            return np.hstack([-g, np.ones((len(q), 1))])

        v0 = np.append(x0, float(np.max(self.excess(x0))))
        grad = np.zeros(len(v0))
        grad[-1] = 1.0
        res = minimize(
            lambda v: v[-1],
            v0,
            jac=lambda v: grad,
            constraints=[{"type": "ineq", "fun": cons, "jac": cons_jac}],
            method="SLSQP",
            options={"ftol": 1e-16, "maxiter": 400},
        )
        x = res.x[:-1]
        if not np.all(np.isfinite(x)):
            return x0
        return x

    def value(self, x: np.ndarray) -> float:
        return float(np.max(self.excess(x)))


def _start_points(inner: _Inner, seed: int) -> list[np.ndarray]:
    nf = inner.n_stages + 1 - len(inner.prefix)
    taylor = [1.0 / math.factorial(m) for m in range(len(inner.prefix), inner.n_stages + 1)]
    rng = np.random.default_rng(seed)
    starts = [
        np.zeros(inner.nvar),
        inner.scaled(taylor),
        -inner.scaled(taylor),
        0.1 * rng.standard_normal(inner.nvar),
        inner.scaled([0.5 * (1 + 1j) * t for t in taylor]) if inner.domain == "complex" else 0.5 * inner.scaled(taylor),
    ]
    assert all(len(s) == inner.nvar for s in starts) and nf >= 1
    return starts


def _ray_points(spectrum: Spectrum, h: float, samples: np.ndarray, power: int):
    ev = np.asarray(spectrum.eigenvalues, dtype=complex)
    pts = h * ev[:, None] * samples[None, :]
    w = np.broadcast_to(samples[None, :] ** power, pts.shape)
    return pts.ravel(), w.ravel().copy()


def _excess_limit(tol: float) -> float:
    # |Phi| <= 1 + tol  <=>  |Phi|^2 - 1 <= 2 tol + tol^2
    return 2.0 * tol + tol * tol


def _modulus_excess(g: float) -> float:
    """``|Phi| - 1`` from ``g = |Phi|^2 - 1`` without cancellation."""
    return g / (1.0 + math.sqrt(1.0 + g))


def _weight_power(order: int) -> int:
    # Along a ray t*lam the first free coefficient acts at t^(order+1); measuring
    # the excess relative to t^(order+2) keeps the feasibility band from being
    # spent on the tangency |Phi| -> 1 at the origin (imaginary-axis spectra).
    return order + 2


def _dense_violations(poly: StabilityPolynomial, spectrum: Spectrum, h: float, tol: float, power: int):
    """Worst weighted excess on the dense rays, plus the local maxima above the band.

    Returns ``(worst, points, weights)``; with ``power = 0`` the excess is the
    plain ``|Phi|^2 - 1``.
    """
    ev = np.asarray(spectrum.eigenvalues, dtype=complex)
    pts = h * ev[:, None] * _DENSE[None, :]
    w = _DENSE ** power
    g = excess(poly, pts) / w[None, :]
    worst = float(g.max())
    limit = _excess_limit(tol)
    new_p, new_w = [], []
    for k in range(len(ev)):
        m = g[k]
        up = np.r_[True, m[1:] >= m[:-1]] & np.r_[m[:-1] >= m[1:], True]
        peaks = np.flatnonzero(up & (m > limit))
        peaks = peaks[np.argsort(-m[peaks], kind="stable")][:4]
        new_p.extend(pts[k, peaks])
        new_w.extend(w[peaks])
    return worst, np.array(new_p, dtype=complex), np.array(new_w)


def stability_feasible(
    spectrum: Spectrum,
    h: float,
    fixed: Sequence[complex],
    domain: str,
    n_stages: int | None = None,
    tol_feas: float = 1e-14,
    seed: int = 0,
    exhaustive: bool = True,
) -> tuple[bool, StabilityPolynomial]:
    """Inner minimax solve at step ``h``.

    ``fixed`` holds the prescribed leading coefficients (``[1, 1]`` for a
    first-order method); coefficients ``len(fixed)..n_stages`` are free in
    ``domain`` (``n_stages`` defaults to ``len(fixed)``, one free
    coefficient).  Returns whether every ray ``t*lam``, ``t`` in ``(0, h]``,
    keeps ``|Phi| <= 1 + tol_feas``, together with the minimizing polynomial.
    Starts are tried in a fixed order; with ``exhaustive=False`` the search
    stops at the first feasible start.
    """
    if not h > 0:
        raise ValueError("h must be positive")
    if domain not in DOMAINS:
        raise ValueError(f"domain must be one of {DOMAINS}")
    fixed = [complex(c) for c in fixed]
    n_stages = len(fixed) if n_stages is None else n_stages
    if n_stages < len(fixed) - 1:
        raise ValueError("n_stages must be >= len(fixed) - 1")
    limit = _excess_limit(tol_feas)
    power = _weight_power(len(fixed) - 1)
    if n_stages == len(fixed) - 1:
        poly = StabilityPolynomial(fixed)
        worst, _, _ = _dense_violations(poly, spectrum, h, tol_feas, power)
        return worst <= limit, poly

    points, weights = _ray_points(spectrum, h, _COARSE, power)
    for _ in range(_MAX_EXCHANGE):
        inner = _Inner(points, weights, fixed, n_stages, domain)
        results = []
        for x0 in _start_points(inner, seed):
            x = inner.solve_from(x0)
            cand = StabilityPolynomial(fixed + inner.coefficients(x))
            results.append((inner.value(x), _coef_key(cand), cand))
            if not exhaustive and results[-1][0] <= limit:
                break
        results.sort(key=lambda r: (r[0], r[1]))
        sampled, _, poly = results[0]
        worst, extra, extra_w = _dense_violations(poly, spectrum, h, tol_feas, power)
        if sampled > limit or worst <= limit or extra.size == 0:
            break
        points = np.concatenate([points, extra])
        weights = np.concatenate([weights, extra_w])
    return worst <= limit, poly


def _coef_key(p: StabilityPolynomial) -> tuple:
    return tuple(x for c in p.coeffs for x in (round(c.real, 12), round(c.imag, 12)))


def ray_residual(poly: StabilityPolynomial, spectrum: Spectrum, h: float) -> float:
    """``max |Phi(t*lam)| - 1`` over the dense ray samples, ``t`` in ``(0, h]``."""
    worst, _, _ = _dense_violations(poly, spectrum, h, math.inf, 0)
    return _modulus_excess(worst)


def max_stable_step(prob: OptimizationProblem) -> OptimizationResult:
    """Bisection on ``h`` in ``[tol_h*h_hi, h_hi]``, ``h_hi = 10*s^2/min|lam|``.

    Raises :class:`InfeasibleError` when the lower end of the bracket is
    already unstable (for instance an eigenvalue in the right half-plane).
    """
    spec = prob.spectrum.deduplicated(conjugates=prob.coeff_domain == "real")
    prefix = taylor_prefix(prob.order)
    h_hi = 10.0 * prob.n_stages ** 2 / min(abs(v) for v in spec.eigenvalues)

    def check(h, exhaustive=False):
        return stability_feasible(spec, h, prefix, prob.coeff_domain, prob.n_stages,
                                  prob.tol_feas, prob.seed, exhaustive)

    ok, hi_poly = check(h_hi, exhaustive=True)
    if ok:
        return OptimizationResult(h_hi, hi_poly, ray_residual(hi_poly, spec, h_hi))
    lo, hi = prob.tol_h * h_hi, h_hi
    ok, lo_poly = check(lo, exhaustive=True)
    if not ok:
        raise InfeasibleError(f"no stable step found down to h = {lo:.3e}")
    while hi - lo > prob.tol_h * lo:
        mid = 0.5 * (lo + hi)
        ok, p = check(mid)
        if ok:
            lo, lo_poly = mid, p
        else:
            hi = mid
    # Near h_max the feasible set collapses onto the optimum; the minimizer
    # just past the boundary is the sharper witness whenever it is feasible.
    _, past = check(hi, exhaustive=True)
    _, at = check(lo, exhaustive=True)
    for cand in (past, at, lo_poly):
        resid = ray_residual(cand, spec, lo)
        if resid <= prob.tol_feas:
            return OptimizationResult(lo, cand, resid)
    raise AssertionError("bisection lost its feasible witness")


def polynomial_to_paths(p: StabilityPolynomial) -> list[StepPath]:
    """Factor ``Phi(z) = prod(1 + w_i z)`` with ``w_i = -1/r_i`` over the roots ``r_i``."""
    if abs(p.coeffs[0] - 1) > 1e-12:
        raise ValueError("polynomial must have c_0 = 1")
    if p.degree < 1:
        raise ValueError("polynomial must have degree >= 1")
    ws = [-1.0 / r for r in roots(p)]
    if p.degree <= 3:
        return distinct_orderings(ws)
    return [StepPath(sorted(ws, key=_canonical_key))]


def perturb_imaginary(p: StabilityPolynomial, Y_R: float, epsilon: float) -> StabilityPolynomial:
    """``Phi + epsilon*q`` with ``q(z) = -i e^(i theta) z^3 / Y_R^3``, ``theta = arg Phi(i Y_R)``.

    ``Y_R`` must be a point where ``p`` touches the unit circle on the
    imaginary axis.  To first order the perturbation pushes ``|Phi|`` below 1
    just past ``i Y_R``, extending the stable segment of the imaginary axis.
    """
    if not p.is_real:
        raise ValueError("perturb_imaginary expects real coefficients")
    if not p.is_consistent():
        raise ValueError("perturb_imaginary expects c_0 = c_1 = 1")
    if not (Y_R > 0 and epsilon >= 0):
        raise ValueError("need Y_R > 0 and epsilon >= 0")
    w = evaluate(p, 1j * Y_R)
    if abs(abs(w) - 1.0) > 1e-6:
        raise ValueError(f"|Phi(i*Y_R)| = {abs(w):.9g} is not on the unit circle")
    theta = math.atan2(w.imag, w.real)
    bump = epsilon * (-1j * complex(math.cos(theta), math.sin(theta))) / Y_R ** 3
    cs = list(p.coeffs) + [0j] * max(0, 4 - len(p.coeffs))
    cs[3] += bump
    return StabilityPolynomial(cs)
