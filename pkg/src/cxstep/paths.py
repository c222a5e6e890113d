"""Composed Forward-Euler paths through the complex time plane.

A path is a list of weights ``w_1..w_n``; one outer step of size ``dt`` takes
Euler sub-steps of size ``w_i*dt`` in order.  On ``y' = lam*y`` it multiplies
the state by ``prod(1 + w_i z)``, whose coefficients are the elementary
symmetric polynomials ``e_m(w)``.  Linear order ``p`` means ``e_m = 1/m!`` for
``m <= p``.
"""
from __future__ import annotations

import itertools
import json
import math
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import numpy as np

from .poly import StabilityPolynomial, roots

CONSISTENCY_TOL = 1e-10
ORDER_TOL = 1e-10


@dataclass(frozen=True)
class StepPath:
    weights: tuple[complex, ...]

    def __init__(self, weights: Iterable):
        ws = tuple(complex(w) for w in weights)
        if not ws:
            raise ValueError("a path needs at least one weight")
        if not all(math.isfinite(w.real) and math.isfinite(w.imag) for w in ws):
            raise ValueError("path weights must be finite")
        object.__setattr__(self, "weights", ws)
        if not self.consistent:
            warnings.warn(f"path weights sum to {sum(ws)}, not 1", stacklevel=2)

    @property
    def n_steps(self) -> int:
        return len(self.weights)

    @property
    def consistent(self) -> bool:
        return abs(sum(self.weights) - 1.0) <= CONSISTENCY_TOL

    def conjugate(self) -> "StepPath":
        return StepPath(w.conjugate() for w in self.weights)


def path_to_polynomial(path: StepPath) -> StabilityPolynomial:
    c = np.array([1.0 + 0j])
    for w in path.weights:
        c = np.convolve(c, np.array([1.0, w], dtype=complex))
    c[0] = 1.0
    return StabilityPolynomial(c)


def elementary_symmetric(path: StepPath) -> list[complex]:
    """``[e_0, e_1, ..., e_n]`` of the weights."""
    c = np.array([1.0 + 0j])
    for w in path.weights:
        c = np.convolve(c, np.array([1.0, w], dtype=complex))
    return [complex(x) for x in c]


def order_of_accuracy(path: StepPath, max_order: int = 10) -> int:
    """Linear order: the largest ``p <= max_order`` with ``e_m = 1/m!`` for all ``m <= p``."""
    if max_order < 1:
        raise ValueError("max_order must be >= 1")
    e = elementary_symmetric(path)
    p = 0
    for m in range(1, max_order + 1):
        em = e[m] if m < len(e) else 0j
        if abs(em - 1.0 / math.factorial(m)) > ORDER_TOL:
            break
        p = m
    return p


def partial_sums(path: StepPath) -> list[complex]:
    return [complex(x) for x in np.cumsum(path.weights)]


def _canonical_key(w: complex, digits: int = 9) -> tuple[float, float]:
    return (round(w.real, digits) + 0.0, round(w.imag, digits) + 0.0)


def _snap_conjugates(rs: list[complex], tol: float = 1e-9) -> list[complex]:
    """Make roots of a real polynomial exactly conjugate-closed."""
    out = []
    pending = sorted(rs, key=lambda r: (r.real, r.imag))
    while pending:
        r = pending.pop(0)
        if abs(r.imag) <= tol:
            out.append(complex(r.real, 0.0))
            continue
        j = min(range(len(pending)), key=lambda k: abs(pending[k] - r.conjugate()), default=None)
        if j is None or abs(pending[j] - r.conjugate()) > 1e3 * tol:
            out.append(r)
            continue
        partner = pending.pop(j)
        re = 0.5 * (r.real + partner.real)
        im = 0.5 * (abs(r.imag) + abs(partner.imag))
        out.extend([complex(re, im), complex(re, -im)])
    return out


def distinct_orderings(weights: Iterable[complex]) -> list[StepPath]:
    """Every distinct ordering of a weight multiset, sorted lexicographically by (re, im)."""
    ws = sorted(weights, key=_canonical_key)
    seen = {}
    for perm in itertools.permutations(ws):
        key = tuple(_canonical_key(w) for w in perm)
        seen.setdefault(key, perm)
    return [StepPath(seen[k]) for k in sorted(seen)]


@dataclass(frozen=True)
class PathFamily:
    n_steps: int
    order: int
    members: tuple[StepPath, ...]

    def to_dict(self, with_partial_sums: bool = False) -> dict:
        def cplx(z):
            return {"re": float(f"{z.real:.12g}"), "im": float(f"{z.imag:.12g}")}

        out = {
            "n_steps": self.n_steps,
            "order": self.order,
            "paths": [[cplx(w) for w in p.weights] for p in self.members],
        }
        if with_partial_sums:
            out["partial_sums"] = [[cplx(0j)] + [cplx(s) for s in partial_sums(p)] for p in self.members]
        return out

    def to_json(self, path, with_partial_sums: bool = False) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(self.to_dict(with_partial_sums), indent=2) + "\n")


def full_order_weights(n: int) -> list[complex]:
    """Roots of ``w^n - e_1 w^(n-1) + e_2 w^(n-2) - ...`` with ``e_m = 1/m!``."""
    # ascending coefficients: constant term (-1)^n e_n, ..., leading 1
    asc = [(-1) ** (n - j) / math.factorial(n - j) for j in range(n + 1)]
    ws = roots(StabilityPolynomial(asc)) if n >= 1 else []
    return _snap_conjugates(ws)


def enumerate_full_order_paths(n: int) -> PathFamily:
    if n not in range(1, 6):
        raise ValueError("n must be in 1..5")
    members = distinct_orderings(full_order_weights(n))
    return PathFamily(n_steps=n, order=n, members=tuple(members))
