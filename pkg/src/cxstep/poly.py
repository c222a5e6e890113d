"""Complex-coefficient stability polynomials.

A stability polynomial ``Phi(z) = sum_j c_j z^j`` is the amplification factor
of one step applied to ``y' = lam*y`` with ``z = lam*dt``.  This module holds
the polynomial type together with the tools used to study its absolute
stability region ``{z : |Phi(z)| <= 1}``: pointwise tests, rasterized grids,
first-crossing extents along rays and root finding.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import GridSizeError, NumericalFailure

DEFAULT_TOL = 1e-9
SCAN_SAMPLES = 4096
MAX_GRID_CELLS = 50_000_000


def _as_complex(value) -> complex:
    z = complex(value)
    if not (math.isfinite(z.real) and math.isfinite(z.imag)):
        raise ValueError(f"non-finite value {value!r}")
    return z


def _trim(coeffs: Sequence[complex]) -> tuple[complex, ...]:
    out = list(coeffs)
    while len(out) > 1 and out[-1] == 0:
        out.pop()
    return tuple(out)


@dataclass(frozen=True)
class StabilityPolynomial:
    """Polynomial with complex coefficients in ascending order, ``coeffs[j]`` multiplies ``z**j``."""

    coeffs: tuple[complex, ...]

    def __init__(self, coeffs: Iterable):
        cs = [_as_complex(c) for c in coeffs]
        if not cs:
            raise ValueError("a polynomial needs at least one coefficient")
        object.__setattr__(self, "coeffs", _trim(cs))

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    @property
    def is_real(self) -> bool:
        return all(c.imag == 0.0 for c in self.coeffs)

    def is_consistent(self, tol: float = 1e-12) -> bool:
        """True when ``c_0 = 1`` and ``c_1 = 1``, i.e. a first-order method."""
        c = self.coeffs + (0j,) * 2
        return abs(c[0] - 1) <= tol and abs(c[1] - 1) <= tol

    def coefficient(self, j: int) -> complex:
        return self.coeffs[j] if 0 <= j < len(self.coeffs) else 0j

    def as_array(self) -> np.ndarray:
        return np.array(self.coeffs, dtype=complex)

    def __call__(self, z):
        return evaluate(self, z)

    def __add__(self, other: "StabilityPolynomial") -> "StabilityPolynomial":
        n = max(len(self.coeffs), len(other.coeffs))
        return StabilityPolynomial(self.coefficient(j) + other.coefficient(j) for j in range(n))

    def __mul__(self, other: "StabilityPolynomial") -> "StabilityPolynomial":
        return StabilityPolynomial(np.convolve(self.as_array(), other.as_array()))

    def scaled(self, s: complex) -> "StabilityPolynomial":
        return StabilityPolynomial(s * c for c in self.coeffs)


def evaluate(p: StabilityPolynomial, z):
    """Horner evaluation; ``z`` may be a scalar or an ndarray."""
    if np.ndim(z) == 0:
        acc = 0j
        zc = complex(z)
        for c in reversed(p.coeffs):
            acc = acc * zc + c
        return acc
    zz = np.asarray(z, dtype=complex)
    acc = np.zeros_like(zz)
    for c in reversed(p.coeffs):
        acc = acc * zz + c
    return acc


def is_stable(p: StabilityPolynomial, z, tol: float = DEFAULT_TOL) -> bool:
    if tol < 0:
        raise ValueError("tol must be non-negative")
    return bool(abs(evaluate(p, _as_complex(z))) <= 1.0 + tol)


@dataclass(frozen=True)
class RegionWindow:
    re_min: float
    re_max: float
    im_min: float
    im_max: float
    nx: int
    ny: int

    def __post_init__(self):
        vals = (self.re_min, self.re_max, self.im_min, self.im_max)
        if not all(math.isfinite(v) for v in vals):
            raise ValueError("window bounds must be finite")
        if not (self.re_min < self.re_max and self.im_min < self.im_max):
            raise ValueError("window needs re_min < re_max and im_min < im_max")
        if self.nx < 1 or self.ny < 1 or self.nx * self.ny < 4:
            raise ValueError("window needs positive nx, ny with nx*ny >= 4")

    def centers(self) -> tuple[np.ndarray, np.ndarray]:
        """Cell-center coordinates along the real and imaginary axes."""
        dx = (self.re_max - self.re_min) / self.nx
        dy = (self.im_max - self.im_min) / self.ny
        re = self.re_min + (np.arange(self.nx) + 0.5) * dx
        im = self.im_min + (np.arange(self.ny) + 0.5) * dy
        return re, im


@dataclass(frozen=True)
class RegionGrid:
    window: RegionWindow
    magnitude: np.ndarray = field(repr=False)  # flat, row-major, row index <-> imaginary part

    def as_image(self) -> np.ndarray:
        return self.magnitude.reshape(self.window.ny, self.window.nx)

    def stable_mask(self, tol: float = DEFAULT_TOL) -> np.ndarray:
        return self.as_image() <= 1.0 + tol

    def stable_area(self, tol: float = DEFAULT_TOL) -> float:
        w = self.window
        cell = (w.re_max - w.re_min) * (w.im_max - w.im_min) / (w.nx * w.ny)
        return float(self.stable_mask(tol).sum()) * cell

    def to_csv(self, path) -> None:
        re, im = self.window.centers()
        img = self.as_image()
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["re", "im", "mag"])
            for i, y in enumerate(im):
                for j, x in enumerate(re):
                    w.writerow([f"{x:.9g}", f"{y:.9g}", f"{img[i, j]:.9g}"])


def region_grid(p: StabilityPolynomial, window: RegionWindow) -> RegionGrid:
    ncells = window.nx * window.ny
    if ncells > MAX_GRID_CELLS:
        raise GridSizeError(f"grid of {ncells} cells exceeds the limit of {MAX_GRID_CELLS}")
    re, im = window.centers()
    zz = re[np.newaxis, :] + 1j * im[:, np.newaxis]
    mag = np.abs(evaluate(p, zz))
    return RegionGrid(window, mag.ravel())


def axis_extent(
    p: StabilityPolynomial,
    direction: complex,
    s_max: float,
    tol: float = DEFAULT_TOL,
    samples: int = SCAN_SAMPLES,
) -> float:
    """Largest ``t <= s_max`` with ``|Phi(s*direction)| <= 1 + tol`` for every ``s`` in ``[0, t]``.

    The ray is scanned uniformly with ``samples`` points; the first unstable
    sample is bracketed against its predecessor and refined by bisection
    until the bracket is shorter than ``tol``.  Returns 0 when the first scan
    point past the origin is already unstable.
    """
    d = _as_complex(direction)
    if abs(abs(d) - 1.0) > 1e-12:
        raise ValueError("direction must have unit modulus")
    if not s_max > 0 or not tol > 0:
        raise ValueError("s_max and tol must be positive")
    s = np.linspace(0.0, s_max, samples + 1)
    bad = np.abs(evaluate(p, s * d)) > 1.0 + tol
    idx = np.flatnonzero(bad)
    if idx.size == 0:
        return float(s_max)
    k = int(idx[0])
    if k <= 1:
        return 0.0
    lo, hi = float(s[k - 1]), float(s[k])
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if abs(evaluate(p, mid * d)) > 1.0 + tol:
            hi = mid
        else:
            lo = mid
    return lo


def roots(p: StabilityPolynomial, polish_iters: int = 8) -> list[complex]:
    """All ``degree`` roots with multiplicity.

    Companion-matrix eigenvalues followed by a few Newton corrections on the
    original coefficients for isolated roots.  Raises :class:`NumericalFailure` if the residual
    ``max |p(r)|`` stays above ``1e-8 * max|c_j|``.
    """
    if p.degree < 1:
        raise ValueError("roots needs a polynomial of degree >= 1")
    c = p.as_array()
    r = np.polynomial.polynomial.polyroots(c).astype(complex)
    dc = np.polynomial.polynomial.polyder(c)
    # Newton on a cluster breaks the symmetry that makes the eigenvalues
    # backward stable, so only isolated roots are polished
    gap = np.abs(r[:, None] - r[None, :]) + np.diag(np.full(len(r), np.inf))
    isolated = gap.min(axis=1) > 1e-3 * np.maximum(1.0, np.abs(r))
    for _ in range(polish_iters):
        f = np.polynomial.polynomial.polyval(r, c)
        fp = np.polynomial.polynomial.polyval(r, dc)
        ok = isolated & (np.abs(fp) > 1e-300)
        step = np.where(ok, f / np.where(ok, fp, 1.0), 0.0)
        cand = r - step
        # accept a correction only where it lowers the residual
        better = np.abs(np.polynomial.polynomial.polyval(cand, c)) < np.abs(f)
        r = np.where(better, cand, r)
    resid = np.max(np.abs(np.polynomial.polynomial.polyval(r, c)))
    scale = np.max(np.abs(c))
    if not np.all(np.isfinite(r)) or resid > 1e-8 * scale:
        raise NumericalFailure(f"root residual {resid:.3e} exceeds {1e-8 * scale:.3e}")
    return [complex(x) for x in r]


def from_roots(rs: Sequence[complex], leading: complex = 1.0) -> StabilityPolynomial:
    c = np.polynomial.polynomial.polyfromroots(np.asarray(rs, dtype=complex))
    return StabilityPolynomial(leading * c)
