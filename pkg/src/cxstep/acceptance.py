"""Acceptance criteria, each measured against its stated tolerance and runtime budget.

Every check returns a :class:`CriterionResult` with the measured quantities,
the expectations they were compared against and a pass flag.  The ``verify``
CLI command and ``tests/test_acceptance.py`` both run :func:`run_all`.
"""
from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np

from .experiments import nls_run, observed_slope, pi_run, prothero_inner
from .integrate import PfeScheme, integrate_ivp, pfe_scheme_polynomial
from .models import DahlquistProblem, DampedOscillatorSystem, NlsProblem, ProtheroRobinsonProblem, dos_matrix, dos_spectrum
from .optimize import OptimizationProblem, Spectrum, max_stable_step, perturb_imaginary
from .paths import enumerate_full_order_paths, path_to_polynomial
from .integrate import EulerPathStepper
from .poly import RegionWindow, StabilityPolynomial, axis_extent, evaluate, region_grid
from . import presets


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    measured: dict
    expected: dict
    seconds: float = 0.0
    budget_seconds: float = math.inf
    failures: list = field(default_factory=list)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        extra = "" if self.passed else "  [" + "; ".join(self.failures) + "]"
        return f"criterion {self.number:2d} {status}  {self.name}  ({self.seconds:.2f}s / {self.budget_seconds:g}s){extra}"

    def to_dict(self) -> dict:
        return _jsonable(asdict(self))


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    return obj


class _Checks:
    """Collects named boolean checks with a human-readable reason for each failure."""

    def __init__(self):
        self.failures: list[str] = []

    def __call__(self, ok: bool, what: str) -> bool:
        if not ok:
            self.failures.append(what)
        return bool(ok)


def _criterion(number: int, name: str, budget: float):
    def wrap(fn: Callable[[], tuple[dict, dict, list]]):
        def run() -> CriterionResult:
            start = time.perf_counter()
            measured, expected, failures = fn()
            secs = time.perf_counter() - start
            if secs >= budget:
                failures = failures + [f"runtime {secs:.1f}s exceeds {budget:g}s"]
            return CriterionResult(number, name, not failures, measured, expected, secs, budget, failures)

        run.number = number
        run.__name__ = fn.__name__
        run.__doc__ = fn.__doc__
        return run

    return wrap


CFE3_REFERENCE = (0.186731 + 0.480774j, 0.626538, 0.186731 - 0.480774j)


@_criterion(1, "cFE3 path reproduction", 1.0)
def path_reproduction():
    chk = _Checks()
    fam = enumerate_full_order_paths(3)
    dev = min(max(abs(w - p) for w, p in zip(m.weights, CFE3_REFERENCE)) for m in fam.members)
    match = min(fam.members, key=lambda m: max(abs(w - p) for w, p in zip(m.weights, CFE3_REFERENCE)))
    poly = path_to_polynomial(match)
    target = [1, 1, 0.5, 1 / 6]
    pdev = max(abs(poly.coefficient(j) - t) for j, t in enumerate(target))
    chk(dev <= 1e-5, f"weight deviation {dev:.2e} > 1e-5")
    chk(pdev <= 1e-6, f"coefficient deviation {pdev:.2e} > 1e-6")
    return ({"family_size": len(fam.members), "weight_deviation": dev, "coefficient_deviation": pdev},
            {"weight_deviation": "<= 1e-5", "coefficient_deviation": "<= 1e-6"}, chk.failures)


@_criterion(2, "imaginary-axis optimality constants", 10.0)
def imaginary_axis_constants():
    chk = _Checks()
    ext_r = axis_extent(presets.polynomial("phi_r"), 1j, 4.0)
    ext_c = axis_extent(presets.polynomial("phi_c"), 1j, 4.0)
    spec = Spectrum([1j])
    rc = max_stable_step(OptimizationProblem(spec, 2, 1, "complex"))
    rr = max_stable_step(OptimizationProblem(spec, 2, 1, "real"))
    kc, kr = rc.polynomial.coefficient(2), rr.polynomial.coefficient(2)
    ratio = rc.h_max / rr.h_max
    chk(abs(ext_r - 1) <= 1e-4, f"Phi_r extent {ext_r:.6f}")
    chk(abs(ext_c - 2) <= 1e-4, f"Phi_c extent {ext_c:.6f}")
    chk(abs(kc - (0.5 + 0.5j)) <= 1e-3, f"complex k = {kc:.6f}")
    chk(abs(kr - 1) <= 1e-3, f"real k = {kr:.6f}")
    chk(abs(ratio - 2) <= 1e-3, f"h ratio {ratio:.6f}")
    return ({"extent_phi_r": ext_r, "extent_phi_c": ext_c, "k_complex": kc, "k_real": kr,
             "h_complex": rc.h_max, "h_real": rr.h_max, "h_ratio": ratio},
            {"extent_phi_r": "1 +- 1e-4", "extent_phi_c": "2 +- 1e-4", "k_complex": "0.5+0.5i +- 1e-3",
             "k_real": "1 +- 1e-3", "h_ratio": "2 +- 1e-3"}, chk.failures)


@_criterion(3, "complex perturbation enlarges the imaginary-axis extent", 1.0)
def perturbation_enlarges_extent():
    chk = _Checks()
    base = presets.polynomial("phi_r")
    ys = np.linspace(0.0, 1.0, 1000)
    measured = {}
    for eps in (0.01, 0.05):
        p = perturb_imaginary(base, 1.0, eps)
        ext = axis_extent(p, 1j, 4.0)
        peak = float(np.max(np.abs(evaluate(p, 1j * ys))))
        chk(ext > 1.0, f"eps={eps}: extent {ext:.6f} not > 1")
        chk(peak <= 1.0, f"eps={eps}: max |Phi| on [0,1] = {peak:.17g}")
        measured[f"eps_{eps}"] = {"extent": ext, "max_modulus_on_unit_segment": peak}
    return measured, {"extent": "> 1", "max_modulus_on_unit_segment": "<= 1"}, chk.failures


def grid_search_real_extent(n_stages: int) -> float:
    """Independent oracle on ``{-1}``: brute-force grid over the free real coefficients.

    Each candidate is scored by its real-axis extent (dense scan plus
    bisection); two stages scan ``k`` on ``(0, 1]`` at 1e-4, three stages
    scan ``(c2, c3)`` on a coarse grid refined around the best cell.
    """
    def extent(cs):
        return axis_extent(StabilityPolynomial(cs), -1.0, 2.5 * n_stages ** 2, tol=1e-9, samples=2048)

    if n_stages == 2:
        ks = np.arange(1, 10001) * 1e-4
        s = np.linspace(0.0, 10.0, 4001)[1:]
        # vectorized scan for speed, bisection only for the best few
        first = np.empty_like(ks)
        for lo in range(0, len(ks), 500):
            kk = ks[lo:lo + 500, None]
            bad = np.abs(1 - s[None, :] + kk * s[None, :] ** 2) > 1 + 1e-9
            first[lo:lo + 500] = np.where(bad.any(axis=1), s[np.argmax(bad, axis=1)], s[-1])
        best = ks[np.argsort(-first)[:5]]
        return max(extent([1, 1, k]) for k in best)
    if n_stages == 3:
        best, center, width = 0.0, (0.15, 0.005), (0.15, 0.005)
        for _ in range(4):
            c2s = np.linspace(center[0] - width[0], center[0] + width[0], 41)
            c3s = np.linspace(center[1] - width[1], center[1] + width[1], 41)
            s = np.linspace(0.0, 20.0, 2001)[1:]
            C2, C3 = np.meshgrid(c2s, c3s, indexing="ij")
            mags = np.abs(1 - s + C2[..., None] * s ** 2 - C3[..., None] * s ** 3)
            bad = mags > 1 + 1e-9
            first = np.where(bad.any(axis=-1), s[np.argmax(bad, axis=-1)], s[-1])
            i, j = np.unravel_index(np.argmax(first), first.shape)
            center = (c2s[i], c3s[j])
            width = (width[0] / 8, width[1] / 8)
            best = max(best, extent([1, 1, center[0], center[1]]))
        return best
    raise ValueError("oracle covers 2 or 3 stages")


@_criterion(4, "optimizer matches the grid-search oracle on {-1}", 60.0)
def optimizer_oracle():
    chk = _Checks()
    spec = Spectrum([-1.0])
    h2 = max_stable_step(OptimizationProblem(spec, 2, 1, "real")).h_max
    h3 = max_stable_step(OptimizationProblem(spec, 3, 1, "real")).h_max
    o2, o3 = grid_search_real_extent(2), grid_search_real_extent(3)
    chk(abs(h2 - 8) <= 0.05, f"2-stage h = {h2:.5f}")
    chk(abs(h3 - 18) <= 0.2, f"3-stage h = {h3:.5f}")
    chk(abs(h2 - o2) <= 0.05, f"2-stage oracle {o2:.5f} vs {h2:.5f}")
    chk(abs(h3 - o3) <= 0.2, f"3-stage oracle {o3:.5f} vs {h3:.5f}")
    return ({"h_2stage": h2, "h_3stage": h3, "oracle_2stage": o2, "oracle_3stage": o3},
            {"h_2stage": "8 +- 0.05", "h_3stage": "18 +- 0.2"}, chk.failures)


@_criterion(5, "stepper amplification equals stability polynomial", 1.0)
def stepper_equivalence():
    chk = _Checks()
    rng = np.random.default_rng(20240501)
    worst = {}
    lams = rng.uniform(-4, 1, 50) + 1j * rng.uniform(-4, 4, 50)
    dts = rng.uniform(0.05, 0.5, 50)
    for name, st in presets.steppers().items():
        err = 0.0
        for lam, dt in zip(lams, dts):
            prob = DahlquistProblem(lam)
            got = st.step(prob.rhs, 0.0, np.array([1.0 + 0j]), dt)[0]
            want = evaluate(st.stability_polynomial(dt), lam * dt)
            err = max(err, abs(got - want) / max(1.0, abs(want)))
        worst[name] = err
        chk(err <= 1e-12, f"{name}: {err:.2e}")
    return {"max_relative_mismatch": worst}, {"max_relative_mismatch": "<= 1e-12"}, chk.failures


@_criterion(6, "convergence orders of cFE1/cFE2/cFE3", 1.0)
def convergence_orders():
    chk = _Checks()
    prob = DahlquistProblem(1 + 2j)
    dts = [0.1 / 2 ** k for k in range(6)]
    out = {}
    for n in (1, 2, 3):
        st = EulerPathStepper(presets.PATHS[f"cfe{n}"], f"cfe{n}")
        errs = [abs(integrate_ivp(st, prob.rhs, [1.0], 0.0, 1.0, dt).final[0] - prob.exact(1.0)) for dt in dts]
        pairwise = [math.log2(errs[i] / errs[i + 1]) for i in range(len(errs) - 1)]
        fit = observed_slope(dts, errs)
        out[f"cfe{n}"] = {"fit_slope": fit, "pairwise": pairwise}
        chk(abs(fit - n) <= 0.1, f"cfe{n} fitted order {fit:.3f}")
        chk(all(abs(p - n) <= 0.1 for p in pairwise), f"cfe{n} pairwise orders {np.round(pairwise, 3).tolist()}")
    return out, {"cfe1": "1 +- 0.1", "cfe2": "2 +- 0.1", "cfe3": "3 +- 0.1"}, chk.failures


@_criterion(7, "NLS stability boundary and convergence", 300.0)
def nls_boundary():
    chk = _Checks()
    prob = NlsProblem()
    sweep = (0.007, 0.0035, 0.002, 0.001)
    rows = {}
    for name, c in (("real", 1.0 + 0j), ("complex", presets.C_MINUS)):
        for dt in (0.014,) + sweep:
            rows[name, dt] = nls_run(prob, c, dt, name)
    r14, c14 = rows["real", 0.014], rows["complex", 0.014]
    chk(not r14.stable, "real integrator did not diverge at dt=0.014")
    chk(c14.stable and c14.rel_l2_error < 1, f"complex at dt=0.014: stable={c14.stable} err={c14.rel_l2_error}")
    r7, c7 = rows["real", 0.007], rows["complex", 0.007]
    chk(r7.stable and c7.stable, "an integrator failed at dt=0.007")
    chk(c7.rel_l2_error <= r7.rel_l2_error, f"complex err {c7.rel_l2_error:.4g} > real {r7.rel_l2_error:.4g}")
    slopes = {}
    for name in ("real", "complex"):
        errs = [rows[name, dt].rel_l2_error for dt in sweep]
        slopes[name] = observed_slope(sweep, errs) if all(np.isfinite(errs)) else float("nan")
        chk(abs(slopes[name] - 1) <= 0.2, f"{name} slope {slopes[name]:.3f}")

    def largest_stable(name):
        ok = [dt for dt in (0.014,) + sweep if rows[name, dt].stable]
        return max(ok)

    dr, dc = largest_stable("real"), largest_stable("complex")
    ratio = rows["real", dr].steps / rows["complex", dc].steps
    chk(abs(ratio - 2.0) <= 1e-12, f"step-count ratio {ratio}")
    measured = {
        "errors": {f"{n}@{dt}": r.rel_l2_error for (n, dt), r in rows.items()},
        "slopes": slopes,
        "largest_stable_dt": {"real": dr, "complex": dc},
        "step_count_ratio": ratio,
    }
    return measured, {"slope": "1 +- 0.2", "step_count_ratio": "2.0"}, chk.failures


def _pr_amplification(xi: float, scheme: str, dt: float = 0.05) -> complex:
    prob = ProtheroRobinsonProblem(xi=xi)
    p = pfe_scheme_polynomial(PfeScheme(dt, prothero_inner(prob, scheme)))
    return complex(evaluate(p, prob.lam * dt))


def _pr_formula(xi: float, dt: float = 0.05) -> complex:
    prob = ProtheroRobinsonProblem(xi=xi)
    d = (-1.0 / prob.lam).real
    a = 1 + d * prob.lam
    return (dt / d - 2) * (a * a - a)


@_criterion(8, "Prothero-Robinson projective integration", 120.0)
def prothero_robinson():
    chk = _Checks()
    measured = {}
    for xi, target in ((15.0, 0.75), (20.0, 1.0)):
        amp = _pr_amplification(xi, "real")
        form = _pr_formula(xi)
        camp = _pr_amplification(xi, "complex")
        chk(abs(abs(amp) - target) <= 0.02, f"xi={xi}: |amp| = {abs(amp):.4f}")
        chk(abs(abs(amp) - abs(form)) <= 0.02, f"xi={xi}: formula {abs(form):.4f} vs {abs(amp):.4f}")
        chk(abs(camp) <= 1e-10, f"xi={xi}: cPFE amp {abs(camp):.2e}")
        real = pi_run("prothero", "real", 0.05, xi=xi).summary
        cplx = pi_run("prothero", "complex", 0.05, xi=xi).summary
        if xi == 15.0:
            chk(not real["diverged"] and real["oscillation_ratio"] < 0.1,
                f"xi=15 real oscillations not damped (ratio {real['oscillation_ratio']})")
        else:
            chk(not real["diverged"] and real["oscillation_ratio"] > 0.5,
                f"xi=20 real oscillations not persistent (ratio {real['oscillation_ratio']})")
        chk(not cplx["diverged"] and cplx["max_error"] < 5e-2, f"xi={xi} complex max error {cplx['max_error']}")
        measured[f"xi_{xi:g}"] = {
            "real_amplification": abs(amp), "formula": abs(form), "complex_amplification": abs(camp),
            "real_oscillation_ratio": real["oscillation_ratio"], "complex_max_error": cplx["max_error"],
        }
    expected = {"xi_15": "|amp| 0.75 +- 0.02, damped", "xi_20": "|amp| 1.00 +- 0.02, persistent",
                "complex": "amp <= 1e-10, max error < 5e-2", "oscillation_ratio": "damped < 0.1, persistent > 0.5"}
    return measured, expected, chk.failures


@_criterion(9, "two-scale oscillator projective integration", 30.0)
def two_scale_system():
    chk = _Checks()
    prob = DampedOscillatorSystem()
    ev = list(dos_spectrum(prob).eigenvalues)
    target = [-1.0, -10 + 22.913j, -10 - 22.913j]
    ev_dev = max(abs(a - b) for a, b in zip(ev, target))
    direct = sorted(np.linalg.eigvals(dos_matrix(prob)), key=lambda v: (v.real, v.imag))
    eig_dev = max(abs(a - b) for a, b in zip(direct, sorted(target, key=lambda v: (v.real, v.imag))))
    chk(ev_dev <= 1e-9 and eig_dev <= 1e-9, f"eigenvalue deviation {max(ev_dev, eig_dev):.2e}")
    c = pi_run("oscillator", "complex", 0.1).summary
    r = pi_run("oscillator", "real", 0.1).summary
    chk(not c["diverged"], "cPFE diverged")
    chk(c["max_error_watched"] < 5e-2, f"cPFE max |y3 - exact| = {c['max_error_watched']:.4f}")
    chk(c["max_imag_residual"] is not None and c["max_imag_residual"] < 1e-6,
        f"cPFE imaginary residual {c['max_imag_residual']}")
    chk(r["diverged"] or r["max_error"] > 1, "real PFE neither diverged nor exceeded error 1")
    measured = {"eigenvalue_deviation": max(ev_dev, eig_dev), "cpfe_max_y3_error": c["max_error_watched"],
                "cpfe_max_imag_residual": c["max_imag_residual"], "real_diverged": r["diverged"],
                "real_failure_time": r["failure_time"]}
    expected = {"eigenvalue_deviation": "<= 1e-9", "cpfe_max_y3_error": "< 5e-2",
                "cpfe_max_imag_residual": "< 1e-6", "real": "diverges or error > 1"}
    return measured, expected, chk.failures


@_criterion(10, "region conjugation symmetry", 10.0)
def region_symmetry():
    chk = _Checks()
    win = RegionWindow(-4.0, 1.0, -3.0, 3.0, 400, 400)
    sym = region_grid(presets.polynomial("rkopt_3s2"), win).as_image()
    asym = region_grid(presets.polynomial("copt_3s2"), win).as_image()
    sym_dev = float(np.max(np.abs(sym - sym[::-1])))
    frac = float(np.mean(np.abs(asym - asym[::-1]) > 1e-3))
    chk(sym_dev <= 1e-12, f"rkopt_3s2 mirror deviation {sym_dev:.2e}")
    chk(frac >= 0.01, f"copt_3s2 asymmetric fraction {frac:.4f}")
    return ({"rkopt_mirror_deviation": sym_dev, "copt_asymmetric_fraction": frac},
            {"rkopt_mirror_deviation": "<= 1e-12", "copt_asymmetric_fraction": ">= 0.01"}, chk.failures)


CRITERIA = [path_reproduction, imaginary_axis_constants, perturbation_enlarges_extent, optimizer_oracle, stepper_equivalence,
            convergence_orders, nls_boundary, prothero_robinson, two_scale_system, region_symmetry]


def run_all(selected=None) -> list[CriterionResult]:
    return [c() for c in CRITERIA if selected is None or c.number in selected]
