import json
import math

import numpy as np
import pytest

from cxstep.errors import InfeasibleError
from cxstep.optimize import (
    OptimizationProblem,
    OptimizationResult,
    Spectrum,
    excess,
    max_stable_step,
    perturb_imaginary,
    polynomial_to_paths,
    ray_residual,
    stability_feasible,
    taylor_prefix,
)
from cxstep.paths import path_to_polynomial
from cxstep.poly import StabilityPolynomial, axis_extent, evaluate
from oracles import chebyshev_polynomial

PHI_R = StabilityPolynomial([1, 1, 1])


def solve(ev, stages=2, domain="complex", order=1, **kw):
    return max_stable_step(OptimizationProblem(Spectrum(ev), stages, order, domain, **kw))


def test_spectrum_csv_round_trip(tmp_path):
    s = Spectrum([1j, -1 + 2j])
    s.to_csv(tmp_path / "s.csv")
    assert Spectrum.from_csv(tmp_path / "s.csv") == s
    (tmp_path / "raw.csv").write_text("-1,0\n0,3\n")
    assert Spectrum.from_csv(tmp_path / "raw.csv").eigenvalues == (-1, 3j)
    (tmp_path / "bad.csv").write_text("re,im\n1,x\n")
    with pytest.raises(ValueError, match="row 1"):
        Spectrum.from_csv(tmp_path / "bad.csv")


def test_spectrum_helpers():
    s = Spectrum([1j, -1j, 1j, 0])
    assert s.deduplicated().eigenvalues == (1j, -1j, 0)
    assert s.deduplicated(conjugates=True).eigenvalues == (1j, 0)
    assert s.nonzero().eigenvalues == (1j, -1j, 1j)
    with pytest.raises(ValueError):
        Spectrum([])


def test_problem_validation():
    with pytest.raises(ValueError):
        OptimizationProblem(Spectrum([1j]), 2, 3)
    with pytest.raises(ValueError):
        OptimizationProblem(Spectrum([1j]), 2, 0)
    with pytest.raises(ValueError):
        OptimizationProblem(Spectrum([1j]), 2, coeff_domain="quaternion")
    with pytest.raises(ValueError):
        OptimizationProblem(Spectrum([0, 1j]), 2)
    with pytest.raises(ValueError):
        OptimizationProblem(Spectrum([1j]), 2, tol_h=0)


def test_excess_is_cancellation_free():
    z = 1e-7j
    g = excess(PHI_R, np.array([z]))[0]
    # |1 + z + z^2|^2 - 1 = y^4 - y^2 + y^2 = y^4 on the imaginary axis
    assert g == pytest.approx(1e-28, rel=1e-9)


def test_imaginary_pair_real_optimum():
    r = solve([1j], domain="real")
    assert r.h_max == pytest.approx(1.0, rel=1e-4)
    assert r.polynomial.coefficient(2) == pytest.approx(1.0, abs=1e-3)
    assert r.residual <= 1e-14


def test_imaginary_pair_complex_optimum():
    r = solve([1j])
    assert r.h_max == pytest.approx(2.0, rel=1e-4)
    assert r.polynomial.coefficient(2) == pytest.approx(0.5 + 0.5j, abs=1e-3)
    assert r.polynomial.coeffs[:2] == (1, 1)
    assert r.residual <= 1e-14


def test_chebyshev_two_stage():
    r = solve([-1.0], domain="real")
    assert r.h_max == pytest.approx(8.0, abs=0.05)
    assert r.polynomial.coefficient(2).real == pytest.approx(chebyshev_polynomial(2)[2], abs=1e-3)


def test_chebyshev_three_stage():
    r = solve([-1.0], stages=3, domain="real")
    assert r.h_max == pytest.approx(18.0, abs=0.2)
    cheb = chebyshev_polynomial(3)
    assert [c.real for c in r.polynomial.coeffs[2:]] == pytest.approx(cheb[2:], abs=2e-3)
    # the witness really is stable along the whole segment
    assert axis_extent(r.polynomial, -1, 40) >= r.h_max * (1 - 1e-6)


def test_second_order_prefix_is_kept():
    r = solve([-1.0], stages=3, order=2, domain="real")
    assert r.polynomial.coeffs[:3] == (1, 1, 0.5)
    assert r.h_max > 2.5  # beats RK2's 2 on the negative real axis


def test_infeasible_right_half_plane():
    with pytest.raises(InfeasibleError):
        solve([1.0])


def test_stability_feasible_examples():
    ok, p = stability_feasible(Spectrum([1j]), 2.0, [1, 1], "complex")
    assert ok
    assert p.coefficient(2) == pytest.approx(0.5 + 0.5j, abs=1e-6)
    ok, p = stability_feasible(Spectrum([1j]), 2.0, [1, 1], "real")
    assert not ok
    assert p.coefficient(2).imag == 0
    ok, p = stability_feasible(Spectrum([-1.0]), 1.0, [1, 1], "real")
    assert ok
    assert abs(evaluate(p, -1.0)) <= 1
    ok, p = stability_feasible(Spectrum([-1.0]), 1.0, [1, 1], "real", n_stages=1)
    assert ok and p.coeffs == (1, 1)
    with pytest.raises(ValueError):
        stability_feasible(Spectrum([-1.0]), 0.0, [1, 1], "real")


def test_stability_feasible_is_deterministic():
    a = stability_feasible(Spectrum([1j, -1 + 2j]), 1.5, [1, 1], "complex", n_stages=3)
    b = stability_feasible(Spectrum([1j, -1 + 2j]), 1.5, [1, 1], "complex", n_stages=3)
    assert a == b


def test_result_json(tmp_path):
    r = OptimizationResult(2.0, StabilityPolynomial([1, 1, 0.5 + 0.5j]), 0.0)
    r.to_json(tmp_path / "r.json")
    d = json.loads((tmp_path / "r.json").read_text())
    assert d == {"h_max": 2.0, "coefficients": [{"re": 1.0, "im": 0.0}, {"re": 1.0, "im": 0.0},
                                                 {"re": 0.5, "im": 0.5}], "residual": 0.0}
    assert r.free_coefficients(1) == [0.5 + 0.5j]


@pytest.mark.parametrize("sign", [1, -1])
def test_imaginary_segment_spectra(sign):
    ev = [sign * 1j * m for m in range(1, 6)]
    rc = solve(ev, tol_h=1e-6)
    rr = solve(ev, domain="real", tol_h=1e-6)
    assert rc.h_max * 5 == pytest.approx(2.0, abs=1e-4)
    assert rr.h_max * 5 == pytest.approx(1.0, abs=1e-4)
    assert rc.polynomial.coefficient(2) == pytest.approx(0.5 + sign * 0.5j, abs=1e-3)


def test_conjugate_closure():
    ev = [-1 + 1j, -1 - 1j]
    rr = solve(ev, stages=3, domain="real")
    rc = solve(ev, stages=3, domain="complex")
    assert abs(rc.h_max - rr.h_max) <= 2 * 1e-4 * rr.h_max


def test_domain_monotonicity_on_one_sided_cluster():
    ev = [-0.5 + 2.0j, -1.0 + 2.5j, -1.5 + 1.5j]
    rr = solve(ev, stages=3, domain="real")
    rc = solve(ev, stages=3, domain="complex")
    assert rc.h_max >= rr.h_max * (1 - 1e-4)
    assert rc.h_max > 1.5 * rr.h_max


def test_scaling_covariance():
    ev = [-1 + 2j, -0.5 + 1j, -2.0]
    base = solve(ev, stages=3)
    scaled = solve([3 * v for v in ev], stages=3)
    assert scaled.h_max * 3 == pytest.approx(base.h_max, rel=2e-4)
    assert np.allclose(scaled.polynomial.coeffs, base.polynomial.coeffs, atol=1e-3)


def test_witness_residual_contract():
    r = solve([-1 + 2j, -3 + 1j], stages=3)
    assert r.residual <= 1e-14
    assert ray_residual(r.polynomial, Spectrum([-1 + 2j, -3 + 1j]), r.h_max) == r.residual


def test_taylor_prefix():
    assert taylor_prefix(3) == [1, 1, 0.5, 1 / 6]


def test_perturb_imaginary_examples():
    p = perturb_imaginary(PHI_R, 1.0, 0.05)
    assert p.degree == 3
    assert p.coeffs[:3] == (1, 1, 1)
    assert p.coefficient(3) == pytest.approx(0.05, abs=1e-15)
    assert perturb_imaginary(PHI_R, 1.0, 0.0).coeffs[:3] == PHI_R.coeffs
    assert axis_extent(p, 1j, 4) > 1


def test_perturb_imaginary_exact_term():
    # a boundary point of RK3 on the imaginary axis: |Phi(iy)| = 1 at y = sqrt(3)
    rk3 = StabilityPolynomial([1, 1, 0.5, 1 / 6])
    y = math.sqrt(3)
    w = evaluate(rk3, 1j * y)
    p = perturb_imaginary(rk3, y, 0.01)
    theta = math.atan2(w.imag, w.real)
    assert p.coefficient(3) - rk3.coefficient(3) == pytest.approx(0.01 * -1j * np.exp(1j * theta) / y ** 3, abs=1e-16)


def test_perturb_imaginary_preconditions():
    with pytest.raises(ValueError, match="unit circle"):
        perturb_imaginary(PHI_R, 0.5, 0.05)
    with pytest.raises(ValueError):
        perturb_imaginary(StabilityPolynomial([1, 1, 0.5 + 0.5j]), 2.0, 0.05)
    with pytest.raises(ValueError):
        perturb_imaginary(PHI_R, 1.0, -0.1)


def test_polynomial_to_paths_examples():
    paths = polynomial_to_paths(StabilityPolynomial([1, 1, 0.5]))
    assert len(paths) == 2
    assert sorted(paths[0].weights, key=lambda w: w.imag) == pytest.approx([0.5 - 0.5j, 0.5 + 0.5j])
    assert polynomial_to_paths(StabilityPolynomial([1, 1]))[0].weights == pytest.approx((1,))
    cfe3 = polynomial_to_paths(StabilityPolynomial([1, 1, 0.5, 1 / 6]))
    assert len(cfe3) == 6
    for path in cfe3:
        assert np.allclose(path_to_polynomial(path).coeffs, [1, 1, 0.5, 1 / 6], atol=1e-6)
    assert any(np.allclose(p.weights, [0.186731 + 0.480774j, 0.626538, 0.186731 - 0.480774j], atol=1e-5)
               for p in cfe3)


def test_polynomial_to_paths_high_degree_single_ordering():
    p = StabilityPolynomial([1, 1, 0.5, 1 / 6, 1 / 24])
    paths = polynomial_to_paths(p)
    assert len(paths) == 1
    assert np.allclose(path_to_polynomial(paths[0]).coeffs, p.coeffs, atol=1e-6)


def test_polynomial_to_paths_preconditions():
    with pytest.raises(ValueError):
        polynomial_to_paths(StabilityPolynomial([2, 1]))
    with pytest.raises(ValueError):
        polynomial_to_paths(StabilityPolynomial([1]))


def test_optimized_polynomial_realized_by_paths():
    r = solve([1j])
    for path in polynomial_to_paths(r.polynomial):
        assert np.allclose(path_to_polynomial(path).coeffs, r.polynomial.coeffs, atol=1e-6)
