import math

import numpy as np
import pytest

from cxstep.errors import DegeneracyError
from cxstep.integrate import TwoStageStepper, integrate_ivp
from cxstep.models import (
    DahlquistProblem,
    DampedOscillatorSystem,
    NlsProblem,
    ProtheroRobinsonProblem,
    discrete_mass,
    dos_exact,
    dos_matrix,
    dos_spectrum,
    linear_schrodinger_spectrum,
    nls_exact,
    nls_rhs,
    pr_exact,
    pr_rhs,
    relative_l2_error,
    spectral_second_derivative,
)
from oracles import cubic_roots_from_charpoly, pr_derivative, soliton


def test_dahlquist():
    p = DahlquistProblem(-1 + 1j, 2.0)
    assert p.exact(0.5) == pytest.approx(2 * np.exp((-1 + 1j) * 0.5))


def test_pr_rhs_examples():
    p = ProtheroRobinsonProblem(xi=15)
    assert pr_rhs(p, 0, 1.0) == 0
    assert pr_rhs(p, 0, 1.5) == pytest.approx((-1e6 + 15j) / 2)
    # complex time uses the entire extensions
    t = 0.3 + 0.2j
    assert pr_rhs(p, t, 0.0) == pytest.approx(-p.lam * np.cos(t) - np.sin(t))
    with pytest.raises(ValueError):
        ProtheroRobinsonProblem(epsilon=0)


def test_pr_exact_examples():
    p = ProtheroRobinsonProblem(xi=20)
    assert pr_exact(p, 0.0) == pytest.approx(1.5)
    assert abs(pr_exact(p, 3.0) - math.cos(3.0)) < 1e-12
    t = 1e-5
    assert pr_exact(p, t) == pytest.approx(math.cos(t) + 0.5 * math.exp(-10) * np.exp(2e-4j), rel=1e-12)


@pytest.mark.parametrize("xi", [15.0, 20.0])
def test_pr_exact_satisfies_ode(xi):
    p = ProtheroRobinsonProblem(xi=xi)
    for t in np.linspace(0, 6, 100):
        y = pr_exact(p, t)
        lhs = pr_derivative(p.lam, p.y0, t)
        rhs = pr_rhs(p, t, y)
        assert abs(lhs - rhs) <= 1e-8 * max(1.0, abs(lhs))


def test_dos_spectrum_examples():
    p = DampedOscillatorSystem()
    ev = dos_spectrum(p).eigenvalues
    assert ev == pytest.approx((-1, -10 + 22.913j, -10 - 22.913j), abs=1e-12)
    assert np.trace(dos_matrix(p)) == pytest.approx(sum(ev).real)
    crit = DampedOscillatorSystem(delta=1e-9)
    assert dos_spectrum(crit).eigenvalues[1] == pytest.approx(-10, abs=1e-8)
    with pytest.raises(ValueError):
        DampedOscillatorSystem(delta=0)


def test_dos_spectrum_against_charpoly():
    for lam, eps, delta in ((1, 0.1, 22.913), (0.5, 0.05, 3.0), (2.0, 1.0, 0.7)):
        p = DampedOscillatorSystem(lam, eps, delta)
        a = sorted(dos_spectrum(p).eigenvalues, key=lambda v: (v.real, v.imag))
        b = sorted(cubic_roots_from_charpoly(dos_matrix(p)), key=lambda v: (v.real, v.imag))
        assert np.allclose(a, b, rtol=0, atol=1e-9 * max(1, max(abs(v) for v in a)))


def test_dos_exact():
    p = DampedOscillatorSystem()
    assert dos_exact(p, 0.0) == pytest.approx([4, 2, 5])
    ys = dos_exact(p, np.linspace(0, 5, 51))
    assert np.max(np.abs(ys.imag)) < 1e-9
    # fast components decay with the exp(-t/eps) envelope
    assert np.max(np.abs(dos_exact(p, 2.0)[:2])) < 1e3 * math.exp(-20)
    # slow relaxation: y3 ~ C exp(-t) once the transient has gone
    y3 = dos_exact(p, np.array([3.0, 4.0]))[:, 2].real
    assert y3[1] / y3[0] == pytest.approx(math.exp(-1), rel=1e-6)
    # derivative check of the exact solution
    h = 1e-6
    d = (dos_exact(p, 0.7 + h) - dos_exact(p, 0.7 - h)) / (2 * h)
    assert np.allclose(d, dos_matrix(p) @ dos_exact(p, 0.7), atol=1e-5)


def test_dos_exact_degenerate():
    # lam = 1/eps and a vanishing delta make the matrix nearly defective
    p = DampedOscillatorSystem(lam=10.0, epsilon=0.1, delta=1e-12)
    with pytest.raises(DegeneracyError):
        dos_exact(p, 1.0)


def test_nls_grid_and_wavenumbers():
    p = NlsProblem()
    assert p.x[0] == pytest.approx(-2 * math.pi) and len(p.x) == 100
    assert p.x[1] - p.x[0] == pytest.approx(6 * math.pi / 100)
    assert p.k.min() == pytest.approx(-50 / 3) and p.k.max() == pytest.approx(49 / 3)
    with pytest.raises(ValueError):
        NlsProblem(n_modes=101)


def test_nls_rhs_examples():
    p = NlsProblem()
    assert np.all(nls_rhs(p, np.zeros(100)) == 0)
    k = 2 * math.pi * 7 / p.length
    u = np.exp(1j * k * p.x)
    assert np.allclose(nls_rhs(p, u), 1j * (-k * k / 2 + 1) * u, atol=1e-9)
    with pytest.raises(ValueError):
        nls_rhs(p, np.zeros(10))


def test_spectral_second_derivative_exact():
    p = NlsProblem()
    rng = np.random.default_rng(1)
    ms = rng.integers(-40, 40, 6)
    amps = rng.standard_normal(6) + 1j * rng.standard_normal(6)
    ks = 2 * math.pi * ms / p.length
    u = sum(a * np.exp(1j * k * p.x) for a, k in zip(amps, ks))
    uxx = sum(-a * k * k * np.exp(1j * k * p.x) for a, k in zip(amps, ks))
    assert np.linalg.norm(spectral_second_derivative(p, u) - uxx) <= 1e-9 * np.linalg.norm(uxx)


def test_nls_exact_examples():
    p = NlsProblem()
    u0 = nls_exact(p, 0.0)
    assert np.max(np.abs(u0)) <= math.sqrt(2)
    assert np.max(np.abs(u0)) == pytest.approx(math.sqrt(2), rel=1e-2)
    assert np.allclose(u0, soliton(p.x, 0.0))
    for t in (0.0, 2.0, 6.0):
        u = nls_exact(p, t)
        assert abs(p.x[np.argmax(np.abs(u))] - t) <= p.dx
        assert discrete_mass(p, u) == pytest.approx(discrete_mass(p, u0), abs=1e-6)


def test_nls_rhs_matches_time_derivative_of_soliton():
    p = NlsProblem()
    h = 1e-5
    # centered in the box so the sech tails are negligible at the ends
    t = math.pi
    dudt = (nls_exact(p, t + h) - nls_exact(p, t - h)) / (2 * h)
    assert relative_l2_error(nls_rhs(p, nls_exact(p, t)), dudt) < 1e-3


def test_nls_short_propagation_first_order():
    p = NlsProblem()
    dt = 1e-3
    tr = integrate_ivp(TwoStageStepper(1.0), p.rhs, nls_exact(p, 1.0), 1.0, 1.0 + 10 * dt, dt)
    assert relative_l2_error(tr.final, nls_exact(p, 1.0 + 10 * dt)) < 1e-3


def test_linear_schrodinger_spectrum():
    p = NlsProblem()
    ev = np.array(linear_schrodinger_spectrum(p).eigenvalues)
    assert len(ev) == 100
    assert np.all(ev.real == 0) and np.all(ev.imag <= 0)
    assert ev[0] == 0
    assert np.max(np.abs(ev)) == pytest.approx(1250 / 9)
    assert 2 / np.max(np.abs(ev)) == pytest.approx(0.0144, abs=1e-4)
