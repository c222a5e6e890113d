"""Experiment drivers shared by the CLI and the acceptance suite."""
from __future__ import annotations

import statistics
from dataclasses import dataclass

import numpy as np

from .errors import DivergenceError
from .integrate import PfeStepper, Trajectory, TwoStageStepper, integrate_ivp
from .models import (
    DampedOscillatorSystem,
    NlsProblem,
    ProtheroRobinsonProblem,
    dos_exact,
    dos_spectrum,
    nls_exact,
    pr_exact,
    pr_rhs,
    relative_l2_error,
)
from .presets import C_MINUS

NLS_DTS = (0.014, 0.007, 0.0035, 0.002, 0.001)
NLS_INTEGRATORS = {"real": 1.0 + 0j, "complex": C_MINUS}


@dataclass(frozen=True)
class NlsRow:
    integrator: str
    c: complex
    dt: float
    steps: int
    rel_l2_error: float
    wall_seconds: float
    stable: bool

    def as_row(self) -> dict:
        return {
            "integrator": self.integrator,
            "c_re": self.c.real,
            "c_im": self.c.imag,
            "dt": self.dt,
            "steps": self.steps,
            "rel_l2_error": self.rel_l2_error,
            "wall_seconds": self.wall_seconds,
            "stable": self.stable,
        }


def nls_run(prob: NlsProblem, c: complex, dt: float, name: str = "", repeats: int = 1) -> NlsRow:
    """Integrate the soliton to ``t_end``; wall time is the median over ``repeats`` runs."""
    stepper = TwoStageStepper(c, name or "two_stage")
    u0 = nls_exact(prob, 0.0)
    walls, err, steps = [], float("nan"), 0
    for _ in range(max(1, repeats)):
        try:
            tr = integrate_ivp(stepper, prob.rhs, u0, 0.0, prob.t_end, dt)
        except DivergenceError:
            return NlsRow(name, complex(c), dt, 0, float("nan"), float("nan"), False)
        walls.append(tr.wall_time)
        steps = len(tr.times) - 1
        err = relative_l2_error(tr.final, nls_exact(prob, prob.t_end))
    return NlsRow(name, complex(c), dt, steps, err, statistics.median(walls), True)


def nls_sweep(prob: NlsProblem, dts=NLS_DTS, integrators=None, repeats: int = 1) -> list[NlsRow]:
    integrators = NLS_INTEGRATORS if integrators is None else integrators
    return [nls_run(prob, c, dt, name, repeats) for name, c in integrators.items() for dt in dts]


def observed_slope(dts, errors) -> float:
    """Least-squares slope of ``log(error)`` against ``log(dt)``."""
    return float(np.polyfit(np.log(dts), np.log(errors), 1)[0])


def prothero_inner(prob: ProtheroRobinsonProblem, scheme: str) -> list[complex]:
    """Two inner steps ``Re(-1/lam)`` (real) or ``-1/lam`` (complex)."""
    d = -1.0 / prob.lam
    return [d.real] * 2 if scheme == "real" else [d] * 2


def oscillator_inner(prob: DampedOscillatorSystem, scheme: str) -> list[complex]:
    """Real: two steps ``Re(-1/lam_f)``.  Complex: ``-1/lam_f+``, ``-1/lam_f-`` then a real step.

    The trailing real step only carries the extrapolation slope ``f(y2)``, so
    the amplification ``(1 + a+ z)(1 + a- z)(1 + (1 - a+ - a-) z)`` vanishes at
    both fast eigenvalues and has real coefficients.
    """
    _, fp, fm = dos_spectrum(prob).eigenvalues
    dp, dm = -1.0 / fp, -1.0 / fm
    if scheme == "real":
        return [dp.real] * 2
    return [dp, dm, dp.real]


@dataclass
class PiOutcome:
    trajectory: Trajectory | None
    summary: dict


def _oscillation_ratio(err: np.ndarray, window: int = 10) -> float:
    """Late over early error envelope (steps 1..window vs the last window steps)."""
    early = float(np.max(err[1:window + 1]))
    late = float(np.max(err[-window:]))
    return late / early if early > 0 else float("inf")


def pi_run(problem: str, scheme: str, dt: float, t_end: float | None = None, **params) -> PiOutcome:
    """Run real or complex PFE on ``prothero`` or ``oscillator``; divergence is recorded, not raised."""
    if scheme not in ("real", "complex"):
        raise ValueError("scheme must be 'real' or 'complex'")
    if problem == "prothero":
        prob = ProtheroRobinsonProblem(**params)
        inner = prothero_inner(prob, scheme)
        f = lambda t, y: pr_rhs(prob, t, y)  # noqa: E731
        y0 = [prob.y0]
        t_end = 6.0 if t_end is None else t_end
        exact = lambda ts: np.asarray(pr_exact(prob, ts)).reshape(len(ts), 1)  # noqa: E731
        watch = 0
    elif problem == "oscillator":
        prob = DampedOscillatorSystem(**params)
        inner = oscillator_inner(prob, scheme)
        f = prob.rhs
        y0 = list(prob.y0)
        t_end = 5.0 if t_end is None else t_end
        exact = lambda ts: dos_exact(prob, ts)  # noqa: E731
        watch = 2
    else:
        raise ValueError("problem must be 'prothero' or 'oscillator'")

    stepper = PfeStepper(inner, f"pfe_{scheme}")
    summary = {
        "problem": problem,
        "scheme": scheme,
        "dt": dt,
        "t_end": t_end,
        "inner_dts": [{"re": d.real, "im": d.imag} for d in stepper.inner_dts],
    }
    try:
        tr = integrate_ivp(stepper, f, y0, 0.0, t_end, dt)
    except DivergenceError as exc:
        summary.update(diverged=True, failure_time=exc.time, max_error=float("inf"),
                       max_error_watched=float("inf"), max_imag_residual=float("nan"),
                       oscillation_ratio=float("nan"))
        return PiOutcome(None, summary)
    ex = exact(tr.times)
    err = np.abs(tr.states - ex)
    watched = err[:, watch]
    summary.update(
        diverged=False,
        failure_time=None,
        steps=len(tr.times) - 1,
        max_error=float(err.max()),
        max_error_watched=float(watched.max()),
        watched_component=watch,
        max_imag_residual=tr.max_imag_residual() if problem == "oscillator" else None,
        oscillation_ratio=_oscillation_ratio(watched),
        wall_seconds=tr.wall_time,
    )
    return PiOutcome(tr, summary)
