"""Named stability polynomials, paths and steppers."""
from __future__ import annotations

from .integrate import EulerPathStepper, PfeStepper, TwoStageStepper
from .paths import StepPath, full_order_weights, path_to_polynomial
from .poly import StabilityPolynomial

C_MINUS = 0.5 - 0.5j


def cfe_path(n: int) -> StepPath:
    """Full-order complex Euler path with weights sorted lexicographically by (re, im)."""
    return StepPath(sorted(full_order_weights(n), key=lambda w: (w.real, w.imag)))


POLYNOMIALS: dict[str, StabilityPolynomial] = {
    "fe": StabilityPolynomial([1, 1]),
    "rk2": StabilityPolynomial([1, 1, 0.5]),
    "rk3": StabilityPolynomial([1, 1, 0.5, 1 / 6]),
    "phi_r": StabilityPolynomial([1, 1, 1]),
    "phi_c": StabilityPolynomial([1, 1, 0.5 + 0.5j]),
    "phi_c_minus": StabilityPolynomial([1, 1, C_MINUS]),
    "rkopt_3s2": StabilityPolynomial([1, 1, 0.5, 0.1134]),
    "copt_3s2": StabilityPolynomial([1, 1, 0.5, 0.1134 - 0.06j]),
}

PATHS: dict[str, StepPath] = {f"cfe{n}": cfe_path(n) for n in (1, 2, 3)}

for _name, _path in PATHS.items():
    POLYNOMIALS[_name] = path_to_polynomial(_path)


def polynomial(name: str) -> StabilityPolynomial:
    try:
        return POLYNOMIALS[name]
    except KeyError:
        raise KeyError(f"unknown preset {name!r}; choose from {sorted(POLYNOMIALS)}") from None


def steppers(inner_dt: float = 1e-3) -> dict:
    """One instance of every stepper kind, for cross-checks against their polynomials."""
    out = {name: EulerPathStepper(path, name) for name, path in PATHS.items()}
    out["two_stage_real"] = TwoStageStepper(1.0, "two_stage_real")
    out["two_stage_complex"] = TwoStageStepper(C_MINUS, "two_stage_complex")
    out["two_stage_fe"] = TwoStageStepper(0.0, "two_stage_fe")
    out["pfe_1"] = PfeStepper([inner_dt], "pfe_1")
    out["pfe_2"] = PfeStepper([inner_dt, inner_dt], "pfe_2")
    out["pfe_3"] = PfeStepper([inner_dt] * 3, "pfe_3")
    out["cpfe_2"] = PfeStepper([inner_dt * (1 + 1j), inner_dt * (1 - 1j)], "cpfe_2")
    return out
