"""Time integration through the complex time plane.

Stability polynomials with complex coefficients, complex Forward-Euler step
paths, step-size-optimal polynomials, complex projective integration and the
benchmark problems used to exercise them.
"""
from .errors import (
    CxStepError,
    DegeneracyError,
    DivergenceError,
    GridSizeError,
    InfeasibleError,
    NumericalFailure,
)
from .integrate import (
    EulerPathStepper,
    PfeScheme,
    PfeStepper,
    Trajectory,
    TwoStageStepper,
    composed_euler_step,
    integrate_ivp,
    pfe_butcher_tableau,
    pfe_stability_polynomial,
    pfe_step,
    two_stage_step,
)
from .optimize import (
    OptimizationProblem,
    OptimizationResult,
    Spectrum,
    max_stable_step,
    perturb_imaginary,
    polynomial_to_paths,
    stability_feasible,
)
from .paths import (
    PathFamily,
    StepPath,
    enumerate_full_order_paths,
    order_of_accuracy,
    partial_sums,
    path_to_polynomial,
)
from .poly import (
    RegionGrid,
    RegionWindow,
    StabilityPolynomial,
    axis_extent,
    evaluate,
    is_stable,
    region_grid,
    roots,
)

__version__ = "0.1.0"
