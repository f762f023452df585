"""Coupled SIR-SI epidemic / Lotka-Volterra predator-prey model.

Simulation, reproduction-number thresholds, equilibrium analysis and
predator-release optimal control by a forward-backward sweep.
"""

__version__ = "0.1.0"

from .model import (  # noqa: E402
    DimensionalParams,
    DimensionlessParams,
    DomainError,
    FullState,
    LVState,
    Scales,
    SystemState,
    nondimensionalize,
    redimensionalize,
    rhs_controlled,
    rhs_dimensionless,
    rhs_full,
    rhs_lv,
    rhs_reduced,
    v_lv,
)
from .integrate import IntegrationError, SolverOptions, Trajectory, integrate, sample  # noqa: E402
from .analysis import (  # noqa: E402
    basic_reproduction_number,
    classify_equilibria,
    comparison_bound_check,
    disease_free_equilibria,
    endemic_equilibrium,
    infective_block,
    jacobian,
    level_set_bounds,
    metzler_comparison,
)
from .control import (  # noqa: E402
    ControlSignal,
    CostWeights,
    SweepOptions,
    adjoint_rhs,
    gradient_check,
    hamiltonian,
    objective,
    optimal_u,
    sweep_solve,
)
