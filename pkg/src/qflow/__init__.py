"""Gradient flow of liquid-crystal Q-tensors with a singular entropy term.

The library solves dQ/dt = -dE/dQ on the unit square, where the free
energy couples a strictly convex entropy barrier (keeping eigenvalues in
the physical interval) with quadratic elastic terms.  Implicit schemes of
first and second order preserve physicality and dissipate energy; each
step is a convex minimization solved by a damped Newton method.
"""

from .tensor import (
    BASIS,
    METRIC,
    biaxiality,
    dot,
    eigen_frame,
    eigenvalues,
    from_matrix,
    is_physical,
    norm_sq,
    principal_axis,
    project,
    to_matrix,
    uniaxial,
)
from .entropy import Q_MIN, q_grad, q_hess, q_value
from .bulk import (
    CHI_DOUBLE_STAR,
    ModelParams,
    StationaryReport,
    chi_star,
    f_bulk,
    saddle_point,
    stationary_points,
    uniaxial_energy,
)
from .grid import (
    Grid2D,
    QField,
    discrete_bulk_energy,
    discrete_elastic_energy,
    discrete_total_energy,
    error_norm,
    field_from_function,
    l_h,
    write_snapshot,
)
from .stepper import (
    DampingFailed,
    EnergyIncreased,
    MaxItersExceeded,
    NewtonConfig,
    RunResult,
    SolverError,
    StepDiagnostics,
    Stepper,
    energy_dissipation_ok,
    run,
    step_first,
    step_second,
)
from .bingham import BinghamState, NoConvergence, partition_and_moments, psi, solve_b
from .experiments import (
    ConfigError,
    RunConfig,
    accuracy_space,
    accuracy_time,
    bingham_compare,
    biaxial_area,
    build_field,
    center_director_angle,
    classify_well,
    load_config,
    ordered_s,
    preset_path,
    run_experiment,
    sweep_c22,
)

__all__ = [
    "BASIS",
    "METRIC",
    "BinghamState",
    "CHI_DOUBLE_STAR",
    "ConfigError",
    "DampingFailed",
    "EnergyIncreased",
    "Grid2D",
    "MaxItersExceeded",
    "ModelParams",
    "NewtonConfig",
    "NoConvergence",
    "QField",
    "Q_MIN",
    "RunConfig",
    "RunResult",
    "SolverError",
    "StationaryReport",
    "StepDiagnostics",
    "Stepper",
    "accuracy_space",
    "accuracy_time",
    "biaxial_area",
    "biaxiality",
    "bingham_compare",
    "build_field",
    "center_director_angle",
    "chi_star",
    "classify_well",
    "discrete_bulk_energy",
    "discrete_elastic_energy",
    "discrete_total_energy",
    "dot",
    "eigen_frame",
    "eigenvalues",
    "energy_dissipation_ok",
    "error_norm",
    "f_bulk",
    "field_from_function",
    "from_matrix",
    "is_physical",
    "l_h",
    "load_config",
    "norm_sq",
    "ordered_s",
    "partition_and_moments",
    "preset_path",
    "principal_axis",
    "project",
    "psi",
    "q_grad",
    "q_hess",
    "q_value",
    "run",
    "run_experiment",
    "saddle_point",
    "solve_b",
    "stationary_points",
    "step_first",
    "step_second",
    "sweep_c22",
    "to_matrix",
    "uniaxial",
    "uniaxial_energy",
    "write_snapshot",
]

__version__ = "0.1.0"
