"""Derivative-free trust-region optimization for transformed black boxes.

The black box answers one batch of points per query step, all values
passed through that step's scalar transformation.  The solver keeps a
quadratic model whose update residuals absorb the step-to-step change,
so re-queried points carry the information the transformation would
otherwise destroy.
"""

from .exceptions import (
    DegenerateProblemError,
    DfotoError,
    EvaluationError,
    InconclusiveError,
    PoisednessError,
    ProtocolError,
)
from .kkt_system import InterpolationSet, KktSystem, assemble, lagrange_polynomial
from .kkt_system import solve as solve_kkt
from .model_update import UpdateInputs, build_residual, update, updating_model
from .problems import PROBLEM_NAMES, TestProblem, default_suite, get_problem
from .quad_model import KktSolution, QuadraticModel, as_point, from_kkt_solution
from .solver import (
    GeometryProposal,
    IterationRecord,
    SolverConfig,
    SolverResult,
    improve_geometry,
    initialize,
    minimize,
)
from .transform_analysis import (
    FullyLinearConstants,
    MopSystem,
    build_mop_system,
    check_mop,
    check_objective_optimality_preserving,
    fully_linear_constants,
    solution_space,
)
from .transform_oracle import (
    OracleLog,
    Transformation,
    TransformationSchedule,
    TransformedOracle,
    sample_laplace,
    sample_uniform,
)
from .trust_region import (
    RadiusState,
    SubproblemResult,
    check_rho_termination,
    solve_subproblem,
    update_radius,
)

__version__ = "0.1.0"

__all__ = [
    "DegenerateProblemError",
    "DfotoError",
    "EvaluationError",
    "FullyLinearConstants",
    "GeometryProposal",
    "InconclusiveError",
    "InterpolationSet",
    "IterationRecord",
    "KktSolution",
    "KktSystem",
    "MopSystem",
    "OracleLog",
    "PoisednessError",
    "PROBLEM_NAMES",
    "ProtocolError",
    "QuadraticModel",
    "RadiusState",
    "SolverConfig",
    "SolverResult",
    "SubproblemResult",
    "TestProblem",
    "Transformation",
    "TransformationSchedule",
    "TransformedOracle",
    "UpdateInputs",
    "as_point",
    "assemble",
    "build_mop_system",
    "build_residual",
    "check_mop",
    "check_objective_optimality_preserving",
    "check_rho_termination",
    "default_suite",
    "from_kkt_solution",
    "fully_linear_constants",
    "get_problem",
    "improve_geometry",
    "initialize",
    "lagrange_polynomial",
    "minimize",
    "sample_laplace",
    "sample_uniform",
    "solution_space",
    "solve_kkt",
    "solve_subproblem",
    "update",
    "update_radius",
    "updating_model",
]
