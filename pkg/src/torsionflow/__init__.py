"""Planar Orlicz-Minkowski problem for torsional rigidity.

Given a positive angular density f and an Orlicz growth function psi,
find a convex body whose torsional curvature measure is gamma * psi(h)
times f, by marching a normalized support-function flow that conserves
torsional rigidity and dissipates the associated Orlicz energy.
"""

from .errors import (
    ConfigError,
    DegenerateTriangle,
    DomainError,
    EpsilonOutOfRange,
    GridMismatch,
    NonConvexBody,
    NonPositiveBody,
    NonPositiveT,
    SolverDiverged,
    TorsionFlowError,
    UnknownSuite,
    WrongClass,
)
from .estimator import OrliczMinkowskiFlow
from .flow import FlowConfig, FlowResult, functional_j, residual_profile, run
from .geometry import (
    ConvexBody,
    SupportFunction,
    angle_grid,
    build_body,
    differentiate,
    even_project,
    minkowski_combine,
    support_of_polygon,
)
from .orlicz import (
    OrliczFamily,
    RegularizedOrlicz,
    class_c_admissibility,
    power,
    regularize,
    table,
)
from .torsion import (
    FanMesh,
    TorsionSolution,
    build_mesh,
    solve_torsion,
    torsional_measure_density,
    variational_derivative,
)
from .verify import CheckReport, run_suite

__version__ = "0.1.0"

__all__ = [
    "CheckReport",
    "ConfigError",
    "ConvexBody",
    "DegenerateTriangle",
    "DomainError",
    "EpsilonOutOfRange",
    "FanMesh",
    "FlowConfig",
    "FlowResult",
    "GridMismatch",
    "NonConvexBody",
    "NonPositiveBody",
    "NonPositiveT",
    "OrliczFamily",
    "OrliczMinkowskiFlow",
    "RegularizedOrlicz",
    "SolverDiverged",
    "SupportFunction",
    "TorsionFlowError",
    "TorsionSolution",
    "UnknownSuite",
    "WrongClass",
    "angle_grid",
    "build_body",
    "build_mesh",
    "class_c_admissibility",
    "differentiate",
    "even_project",
    "functional_j",
    "minkowski_combine",
    "power",
    "regularize",
    "residual_profile",
    "run",
    "run_suite",
    "solve_torsion",
    "support_of_polygon",
    "table",
    "torsional_measure_density",
    "variational_derivative",
    "__version__",
]
