"""Exception types shared across the package.

Geometry failures carry enough context (offending index, measured value)
for a flow driver to decide between retrying with a smaller step and
aborting the run.
"""

from __future__ import annotations


class TorsionFlowError(Exception):
    """Base class for all package-specific failures."""


class NonPositiveBody(TorsionFlowError, ValueError):
    """Support samples dipped to zero or below; the body has no interior."""

    def __init__(self, min_h: float, index: int):
        self.min_h = float(min_h)
        self.index = int(index)
        super().__init__(
            f"support function must be strictly positive: "
            f"min h = {min_h:.6g} at sample {index}"
        )


class NonConvexBody(TorsionFlowError, ValueError):
    """Curvature radius h'' + h fell below the positivity floor."""

    def __init__(self, min_rho: float, index: int):
        self.min_rho = float(min_rho)
        self.index = int(index)
        super().__init__(
            f"curvature radius h'' + h must stay positive: "
            f"min rho = {min_rho:.6g} at sample {index}"
        )


class GridMismatch(TorsionFlowError, ValueError):
    """Two support functions live on different angular grids."""


class DegenerateTriangle(TorsionFlowError, RuntimeError):
    """A mesh triangle has non-positive signed area."""

    def __init__(self, triangle: int, area: float):
        self.triangle = int(triangle)
        self.area = float(area)
        super().__init__(
            f"triangle {triangle} has signed area {area:.6g} <= 0"
        )


class SolverDiverged(TorsionFlowError, RuntimeError):
    """The conjugate-gradient loop hit its iteration cap."""

    def __init__(self, iterations: int, residual: float):
        self.iterations = int(iterations)
        self.residual = float(residual)
        super().__init__(
            f"CG failed to reach tolerance after {iterations} iterations "
            f"(relative residual {residual:.3e})"
        )


class EpsilonOutOfRange(TorsionFlowError, ValueError):
    """Regularization parameter outside the admissible interval (0, 1/2]."""


class WrongClass(TorsionFlowError, ValueError):
    """An operation received an Orlicz family of the wrong class."""


class DomainError(TorsionFlowError, ValueError):
    """Function evaluated outside its domain (e.g. log at s <= 0)."""


class NonPositiveT(TorsionFlowError, ValueError):
    """Normalization requested with a non-positive torsional rigidity."""


class ConfigError(TorsionFlowError, ValueError):
    """Invalid run configuration; message names the offending field."""


class UnknownSuite(TorsionFlowError, KeyError):
    """Verification suite name not recognized."""
