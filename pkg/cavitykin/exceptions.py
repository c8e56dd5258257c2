"""Custom exceptions for the cavity kinematics library.

This module defines a hierarchy of exceptions for the different failure
scenarios of the pipeline, enabling clear error handling and a single
exception-to-exit-code mapping in the command-line layer.
"""


class CavityKinError(Exception):
    """Base exception for all cavity kinematics errors."""

    def __init__(self, message: str, original_error: Exception | None = None):
        super().__init__(message)
        self.message = message
        self.original_error = original_error


class GeometryError(CavityKinError):
    """Base exception for projection and surface-geometry errors."""

    pass


class DegenerateProjection(GeometryError):
    """Raised when the beam is (nearly) parallel to the reference plane."""

    pass


class EmptySelection(GeometryError):
    """Raised when a point selection is empty."""

    pass


class DegenerateGeometry(GeometryError):
    """Raised when points are collinear or too few to define a plane."""

    pass


class ModelFitError(CavityKinError):
    """Base exception for depth-model fitting errors."""

    pass


class DegenerateData(ModelFitError):
    """Raised when training data has no spread in s or in d."""

    pass


class NonConvergence(ModelFitError):
    """Raised when training stopped at the iteration limit."""

    pass


class SolverError(CavityKinError):
    """Base exception for inverse-kinematics solver errors."""

    pass


class SingularGradient(SolverError):
    """Raised when a point projects exactly onto the laser origin."""

    pass


class InfeasibleStart(SolverError):
    """Raised when the initial configuration cannot be projected to the feasible set."""

    pass


class MaxIterations(SolverError):
    """Raised when a solver exhausted its iteration budget."""

    pass


class PlanningError(CavityKinError):
    """Base exception for surface-alignment planning errors."""

    pass


class CardinalityMismatch(PlanningError):
    """Raised when pre-ablation and target surfaces differ in size."""

    def __init__(self, pre_count: int, target_count: int):
        super().__init__(
            f"Pre-ablation surface has {pre_count} points but target has {target_count}"
        )
        self.pre_count = pre_count
        self.target_count = target_count


class VolumetricError(CavityKinError):
    """Base exception for volumetric evaluation errors."""

    pass


class SparseCoverage(VolumetricError):
    """Raised when too many ROI cells have no measured point nearby."""

    def __init__(self, uncovered_fraction: float, limit: float):
        super().__init__(
            f"{uncovered_fraction:.1%} of ROI cells lack a measured point "
            f"(limit {limit:.0%})"
        )
        self.uncovered_fraction = uncovered_fraction


class ZeroGroundTruth(VolumetricError):
    """Raised when the ground-truth cavity has zero volume."""

    pass


class DataIOError(CavityKinError):
    """Base exception for file format errors."""

    pass


class ParseError(DataIOError):
    """Raised when a file cannot be parsed."""

    def __init__(
        self,
        path: str,
        reason: str,
        line: int | None = None,
        field: str | None = None,
        original_error: Exception | None = None,
    ):
        where = path
        if line is not None:
            where += f", row {line}"
        if field is not None:
            where += f", field '{field}'"
        super().__init__(f"Failed to parse {where}: {reason}", original_error)
        self.path = path
        self.line = line
        self.field = field


class EmptyFile(DataIOError):
    """Raised when a file holds no records."""

    def __init__(self, path: str):
        super().__init__(f"File '{path}' contains no records")
        self.path = path
