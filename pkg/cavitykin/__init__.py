"""Cavity kinematics: predict, plan and evaluate one-shot laser ablation cavities.

The package follows hexagonal (clean) architecture principles: pure math in
`domain`, persistence behind the `ports` interfaces, file formats in
`adapters`, orchestration in `services` and the command line in `cli`.
"""

from cavitykin.domain import (
    BeamProfile,
    IkConstraints,
    LaserConfig,
    RegressionDataset,
    SlpModel,
    SolverOpts,
    Surface,
)
from cavitykin.exceptions import (
    CardinalityMismatch,
    CavityKinError,
    DataIOError,
    DegenerateData,
    DegenerateGeometry,
    DegenerateProjection,
    EmptyFile,
    EmptySelection,
    GeometryError,
    InfeasibleStart,
    MaxIterations,
    ModelFitError,
    NonConvergence,
    ParseError,
    PlanningError,
    SingularGradient,
    SolverError,
    SparseCoverage,
    VolumetricError,
    ZeroGroundTruth,
)
from cavitykin.services import CavityPipelineService, ExperimentService

__all__ = [
    "BeamProfile",
    "IkConstraints",
    "LaserConfig",
    "RegressionDataset",
    "SlpModel",
    "SolverOpts",
    "Surface",
    "CavityPipelineService",
    "ExperimentService",
    "CavityKinError",
    "GeometryError",
    "DegenerateProjection",
    "EmptySelection",
    "DegenerateGeometry",
    "ModelFitError",
    "DegenerateData",
    "NonConvergence",
    "SolverError",
    "SingularGradient",
    "InfeasibleStart",
    "MaxIterations",
    "PlanningError",
    "CardinalityMismatch",
    "VolumetricError",
    "SparseCoverage",
    "ZeroGroundTruth",
    "DataIOError",
    "ParseError",
    "EmptyFile",
]
