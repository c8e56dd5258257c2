"""Domain layer: value types and the pure numerical core.

This package contains no I/O; everything operates on numpy arrays and
frozen dataclasses.
"""

from cavitykin.domain.models import (
    CavitySample,
    IkConstraints,
    IncidentPlane,
    LaserConfig,
    LocalSurfaceFrame,
    RegressionDataset,
    SolverOpts,
    Surface,
)
from cavitykin.domain.planner import PlanProblem, PlanSolution, plan_solve
from cavitykin.domain.slp import FitConfig, FitReport, GaussianBaseline, SlpModel, fit_slp
from cavitykin.domain.synth import BeamProfile, ExperimentPlan, SuccessReport
from cavitykin.domain.volumetrics import RoiGrid, VolumetricReport, compare_cavities, sample_roi

__all__ = [
    "CavitySample",
    "IkConstraints",
    "IncidentPlane",
    "LaserConfig",
    "LocalSurfaceFrame",
    "RegressionDataset",
    "SolverOpts",
    "Surface",
    "PlanProblem",
    "PlanSolution",
    "plan_solve",
    "FitConfig",
    "FitReport",
    "GaussianBaseline",
    "SlpModel",
    "fit_slp",
    "BeamProfile",
    "ExperimentPlan",
    "SuccessReport",
    "RoiGrid",
    "VolumetricReport",
    "compare_cavities",
    "sample_roi",
]
