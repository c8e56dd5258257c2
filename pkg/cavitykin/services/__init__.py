"""Application services for the cavity pipeline.

This package contains the orchestration layer between files and the domain.
"""

from cavitykin.services.experiment_service import ExperimentService, run_planning_experiment
from cavitykin.services.pipeline_service import CavityPipelineService

__all__ = ["CavityPipelineService", "ExperimentService", "run_planning_experiment"]
