from functools import lru_cache

from cavitykin.adapters.file_store import FileArtifactStore
from cavitykin.configurations import EnvConfigs
from cavitykin.ports.store import ArtifactStore
from cavitykin.services.experiment_service import ExperimentService
from cavitykin.services.pipeline_service import CavityPipelineService


@lru_cache
def get_settings() -> EnvConfigs:
    """Get cached application settings."""
    return EnvConfigs()


@lru_cache
def get_store() -> ArtifactStore:
    """Get the singleton filesystem artifact store."""
    return FileArtifactStore()


def get_pipeline_service() -> CavityPipelineService:
    """Get the pipeline service with injected dependencies.

    Returns:
        Configured CavityPipelineService instance.
    """
    return CavityPipelineService(store=get_store(), standoff=get_settings().STANDOFF)


def get_experiment_service() -> ExperimentService:
    """Get the experiment service with injected dependencies."""
    return ExperimentService(store=get_store())
