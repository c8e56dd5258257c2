"""Shared test fixtures and fakes.

This module provides reusable fixtures and an in-memory artifact store
for testing across the package.
"""

import logging
from collections.abc import Iterable, Sequence
from pathlib import Path
from typing import Any

import numpy as np
import pydantic
import pytest

from cavitykin.domain.dtos import SlpModelDTO
from cavitykin.domain.models import IkConstraints, LaserConfig, RegressionDataset, Surface
from cavitykin.domain.slp import SlpModel
from cavitykin.domain.synth import BeamProfile, ExperimentPlan, planar_grid_surface
from cavitykin.exceptions import EmptyFile
from cavitykin.ports.store import ArtifactStore, PathLike


class MockStore(ArtifactStore):
    """In-memory artifact store for testing.

    Keeps every artifact under its path string and records writes.
    """

    def __init__(self) -> None:
        """Initialize the store with empty storage."""
        self._storage: dict[str, Any] = {}
        self.saved: list[str] = []

    def put(self, path: PathLike, value: Any) -> None:
        self._storage[str(path)] = value

    def get(self, path: PathLike) -> Any:
        try:
            return self._storage[str(path)]
        except KeyError:
            raise FileNotFoundError(str(path))

    def _save(self, path: PathLike, value: Any) -> None:
        self.put(path, value)
        self.saved.append(str(path))

    def load_surface(self, path: PathLike) -> Surface:
        return self.get(path)

    def save_surface(self, surface: Surface, path: PathLike, metadata: dict | None = None) -> None:
        self._save(path, surface)

    def load_dataset(self, path: PathLike) -> RegressionDataset:
        dataset = self.get(path)
        if dataset is None:
            raise EmptyFile(str(path))
        return dataset

    def save_dataset(self, dataset: RegressionDataset, path: PathLike, provenance: dict | None = None) -> None:
        self._save(path, dataset)

    def load_model(self, path: PathLike) -> SlpModel:
        return self.get(path)

    def save_model(self, model: SlpModel, path: PathLike) -> None:
        self._save(path, model)

    def load_profiles(self, path: PathLike) -> list[BeamProfile]:
        value = self.get(path)
        return list(value) if isinstance(value, (list, tuple)) else [value]

    def save_profile(self, profile: BeamProfile, path: PathLike) -> None:
        self._save(path, profile)

    def load_constraints(self, path: PathLike) -> IkConstraints:
        return self.get(path)

    def save_constraints(self, constraints: IkConstraints, path: PathLike) -> None:
        self._save(path, constraints)

    def load_plan(self, path: PathLike) -> ExperimentPlan:
        return self.get(path)

    def save_plan(self, plan: ExperimentPlan, path: PathLike) -> None:
        self._save(path, plan)

    def load_report(self, path: PathLike, schema: type) -> Any:
        return self.get(path)

    def save_report(self, report: pydantic.BaseModel, path: PathLike) -> None:
        self._save(path, report)

    def write_rows(self, path: PathLike, columns: Sequence[str], rows: Iterable[Sequence[Any]]) -> None:
        self._save(path, (tuple(columns), [tuple(row) for row in rows]))


def make_model(
    theta: Sequence[float] = (-2.0, -0.5, 1.0, 0.0),
    s_max: float = 1.0,
    d_max: float = 0.2,
) -> SlpModel:
    """Hand-set perceptron, positive and decreasing on [0, s_max] by default."""
    return SlpModel.from_ranges(theta, (0.0, s_max), (0.0, d_max))


def random_slp(rng: np.random.Generator, s_max_range: tuple[float, float] = (0.5, 2.5)) -> SlpModel:
    """Random perceptron and transforms whose un-clamped output stays above d = 0."""
    w1 = rng.uniform(0.5, 3.0) * rng.choice([-1.0, 1.0])
    w2 = rng.uniform(0.2, 0.9) * rng.choice([-1.0, 1.0])
    theta = (w1, rng.uniform(-1.0, 1.0), w2, rng.uniform(-0.05, 0.05))
    s_max = rng.uniform(*s_max_range)
    d_max = rng.uniform(0.05, 0.3)
    return SlpModel.from_ranges(theta, (0.0, s_max), (0.0, d_max))


@pytest.fixture(autouse=True)
def reset_package_logging() -> Iterable[None]:
    """Drop handlers installed by CLI runs so later tests never log to closed streams."""
    yield
    logger = logging.getLogger("cavitykin")
    for handler in list(logger.handlers):
        logger.removeHandler(handler)
    logger.setLevel(logging.NOTSET)


@pytest.fixture
def mock_store() -> MockStore:
    """Create an in-memory store fixture."""
    return MockStore()


@pytest.fixture
def smooth_model() -> SlpModel:
    """Hand-set perceptron with a non-zero slope everywhere inside its support."""
    return make_model()


@pytest.fixture
def gaussian_profile() -> BeamProfile:
    """Default synthetic beam."""
    return BeamProfile(amplitude=0.12, width=0.3, name="mid")


@pytest.fixture
def downward_config() -> LaserConfig:
    """Beam pointing straight down onto the z = 0 plane."""
    return LaserConfig(center=(0.0, 0.0, 0.0), direction=(0.0, 0.0, -1.0))


@pytest.fixture
def flat_grid() -> Surface:
    """21x21 grid over [-1, 1]^2 on z = 0."""
    return planar_grid_surface(1.0, 21)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


@pytest.fixture
def model_json(smooth_model: SlpModel) -> str:
    return SlpModelDTO.from_domain(smooth_model).model_dump_json(indent=2)


@pytest.fixture
def workdir(tmp_path: Path) -> Path:
    path = tmp_path / "work"
    path.mkdir()
    return path
