"""Artifact store port interface.

This module defines the abstract interface for reading and writing the
pipeline's artifacts. All store implementations must adhere to this contract.
"""

from abc import ABC, abstractmethod
from collections.abc import Iterable, Sequence
from pathlib import Path
from typing import Any, TypeVar

import pydantic

from cavitykin.domain.models import IkConstraints, RegressionDataset, Surface
from cavitykin.domain.slp import SlpModel
from cavitykin.domain.synth import BeamProfile, ExperimentPlan

PathLike = str | Path
ReportT = TypeVar("ReportT", bound=pydantic.BaseModel)


class ArtifactStore(ABC):
    """Abstract base class for artifact persistence.

    Surfaces keep their row order, which is the correspondence index k
    between pre-ablation, post-ablation and target surfaces.
    """

    @abstractmethod
    def load_surface(self, path: PathLike) -> Surface:
        """Read a surface (CSV with an x,y,z header, or JSON).

        Raises:
            ParseError: On a malformed row or document, naming its location.
            EmptyFile: When the file holds no points.
        """
        pass

    @abstractmethod
    def save_surface(
        self, surface: Surface, path: PathLike, metadata: dict[str, Any] | None = None
    ) -> None:
        pass

    @abstractmethod
    def load_dataset(self, path: PathLike) -> RegressionDataset:
        pass

    @abstractmethod
    def save_dataset(
        self,
        dataset: RegressionDataset,
        path: PathLike,
        provenance: dict[str, Any] | None = None,
    ) -> None:
        pass

    @abstractmethod
    def load_model(self, path: PathLike) -> SlpModel:
        pass

    @abstractmethod
    def save_model(self, model: SlpModel, path: PathLike) -> None:
        pass

    @abstractmethod
    def load_profiles(self, path: PathLike) -> list[BeamProfile]:
        """Read one beam profile, or a set of them, from a JSON file."""
        pass

    @abstractmethod
    def save_profile(self, profile: BeamProfile, path: PathLike) -> None:
        pass

    @abstractmethod
    def load_constraints(self, path: PathLike) -> IkConstraints:
        pass

    @abstractmethod
    def save_constraints(self, constraints: IkConstraints, path: PathLike) -> None:
        pass

    @abstractmethod
    def load_plan(self, path: PathLike) -> ExperimentPlan:
        pass

    @abstractmethod
    def save_plan(self, plan: ExperimentPlan, path: PathLike) -> None:
        pass

    @abstractmethod
    def load_report(self, path: PathLike, schema: type[ReportT]) -> ReportT:
        """Read any versioned JSON document into its schema."""
        pass

    @abstractmethod
    def save_report(self, report: pydantic.BaseModel, path: PathLike) -> None:
        pass

    @abstractmethod
    def write_rows(
        self, path: PathLike, columns: Sequence[str], rows: Iterable[Sequence[Any]]
    ) -> None:
        """Write a header and rows as CSV; floats in shortest round-trip form."""
        pass
