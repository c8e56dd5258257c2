"""Filesystem implementation of the artifact store.

Surfaces are CSV (x,y,z header, one point per row, row order = index k) or
JSON; every other artifact is a versioned JSON document. Parsing failures
are translated to ParseError/EmptyFile with the offending location.
"""

import csv
import json
import logging
from collections.abc import Iterable, Sequence
from pathlib import Path
from typing import Any

import numpy as np
import pydantic

from cavitykin.domain.dtos import (
    BeamProfileDTO,
    ConstraintsDTO,
    DatasetDTO,
    ExperimentPlanDTO,
    ProfileSetDTO,
    SlpModelDTO,
    SurfaceDTO,
)
from cavitykin.domain.models import IkConstraints, RegressionDataset, Surface
from cavitykin.domain.slp import SlpModel
from cavitykin.domain.synth import BeamProfile, ExperimentPlan
from cavitykin.exceptions import EmptyFile, ParseError
from cavitykin.ports.store import ArtifactStore, PathLike, ReportT

logger = logging.getLogger(__name__)

SURFACE_COLUMNS = ("x", "y", "z")


def format_value(value: Any) -> str:
    """Shortest round-trip text for floats; plain text otherwise."""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


class FileArtifactStore(ArtifactStore):
    """Artifact store backed by local files.

    Writes create parent directories. Output is byte-deterministic for
    identical inputs.
    """

    def _read_text(self, path: Path) -> str:
        text = path.read_text(encoding="utf-8")
        if not text.strip():
            raise EmptyFile(str(path))
        return text

    def _write_text(self, path: Path, text: str) -> None:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")
        logger.info("Wrote %s", path)

    def _load_json(self, path: PathLike, schema: type[ReportT]) -> ReportT:
        path = Path(path)
        text = self._read_text(path)
        try:
            return schema.model_validate_json(text)
        except pydantic.ValidationError as e:
            error = e.errors()[0]
            location = ".".join(str(part) for part in error["loc"]) or None
            raise ParseError(str(path), error["msg"], field=location, original_error=e) from e

    def _to_domain(self, path: PathLike, dto: Any) -> Any:
        try:
            return dto.to_domain()
        except ValueError as e:
            raise ParseError(str(path), str(e), original_error=e) from e

    def load_report(self, path: PathLike, schema: type[ReportT]) -> ReportT:
        return self._load_json(path, schema)

    def save_report(self, report: pydantic.BaseModel, path: PathLike) -> None:
        self._write_text(Path(path), report.model_dump_json(indent=2) + "\n")

    def load_surface(self, path: PathLike) -> Surface:
        path = Path(path)
        if path.suffix.lower() == ".json":
            dto = self._load_json(path, SurfaceDTO)
            if not dto.points:
                raise EmptyFile(str(path))
            return self._to_domain(path, dto)
        return self._load_surface_csv(path)

    def _load_surface_csv(self, path: Path) -> Surface:
        rows = list(csv.reader(self._read_text(path).splitlines()))
        header = [cell.strip().lower() for cell in rows[0]]
        if header != list(SURFACE_COLUMNS):
            raise ParseError(str(path), f"expected header x,y,z, got {','.join(rows[0])}", line=1)
        points = []
        for line, row in enumerate(rows[1:], start=2):
            if not row or not any(cell.strip() for cell in row):
                continue
            if len(row) != len(SURFACE_COLUMNS):
                raise ParseError(str(path), f"expected 3 fields, got {len(row)}", line=line)
            point = []
            for name, cell in zip(SURFACE_COLUMNS, row):
                try:
                    value = float(cell)
                except ValueError as e:
                    raise ParseError(
                        str(path), f"'{cell}' is not a number", line=line, field=name,
                        original_error=e,
                    ) from e
                if not np.isfinite(value):
                    raise ParseError(str(path), "coordinates must be finite", line=line, field=name)
                point.append(value)
            points.append(point)
        if not points:
            raise EmptyFile(str(path))
        return Surface(np.array(points, dtype=np.float64))

    def save_surface(
        self, surface: Surface, path: PathLike, metadata: dict[str, Any] | None = None
    ) -> None:
        path = Path(path)
        if path.suffix.lower() == ".json":
            self.save_report(SurfaceDTO.from_domain(surface, metadata), path)
            return
        self.write_rows(path, SURFACE_COLUMNS, surface.points.tolist())

    def load_dataset(self, path: PathLike) -> RegressionDataset:
        return self._to_domain(path, self._load_json(path, DatasetDTO))

    def save_dataset(
        self,
        dataset: RegressionDataset,
        path: PathLike,
        provenance: dict[str, Any] | None = None,
    ) -> None:
        self.save_report(DatasetDTO.from_domain(dataset, provenance), path)

    def load_model(self, path: PathLike) -> SlpModel:
        return self._to_domain(path, self._load_json(path, SlpModelDTO))

    def save_model(self, model: SlpModel, path: PathLike) -> None:
        self.save_report(SlpModelDTO.from_domain(model), path)

    def load_profiles(self, path: PathLike) -> list[BeamProfile]:
        path = Path(path)
        try:
            document = json.loads(self._read_text(path))
        except json.JSONDecodeError as e:
            raise ParseError(str(path), e.msg, line=e.lineno, original_error=e) from e
        if isinstance(document, dict) and "profiles" in document:
            dtos = self._load_json(path, ProfileSetDTO).profiles
        else:
            dtos = [self._load_json(path, BeamProfileDTO)]
        return [self._to_domain(path, dto) for dto in dtos]

    def save_profile(self, profile: BeamProfile, path: PathLike) -> None:
        self.save_report(BeamProfileDTO.from_domain(profile), path)

    def load_constraints(self, path: PathLike) -> IkConstraints:
        return self._load_json(path, ConstraintsDTO).to_domain()

    def save_constraints(self, constraints: IkConstraints, path: PathLike) -> None:
        self.save_report(ConstraintsDTO.from_domain(constraints), path)

    def load_plan(self, path: PathLike) -> ExperimentPlan:
        return self._to_domain(path, self._load_json(path, ExperimentPlanDTO))

    def save_plan(self, plan: ExperimentPlan, path: PathLike) -> None:
        self.save_report(ExperimentPlanDTO.from_domain(plan), path)

    def write_rows(
        self, path: PathLike, columns: Sequence[str], rows: Iterable[Sequence[Any]]
    ) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", encoding="utf-8", newline="") as handle:
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(columns)
            for row in rows:
                writer.writerow([format_value(value) for value in row])
        logger.info("Wrote %s", path)
