"""Versioned file schemas.

Every JSON artifact the tools read or write is one of these models. Each
carries `schema_version`, converts to and from its domain value, and is
written with `model_dump_json(indent=2)`, which keeps field order stable and
floats in shortest round-trip form.
"""

from typing import Any, Literal

import pydantic

from cavitykin.domain.models import (
    CavitySample,
    IkConstraints,
    LaserConfig,
    LocalSurfaceFrame,
    RegressionDataset,
    Surface,
)
from cavitykin.domain.planner import PlanSolution
from cavitykin.domain.slp import FitReport, MinMaxTransform, SlpModel
from cavitykin.domain.synth import BeamProfile, ExperimentPlan, SuccessReport, SuccessTable
from cavitykin.domain.volumetrics import VolumetricReport

SCHEMA_VERSION = 1

Triple = tuple[float, float, float]
Interval = tuple[float, float]


class VersionedDTO(pydantic.BaseModel):
    """Base of all file schemas; unknown fields are rejected."""

    model_config = pydantic.ConfigDict(extra="forbid")

    schema_version: Literal[1] = SCHEMA_VERSION


class SurfaceDTO(VersionedDTO):
    points: list[Triple]
    metadata: dict[str, Any] = pydantic.Field(default_factory=dict)

    @classmethod
    def from_domain(cls, surface: Surface, metadata: dict[str, Any] | None = None) -> "SurfaceDTO":
        return cls(points=surface.points.tolist(), metadata=metadata or {})

    def to_domain(self) -> Surface:
        return Surface(self.points)


class SampleDTO(pydantic.BaseModel):
    s: float = pydantic.Field(..., ge=0)
    d: float = pydantic.Field(..., ge=0)
    cavity_id: int
    point_index: int


class DatasetDTO(VersionedDTO):
    samples: list[SampleDTO]
    splits: dict[Literal["train", "val", "test"], list[int]] = pydantic.Field(default_factory=dict)
    provenance: dict[str, Any] = pydantic.Field(default_factory=dict)

    @classmethod
    def from_domain(
        cls, dataset: RegressionDataset, provenance: dict[str, Any] | None = None
    ) -> "DatasetDTO":
        return cls(
            samples=[
                SampleDTO(s=x.s, d=x.d, cavity_id=x.cavity_id, point_index=x.point_index)
                for x in dataset.samples
            ],
            splits={name: list(indices) for name, indices in dataset.splits.items()},
            provenance=provenance or {},
        )

    def to_domain(self) -> RegressionDataset:
        return RegressionDataset(
            samples=tuple(CavitySample(**sample.model_dump()) for sample in self.samples),
            splits={name: tuple(indices) for name, indices in self.splits.items()},
        )


class TransformDTO(pydantic.BaseModel):
    in_min: float
    in_max: float
    out_min: float
    out_max: float

    @classmethod
    def from_domain(cls, transform: MinMaxTransform) -> "TransformDTO":
        return cls(
            in_min=transform.in_min,
            in_max=transform.in_max,
            out_min=transform.out_min,
            out_max=transform.out_max,
        )

    def to_domain(self) -> MinMaxTransform:
        return MinMaxTransform(self.in_min, self.in_max, self.out_min, self.out_max)


class SlpModelDTO(VersionedDTO):
    kind: Literal["slp"] = "slp"
    w1: float
    b1: float
    w2: float
    b2: float
    tx: TransformDTO
    ty: TransformDTO
    clamp_max_s: float
    meta: dict[str, Any] = pydantic.Field(default_factory=dict)

    @classmethod
    def from_domain(cls, model: SlpModel) -> "SlpModelDTO":
        return cls(
            w1=model.w1,
            b1=model.b1,
            w2=model.w2,
            b2=model.b2,
            tx=TransformDTO.from_domain(model.tx),
            ty=TransformDTO.from_domain(model.ty),
            clamp_max_s=model.clamp_max_s,
            meta=dict(model.meta),
        )

    def to_domain(self) -> SlpModel:
        return SlpModel(
            w1=self.w1,
            b1=self.b1,
            w2=self.w2,
            b2=self.b2,
            tx=self.tx.to_domain(),
            ty=self.ty.to_domain(),
            clamp_max_s=self.clamp_max_s,
            meta=dict(self.meta),
        )


class BeamProfileDTO(VersionedDTO):
    amplitude: float = pydantic.Field(..., ge=0)
    width: float = pydantic.Field(..., gt=0)
    kind: Literal["gaussian", "skewed"] = "gaussian"
    taper: float = pydantic.Field(default=0.5, ge=0)
    name: str = ""

    @classmethod
    def from_domain(cls, profile: BeamProfile) -> "BeamProfileDTO":
        return cls(
            amplitude=profile.amplitude,
            width=profile.width,
            kind=profile.kind,
            taper=profile.taper,
            name=profile.name,
        )

    def to_domain(self) -> BeamProfile:
        return BeamProfile(
            amplitude=self.amplitude,
            width=self.width,
            kind=self.kind,
            taper=self.taper,
            name=self.name,
        )


class ProfileSetDTO(VersionedDTO):
    """Several beam profiles swept by one experiment."""

    profiles: list[BeamProfileDTO] = pydantic.Field(..., min_length=1)


class ConstraintsDTO(VersionedDTO):
    plane_z: float
    center_box: tuple[Interval, Interval, Interval] = ((-5.0, 5.0), (-5.0, 5.0), (-5.0, 5.0))
    direction_box: tuple[Interval, Interval, Interval] = ((-1.0, 1.0), (-1.0, 1.0), (-1.0, 1.0))

    @classmethod
    def from_domain(cls, constraints: IkConstraints) -> "ConstraintsDTO":
        return cls(
            plane_z=constraints.plane_z,
            center_box=constraints.center_box,
            direction_box=constraints.direction_box,
        )

    def to_domain(self) -> IkConstraints:
        return IkConstraints(
            plane_z=self.plane_z, center_box=self.center_box, direction_box=self.direction_box
        )


class LaserConfigDTO(pydantic.BaseModel):
    center: Triple
    direction: Triple

    @classmethod
    def from_domain(cls, cfg: LaserConfig) -> "LaserConfigDTO":
        return cls(center=tuple(cfg.center.tolist()), direction=tuple(cfg.direction.tolist()))

    def to_domain(self) -> LaserConfig:
        return LaserConfig(center=self.center, direction=self.direction)


class LaserConfigFileDTO(VersionedDTO):
    config: LaserConfigDTO
    standoff: float = pydantic.Field(default=1.0, gt=0)


class ExperimentPlanDTO(VersionedDTO):
    gt_angle_grid: list[Interval] = pydantic.Field(..., min_length=1)
    init_angle_grid: list[Interval] = pydantic.Field(..., min_length=1)
    position_noise_bound: float = pydantic.Field(default=0.5, ge=0)
    seed: int = 0
    base_center: Triple = (0.0, 0.0, 0.0)
    base_direction: Triple = (0.0, 0.0, -1.0)
    grid_points: int = pydantic.Field(default=31, ge=2)
    standoff: float = pydantic.Field(default=1.0, gt=0)

    @classmethod
    def from_domain(cls, plan: ExperimentPlan) -> "ExperimentPlanDTO":
        return cls(
            gt_angle_grid=list(plan.gt_angle_grid),
            init_angle_grid=list(plan.init_angle_grid),
            position_noise_bound=plan.position_noise_bound,
            seed=plan.seed,
            base_center=plan.base_center,
            base_direction=plan.base_direction,
            grid_points=plan.grid_points,
            standoff=plan.standoff,
        )

    def to_domain(self) -> ExperimentPlan:
        return ExperimentPlan(
            gt_angle_grid=tuple(self.gt_angle_grid),
            init_angle_grid=tuple(self.init_angle_grid),
            position_noise_bound=self.position_noise_bound,
            seed=self.seed,
            base_center=self.base_center,
            base_direction=self.base_direction,
            grid_points=self.grid_points,
            standoff=self.standoff,
        )


class FitReportDTO(VersionedDTO):
    rmse: float
    mae: float
    epochs_used: int
    iterations: int
    train_mse: float
    val_mse: float
    test_mse: float
    converged: bool
    restart: int
    per_cavity_rmse: dict[int, float] = pydantic.Field(default_factory=dict)
    baseline_rmse: float | None = None

    @classmethod
    def from_domain(cls, report: FitReport, baseline_rmse: float | None = None) -> "FitReportDTO":
        return cls(
            rmse=report.rmse,
            mae=report.mae,
            epochs_used=report.epochs_used,
            iterations=report.iterations,
            train_mse=report.train_mse,
            val_mse=report.val_mse,
            test_mse=report.test_mse,
            converged=report.converged,
            restart=report.restart,
            per_cavity_rmse=dict(report.per_cavity_rmse),
            baseline_rmse=baseline_rmse,
        )


class PlanSolutionDTO(VersionedDTO):
    config: LaserConfigDTO
    total_cost: float
    per_point_costs: list[float]
    converged: bool
    iterations: int
    kkt_residual: float

    @classmethod
    def from_domain(cls, solution: PlanSolution) -> "PlanSolutionDTO":
        return cls(
            config=LaserConfigDTO.from_domain(solution.config),
            total_cost=solution.total_cost,
            per_point_costs=solution.per_point_costs.tolist(),
            converged=solution.converged,
            iterations=solution.iterations,
            kkt_residual=solution.kkt_residual,
        )


class VolumetricReportDTO(VersionedDTO):
    v_predict: float
    v_gt: float
    v_overlap: float
    over_cut_ratio: float
    under_cut_ratio: float
    iou: float
    radius: float
    resolution: int
    cells: int

    @classmethod
    def from_domain(cls, report: VolumetricReport) -> "VolumetricReportDTO":
        return cls(
            v_predict=report.v_predict,
            v_gt=report.v_gt,
            v_overlap=report.v_overlap,
            over_cut_ratio=report.over_cut_ratio,
            under_cut_ratio=report.under_cut_ratio,
            iou=report.iou,
            radius=report.radius,
            resolution=report.resolution,
            cells=report.cells,
        )

    def to_domain(self) -> VolumetricReport:
        return VolumetricReport(**self.model_dump(exclude={"schema_version"}))


class SuccessReportDTO(VersionedDTO):
    profile: str
    cases: int
    successes: int
    rate: float
    infeasible: int
    seed: int
    threshold: float

    @classmethod
    def from_domain(cls, report: SuccessReport) -> "SuccessReportDTO":
        return cls(
            profile=report.profile,
            cases=report.cases,
            successes=report.successes,
            rate=report.rate,
            infeasible=sum(1 for r in report.records if r.status == "infeasible"),
            seed=report.seed,
            threshold=report.threshold,
        )


class SuccessTableDTO(VersionedDTO):
    reports: list[SuccessReportDTO]
    average_rate: float

    @classmethod
    def from_domain(cls, table: SuccessTable) -> "SuccessTableDTO":
        return cls(
            reports=[SuccessReportDTO.from_domain(report) for report in table.reports],
            average_rate=table.average_rate,
        )


class FrameDTO(VersionedDTO):
    """Local reference plane of an un-ablated surface."""

    center: Triple
    normal: Triple

    @classmethod
    def from_domain(cls, frame: LocalSurfaceFrame) -> "FrameDTO":
        return cls(center=tuple(frame.center.tolist()), normal=tuple(frame.normal.tolist()))

    def to_domain(self) -> LocalSurfaceFrame:
        return LocalSurfaceFrame(center=self.center, normal=self.normal)
