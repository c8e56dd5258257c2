"""Cavity pipeline service.

This module provides the application service behind the command line,
orchestrating the domain operations between files read and written through
the artifact store port.
"""

import logging
from collections.abc import Iterator
from contextlib import contextmanager
from dataclasses import dataclass
from pathlib import Path

from cavitykin.domain.dtos import (
    FitReportDTO,
    FrameDTO,
    LaserConfigDTO,
    LaserConfigFileDTO,
    PlanSolutionDTO,
    VolumetricReportDTO,
)
from cavitykin.domain.geometry import DEFAULT_STANDOFF, incident_plane
from cavitykin.domain.kinematics import fk_surface
from cavitykin.domain.models import LaserConfig, SolverOpts, Surface
from cavitykin.domain.planner import PlanProblem, PlanSolution, plan_solve
from cavitykin.domain.postprocess import ExclusionDisc, build_dataset, fit_local_frame
from cavitykin.domain.slp import FitConfig, FitReport, SlpModel, fit_gaussian_baseline, fit_slp
from cavitykin.domain.synth import (
    BeamProfile,
    generate_cavity,
    planar_grid_surface,
    synthetic_cavities,
)
from cavitykin.domain.volumetrics import (
    DEPTH_CELL_COLUMNS,
    VolumetricReport,
    compare_cavities,
    depth_cells,
    measured_depth_field,
    predicted_depth_field,
    sample_roi,
)
from cavitykin.exceptions import CavityKinError, ModelFitError
from cavitykin.ports.store import ArtifactStore, PathLike

logger = logging.getLogger(__name__)

AUTO_FRAME = "auto"


@contextmanager
def _reraise_as(action: str) -> Iterator[None]:
    """Let library and I/O errors through; wrap anything unexpected."""
    try:
        yield
    except (CavityKinError, OSError):
        raise
    except Exception as e:
        raise CavityKinError(f"Failed to {action}: {str(e)}", e) from e


@dataclass(frozen=True)
class GeneratedCase:
    """Paths written by CavityPipelineService.generate."""

    pre_surface: Path
    post_surface: Path
    config: Path
    profile: Path
    dataset: Path


class CavityPipelineService:
    """Application service for fitting, prediction, planning and evaluation.

    Reads inputs and writes outputs through the artifact store so the same
    workflow runs against files or an in-memory fake.
    """

    def __init__(self, store: ArtifactStore, standoff: float = DEFAULT_STANDOFF) -> None:
        """Initialize the service.

        Args:
            store: The artifact store implementation for all reads and writes.
            standoff: L_ref in mm used for every incident plane.
        """
        self._store = store
        self._standoff = standoff

    def fit(
        self,
        dataset_path: PathLike,
        model_path: PathLike,
        config: FitConfig | None = None,
        report_path: PathLike | None = None,
    ) -> tuple[SlpModel, FitReport, FitReportDTO]:
        """Fit a perceptron on a dataset file and write the model.

        The model is written even when training hit its iteration limit; the
        caller decides what non-convergence means.

        Raises:
            DegenerateData: When the dataset cannot train a model.
            DataIOError: When the dataset file is malformed.
        """
        with _reraise_as("fit the depth model"):
            dataset = self._store.load_dataset(dataset_path)
            model, report = fit_slp(dataset, config)
            self._store.save_model(model, model_path)
            try:
                _, baseline_rmse = fit_gaussian_baseline(dataset)
            except (ModelFitError, RuntimeError) as e:
                logger.warning("Gaussian baseline fit failed: %s", e)
                baseline_rmse = None
            report_dto = FitReportDTO.from_domain(report, baseline_rmse)
            if report_path is not None:
                self._store.save_report(report_dto, report_path)
            return model, report, report_dto

    def predict(
        self, model_path: PathLike, surface_path: PathLike, cfg: LaserConfig, out_path: PathLike
    ) -> Surface:
        """Write the predicted post-ablation surface for one configuration."""
        with _reraise_as("predict the cavity"):
            model = self._store.load_model(model_path)
            pre = self._store.load_surface(surface_path)
            post = fk_surface(cfg, model, pre, self._standoff)
            self._store.save_surface(post, out_path)
            logger.info("Predicted %d points", len(post))
            return post

    def plan(
        self,
        model_path: PathLike,
        pre_path: PathLike,
        target_path: PathLike,
        constraints_path: PathLike,
        init: LaserConfig,
        opts: SolverOpts | None = None,
        out_path: PathLike | None = None,
    ) -> tuple[PlanSolution, PlanSolutionDTO]:
        """Solve for the configuration aligning the predicted and target surfaces.

        Raises:
            CardinalityMismatch: When the surfaces differ in size.
            InfeasibleStart: When the constraints or the initial guess are infeasible.
        """
        with _reraise_as("plan the laser configuration"):
            problem = PlanProblem(
                pre_surface=self._store.load_surface(pre_path),
                target_surface=self._store.load_surface(target_path),
                model=self._store.load_model(model_path),
                constraints=self._store.load_constraints(constraints_path),
                standoff=self._standoff,
            )
            solution = plan_solve(problem, init, opts)
            dto = PlanSolutionDTO.from_domain(solution)
            if out_path is not None:
                self._store.save_report(dto, out_path)
            return solution, dto

    def evaluate(
        self,
        model_path: PathLike,
        cfg: LaserConfig,
        gt_surface_path: PathLike,
        frame: str = AUTO_FRAME,
        radius: float = 1.0,
        resolution: int = 64,
        out_path: PathLike | None = None,
        cells_path: PathLike | None = None,
        method: str = "linear",
    ) -> tuple[VolumetricReport, VolumetricReportDTO]:
        """Compare the predicted cavity with a measured one over the ROI disc.

        Args:
            frame: "auto" to fit the reference plane on the surface outside
                the ROI, or a path to a frame JSON file.

        Raises:
            SparseCoverage: When the measured surface does not cover the ROI.
            ZeroGroundTruth: When the measured cavity has zero volume.
        """
        with _reraise_as("evaluate the cavity"):
            model = self._store.load_model(model_path)
            surface = self._store.load_surface(gt_surface_path)
            if frame == AUTO_FRAME:
                local_frame = fit_local_frame(
                    surface, ExclusionDisc(center=cfg.center, radius=radius, normal=cfg.direction)
                )
            else:
                local_frame = self._store.load_report(frame, FrameDTO).to_domain()

            grid = sample_roi(incident_plane(cfg, self._standoff), radius, resolution)
            predicted = predicted_depth_field(model, grid)
            gt = measured_depth_field(surface, local_frame, grid, method)
            report = compare_cavities(predicted, gt, grid)
            dto = VolumetricReportDTO.from_domain(report)
            if out_path is not None:
                self._store.save_report(dto, out_path)
            if cells_path is not None:
                self._store.write_rows(cells_path, DEPTH_CELL_COLUMNS, depth_cells(grid, predicted, gt))
            return report, dto

    def generate(
        self,
        profile: BeamProfile,
        cfg: LaserConfig,
        out_dir: PathLike,
        noise_sigma: float = 0.0,
        seed: int = 0,
        grid_points: int = 61,
        half_width: float = 1.5,
        cavities: int = 4,
        points_per_cavity: int = 660,
        surface_format: str = "csv",
    ) -> GeneratedCase:
        """Write a synthetic shot and a regression dataset from a beam profile.

        The last of the dataset's cavities is held out as the test split.
        """
        with _reraise_as("generate synthetic data"):
            out = Path(out_dir)
            pre = planar_grid_surface(half_width, grid_points, z=float(cfg.center[2]))
            post, _ = generate_cavity(profile, cfg, pre, noise_sigma, seed, self._standoff)
            dataset = build_dataset(
                synthetic_cavities(
                    profile, cavities, points_per_cavity, noise_sigma, seed, self._standoff
                ),
                test_cavities=(cavities - 1,),
                seed=seed,
            )
            case = GeneratedCase(
                pre_surface=out / f"pre.{surface_format}",
                post_surface=out / f"post.{surface_format}",
                config=out / "config.json",
                profile=out / "profile.json",
                dataset=out / "dataset.json",
            )
            self._store.save_surface(pre, case.pre_surface)
            self._store.save_surface(post, case.post_surface)
            self._store.save_report(
                LaserConfigFileDTO(config=LaserConfigDTO.from_domain(cfg), standoff=self._standoff),
                case.config,
            )
            self._store.save_profile(profile, case.profile)
            self._store.save_dataset(
                dataset,
                case.dataset,
                provenance={
                    "profile": profile.name or profile.kind,
                    "noise_sigma": noise_sigma,
                    "seed": seed,
                    "test_cavities": [cavities - 1],
                },
            )
            return case
