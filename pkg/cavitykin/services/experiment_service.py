"""Planning experiment service.

Runs the success-rate sweep: every (ground truth, initial guess) case of an
experiment plan is planned independently, optionally across worker
processes, and the records are assembled in case-id order so the outcome
does not depend on the worker count.
"""

import logging
from concurrent.futures import ProcessPoolExecutor
from functools import partial
from pathlib import Path

from cavitykin.domain.dtos import SuccessTableDTO
from cavitykin.domain.models import DepthModel, IkConstraints, SolverOpts
from cavitykin.domain.postprocess import build_dataset
from cavitykin.domain.slp import FitConfig, SlpModel, fit_slp
from cavitykin.domain.synth import (
    BeamProfile,
    CaseRecord,
    ExperimentPlan,
    SuccessReport,
    SuccessTable,
    experiment_cases,
    run_case,
    synthetic_cavities,
)
from cavitykin.exceptions import CavityKinError
from cavitykin.ports.store import ArtifactStore, PathLike

logger = logging.getLogger(__name__)

CASE_COLUMNS = (
    "case_id",
    "gt_cx", "gt_cy", "gt_cz", "gt_vx", "gt_vy", "gt_vz",
    "init_cx", "init_cy", "init_cz", "init_vx", "init_vy", "init_vz",
    "final_cx", "final_cy", "final_cz", "final_vx", "final_vy", "final_vz",
    "cost", "iterations", "converged", "error", "status", "success",
)


def case_row(record: CaseRecord) -> list:
    """Flatten a case record into CASE_COLUMNS order."""
    return [
        record.case_id,
        *record.gt.as_vector().tolist(),
        *record.init.as_vector().tolist(),
        *record.final.as_vector().tolist(),
        record.cost,
        record.iterations,
        record.converged,
        record.error,
        record.status,
        record.success,
    ]


def run_planning_experiment(
    plan: ExperimentPlan,
    profile: BeamProfile,
    model: DepthModel,
    constraints: IkConstraints | None = None,
    opts: SolverOpts | None = None,
    workers: int = 1,
) -> SuccessReport:
    """Plan every case of the experiment and report the success rate.

    Failed cases are recorded, never raised. Each case derives its seed from
    (plan.seed, case id), so the report is identical for any worker count.
    """
    cases = experiment_cases(plan)
    task = partial(
        run_case, plan=plan, profile=profile, model=model, constraints=constraints, opts=opts
    )
    logger.info(
        "Running %d planning cases for profile '%s' on %d worker(s)",
        len(cases), profile.name or profile.kind, workers,
    )
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as executor:
            records = list(executor.map(task, cases, chunksize=max(1, len(cases) // (4 * workers))))
    else:
        records = [task(case) for case in cases]

    report = SuccessReport(
        profile=profile.name or profile.kind,
        records=tuple(sorted(records, key=lambda record: record.case_id)),
        seed=plan.seed,
    )
    failures = report.cases - report.successes
    if failures:
        logger.warning("%d of %d cases did not reach the ground truth", failures, report.cases)
    logger.info("Success rate %.2f%% for profile '%s'", report.rate, report.profile)
    return report


def fit_profile_model(profile: BeamProfile, seed: int = 0, config: FitConfig | None = None) -> SlpModel:
    """Fit a perceptron on noiseless synthetic cavities of the profile."""
    dataset = build_dataset(synthetic_cavities(profile, seed=seed), test_cavities=(3,), seed=seed)
    model, report = fit_slp(dataset, config or FitConfig(seed=seed))
    logger.info("Profile '%s' model: test RMSE %.4g mm", profile.name or profile.kind, report.rmse)
    return model


class ExperimentService:
    """Application service for planning success-rate sweeps."""

    def __init__(self, store: ArtifactStore) -> None:
        """Initialize the service.

        Args:
            store: The artifact store implementation for all reads and writes.
        """
        self._store = store

    def simulate(
        self,
        plan_path: PathLike,
        profile_path: PathLike,
        out_dir: PathLike,
        workers: int = 1,
        model_path: PathLike | None = None,
        constraints_path: PathLike | None = None,
        opts: SolverOpts | None = None,
        fit_config: FitConfig | None = None,
    ) -> tuple[SuccessTable, SuccessTableDTO]:
        """Sweep every profile in the profile file and write the results.

        Without a model file each profile gets a perceptron fitted on its
        own synthetic cavities. Writes summary.json and cases_<profile>.csv.
        """
        try:
            plan = self._store.load_plan(plan_path)
            profiles = self._store.load_profiles(profile_path)
            shared_model = self._store.load_model(model_path) if model_path else None
            constraints = (
                self._store.load_constraints(constraints_path) if constraints_path else None
            )
            reports = []
            for index, profile in enumerate(profiles):
                model = shared_model or fit_profile_model(profile, plan.seed, fit_config)
                report = run_planning_experiment(plan, profile, model, constraints, opts, workers)
                label = profile.name or f"{profile.kind}{index}"
                self._store.write_rows(
                    Path(out_dir) / f"cases_{label}.csv",
                    CASE_COLUMNS,
                    (case_row(record) for record in report.records),
                )
                reports.append(report)
            table = SuccessTable(reports=tuple(reports))
            dto = SuccessTableDTO.from_domain(table)
            self._store.save_report(dto, Path(out_dir) / "summary.json")
            return table, dto
        except (CavityKinError, OSError):
            raise
        except Exception as e:
            raise CavityKinError(f"Failed to run the planning experiment: {str(e)}", e) from e
