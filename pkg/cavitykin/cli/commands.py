"""Subcommands of the cavitykin command line.

Machine output (JSON) goes to stdout, diagnostics to stderr. Library and
I/O errors are mapped to exit codes in `handle_errors`, the one place that
knows about them.
"""

import functools
import json
import logging
from collections.abc import Callable
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import click
import numpy as np
import pydantic

from cavitykin.cli.dependencies import (
    get_experiment_service,
    get_pipeline_service,
    get_settings,
    get_store,
)
from cavitykin.domain.models import LaserConfig, SolverOpts
from cavitykin.domain.slp import FitConfig
from cavitykin.domain.synth import BeamProfile
from cavitykin.exceptions import CavityKinError

logger = logging.getLogger(__name__)

EXIT_INPUT_ERROR = 1
EXIT_NOT_CONVERGED = 2
UNIT_TOLERANCE = 1e-9


@dataclass(frozen=True)
class GlobalOptions:
    seed: int
    output_dir: Path
    fmt: str

    def default_path(self, name: str) -> Path:
        return self.output_dir / name


def handle_errors(func: Callable[..., Any]) -> Callable[..., Any]:
    """Report library, validation and I/O errors on stderr with exit code 1."""

    @functools.wraps(func)
    def wrapper(*args: Any, **kwargs: Any) -> Any:
        try:
            return func(*args, **kwargs)
        except CavityKinError as e:
            click.echo(f"Error: {e.message}", err=True)
        except pydantic.ValidationError as e:
            click.echo(f"Error: invalid input: {e}", err=True)
        except OSError as e:
            click.echo(f"Error: {e}", err=True)
        click.get_current_context().exit(EXIT_INPUT_ERROR)

    return wrapper


def parse_config(ctx: click.Context, param: click.Parameter, value: str | None) -> LaserConfig | None:
    """Parse "cx,cy,cz,vx,vy,vz"; a non-unit direction is normalized with a warning."""
    if value is None:
        return None
    try:
        numbers = [float(part) for part in value.split(",")]
    except ValueError:
        raise click.BadParameter(f"'{value}' is not a list of numbers")
    if len(numbers) != 6 or not np.all(np.isfinite(numbers)):
        raise click.BadParameter("expected six finite numbers: cx,cy,cz,vx,vy,vz")
    norm = float(np.linalg.norm(numbers[3:]))
    if norm == 0.0:
        raise click.BadParameter("the direction must be non-zero")
    if abs(norm - 1.0) > UNIT_TOLERANCE:
        click.echo(
            f"Warning: non-unit direction (norm {norm:.6g}) for --{param.name}; normalizing",
            err=True,
        )
    return LaserConfig.from_vector(numbers)


def _emit(dto: pydantic.BaseModel) -> None:
    click.echo(dto.model_dump_json(indent=2))


def _seed(options: GlobalOptions, seed: int | None) -> int:
    return options.seed if seed is None else seed


def _solver_opts(restarts: int, method: str, seed: int) -> SolverOpts:
    settings = get_settings()
    return SolverOpts(
        tol=settings.SOLVER_TOL,
        max_iterations=settings.SOLVER_MAX_ITERATIONS,
        method=method,
        restarts=restarts,
        seed=seed,
        standoff=settings.STANDOFF,
    )


existing_file = click.Path(exists=True, dir_okay=False, path_type=Path)
output_file = click.Path(dir_okay=False, path_type=Path)


@click.command()
@click.option("--dataset", required=True, type=existing_file, help="Regression dataset JSON.")
@click.option("--out", "out", type=output_file, default=None, help="Model JSON to write.")
@click.option("--report", type=output_file, default=None, help="Fit report JSON to write.")
@click.option("--restarts", type=click.IntRange(min=1), default=None, help="Random restarts.")
@click.option("--max-iterations", type=click.IntRange(min=1), default=None)
@click.option("--seed", type=int, default=None, help="Overrides the global seed.")
@click.pass_obj
@handle_errors
def fit(
    options: GlobalOptions,
    dataset: Path,
    out: Path | None,
    report: Path | None,
    restarts: int | None,
    max_iterations: int | None,
    seed: int | None,
) -> None:
    """Fit the depth-of-cut perceptron on a dataset."""
    settings = get_settings()
    config = FitConfig(
        seed=_seed(options, seed),
        restarts=restarts or settings.FIT_RESTARTS,
        max_iterations=max_iterations or settings.FIT_MAX_ITERATIONS,
    )
    _, fit_report, dto = get_pipeline_service().fit(
        dataset,
        out or options.default_path("model.json"),
        config,
        report or options.default_path("fit_report.json"),
    )
    _emit(dto)
    if not fit_report.converged:
        click.echo("Warning: training stopped at the iteration limit", err=True)
        click.get_current_context().exit(EXIT_NOT_CONVERGED)


@click.command()
@click.option("--model", required=True, type=existing_file, help="Model JSON.")
@click.option("--surface", required=True, type=existing_file, help="Pre-ablation surface.")
@click.option("--config", "cfg", required=True, callback=parse_config, help="cx,cy,cz,vx,vy,vz")
@click.option("--out", "out", type=output_file, default=None, help="Predicted surface to write.")
@click.pass_obj
@handle_errors
def predict(
    options: GlobalOptions, model: Path, surface: Path, cfg: LaserConfig, out: Path | None
) -> None:
    """Predict the post-ablation surface of one laser shot."""
    out = out or options.default_path(f"predicted.{options.fmt}")
    post = get_pipeline_service().predict(model, surface, cfg, out)
    click.echo(json.dumps({"points": len(post), "path": out.as_posix()}, indent=2))


@click.command()
@click.option("--model", required=True, type=existing_file)
@click.option("--pre", required=True, type=existing_file, help="Pre-ablation surface.")
@click.option("--target", required=True, type=existing_file, help="Target surface.")
@click.option("--constraints", required=True, type=existing_file, help="Constraints JSON.")
@click.option("--init", "init", required=True, callback=parse_config, help="cx,cy,cz,vx,vy,vz")
@click.option("--restarts", type=click.IntRange(min=0), default=0, show_default=True)
@click.option(
    "--method",
    type=click.Choice(["projected-lbfgs", "interior-point"]),
    default="projected-lbfgs",
    show_default=True,
)
@click.option("--out", "out", type=output_file, default=None, help="Solution JSON to write.")
@click.pass_obj
@handle_errors
def plan(
    options: GlobalOptions,
    model: Path,
    pre: Path,
    target: Path,
    constraints: Path,
    init: LaserConfig,
    restarts: int,
    method: str,
    out: Path | None,
) -> None:
    """Solve for the laser configuration that carves the target surface."""
    solution, dto = get_pipeline_service().plan(
        model,
        pre,
        target,
        constraints,
        init,
        _solver_opts(restarts, method, options.seed),
        out or options.default_path("plan.json"),
    )
    _emit(dto)
    if not solution.converged:
        click.echo("Warning: planner did not converge", err=True)
        click.get_current_context().exit(EXIT_NOT_CONVERGED)


@click.command()
@click.option("--model", required=True, type=existing_file)
@click.option("--config", "cfg", required=True, callback=parse_config, help="cx,cy,cz,vx,vy,vz")
@click.option("--gt-surface", required=True, type=existing_file, help="Measured cavity surface.")
@click.option("--frame", default="auto", show_default=True, help="'auto' or a frame JSON file.")
@click.option("--radius", type=click.FloatRange(min=0, min_open=True), default=None)
@click.option("--resolution", type=click.IntRange(min=8), default=None, help="Cells per mm.")
@click.option("--method", type=click.Choice(["linear", "nearest"]), default="linear")
@click.option("--out", "out", type=output_file, default=None, help="Report JSON to write.")
@click.option("--cells", type=output_file, default=None, help="Per-cell depth CSV to write.")
@click.pass_obj
@handle_errors
def evaluate(
    options: GlobalOptions,
    model: Path,
    cfg: LaserConfig,
    gt_surface: Path,
    frame: str,
    radius: float | None,
    resolution: int | None,
    method: str,
    out: Path | None,
    cells: Path | None,
) -> None:
    """Volumetric over-cut, under-cut and 3D-cavity-IoU against a measured cavity."""
    settings = get_settings()
    if frame != "auto" and not Path(frame).is_file():
        raise click.BadParameter(f"'{frame}' is neither 'auto' nor an existing file", param_hint="--frame")
    _, dto = get_pipeline_service().evaluate(
        model,
        cfg,
        gt_surface,
        frame=frame,
        radius=radius or settings.ROI_RADIUS,
        resolution=resolution or settings.ROI_RESOLUTION,
        out_path=out or options.default_path("evaluation.json"),
        cells_path=cells,
        method=method,
    )
    _emit(dto)


@click.command()
@click.option("--plan", "plan_path", required=True, type=existing_file, help="Experiment plan JSON.")
@click.option("--profile", required=True, type=existing_file, help="Beam profile(s) JSON.")
@click.option("--workers", type=click.IntRange(min=1), default=None)
@click.option("--model", type=existing_file, default=None, help="Shared model; fitted per profile if absent.")
@click.option("--constraints", type=existing_file, default=None, help="Constraints JSON.")
@click.pass_obj
@handle_errors
def simulate(
    options: GlobalOptions,
    plan_path: Path,
    profile: Path,
    workers: int | None,
    model: Path | None,
    constraints: Path | None,
) -> None:
    """Run the planning success-rate sweep."""
    settings = get_settings()
    fit_config = FitConfig(
        seed=options.seed,
        restarts=settings.FIT_RESTARTS,
        max_iterations=settings.FIT_MAX_ITERATIONS,
    )
    _, dto = get_experiment_service().simulate(
        plan_path,
        profile,
        options.output_dir,
        workers=workers or settings.WORKERS,
        model_path=model,
        constraints_path=constraints,
        opts=_solver_opts(0, "projected-lbfgs", options.seed),
        fit_config=fit_config,
    )
    _emit(dto)


@click.command()
@click.option("--profile", type=existing_file, default=None, help="Beam profile JSON.")
@click.option("--amplitude", type=click.FloatRange(min=0), default=0.12, show_default=True)
@click.option("--width", type=click.FloatRange(min=0, min_open=True), default=0.3, show_default=True)
@click.option("--kind", type=click.Choice(["gaussian", "skewed"]), default="gaussian", show_default=True)
@click.option("--config", "cfg", default="0,0,0,0,0,-1", callback=parse_config, show_default=True)
@click.option("--noise", type=click.FloatRange(min=0), default=0.0, show_default=True, help="Depth noise sigma (mm).")
@click.option("--grid-points", type=click.IntRange(min=2), default=61, show_default=True)
@click.option("--half-width", type=click.FloatRange(min=0, min_open=True), default=1.5, show_default=True)
@click.option("--seed", type=int, default=None, help="Overrides the global seed.")
@click.pass_obj
@handle_errors
def generate(
    options: GlobalOptions,
    profile: Path | None,
    amplitude: float,
    width: float,
    kind: str,
    cfg: LaserConfig,
    noise: float,
    grid_points: int,
    half_width: float,
    seed: int | None,
) -> None:
    """Write a synthetic shot (pre/post surfaces, config) and a regression dataset."""
    if profile is not None:
        beam = get_store().load_profiles(profile)[0]
    else:
        beam = BeamProfile(amplitude=amplitude, width=width, kind=kind)
    case = get_pipeline_service().generate(
        beam,
        cfg,
        options.output_dir,
        noise_sigma=noise,
        seed=_seed(options, seed),
        grid_points=grid_points,
        half_width=half_width,
        surface_format=options.fmt,
    )
    click.echo(json.dumps({name: path.as_posix() for name, path in vars(case).items()}, indent=2))
