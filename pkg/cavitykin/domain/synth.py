"""Synthetic ground truth: beam profiles, cavities and planning experiments.

A beam profile plays the part of the physical laser. Cavities are generated
by pushing pre-ablation points along the beam by the profile depth, and the
planning experiment sweeps ground-truth orientations against perturbed
initial guesses.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Literal

import numpy as np
import numpy.typing as npt
from scipy.spatial.transform import Rotation

from cavitykin.domain.geometry import (
    DEFAULT_STANDOFF,
    distance_to_laser_center,
    incident_plane,
)
from cavitykin.domain.kinematics import fk_surface
from cavitykin.domain.models import (
    CavitySample,
    DepthModel,
    IkConstraints,
    LaserConfig,
    SolverOpts,
    Surface,
    Vector,
    as_unit,
)
from cavitykin.domain.planner import PlanProblem, plan_solve
from cavitykin.exceptions import CavityKinError, InfeasibleStart

logger = logging.getLogger(__name__)

ProfileKind = Literal["gaussian", "skewed"]
CaseStatus = Literal["success", "failure", "infeasible", "error"]

SUCCESS_THRESHOLD = 1e-5
FOOTPRINT_WIDTHS = 3.0
PLANNING_GRID_POINTS = 31
DEFAULT_TAPER = 0.5
BASE_DIRECTION = (0.0, 0.0, -1.0)
BASE_CENTER = (0.0, 0.0, 0.0)


@dataclass(frozen=True)
class BeamProfile:
    """Radial depth profile of one laser shot.

    "gaussian" is A exp(-s^2 / 2 sigma^2); "skewed" multiplies it by the
    linear radial taper max(0, 1 - taper * s / sigma), giving a crater with
    a sharp rim that no symmetric Gaussian matches.
    """

    amplitude: float
    width: float
    kind: ProfileKind = "gaussian"
    taper: float = DEFAULT_TAPER
    name: str = ""

    def __post_init__(self) -> None:
        if self.amplitude < 0:
            raise ValueError(f"Amplitude must be non-negative, got {self.amplitude}")
        if not self.width > 0:
            raise ValueError(f"Width must be positive, got {self.width}")
        if self.kind not in ("gaussian", "skewed"):
            raise ValueError(f"Unknown profile kind '{self.kind}'")
        if self.taper < 0:
            raise ValueError(f"Taper must be non-negative, got {self.taper}")

    @property
    def footprint_radius(self) -> float:
        """Radius beyond which the crater is negligible (3 sigma)."""
        return FOOTPRINT_WIDTHS * self.width

    def _gaussian(self, s: Vector) -> Vector:
        return self.amplitude * np.exp(-(s**2) / (2.0 * self.width**2))

    def depth(self, s: npt.ArrayLike) -> Vector:
        s = np.abs(np.asarray(s, dtype=np.float64))
        g = self._gaussian(s)
        if self.kind == "gaussian":
            return g
        return g * np.maximum(0.0, 1.0 - self.taper * s / self.width)

    def depth_slope(self, s: npt.ArrayLike) -> Vector:
        s = np.abs(np.asarray(s, dtype=np.float64))
        g = self._gaussian(s)
        dg = -s / self.width**2 * g
        if self.kind == "gaussian":
            return dg
        t = 1.0 - self.taper * s / self.width
        inside = t > 0
        return np.where(inside, dg * t - g * self.taper / self.width, 0.0)


PROFILE_PRESETS: dict[str, BeamProfile] = {
    "low": BeamProfile(amplitude=0.08, width=0.3, name="low"),
    "mid": BeamProfile(amplitude=0.12, width=0.3, name="mid"),
    "high": BeamProfile(amplitude=0.16, width=0.3, name="high"),
}


def planar_grid_surface(half_width: float, points_per_side: int, z: float = 0.0) -> Surface:
    """Square grid of points on the plane z = const, rows in x-major order."""
    axis = np.linspace(-half_width, half_width, points_per_side)
    x, y = np.meshgrid(axis, axis, indexing="ij")
    return Surface(np.column_stack([x.ravel(), y.ravel(), np.full(x.size, float(z))]))


def disc_surface(
    radius: float, count: int, rng: np.random.Generator, z: float = 0.0
) -> Surface:
    """Points drawn uniformly by area over a disc on the plane z = const."""
    r = radius * np.sqrt(rng.uniform(0.0, 1.0, size=count))
    phi = rng.uniform(0.0, 2.0 * np.pi, size=count)
    return Surface(np.column_stack([r * np.cos(phi), r * np.sin(phi), np.full(count, float(z))]))


def generate_cavity(
    profile: DepthModel,
    cfg: LaserConfig,
    pre_surface: Surface,
    noise_sigma: float = 0.0,
    seed: int = 0,
    standoff: float = DEFAULT_STANDOFF,
    cavity_id: int = 0,
) -> tuple[Surface, list[CavitySample]]:
    """Ablate a pre-ablation surface with a beam profile.

    Each point moves along the beam by depth(s) plus Gaussian noise
    (clipped at zero), q = p + d v^c. The emitted samples are aligned with
    the surface rows.
    """
    if noise_sigma < 0:
        raise ValueError(f"Noise sigma must be non-negative, got {noise_sigma}")
    s = np.atleast_1d(distance_to_laser_center(pre_surface.points, incident_plane(cfg, standoff)))
    d = np.asarray(profile.depth(s), dtype=np.float64)
    if noise_sigma > 0:
        rng = np.random.default_rng(seed)
        d = np.maximum(d + rng.normal(0.0, noise_sigma, size=d.shape), 0.0)
    post = Surface(pre_surface.points + np.outer(d, cfg.direction))
    samples = [
        CavitySample(s=float(si), d=float(di), cavity_id=cavity_id, point_index=k)
        for k, (si, di) in enumerate(zip(s, d), start=1)
    ]
    return post, samples


def synthetic_cavities(
    profile: BeamProfile,
    cavities: int = 4,
    points_per_cavity: int = 660,
    noise_sigma: float = 0.0,
    seed: int = 0,
    standoff: float = DEFAULT_STANDOFF,
) -> list[list[CavitySample]]:
    """Regression tuples of several normally-incident cavities on z = 0.

    Each cavity draws its own points over the profile footprint, so the
    cavities differ like repeated shots on a phantom.
    """
    cfg = LaserConfig(center=BASE_CENTER, direction=BASE_DIRECTION)
    out = []
    for cavity_id in range(cavities):
        rng = np.random.default_rng([seed, cavity_id])
        pre = disc_surface(profile.footprint_radius, points_per_cavity, rng)
        _, samples = generate_cavity(
            profile, cfg, pre, noise_sigma, seed=int(rng.integers(2**31)),
            standoff=standoff, cavity_id=cavity_id,
        )
        out.append(samples)
    return out


def xy_rotation(theta_x: float, theta_y: float) -> Rotation:
    """Rx(theta_x) Ry(theta_y), angles in degrees."""
    return Rotation.from_euler("XY", [theta_x, theta_y], degrees=True)


def _angle_grid(values: npt.ArrayLike) -> tuple[tuple[float, float], ...]:
    grid = tuple((float(a), float(b)) for a, b in values)
    if not grid:
        raise ValueError("Angle grids must not be empty")
    return grid


def _square_grid(bound: float, step: float) -> tuple[tuple[float, float], ...]:
    axis = np.arange(-bound, bound + step / 2, step)
    return tuple((float(a), float(b)) for a in axis for b in axis)


@dataclass(frozen=True)
class ExperimentPlan:
    """Ground-truth orientations, initial-guess rotations and position noise.

    One laser center (base_center) is shared by every ground-truth
    orientation.
    """

    gt_angle_grid: tuple[tuple[float, float], ...]
    init_angle_grid: tuple[tuple[float, float], ...]
    position_noise_bound: float = 0.5
    seed: int = 0
    base_center: tuple[float, float, float] = BASE_CENTER
    base_direction: tuple[float, float, float] = BASE_DIRECTION
    grid_points: int = PLANNING_GRID_POINTS
    standoff: float = DEFAULT_STANDOFF

    def __post_init__(self) -> None:
        object.__setattr__(self, "gt_angle_grid", _angle_grid(self.gt_angle_grid))
        object.__setattr__(self, "init_angle_grid", _angle_grid(self.init_angle_grid))
        if self.position_noise_bound < 0:
            raise ValueError("Position noise bound must be non-negative")
        if self.grid_points < 2:
            raise ValueError("The planning grid needs at least 2 points per side")

    @classmethod
    def default(cls, seed: int = 0) -> "ExperimentPlan":
        """25 orientations over [-30, 30]^2 deg and 9 inits over [-15, 15]^2 deg."""
        return cls(
            gt_angle_grid=_square_grid(30.0, 15.0),
            init_angle_grid=_square_grid(15.0, 15.0),
            position_noise_bound=0.5,
            seed=seed,
        )

    @property
    def case_count(self) -> int:
        return len(self.gt_angle_grid) * len(self.init_angle_grid)

    def case_seed(self, case_id: int) -> np.random.SeedSequence:
        return np.random.SeedSequence([self.seed, case_id])

    def pre_surface(self, profile: BeamProfile) -> Surface:
        """Planning surface covering every perturbed footprint at up to 45 deg incidence."""
        half_width = self.position_noise_bound + 4.0 * profile.width / math.cos(math.radians(45.0))
        return planar_grid_surface(half_width, self.grid_points, z=self.base_center[2])


@dataclass(frozen=True)
class ExperimentCase:
    case_id: int
    gt: LaserConfig
    init: LaserConfig


def sample_experiment_configs(
    plan: ExperimentPlan,
    base_direction: npt.ArrayLike | None = None,
    base_center: npt.ArrayLike | None = None,
) -> list[tuple[LaserConfig, list[LaserConfig]]]:
    """Ground-truth configurations, each with its perturbed initial guesses.

    Ground-truth directions are Rx Ry applied to the base direction over the
    ground-truth grid. Every initial guess shifts the center by a uniform
    (dx, dy, 0) within the noise bound, drawn from a generator seeded by
    (plan.seed, case id), and rotates the ground-truth direction by one entry
    of the init grid.
    """
    direction = as_unit(plan.base_direction if base_direction is None else base_direction)
    center = np.asarray(plan.base_center if base_center is None else base_center, dtype=np.float64)
    bound = plan.position_noise_bound
    out = []
    case_id = 0
    for theta_x, theta_y in plan.gt_angle_grid:
        gt = LaserConfig(center=center, direction=xy_rotation(theta_x, theta_y).apply(direction))
        inits = []
        for phi_x, phi_y in plan.init_angle_grid:
            rng = np.random.default_rng(plan.case_seed(case_id))
            dx, dy = rng.uniform(-bound, bound, size=2) if bound > 0 else (0.0, 0.0)
            inits.append(
                LaserConfig(
                    center=gt.center + np.array([dx, dy, 0.0]),
                    direction=xy_rotation(phi_x, phi_y).apply(gt.direction),
                )
            )
            case_id += 1
        out.append((gt, inits))
    return out


def experiment_cases(plan: ExperimentPlan) -> list[ExperimentCase]:
    """Flatten the sampled configurations into numbered cases."""
    cases = []
    for gt, inits in sample_experiment_configs(plan):
        for init in inits:
            cases.append(ExperimentCase(case_id=len(cases), gt=gt, init=init))
    return cases


@dataclass(frozen=True, eq=False)
class CaseRecord:
    """Outcome of one planning case."""

    case_id: int
    gt: LaserConfig
    init: LaserConfig
    final: LaserConfig
    cost: float
    iterations: int
    converged: bool
    status: CaseStatus
    error: float
    message: str = ""

    @property
    def success(self) -> bool:
        return self.status == "success"


@dataclass(frozen=True, eq=False)
class SuccessReport:
    """Success rate of a planning sweep and its per-case records."""

    profile: str
    records: tuple[CaseRecord, ...]
    seed: int = 0
    threshold: float = SUCCESS_THRESHOLD

    @property
    def cases(self) -> int:
        return len(self.records)

    @property
    def successes(self) -> int:
        return sum(1 for record in self.records if record.success)

    @property
    def rate(self) -> float:
        if not self.records:
            return 0.0
        return self.successes / self.cases * 100.0


@dataclass(frozen=True, eq=False)
class SuccessTable:
    """Per-profile success reports and their average rate."""

    reports: tuple[SuccessReport, ...] = field(default_factory=tuple)

    @property
    def average_rate(self) -> float:
        if not self.reports:
            return 0.0
        return float(np.mean([report.rate for report in self.reports]))


def run_case(
    case: ExperimentCase,
    plan: ExperimentPlan,
    profile: BeamProfile,
    model: DepthModel,
    constraints: IkConstraints | None = None,
    opts: SolverOpts | None = None,
) -> CaseRecord:
    """Plan one case: target from FK at the ground truth, solve from the init.

    Solver failures become records; nothing here raises for a bad case.
    """
    constraints = constraints or IkConstraints(plane_z=float(case.gt.center[2]))
    opts = opts or SolverOpts()
    pre = plan.pre_surface(profile)
    target = fk_surface(case.gt, model, pre, plan.standoff)

    def failed(status: CaseStatus, message: str) -> CaseRecord:
        return CaseRecord(
            case_id=case.case_id, gt=case.gt, init=case.init, final=case.init,
            cost=math.nan, iterations=0, converged=False, status=status,
            error=case.init.distance_to(case.gt), message=message,
        )

    if not constraints.contains(case.gt):
        return failed("infeasible", "ground truth violates the constraints")
    seed = int(plan.case_seed(case.case_id).generate_state(1)[0])
    try:
        problem = PlanProblem(pre, target, model, constraints, plan.standoff)
        solution = plan_solve(problem, case.init, SolverOpts(
            tol=opts.tol, max_iterations=opts.max_iterations, method=opts.method,
            restarts=opts.restarts, seed=seed, standoff=plan.standoff,
        ))
    except InfeasibleStart as e:
        return failed("infeasible", e.message)
    except CavityKinError as e:
        logger.warning("Case %d failed: %s", case.case_id, e.message)
        return failed("error", e.message)

    error = solution.config.distance_to(case.gt)
    return CaseRecord(
        case_id=case.case_id,
        gt=case.gt,
        init=case.init,
        final=solution.config,
        cost=solution.total_cost,
        iterations=solution.iterations,
        converged=solution.converged,
        status="success" if error <= SUCCESS_THRESHOLD else "failure",
        error=error,
    )
