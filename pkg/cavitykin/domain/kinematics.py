"""Forward and inverse kinematics of a one-shot laser ablation.

Forward kinematics moves every pre-ablation point along the beam by the
predicted depth-of-cut, q = p + f(s) v^c. Inverse kinematics recovers the
configuration that drives points onto targets, under the constraints

    center z = plane_z                      (eliminated variable)
    center x, y inside center_box           (bounds)
    unit direction components in direction_box (bounds)

The direction is optimized as a free 3-vector normalized inside the
objective, so the reported configuration always carries a unit direction.
The boxes bound the raw vector during that search; when the normalized
result leaves direction_box the solve continues on the unit sphere, with
|u| = 1 as an equality constraint so the bounds apply to the direction itself.
"""

import logging
from dataclasses import dataclass

import numpy as np
import numpy.typing as npt
from scipy.optimize import BFGS, Bounds, NonlinearConstraint, minimize
from scipy.spatial.transform import Rotation

from cavitykin.domain.geometry import (
    DEFAULT_STANDOFF,
    distance_to_laser_center,
    incident_plane,
    projection_jacobians,
    radial_gradient,
)
from cavitykin.domain.models import (
    DepthModel,
    IkConstraints,
    LaserConfig,
    SolverOpts,
    Surface,
    Vector,
)
from cavitykin.exceptions import InfeasibleStart, MaxIterations, SingularGradient

logger = logging.getLogger(__name__)

MIN_DIRECTION_NORM = 1e-12
RESTART_POSITION_BOUND = 0.5
RESTART_ANGLE_BOUND = 15.0
BOX_TOLERANCE = 1e-12
SPHERE_HESSIAN = np.diag([0.0, 0.0, 2.0, 2.0, 2.0])


def fk_point(
    cfg: LaserConfig, model: DepthModel, p: npt.ArrayLike, standoff: float = DEFAULT_STANDOFF
) -> Vector:
    """Predicted post-ablation position(s) of pre-ablation point(s) p."""
    p = np.asarray(p, dtype=np.float64)
    s = distance_to_laser_center(p, incident_plane(cfg, standoff))
    d = np.asarray(model.depth(s), dtype=np.float64)
    return p + np.multiply.outer(d, cfg.direction)


def fk_surface(
    cfg: LaserConfig, model: DepthModel, pre: Surface, standoff: float = DEFAULT_STANDOFF
) -> Surface:
    """Predicted cavity: fk_point applied row by row, indices preserved."""
    return Surface(fk_point(cfg, model, pre.points, standoff))


def ik_cost(
    cfg: LaserConfig,
    model: DepthModel,
    p: npt.ArrayLike,
    target: npt.ArrayLike,
    standoff: float = DEFAULT_STANDOFF,
) -> float:
    """Squared distance between the predicted point and its target (mm^2)."""
    q = fk_point(cfg, model, p, standoff)
    return float(np.sum((q - np.asarray(target, dtype=np.float64)) ** 2))


def point_costs_and_gradients(
    x: npt.ArrayLike,
    model: DepthModel,
    points: npt.ArrayLike,
    targets: npt.ArrayLike,
    standoff: float = DEFAULT_STANDOFF,
) -> tuple[Vector, Vector, npt.NDArray[np.bool_]]:
    """Per-point costs and analytic gradients at a raw 6-vector X = (p^c, v^c).

    The direction part of x is used exactly as given, so the gradient is the
    derivative of this function and can be checked by finite differences on
    the raw components. Chain rule per point:

        dC/dx = 2 (q - q*)^T (v dd/dx + d dv/dx)
        dd/dx = f'(s) (ds/dp_proj) (dp_proj/dx - dp^o/dx)

    Args:
        x: (cx, cy, cz, vx, vy, vz).
        model: Depth model providing depth(s) and depth_slope(s).
        points: Pre-ablation points, shape (M, 3).
        targets: Target points, shape (M, 3).
        standoff: L_ref in mm.

    Returns:
        (costs of shape (M,), gradients of shape (M, 6), singular mask of shape (M,)).
        Singular points (projection at the laser origin) carry a zero
        depth sub-gradient.
    """
    x = np.asarray(x, dtype=np.float64)
    center, v = x[:3], x[3:6]
    points = np.atleast_2d(np.asarray(points, dtype=np.float64))
    targets = np.atleast_2d(np.asarray(targets, dtype=np.float64))

    origin = center - standoff * v
    proj, dproj_dcenter, dproj_ddirection = projection_jacobians(points, center, v, standoff)
    s, ds_dproj, singular = radial_gradient(proj, origin)

    d = np.asarray(model.depth(s), dtype=np.float64)
    slope = np.asarray(model.depth_slope(s), dtype=np.float64)
    delta = points + np.multiply.outer(d, v) - targets
    costs = np.einsum("mi,mi->m", delta, delta)

    ds_dcenter = ds_dproj @ (dproj_dcenter - np.eye(3))
    ds_ddirection = np.einsum("mi,mij->mj", ds_dproj, dproj_ddirection + standoff * np.eye(3))
    along = 2.0 * (delta @ v) * slope
    grad_center = along[:, None] * ds_dcenter
    grad_direction = along[:, None] * ds_ddirection + 2.0 * d[:, None] * delta
    return costs, np.hstack([grad_center, grad_direction]), singular


def ik_cost_at(
    x: npt.ArrayLike,
    model: DepthModel,
    p: npt.ArrayLike,
    target: npt.ArrayLike,
    standoff: float = DEFAULT_STANDOFF,
) -> float:
    """Cost as a function of the raw 6-vector (direction not normalized)."""
    costs, _, _ = point_costs_and_gradients(x, model, p, target, standoff)
    return float(costs.sum())


def ik_cost_gradient(
    cfg: LaserConfig,
    model: DepthModel,
    p: npt.ArrayLike,
    target: npt.ArrayLike,
    standoff: float = DEFAULT_STANDOFF,
    strict: bool = False,
) -> tuple[Vector, bool]:
    """Gradient of ik_cost w.r.t. (p^c, v^c).

    Returns:
        The 6-vector [dC/dp^c; dC/dv^c] and a flag set when p projects onto
        the laser origin (zero sub-gradient used for the depth term).

    Raises:
        SingularGradient: With strict=True, instead of flagging.
    """
    _, gradients, singular = point_costs_and_gradients(
        cfg.as_vector(), model, p, target, standoff
    )
    flagged = bool(singular.any())
    if flagged and strict:
        raise SingularGradient("Point projects onto the laser origin; ds/dp_proj is undefined")
    return gradients.sum(axis=0), flagged


@dataclass(frozen=True, eq=False)
class IkSolution:
    """Result of a constrained inverse-kinematics solve."""

    config: LaserConfig
    final_cost: float
    iterations: int
    converged: bool
    kkt_residual: float

    def raise_for_status(self) -> None:
        if not self.converged:
            raise MaxIterations(
                f"Solver stopped after {self.iterations} iterations "
                f"(KKT residual {self.kkt_residual:.3g})"
            )


@dataclass(frozen=True, eq=False)
class AlignmentResult:
    """Raw outcome of the shared alignment solver."""

    config: LaserConfig
    cost: float
    per_point_costs: Vector
    iterations: int
    converged: bool
    kkt_residual: float


class _ReducedObjective:
    """Alignment cost over y = (cx, cy, ux, uy, uz) with cz fixed."""

    def __init__(
        self,
        model: DepthModel,
        points: Vector,
        targets: Vector,
        plane_z: float,
        standoff: float,
    ) -> None:
        self.model = model
        self.points = points
        self.targets = targets
        self.plane_z = plane_z
        self.standoff = standoff

    def full_vector(self, y: Vector) -> Vector:
        u = y[2:5]
        return np.array([y[0], y[1], self.plane_z, *(u / np.linalg.norm(u))])

    def per_point(self, x: Vector) -> Vector:
        """Per-point costs at a full 6-vector configuration."""
        costs, _, _ = point_costs_and_gradients(
            x, self.model, self.points, self.targets, self.standoff
        )
        return costs

    def __call__(self, y: Vector) -> tuple[float, Vector]:
        u = y[2:5]
        norm = float(np.linalg.norm(u))
        n = u / norm
        x = np.array([y[0], y[1], self.plane_z, *n])
        costs, gradients, _ = point_costs_and_gradients(
            x, self.model, self.points, self.targets, self.standoff
        )
        g = gradients.sum(axis=0)
        g_u = (g[3:6] - n * float(n @ g[3:6])) / norm
        return float(costs.sum()), np.array([g[0], g[1], *g_u])


def kkt_residual(y: Vector, gradient: Vector, lower: Vector, upper: Vector) -> float:
    """First-order stationarity on a box: ||y - P(y - grad)||_inf."""
    return float(np.max(np.abs(y - np.clip(y - gradient, lower, upper))))


def _project_start(init: LaserConfig, lower: Vector, upper: Vector) -> Vector:
    y = np.clip(
        np.array([init.center[0], init.center[1], *init.direction]), lower, upper
    )
    if np.linalg.norm(y[2:5]) < MIN_DIRECTION_NORM:
        raise InfeasibleStart("Projecting the initial direction onto its box gives a zero vector")
    return y


def _perturbed(init: LaserConfig, rng: np.random.Generator) -> LaserConfig:
    offset = rng.uniform(-RESTART_POSITION_BOUND, RESTART_POSITION_BOUND, size=2)
    angles = rng.uniform(-RESTART_ANGLE_BOUND, RESTART_ANGLE_BOUND, size=2)
    rotation = Rotation.from_euler("x", angles[0], degrees=True) * Rotation.from_euler(
        "y", angles[1], degrees=True
    )
    center = init.center + np.array([offset[0], offset[1], 0.0])
    return LaserConfig(center=center, direction=rotation.apply(init.direction))


def _direction_overshoot(y: Vector, lower: Vector, upper: Vector) -> float:
    """How far the normalized direction of y lies outside its box."""
    n = y[2:5] / np.linalg.norm(y[2:5])
    return float(max(np.max(lower[2:] - n), np.max(n - upper[2:]), 0.0))


def _unit_direction_in_box(u: Vector, lower: Vector, upper: Vector) -> Vector:
    """Normalize u, pin components past their bounds and rescale the rest to unit length."""
    n = u / np.linalg.norm(u)
    pinned = (n < lower) | (n > upper)
    if not pinned.any():
        return n
    n = np.clip(n, lower, upper)
    remaining = 1.0 - float(n[pinned] @ n[pinned])
    free_norm2 = float(n[~pinned] @ n[~pinned])
    if remaining > 0.0 and free_norm2 > 0.0:
        n[~pinned] *= np.sqrt(remaining / free_norm2)
    return n


def _solve_on_sphere(
    objective: _ReducedObjective,
    y: Vector,
    lower: Vector,
    upper: Vector,
    opts: SolverOpts,
) -> tuple[Vector, int, float]:
    """Continue from y with |u| = 1 enforced, so the direction box binds the unit direction."""
    start = y.copy()
    start[2:5] = np.clip(y[2:5] / np.linalg.norm(y[2:5]), lower[2:], upper[2:])
    unit_norm = NonlinearConstraint(
        lambda v: float(v[2:5] @ v[2:5]),
        1.0,
        1.0,
        jac=lambda v: np.concatenate([[0.0, 0.0], 2.0 * v[2:5]]),
        hess=lambda v, multipliers: multipliers[0] * SPHERE_HESSIAN,
    )
    result = minimize(
        objective,
        start,
        jac=True,
        method="trust-constr",
        hess=BFGS(),
        bounds=Bounds(lower, upper, keep_feasible=True),
        constraints=[unit_norm],
        options={"gtol": opts.tol, "xtol": 1e-15, "maxiter": opts.max_iterations},
    )
    residual = max(float(result.optimality), float(result.constr_violation))
    return np.clip(result.x, lower, upper), int(result.nit), residual


def _run_once(
    objective: _ReducedObjective,
    y0: Vector,
    constraints: IkConstraints,
    opts: SolverOpts,
) -> AlignmentResult:
    lower, upper = constraints.reduced_bounds()
    _, gradient = objective(y0)
    residual = kkt_residual(y0, gradient, lower, upper)
    if residual <= opts.tol:
        y, iterations = y0, 0
    elif opts.method == "interior-point":
        result = minimize(
            objective,
            y0,
            jac=True,
            method="trust-constr",
            hess=BFGS(),
            bounds=Bounds(lower, upper, keep_feasible=True),
            options={"gtol": opts.tol, "xtol": 1e-15, "maxiter": opts.max_iterations},
        )
        y, iterations = np.clip(result.x, lower, upper), int(result.nit)
    else:
        result = minimize(
            objective,
            y0,
            jac=True,
            method="L-BFGS-B",
            bounds=list(zip(lower, upper)),
            options={
                "gtol": opts.tol,
                "ftol": 0.0,
                "maxiter": opts.max_iterations,
                "maxcor": 20,
            },
        )
        y, iterations = result.x, int(result.nit)
    if iterations:
        _, gradient = objective(y)
        residual = kkt_residual(y, gradient, lower, upper)
    if _direction_overshoot(y, lower, upper) > BOX_TOLERANCE:
        logger.debug("Normalized direction leaves its box; continuing on the unit sphere")
        y, extra, residual = _solve_on_sphere(objective, y, lower, upper, opts)
        iterations += extra
    x = objective.full_vector(y)
    x[3:6] = _unit_direction_in_box(x[3:6], lower[2:], upper[2:])
    config = LaserConfig.from_vector(x)
    per_point = objective.per_point(config.as_vector())
    return AlignmentResult(
        config=config,
        cost=float(per_point.sum()),
        per_point_costs=per_point,
        iterations=iterations,
        converged=residual <= opts.tol and constraints.contains(config, BOX_TOLERANCE),
        kkt_residual=residual,
    )


def solve_alignment(
    model: DepthModel,
    points: npt.ArrayLike,
    targets: npt.ArrayLike,
    constraints: IkConstraints,
    init: LaserConfig,
    opts: SolverOpts | None = None,
) -> AlignmentResult:
    """Minimize the summed point costs over one laser configuration.

    Shared engine of ik_solve and plan_solve. With opts.restarts > 0,
    additional starts are drawn around the initial guess from a generator
    seeded with opts.seed and the lowest-cost result is kept.

    Raises:
        InfeasibleStart: If the initial guess cannot be projected onto the boxes.
    """
    opts = opts or SolverOpts()
    points = np.atleast_2d(np.asarray(points, dtype=np.float64))
    targets = np.atleast_2d(np.asarray(targets, dtype=np.float64))
    lower, upper = constraints.reduced_bounds()
    objective = _ReducedObjective(model, points, targets, constraints.plane_z, opts.standoff)

    best = _run_once(objective, _project_start(init, lower, upper), constraints, opts)
    rng = np.random.default_rng(opts.seed)
    for restart in range(opts.restarts):
        try:
            start = _project_start(_perturbed(init, rng), lower, upper)
        except InfeasibleStart:
            continue
        candidate = _run_once(objective, start, constraints, opts)
        logger.debug("Restart %d: cost %.3e (best %.3e)", restart, candidate.cost, best.cost)
        if candidate.cost < best.cost:
            best = candidate
    return best


def ik_solve(
    model: DepthModel,
    p: npt.ArrayLike,
    target: npt.ArrayLike,
    constraints: IkConstraints,
    init: LaserConfig,
    opts: SolverOpts | None = None,
) -> IkSolution:
    """Constrained inverse kinematics for a single point.

    Returns:
        A local minimizer with the plane constraint met exactly and the boxes
        met on the center and the unit direction; converged when the KKT
        residual is below opts.tol and the boxes hold within 1e-12.

    Raises:
        InfeasibleStart: If the initial guess cannot be projected onto the boxes.
    """
    result = solve_alignment(model, p, target, constraints, init, opts)
    if not result.converged:
        logger.warning("IK solve stopped with KKT residual %.3g", result.kkt_residual)
    return IkSolution(
        config=result.config,
        final_cost=result.cost,
        iterations=result.iterations,
        converged=result.converged,
        kkt_residual=result.kkt_residual,
    )
