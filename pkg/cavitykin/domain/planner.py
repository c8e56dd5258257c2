"""Surface-alignment laser planning.

Finds the single laser configuration whose predicted cavity best matches a
target surface, F = sum_k C_k, with correspondences given by shared row index.
"""

import logging
from dataclasses import dataclass, replace

import numpy as np

from cavitykin.domain.geometry import DEFAULT_STANDOFF
from cavitykin.domain.kinematics import point_costs_and_gradients, solve_alignment
from cavitykin.domain.models import (
    DepthModel,
    IkConstraints,
    LaserConfig,
    SolverOpts,
    Surface,
    Vector,
)
from cavitykin.exceptions import CardinalityMismatch, MaxIterations

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class PlanProblem:
    """Pre-ablation surface, target surface and the model/constraints to align them."""

    pre_surface: Surface
    target_surface: Surface
    model: DepthModel
    constraints: IkConstraints
    standoff: float = DEFAULT_STANDOFF

    def __post_init__(self) -> None:
        if len(self.pre_surface) != len(self.target_surface):
            raise CardinalityMismatch(len(self.pre_surface), len(self.target_surface))


@dataclass(frozen=True, eq=False)
class PlanSolution:
    """Planned configuration with its total and per-point alignment costs."""

    config: LaserConfig
    total_cost: float
    per_point_costs: Vector
    converged: bool
    iterations: int
    kkt_residual: float = 0.0

    def raise_for_status(self) -> None:
        if not self.converged:
            raise MaxIterations(
                f"Planner stopped after {self.iterations} iterations "
                f"(cost {self.total_cost:.3g} mm^2)"
            )


def plan_cost(problem: PlanProblem, cfg: LaserConfig) -> tuple[float, Vector]:
    """Total alignment cost and per-point costs in index order (mm^2)."""
    costs, _, _ = point_costs_and_gradients(
        cfg.as_vector(),
        problem.model,
        problem.pre_surface.points,
        problem.target_surface.points,
        problem.standoff,
    )
    return float(np.sum(costs)), costs


def plan_gradient(problem: PlanProblem, cfg: LaserConfig) -> Vector:
    """Sum of the per-point cost gradients w.r.t. (p^c, v^c), in index order."""
    _, gradients, _ = point_costs_and_gradients(
        cfg.as_vector(),
        problem.model,
        problem.pre_surface.points,
        problem.target_surface.points,
        problem.standoff,
    )
    return gradients.sum(axis=0)


def plan_solve(
    problem: PlanProblem, init: LaserConfig, opts: SolverOpts | None = None
) -> PlanSolution:
    """Constrained local minimizer of plan_cost from an initial configuration.

    Args:
        problem: Surfaces, model and constraints.
        init: Initial guess; projected onto the boxes and the z-plane.
        opts: Solver options. The problem's standoff takes precedence.

    Returns:
        The planned configuration; converged when the KKT residual is below opts.tol.

    Raises:
        InfeasibleStart: If the initial guess cannot be projected onto the boxes.
    """
    opts = opts or SolverOpts()
    if opts.standoff != problem.standoff:
        opts = replace(opts, standoff=problem.standoff)
    logger.info("Planning over %d correspondences", len(problem.pre_surface))
    result = solve_alignment(
        problem.model,
        problem.pre_surface.points,
        problem.target_surface.points,
        problem.constraints,
        init,
        opts,
    )
    logger.info(
        "Plan finished: cost %.3e mm^2 after %d iterations (converged=%s)",
        result.cost, result.iterations, result.converged,
    )
    return PlanSolution(
        config=result.config,
        total_cost=float(np.sum(result.per_point_costs)),
        per_point_costs=result.per_point_costs,
        converged=result.converged,
        iterations=result.iterations,
        kkt_residual=result.kkt_residual,
    )
