"""Tests for surface-alignment planning."""

import itertools

import numpy as np
import pytest

from cavitykin.domain.kinematics import fk_surface, ik_cost, ik_cost_gradient
from cavitykin.domain.models import IkConstraints, LaserConfig, SolverOpts, Surface
from cavitykin.domain.planner import PlanProblem, plan_cost, plan_gradient, plan_solve
from cavitykin.domain.synth import BeamProfile, planar_grid_surface, xy_rotation
from cavitykin.exceptions import CardinalityMismatch, MaxIterations
from tests.conftest import make_model

DOWN = np.array([0.0, 0.0, -1.0])


def _problem(model, gt: LaserConfig, pre: Surface, constraints: IkConstraints | None = None) -> PlanProblem:
    return PlanProblem(
        pre_surface=pre,
        target_surface=fk_surface(gt, model, pre),
        model=model,
        constraints=constraints or IkConstraints(plane_z=float(gt.center[2])),
    )


def _grid_search_minimum(problem: PlanProblem) -> float:
    """Coarse 4-dof sweep over in-plane center offsets and beam tilts."""
    offsets = np.linspace(-0.2, 0.2, 5)
    tilts = np.linspace(-20.0, 20.0, 9)
    best = np.inf
    for cx, cy, tx, ty in itertools.product(offsets, offsets, tilts, tilts):
        cfg = LaserConfig(center=(cx, cy, problem.constraints.plane_z), direction=xy_rotation(tx, ty).apply(DOWN))
        best = min(best, plan_cost(problem, cfg)[0])
    return best


class TestPlanCost:
    """Test suite for plan_cost and plan_gradient."""

    def setup_method(self) -> None:
        """Set up test fixtures."""
        self.model = make_model()
        self.gt = LaserConfig(center=(0.1, -0.1, 0.0), direction=(0.2, 0.1, -1.0))
        self.pre = planar_grid_surface(0.8, 9)

    def test_self_consistent_target_costs_nothing(self) -> None:
        """Test that the model's own prediction is matched at zero cost."""
        total, per_point = plan_cost(_problem(self.model, self.gt, self.pre), self.gt)
        assert total == pytest.approx(0.0, abs=1e-28)
        assert per_point.shape == (81,)

    def test_single_point_reduces_to_ik_cost(self, rng: np.random.Generator) -> None:
        """Test that a one-point plan has the single-point cost and gradient."""
        p, target = rng.normal(scale=0.3, size=3), rng.normal(scale=0.3, size=3)
        problem = PlanProblem(Surface([p]), Surface([target]), self.model, IkConstraints(plane_z=0.0))
        total, _ = plan_cost(problem, self.gt)
        assert total == pytest.approx(ik_cost(self.gt, self.model, p, target), rel=1e-12)
        gradient, _ = ik_cost_gradient(self.gt, self.model, p, target)
        np.testing.assert_allclose(plan_gradient(problem, self.gt), gradient, rtol=1e-12)

    def test_total_is_sum_of_independent_point_costs(self, rng: np.random.Generator) -> None:
        """Test that the total is the sum of per-correspondence costs."""
        pre = Surface(rng.uniform(-0.5, 0.5, size=(30, 3)))
        target = Surface(pre.points + rng.normal(scale=0.05, size=(30, 3)))
        problem = PlanProblem(pre, target, self.model, IkConstraints(plane_z=0.0))
        expected = sum(
            ik_cost(self.gt, self.model, p, q) for p, q in zip(pre.points, target.points)
        )
        total, per_point = plan_cost(problem, self.gt)
        assert total == pytest.approx(expected, rel=1e-12)
        assert float(per_point.sum()) == pytest.approx(total, rel=1e-12)

    def test_joint_permutation_leaves_cost_unchanged(self, rng: np.random.Generator) -> None:
        """Test that reindexing both surfaces together keeps the total and permutes per-point costs."""
        pre = Surface(rng.uniform(-0.5, 0.5, size=(40, 3)))
        target = Surface(pre.points + rng.normal(scale=0.05, size=(40, 3)))
        order = rng.permutation(40)
        problem = PlanProblem(pre, target, self.model, IkConstraints(plane_z=0.0))
        shuffled = PlanProblem(
            Surface(pre.points[order]), Surface(target.points[order]), self.model, IkConstraints(plane_z=0.0)
        )
        total, per_point = plan_cost(problem, self.gt)
        shuffled_total, shuffled_per_point = plan_cost(shuffled, self.gt)
        assert shuffled_total == pytest.approx(total, rel=1e-12)
        np.testing.assert_allclose(shuffled_per_point, per_point[order], rtol=1e-15)
        np.testing.assert_allclose(plan_gradient(shuffled, self.gt), plan_gradient(problem, self.gt), rtol=1e-12, atol=1e-15)

    def test_gradient_matches_finite_differences(self, rng: np.random.Generator) -> None:
        """Test the summed analytic gradient against central differences."""
        pre = Surface(rng.uniform(-0.5, 0.5, size=(25, 3)) * np.array([1.0, 1.0, 0.0]))
        target = Surface(pre.points + rng.normal(scale=0.05, size=(25, 3)))
        problem = PlanProblem(pre, target, self.model, IkConstraints(plane_z=0.0))
        gradient = plan_gradient(problem, self.gt)
        h = 1e-6
        x = self.gt.as_vector()
        fd = np.zeros(6)
        for j in range(6):
            step = np.zeros(6)
            step[j] = h
            plus = plan_cost(problem, LaserConfig.from_vector(x + step))[0]
            minus = plan_cost(problem, LaserConfig.from_vector(x - step))[0]
            fd[j] = (plus - minus) / (2 * h)
        np.testing.assert_allclose(gradient[:3], fd[:3], rtol=1e-5, atol=1e-8)
        # configurations renormalize the direction, so only its tangential part is observable
        v = self.gt.direction
        tangential = gradient[3:] - v * float(v @ gradient[3:])
        np.testing.assert_allclose(tangential, fd[3:], rtol=1e-5, atol=1e-8)

    def test_mismatched_surfaces_raise(self) -> None:
        """Test that surfaces of different sizes are rejected with both counts."""
        with pytest.raises(CardinalityMismatch) as exc_info:
            PlanProblem(self.pre, Surface(self.pre.points[:5]), self.model, IkConstraints(plane_z=0.0))
        assert (exc_info.value.pre_count, exc_info.value.target_count) == (81, 5)


class TestPlanSolve:
    """Test suite for plan_solve."""

    def setup_method(self) -> None:
        """Set up test fixtures."""
        self.model = BeamProfile(amplitude=0.12, width=0.3)
        self.pre = planar_grid_surface(2.2, 31)
        self.gt = LaserConfig(
            center=(0.0, 0.0, 0.0), direction=xy_rotation(15.0, -15.0).apply(DOWN)
        )
        self.problem = _problem(self.model, self.gt, self.pre)

    def test_init_at_ground_truth_converges_immediately(self) -> None:
        """Test that starting at the solution reports zero iterations."""
        solution = plan_solve(self.problem, self.gt)
        assert solution.iterations == 0
        assert solution.converged
        assert solution.total_cost == pytest.approx(0.0, abs=1e-25)

    def test_recovers_ground_truth_from_perturbed_start(self) -> None:
        """Test that a shifted and tilted start converges back onto the generating pose."""
        init = LaserConfig(
            center=(0.2, -0.15, 0.0), direction=xy_rotation(10.0, 5.0).apply(self.gt.direction)
        )
        solution = plan_solve(self.problem, init)
        assert solution.config.distance_to(self.gt) <= 1e-5
        assert solution.total_cost < 1e-12
        assert len(solution.per_point_costs) == len(self.pre)

    def test_interior_point_method_recovers_ground_truth(self) -> None:
        """Test that the interior-point variant reaches the same pose."""
        init = LaserConfig(center=(0.05, 0.05, 0.0), direction=xy_rotation(3.0, 0.0).apply(self.gt.direction))
        solution = plan_solve(self.problem, init, SolverOpts(method="interior-point"))
        assert solution.config.distance_to(self.gt) <= 1e-4

    def test_restarts_are_deterministic(self) -> None:
        """Test that seeded restarts give bit-identical results."""
        init = LaserConfig(center=(0.3, 0.3, 0.0), direction=DOWN)
        opts = SolverOpts(restarts=2, seed=3)
        first = plan_solve(self.problem, init, opts)
        second = plan_solve(self.problem, init, opts)
        np.testing.assert_array_equal(first.config.as_vector(), second.config.as_vector())

    def test_unreachable_target_matches_grid_search(self) -> None:
        """Test that a target deeper than any shot can cut leaves the grid-search minimum residual."""
        pre = planar_grid_surface(0.9, 19)
        reachable = fk_surface(self.gt, self.model, pre)
        deeper = Surface(reachable.points - np.array([0.0, 0.0, 0.1]))
        problem = PlanProblem(pre, deeper, self.model, IkConstraints(plane_z=0.0))
        init_cost, _ = plan_cost(problem, self.gt)

        solution = plan_solve(problem, self.gt, SolverOpts(tol=1e-6))

        grid_minimum = _grid_search_minimum(problem)
        assert solution.converged
        assert 0.0 < solution.total_cost <= init_cost
        assert solution.total_cost == pytest.approx(grid_minimum, rel=0.05)

    def test_center_stays_on_constraint_plane(self) -> None:
        """Test that an off-plane start is projected and the center box holds."""
        constraints = IkConstraints(plane_z=0.0, center_box=((-0.1, 0.1), (-0.1, 0.1), (-1.0, 1.0)))
        problem = _problem(self.model, self.gt, self.pre, constraints)
        init = LaserConfig(center=(0.5, 0.5, 0.3), direction=self.gt.direction)
        solution = plan_solve(problem, init)
        assert solution.config.center[2] == 0.0
        assert abs(solution.config.center[0]) <= 0.1
        assert abs(solution.config.center[1]) <= 0.1

    def test_direction_box_binds_the_unit_direction(self) -> None:
        """Test that a ground truth outside the direction box gives a unit direction on the box edge."""
        gt = LaserConfig(center=(0.0, 0.0, 0.0), direction=(0.2, 0.0, -0.98))
        constraints = IkConstraints(
            plane_z=0.0, direction_box=((-0.1, 0.1), (-1.0, 1.0), (-1.0, 1.0))
        )
        problem = _problem(self.model, gt, self.pre, constraints)
        init = LaserConfig(center=(0.1, 0.1, 0.0), direction=DOWN)

        solution = plan_solve(problem, init)

        assert constraints.violation(solution.config) <= 1e-12
        assert solution.config.direction[0] == pytest.approx(0.1, abs=1e-3)
        assert np.linalg.norm(solution.config.direction) == pytest.approx(1.0, abs=1e-15)
        assert solution.total_cost > 0.0

    def test_solutions_stay_inside_random_boxes(self, rng: np.random.Generator) -> None:
        """Test that planned poses meet the plane and both boxes within 1e-12."""
        pre = planar_grid_surface(1.0, 11)
        for method in ("projected-lbfgs", "interior-point"):
            for _ in range(5):
                gt = LaserConfig(
                    center=(*rng.uniform(-0.2, 0.2, size=2), 0.0),
                    direction=xy_rotation(*rng.uniform(-20.0, 20.0, size=2)).apply(DOWN),
                )
                half = rng.uniform(0.02, 0.3, size=2)
                constraints = IkConstraints(
                    plane_z=0.0,
                    center_box=((-0.1, 0.1), (-0.1, 0.1), (-1.0, 1.0)),
                    direction_box=((-half[0], half[0]), (-half[1], half[1]), (-1.0, -0.5)),
                )
                solution = plan_solve(
                    _problem(self.model, gt, pre, constraints),
                    LaserConfig(center=(0.0, 0.0, 0.0), direction=DOWN),
                    SolverOpts(method=method, max_iterations=200),
                )
                assert constraints.violation(solution.config) <= 1e-12
                assert solution.config.center[2] == 0.0

    def test_iteration_limit_is_reported(self) -> None:
        """Test that hitting the iteration limit is reported and raises on demand."""
        init = LaserConfig(center=(0.3, 0.3, 0.0), direction=DOWN)
        solution = plan_solve(self.problem, init, SolverOpts(max_iterations=1))
        assert not solution.converged
        with pytest.raises(MaxIterations):
            solution.raise_for_status()
