"""Tests for forward and inverse kinematics."""

import math

import numpy as np
import pytest

from cavitykin.domain.kinematics import (
    fk_point,
    fk_surface,
    ik_cost,
    ik_cost_at,
    ik_cost_gradient,
    ik_solve,
    point_costs_and_gradients,
)
from cavitykin.domain.models import IkConstraints, LaserConfig, SolverOpts, Surface
from cavitykin.domain.synth import BeamProfile, planar_grid_surface
from cavitykin.exceptions import InfeasibleStart, MaxIterations, SingularGradient
from tests.conftest import make_model, random_slp


def _fd_gradient(x: np.ndarray, model, p, target, h: float = 1e-6) -> np.ndarray:
    grad = np.zeros(6)
    for j in range(6):
        step = np.zeros(6)
        step[j] = h
        grad[j] = (ik_cost_at(x + step, model, p, target) - ik_cost_at(x - step, model, p, target)) / (2 * h)
    return grad


class TestForwardKinematics:
    """Test suite for fk_point and fk_surface."""

    def test_zero_depth_model_is_identity(self, downward_config: LaserConfig) -> None:
        """Test that a zero-amplitude beam leaves points in place."""
        flat = BeamProfile(amplitude=0.0, width=0.3)
        p = np.array([[0.1, 0.2, 0.0], [0.0, 0.0, 0.0]])
        np.testing.assert_array_equal(fk_point(downward_config, flat, p), p)

    def test_point_outside_beam_is_untouched(self, downward_config: LaserConfig) -> None:
        """Test that a point beyond the crater support does not move."""
        skewed = BeamProfile(amplitude=0.1, width=0.3, kind="skewed")
        p = np.array([0.7, 0.0, 0.0])
        np.testing.assert_array_equal(fk_point(downward_config, skewed, p), p)

    def test_axial_point_moves_by_amplitude(
        self, downward_config: LaserConfig, gaussian_profile: BeamProfile
    ) -> None:
        """Test that the point under the beam axis sinks by the full amplitude."""
        q = fk_point(downward_config, gaussian_profile, [0.0, 0.0, 0.0])
        np.testing.assert_allclose(q, [0.0, 0.0, -0.12])

    def test_surface_depth_field_matches_profile(
        self, downward_config: LaserConfig, gaussian_profile: BeamProfile
    ) -> None:
        """Test that a vertical shot on a plane carves exactly the profile depth."""
        pre = planar_grid_surface(1.0, 41)
        post = fk_surface(downward_config, gaussian_profile, pre)
        s = np.hypot(pre.points[:, 0], pre.points[:, 1])
        np.testing.assert_allclose(post.points[:, 2], -gaussian_profile.depth(s), atol=1e-15)
        np.testing.assert_array_equal(post.points[:, :2], pre.points[:, :2])

    def test_single_point_surface(self, downward_config: LaserConfig, smooth_model) -> None:
        """Test that a one-point surface matches fk_point."""
        p = [0.2, -0.1, 0.0]
        post = fk_surface(downward_config, smooth_model, Surface([p]))
        np.testing.assert_array_equal(post.points[0], fk_point(downward_config, smooth_model, p))

    def test_surface_beyond_support_is_unchanged(self, downward_config: LaserConfig) -> None:
        """Test that a surface entirely outside the crater is returned unchanged."""
        skewed = BeamProfile(amplitude=0.1, width=0.1, kind="skewed")
        pre = Surface([[1.0, 0.0, 0.0], [0.0, -1.0, 0.0]])
        np.testing.assert_array_equal(fk_surface(downward_config, skewed, pre).points, pre.points)

    def test_permuting_rows_permutes_the_prediction(self, smooth_model, rng: np.random.Generator) -> None:
        """Test that reordering the surface rows reorders the predicted cavity the same way."""
        cfg = LaserConfig(center=(0.05, -0.1, 0.0), direction=(0.1, 0.2, -1.0))
        pre = Surface(rng.uniform(-0.8, 0.8, size=(60, 3)) * np.array([1.0, 1.0, 0.05]))
        order = rng.permutation(len(pre))
        permuted = fk_surface(cfg, smooth_model, Surface(pre.points[order]))
        np.testing.assert_allclose(
            permuted.points, fk_surface(cfg, smooth_model, pre).points[order], rtol=0, atol=1e-15
        )


class TestIkCost:
    """Test suite for ik_cost."""

    def setup_method(self) -> None:
        """Set up test fixtures."""
        self.cfg = LaserConfig(center=(0.1, 0.0, 0.0), direction=(0.1, 0.2, -1.0))
        self.model = make_model()
        self.p = np.array([0.3, 0.1, 0.0])

    def test_target_at_prediction_costs_nothing(self) -> None:
        """Test that the predicted point as target gives exactly zero cost."""
        target = fk_point(self.cfg, self.model, self.p)
        assert ik_cost(self.cfg, self.model, self.p, target) == 0.0

    def test_axial_offset_costs_its_square(self) -> None:
        """Test that an offset along z costs its square."""
        target = fk_point(self.cfg, self.model, self.p) + np.array([0.0, 0.0, 0.03])
        assert ik_cost(self.cfg, self.model, self.p, target) == pytest.approx(0.03**2, rel=1e-12)

    def test_matches_naive_recomputation(self, rng: np.random.Generator) -> None:
        """Test the cost against a direct re-derivation from the projection."""
        for _ in range(20):
            cfg = LaserConfig(center=rng.normal(scale=0.2, size=3), direction=rng.normal(size=3))
            p, target = rng.normal(size=3), rng.normal(size=3)
            plane_origin = cfg.center - cfg.direction
            rel = p - plane_origin
            s = np.linalg.norm(rel - (rel @ cfg.direction) * cfg.direction)
            q = p + float(self.model.depth(s)) * cfg.direction
            assert ik_cost(cfg, self.model, p, target) == pytest.approx(np.sum((q - target) ** 2), rel=1e-12)


class TestIkCostGradient:
    """Test suite for the analytic cost gradient."""

    def test_zero_at_a_minimum(self, smooth_model) -> None:
        """Test that the gradient vanishes where the target is hit."""
        cfg = LaserConfig(center=(0.0, 0.1, 0.0), direction=(0.2, 0.0, -1.0))
        p = np.array([0.25, -0.1, 0.0])
        gradient, singular = ik_cost_gradient(cfg, smooth_model, p, fk_point(cfg, smooth_model, p))
        assert not singular
        np.testing.assert_allclose(gradient, 0.0, atol=1e-10)

    def test_matches_finite_differences_on_random_instances(self, rng: np.random.Generator) -> None:
        """Test the analytic gradient on 1000 random Gaussian-beam instances."""
        model = BeamProfile(amplitude=0.12, width=0.3)
        for _ in range(1000):
            x = np.concatenate([rng.normal(scale=0.3, size=3), rng.normal(size=3)])
            x[5] = -abs(x[5]) - 0.5
            p = x[:3] + rng.normal(scale=0.4, size=3)
            target = p + rng.normal(scale=0.1, size=3)
            _, gradients, singular = point_costs_and_gradients(x, model, p, target)
            assert not singular.any()
            np.testing.assert_allclose(
                gradients[0], _fd_gradient(x, model, p, target), rtol=1e-5, atol=1e-8
            )

    def test_perceptron_gradient_matches_finite_differences(self, rng: np.random.Generator) -> None:
        """Test the analytic gradient on 1000 instances spread over 100 random perceptrons."""
        for _ in range(100):
            model = random_slp(rng, s_max_range=(1.5, 2.5))
            for _ in range(10):
                x = np.array([*rng.uniform(-0.2, 0.2, size=3), *rng.uniform(-0.2, 0.2, size=2), -1.0])
                angle = rng.uniform(0.0, 2.0 * np.pi)
                offset = rng.uniform(0.3, 0.8) * np.array([math.cos(angle), math.sin(angle), 0.0])
                p = x[:3] + offset
                target = p + rng.normal(scale=0.05, size=3)
                _, gradients, _ = point_costs_and_gradients(x, model, p, target)
                np.testing.assert_allclose(
                    gradients[0], _fd_gradient(x, model, p, target), rtol=1e-5, atol=1e-8
                )

    def test_closed_form_for_axial_offset_at_one_width(
        self, downward_config: LaserConfig, gaussian_profile: BeamProfile
    ) -> None:
        """Test the center gradient against its closed form one width off axis."""
        sigma, amplitude, delta = gaussian_profile.width, gaussian_profile.amplitude, 0.02
        p = np.array([sigma, 0.0, 0.0])
        target = fk_point(downward_config, gaussian_profile, p) + np.array([0.0, 0.0, delta])
        gradient, _ = ik_cost_gradient(downward_config, gaussian_profile, p, target)
        expected_cx = 2.0 * delta * amplitude * math.exp(-0.5) / sigma
        assert gradient[0] == pytest.approx(expected_cx, rel=1e-12)
        assert gradient[1] == pytest.approx(0.0, abs=1e-15)
        assert gradient[2] == pytest.approx(0.0, abs=1e-15)

    def test_axial_point_is_flagged(self, downward_config: LaserConfig, smooth_model) -> None:
        """Test that a point under the axis is flagged, or raises when strict."""
        p = np.array([0.0, 0.0, 0.0])
        target = p + np.array([0.0, 0.0, 0.1])
        _, singular = ik_cost_gradient(downward_config, smooth_model, p, target)
        assert singular
        with pytest.raises(SingularGradient):
            ik_cost_gradient(downward_config, smooth_model, p, target, strict=True)


class TestIkSolve:
    """Test suite for ik_solve."""

    def setup_method(self) -> None:
        """Set up test fixtures."""
        self.model = BeamProfile(amplitude=0.12, width=0.3)
        self.constraints = IkConstraints(plane_z=0.0)
        self.gt = LaserConfig(center=(0.0, 0.0, 0.0), direction=(0.1, -0.05, -1.0))
        self.p = np.array([0.3, 0.05, 0.0])
        self.target = fk_point(self.gt, self.model, self.p)

    def test_init_at_ground_truth_stops_immediately(self) -> None:
        """Test that a start already at a minimum reports zero iterations."""
        solution = ik_solve(self.model, self.p, self.target, self.constraints, self.gt)
        assert solution.iterations == 0
        assert solution.final_cost == pytest.approx(0.0, abs=1e-25)
        assert solution.converged

    def test_reaches_target_from_perturbed_start(self) -> None:
        """Test that the solver drives the point onto its target from nearby."""
        init = LaserConfig(center=(0.05, -0.03, 0.0), direction=(0.0, 0.0, -1.0))
        solution = ik_solve(self.model, self.p, self.target, self.constraints, init)
        assert solution.final_cost < 1e-12
        assert solution.config.center[2] == 0.0
        assert np.linalg.norm(solution.config.direction) == pytest.approx(1.0)

    def test_respects_center_box(self) -> None:
        """Test that the center stays inside a box that excludes the ground truth."""
        constraints = IkConstraints(plane_z=0.0, center_box=((0.2, 0.4), (-1.0, 1.0), (-1.0, 1.0)))
        init = LaserConfig(center=(-0.5, 0.0, 0.0), direction=(0.0, 0.0, -1.0))
        solution = ik_solve(self.model, self.p, self.target, constraints, init)
        assert 0.2 <= solution.config.center[0] <= 0.4

    def test_zero_direction_box_is_infeasible(self) -> None:
        """Test that a direction box holding only the zero vector is rejected."""
        constraints = IkConstraints(plane_z=0.0, direction_box=((0.0, 0.0), (0.0, 0.0), (0.0, 0.0)))
        with pytest.raises(InfeasibleStart):
            ik_solve(self.model, self.p, self.target, constraints, self.gt)

    def test_plane_outside_center_box_is_infeasible(self) -> None:
        """Test that a plane outside the center z-interval is rejected on construction."""
        with pytest.raises(InfeasibleStart):
            IkConstraints(plane_z=9.0)

    def test_iteration_limit_is_reported(self) -> None:
        """Test that hitting the iteration limit is reported and raises on demand."""
        init = LaserConfig(center=(0.3, -0.3, 0.0), direction=(0.3, 0.3, -1.0))
        solution = ik_solve(
            self.model, self.p, self.target, self.constraints, init, SolverOpts(max_iterations=1)
        )
        assert not solution.converged
        with pytest.raises(MaxIterations):
            solution.raise_for_status()

    def test_direction_box_binds_the_unit_direction(self) -> None:
        """Test that a narrow direction box holds for the reported unit direction."""
        constraints = IkConstraints(
            plane_z=0.0, direction_box=((-0.05, 0.05), (-1.0, 1.0), (-1.0, 1.0))
        )
        init = LaserConfig(center=(0.0, 0.0, 0.0), direction=(0.0, 0.0, -1.0))
        solution = ik_solve(self.model, self.p, self.target, constraints, init)
        assert constraints.violation(solution.config) <= 1e-12
        assert abs(solution.config.direction[0]) <= 0.05
        assert np.linalg.norm(solution.config.direction) == pytest.approx(1.0, abs=1e-15)
