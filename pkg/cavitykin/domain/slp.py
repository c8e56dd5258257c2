"""Single-layer perceptron depth model.

The model maps distance-to-laser-center s to depth-of-cut d through

    d = T_y(tansig(w1 * T_x(s) + b1) * w2 + b2)

with min-max transforms T_x (s range onto [-1, 1]) and T_y ([-1, 1] onto
the label range). It is trained with Levenberg-Marquardt on the four
parameters; the validation split selects the returned epoch.
"""

import logging
from dataclasses import dataclass, field, replace

import numpy as np
import numpy.typing as npt
from scipy.optimize import curve_fit

from cavitykin.domain.models import DepthModel, RegressionDataset, Vector
from cavitykin.exceptions import DegenerateData, NonConvergence

logger = logging.getLogger(__name__)

UNIT_RANGE = (-1.0, 1.0)
MIN_TRAINING_SAMPLES = 10


def _scalar_or_array(values: Vector) -> Vector | float:
    return float(values) if np.ndim(values) == 0 else values


def tansig(z: npt.ArrayLike) -> Vector | float:
    """Hyperbolic tangent sigmoid, (e^z - e^-z) / (e^z + e^-z).

    np.tanh saturates cleanly to +-1 for large |z| instead of overflowing.
    """
    return _scalar_or_array(np.tanh(np.asarray(z, dtype=np.float64)))


def tansig_derivative(z: npt.ArrayLike) -> Vector | float:
    """Derivative of tansig, 1 - tansig(z)^2."""
    t = np.tanh(np.asarray(z, dtype=np.float64))
    return _scalar_or_array(1.0 - t * t)


@dataclass(frozen=True)
class MinMaxTransform:
    """Linear map sending [in_min, in_max] onto [out_min, out_max]."""

    in_min: float
    in_max: float
    out_min: float = UNIT_RANGE[0]
    out_max: float = UNIT_RANGE[1]

    def __post_init__(self) -> None:
        if not self.in_max > self.in_min:
            raise ValueError(f"Empty source range [{self.in_min}, {self.in_max}]")
        if not self.out_max > self.out_min:
            raise ValueError(f"Empty target range [{self.out_min}, {self.out_max}]")

    @property
    def slope(self) -> float:
        return (self.out_max - self.out_min) / (self.in_max - self.in_min)

    def apply(self, x: npt.ArrayLike) -> Vector:
        return self.slope * (np.asarray(x, dtype=np.float64) - self.in_min) + self.out_min

    def invert(self, y: npt.ArrayLike) -> Vector:
        return (np.asarray(y, dtype=np.float64) - self.out_min) / self.slope + self.in_min


@dataclass(frozen=True)
class SlpModel:
    """Fitted four-parameter perceptron with its input/output transforms.

    Inputs beyond `clamp_max_s` (the trained support) return the boundary
    value, and outputs are clamped to d >= 0.
    """

    w1: float
    b1: float
    w2: float
    b2: float
    tx: MinMaxTransform
    ty: MinMaxTransform
    clamp_max_s: float
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self) -> None:
        if (self.tx.out_min, self.tx.out_max) != UNIT_RANGE:
            raise ValueError("Input transform must target exactly [-1, 1]")
        if (self.ty.in_min, self.ty.in_max) != UNIT_RANGE:
            raise ValueError("Output transform must start from exactly [-1, 1]")
        if self.clamp_max_s != self.tx.in_max:
            raise ValueError("clamp_max_s must equal the input transform's upper bound")

    @classmethod
    def from_ranges(
        cls,
        theta: npt.ArrayLike,
        s_range: tuple[float, float],
        d_range: tuple[float, float],
        meta: dict | None = None,
    ) -> "SlpModel":
        w1, b1, w2, b2 = (float(v) for v in theta)
        return cls(
            w1=w1,
            b1=b1,
            w2=w2,
            b2=b2,
            tx=MinMaxTransform(s_range[0], s_range[1], *UNIT_RANGE),
            ty=MinMaxTransform(*UNIT_RANGE, d_range[0], d_range[1]),
            clamp_max_s=float(s_range[1]),
            meta=dict(meta or {}),
        )

    @property
    def parameters(self) -> Vector:
        return np.array([self.w1, self.b1, self.w2, self.b2])

    def depth(self, s: npt.ArrayLike) -> Vector:
        return np.asarray(slp_forward(self, s))

    def depth_slope(self, s: npt.ArrayLike) -> Vector:
        return np.asarray(slp_input_derivative(self, s))


def _network(model: SlpModel, s: Vector) -> tuple[Vector, Vector]:
    """Pre-activation z and un-clamped output for already-clamped inputs."""
    z = model.w1 * model.tx.apply(s) + model.b1
    raw = model.ty.apply(np.tanh(z) * model.w2 + model.b2)
    return z, raw


def slp_forward(model: SlpModel, s: npt.ArrayLike) -> Vector | float:
    """Predict depth-of-cut for distance(s) to the laser center."""
    s = np.minimum(np.asarray(s, dtype=np.float64), model.clamp_max_s)
    _, raw = _network(model, s)
    return _scalar_or_array(np.maximum(raw, 0.0))


def slp_input_derivative(model: SlpModel, s: npt.ArrayLike) -> Vector | float:
    """Slope dd/ds of the fitted model.

    w1 * w2 * T_y' * T_x' * tansig'(z) inside (0, clamp_max_s); zero where
    the model is flat by construction (beyond the support, or clamped at d = 0).
    """
    s = np.asarray(s, dtype=np.float64)
    z, raw = _network(model, np.minimum(s, model.clamp_max_s))
    slope = model.w1 * model.w2 * model.ty.slope * model.tx.slope * (1.0 - np.tanh(z) ** 2)
    interior = (s > 0.0) & (s < model.clamp_max_s) & (raw > 0.0)
    return _scalar_or_array(np.where(interior, slope, 0.0))


@dataclass(frozen=True)
class FitConfig:
    """Levenberg-Marquardt training schedule."""

    seed: int = 0
    restarts: int = 8
    max_iterations: int = 500
    initial_damping: float = 1e-3
    damping_increase: float = 10.0
    damping_decrease: float = 0.1
    max_damping: float = 1e10
    mse_tolerance: float = 1e-12
    step_tolerance: float = 1e-10
    max_validation_failures: int = 6


@dataclass(frozen=True)
class FitReport:
    """Regression errors of a fitted model (mm) and training bookkeeping."""

    rmse: float
    mae: float
    epochs_used: int
    iterations: int
    train_mse: float
    val_mse: float
    test_mse: float
    converged: bool
    restart: int = 0
    per_cavity_rmse: dict[int, float] = field(default_factory=dict)

    def raise_for_status(self) -> None:
        if not self.converged:
            raise NonConvergence(
                f"Training stopped at the iteration limit after {self.iterations} epochs "
                f"(test RMSE {self.rmse:.4g} mm)"
            )


def regression_errors(
    model: DepthModel, s: npt.ArrayLike, d: npt.ArrayLike
) -> tuple[float, float]:
    """RMSE and MAE of any depth model on (s, d) pairs."""
    d = np.asarray(d, dtype=np.float64)
    if d.size == 0:
        return 0.0, 0.0
    err = np.asarray(model.depth(s)) - d
    return float(np.sqrt(np.mean(err**2))), float(np.mean(np.abs(err)))


@dataclass
class _Run:
    theta: Vector
    val_mse: float
    epoch: int
    iterations: int
    converged: bool


def _residuals_and_jacobian(
    theta: Vector, x: Vector, y: Vector, ty: MinMaxTransform
) -> tuple[Vector, Vector]:
    w1, b1, w2, b2 = theta
    t = np.tanh(w1 * x + b1)
    g = 1.0 - t * t
    k = ty.slope
    residual = ty.apply(t * w2 + b2) - y
    jacobian = np.column_stack([k * w2 * g * x, k * w2 * g, k * t, np.full_like(x, k)])
    return residual, jacobian


def _mse(theta: Vector, x: Vector, y: Vector, ty: MinMaxTransform) -> float:
    w1, b1, w2, b2 = theta
    residual = ty.apply(np.tanh(w1 * x + b1) * w2 + b2) - y
    return float(np.mean(residual**2))


def _levenberg_marquardt(
    theta: Vector,
    train: tuple[Vector, Vector],
    val: tuple[Vector, Vector],
    ty: MinMaxTransform,
    config: FitConfig,
) -> _Run:
    x, y = train
    damping = config.initial_damping
    residual, jacobian = _residuals_and_jacobian(theta, x, y, ty)
    mse = float(np.mean(residual**2))
    best = _Run(theta.copy(), _mse(theta, *val, ty), 0, 0, False)
    failures = 0

    for epoch in range(1, config.max_iterations + 1):
        hessian = jacobian.T @ jacobian
        gradient = jacobian.T @ residual
        while damping <= config.max_damping:
            try:
                step = np.linalg.solve(hessian + damping * np.eye(4), -gradient)
            except np.linalg.LinAlgError:
                damping *= config.damping_increase
                continue
            candidate = theta + step
            candidate_mse = _mse(candidate, x, y, ty)
            if candidate_mse < mse:
                damping *= config.damping_decrease
                break
            damping *= config.damping_increase
        else:
            best.iterations = epoch - 1
            best.converged = True
            return best

        improvement = mse - candidate_mse
        theta = candidate
        residual, jacobian = _residuals_and_jacobian(theta, x, y, ty)
        mse = float(np.mean(residual**2))
        best.iterations = epoch

        val_mse = _mse(theta, *val, ty)
        if val_mse < best.val_mse:
            best.theta, best.val_mse, best.epoch = theta.copy(), val_mse, epoch
            failures = 0
        else:
            failures += 1
        logger.debug("LM epoch %d: train %.3e, val %.3e, damping %.1e", epoch, mse, val_mse, damping)

        if failures >= config.max_validation_failures:
            best.converged = True
            return best
        if improvement < config.mse_tolerance or np.linalg.norm(step) < config.step_tolerance:
            best.converged = True
            return best
    return best


def fit_slp(data: RegressionDataset, config: FitConfig | None = None) -> tuple[SlpModel, FitReport]:
    """Fit the perceptron by Levenberg-Marquardt with seeded random restarts.

    Transforms come from the training split's min/max, each restart starts
    from parameters uniform in [-1, 1], and the restart with the best
    validation loss wins. A dataset without splits trains, validates and
    tests on all samples.

    Args:
        data: Regression tuples with train/val/test splits.
        config: Training schedule; defaults to FitConfig().

    Returns:
        The fitted model and a report with test-split RMSE/MAE.

    Raises:
        DegenerateData: With fewer than 10 training samples or constant s.
    """
    config = config or FitConfig()
    if any(data.splits.values()):
        train, val, test = (data.arrays(name) for name in ("train", "val", "test"))
        if len(val[0]) == 0:
            val = train
    else:
        train = val = test = data.arrays()

    s_train, d_train = train
    if len(s_train) < MIN_TRAINING_SAMPLES:
        raise DegenerateData(
            f"Need at least {MIN_TRAINING_SAMPLES} training samples, got {len(s_train)}"
        )
    s_range = (float(s_train.min()), float(s_train.max()))
    if s_range[1] <= s_range[0]:
        raise DegenerateData("All training samples share the same distance-to-laser-center")

    d_range = (float(d_train.min()), float(d_train.max()))
    if d_range[1] <= d_range[0]:
        # constant labels have an exact flat fit: w2 = 0 lands on the range midpoint
        level = d_range[0]
        model = SlpModel.from_ranges(
            (1.0, 0.0, 0.0, 0.0), s_range, (level - 1.0, level + 1.0), {"seed": config.seed}
        )
        return _finish(model, data, train, val, test, _Run(model.parameters, 0.0, 0, 0, True), 0, config)

    tx = MinMaxTransform(*s_range)
    ty = MinMaxTransform(*UNIT_RANGE, *d_range)
    x_train, x_val = tx.apply(s_train), tx.apply(val[0])

    rng = np.random.default_rng(config.seed)
    best_run, best_restart = None, 0
    for restart in range(max(1, config.restarts)):
        theta0 = rng.uniform(-1.0, 1.0, size=4)
        run = _levenberg_marquardt(theta0, (x_train, d_train), (x_val, val[1]), ty, config)
        logger.debug(
            "Restart %d: val MSE %.3e at epoch %d (%d epochs)",
            restart, run.val_mse, run.epoch, run.iterations,
        )
        if best_run is None or run.val_mse < best_run.val_mse:
            best_run, best_restart = run, restart

    model = SlpModel.from_ranges(best_run.theta, s_range, d_range, {"seed": config.seed})
    return _finish(model, data, train, val, test, best_run, best_restart, config)


def _finish(
    model: SlpModel,
    data: RegressionDataset,
    train: tuple[Vector, Vector],
    val: tuple[Vector, Vector],
    test: tuple[Vector, Vector],
    run: _Run,
    restart: int,
    config: FitConfig,
) -> tuple[SlpModel, FitReport]:
    rmse, mae = regression_errors(model, *test)
    per_cavity: dict[int, float] = {}
    if any(data.splits.values()) and data.splits["test"]:
        ids = data.cavity_ids("test")
        for cavity_id in np.unique(ids):
            mask = ids == cavity_id
            per_cavity[int(cavity_id)] = regression_errors(
                model, test[0][mask], test[1][mask]
            )[0]
    report = FitReport(
        rmse=rmse,
        mae=mae,
        epochs_used=run.epoch,
        iterations=run.iterations,
        train_mse=regression_errors(model, *train)[0] ** 2,
        val_mse=regression_errors(model, *val)[0] ** 2,
        test_mse=rmse**2,
        converged=run.converged,
        restart=restart,
        per_cavity_rmse=per_cavity,
    )
    model = replace(model, meta={"seed": config.seed, "rmse": rmse, "mae": mae})
    if run.converged:
        logger.info("SLP fit: test RMSE %.4g mm, MAE %.4g mm", rmse, mae)
    else:
        logger.warning("SLP fit hit the iteration limit; test RMSE %.4g mm", rmse)
    return model, report


@dataclass(frozen=True)
class GaussianBaseline:
    """Two-parameter symmetric Gaussian profile d(s) = A exp(-s^2 / 2 sigma^2)."""

    amplitude: float
    width: float

    def depth(self, s: npt.ArrayLike) -> Vector:
        s = np.asarray(s, dtype=np.float64)
        return self.amplitude * np.exp(-(s**2) / (2.0 * self.width**2))

    def depth_slope(self, s: npt.ArrayLike) -> Vector:
        s = np.asarray(s, dtype=np.float64)
        return -s / self.width**2 * self.depth(s)


def fit_gaussian_baseline(data: RegressionDataset) -> tuple[GaussianBaseline, float]:
    """Least-squares symmetric-Gaussian fit on the training split.

    Returns:
        The fitted baseline and its RMSE on the test split (all samples when
        the dataset has no splits).
    """
    if any(data.splits.values()):
        s, d = data.arrays("train")
        s_test, d_test = data.arrays("test")
    else:
        s, d = s_test, d_test = data.arrays()
    if len(s) < 2 or np.ptp(s) == 0:
        raise DegenerateData("Gaussian baseline needs samples at distinct distances")

    def profile(x, amplitude, width):
        return amplitude * np.exp(-(x**2) / (2.0 * width**2))

    guess_width = max(float(np.sqrt(np.average(s**2, weights=d + 1e-12))), 1e-3)
    (amplitude, width), _ = curve_fit(profile, s, d, p0=(float(d.max()), guess_width), maxfev=10000)
    baseline = GaussianBaseline(float(amplitude), float(abs(width)))
    return baseline, regression_errors(baseline, s_test, d_test)[0]
