"""Shared value types of the cavity kinematics domain.

Everything here is an immutable value. Vectors are float64 numpy arrays of
shape (3,), surfaces are (M, 3) arrays whose row order is the correspondence
index k. Arrays are copied and frozen on construction.
"""

from dataclasses import dataclass, field
from typing import Literal, Protocol

import numpy as np
import numpy.typing as npt

from cavitykin.exceptions import InfeasibleStart

Vector = npt.NDArray[np.float64]
Box = tuple[tuple[float, float], tuple[float, float], tuple[float, float]]

SPLITS = ("train", "val", "test")


def _frozen(array: npt.ArrayLike, shape_tail: tuple[int, ...] = ()) -> Vector:
    out = np.array(array, dtype=np.float64, copy=True)
    if shape_tail and out.shape[-len(shape_tail):] != shape_tail:
        raise ValueError(f"Expected trailing shape {shape_tail}, got {out.shape}")
    if not np.all(np.isfinite(out)):
        raise ValueError("Coordinates must be finite")
    out.setflags(write=False)
    return out


def as_point(value: npt.ArrayLike) -> Vector:
    """Return a frozen, finite 3-vector."""
    point = _frozen(value, (3,))
    if point.shape != (3,):
        raise ValueError(f"A point has 3 components, got shape {point.shape}")
    return point


def as_unit(value: npt.ArrayLike) -> Vector:
    """Normalize a raw 3-vector to unit length.

    Raises:
        ValueError: If the vector has zero (or non-finite) length.
    """
    raw = np.asarray(value, dtype=np.float64)
    if raw.shape != (3,):
        raise ValueError(f"A direction has 3 components, got shape {raw.shape}")
    norm = float(np.linalg.norm(raw))
    if not np.isfinite(norm) or norm == 0.0:
        raise ValueError("Direction vector must have non-zero finite length")
    return as_point(raw / norm)


class DepthModel(Protocol):
    """Anything that maps distance-to-laser-center to depth-of-cut.

    `depth_slope` is the derivative of `depth` with respect to s and must
    be zero wherever `depth` is flat by construction (clamped regions).
    """

    def depth(self, s: npt.ArrayLike) -> Vector: ...

    def depth_slope(self, s: npt.ArrayLike) -> Vector: ...


@dataclass(frozen=True, eq=False)
class LaserConfig:
    """6-dof laser incident configuration: ablation center and unit direction.

    The direction is normalized on construction, so any raw vector is accepted.
    """

    center: Vector
    direction: Vector

    def __post_init__(self) -> None:
        object.__setattr__(self, "center", as_point(self.center))
        object.__setattr__(self, "direction", as_unit(self.direction))

    @classmethod
    def from_vector(cls, x: npt.ArrayLike) -> "LaserConfig":
        x = np.asarray(x, dtype=np.float64)
        return cls(center=x[:3], direction=x[3:6])

    def as_vector(self) -> Vector:
        """Return X = (p^c, v^c) as a 6-vector."""
        return np.concatenate([self.center, self.direction])

    def distance_to(self, other: "LaserConfig") -> float:
        """L2 distance between two configurations in 6-dof space."""
        return float(np.linalg.norm(self.as_vector() - other.as_vector()))

    def __repr__(self) -> str:
        c = ", ".join(f"{v:.6g}" for v in self.center)
        d = ", ".join(f"{v:.6g}" for v in self.direction)
        return f"LaserConfig(center=({c}), direction=({d}))"


@dataclass(frozen=True, eq=False)
class IncidentPlane:
    """Laser incident plane through the laser origin, perpendicular to the beam."""

    origin: Vector
    normal: Vector
    standoff: float

    def __post_init__(self) -> None:
        if not self.standoff > 0:
            raise ValueError(f"Standoff must be positive, got {self.standoff}")
        object.__setattr__(self, "origin", as_point(self.origin))
        object.__setattr__(self, "normal", as_unit(self.normal))


@dataclass(frozen=True, eq=False)
class LocalSurfaceFrame:
    """Local reference plane of the un-ablated surface around a cavity."""

    center: Vector
    normal: Vector

    def __post_init__(self) -> None:
        object.__setattr__(self, "center", as_point(self.center))
        object.__setattr__(self, "normal", as_unit(self.normal))


@dataclass(frozen=True, eq=False)
class Surface:
    """Indexed 3D point set; row i holds the point with index k = i + 1.

    The row order is the correspondence between pre-ablation, post-ablation
    and target surfaces, so it must survive every transformation.
    """

    points: Vector

    def __post_init__(self) -> None:
        points = _frozen(self.points, (3,))
        if points.ndim != 2 or len(points) == 0:
            raise ValueError("A surface needs at least one 3D point")
        object.__setattr__(self, "points", points)

    def __len__(self) -> int:
        return len(self.points)

    @property
    def indices(self) -> npt.NDArray[np.int64]:
        return np.arange(1, len(self.points) + 1)

    def permuted(self, order: npt.ArrayLike) -> "Surface":
        return Surface(self.points[np.asarray(order)])


@dataclass(frozen=True)
class CavitySample:
    """One (s, d) training tuple with its provenance."""

    s: float
    d: float
    cavity_id: int
    point_index: int


@dataclass(frozen=True)
class RegressionDataset:
    """(s, d) tuples with a train/val/test partition of their positions."""

    samples: tuple[CavitySample, ...]
    splits: dict[str, tuple[int, ...]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        object.__setattr__(self, "samples", tuple(self.samples))
        splits = {name: tuple(self.splits.get(name, ())) for name in SPLITS}
        object.__setattr__(self, "splits", splits)
        for sample in self.samples:
            if sample.s < 0 or sample.d < 0:
                raise ValueError(
                    f"Negative s or d in cavity {sample.cavity_id}, point {sample.point_index}"
                )
        if any(splits.values()):
            used = sorted(i for name in SPLITS for i in splits[name])
            if used != list(range(len(self.samples))):
                raise ValueError("Split lists must partition the sample positions")

    def arrays(self, split: str | None = None) -> tuple[Vector, Vector]:
        """Return (s, d) arrays for one split, or for all samples."""
        chosen = (
            self.samples if split is None else [self.samples[i] for i in self.splits[split]]
        )
        s = np.array([x.s for x in chosen], dtype=np.float64)
        d = np.array([x.d for x in chosen], dtype=np.float64)
        return s, d

    def cavity_ids(self, split: str | None = None) -> npt.NDArray[np.int64]:
        chosen = (
            self.samples if split is None else [self.samples[i] for i in self.splits[split]]
        )
        return np.array([x.cavity_id for x in chosen], dtype=np.int64)


def _check_box(box: Box, name: str) -> Box:
    box = tuple((float(lo), float(hi)) for lo, hi in box)
    if len(box) != 3:
        raise InfeasibleStart(f"{name} needs one [lo, hi] interval per axis")
    for axis, (lo, hi) in zip("xyz", box):
        if not lo <= hi:
            raise InfeasibleStart(f"{name} interval on {axis} is empty: [{lo}, {hi}]")
    return box  # type: ignore[return-value]


@dataclass(frozen=True)
class IkConstraints:
    """Constraint set of the inverse-kinematics and planning problems.

    The equality constraint pins the ablation center to the plane z = plane_z;
    the boxes bound the center and the unit direction components.
    """

    plane_z: float
    center_box: Box = ((-5.0, 5.0), (-5.0, 5.0), (-5.0, 5.0))
    direction_box: Box = ((-1.0, 1.0), (-1.0, 1.0), (-1.0, 1.0))

    def __post_init__(self) -> None:
        object.__setattr__(self, "center_box", _check_box(self.center_box, "center_box"))
        object.__setattr__(
            self, "direction_box", _check_box(self.direction_box, "direction_box")
        )
        lo, hi = self.center_box[2]
        if not lo <= self.plane_z <= hi:
            raise InfeasibleStart(
                f"Plane z={self.plane_z} lies outside the center z-interval [{lo}, {hi}]"
            )

    def reduced_bounds(self) -> tuple[Vector, Vector]:
        """Bounds of the free variables (cx, cy, ux, uy, uz)."""
        rows = [self.center_box[0], self.center_box[1], *self.direction_box]
        lower = np.array([lo for lo, _ in rows], dtype=np.float64)
        upper = np.array([hi for _, hi in rows], dtype=np.float64)
        return lower, upper

    def violation(self, cfg: LaserConfig) -> float:
        """Largest constraint violation of a configuration (0 when feasible)."""
        worst = abs(float(cfg.center[2]) - self.plane_z)
        for values, box in ((cfg.center, self.center_box), (cfg.direction, self.direction_box)):
            for value, (lo, hi) in zip(values, box):
                worst = max(worst, lo - float(value), float(value) - hi)
        return max(worst, 0.0)

    def contains(self, cfg: LaserConfig, tol: float = 1e-12) -> bool:
        return self.violation(cfg) <= tol


SolverMethod = Literal["projected-lbfgs", "interior-point"]


@dataclass(frozen=True)
class SolverOpts:
    """Options shared by the inverse-kinematics and planning solvers."""

    tol: float = 1e-9
    max_iterations: int = 500
    method: SolverMethod = "projected-lbfgs"
    restarts: int = 0
    seed: int = 0
    standoff: float = 1.0
