"""Post-processing of measured surfaces into regression data.

Local reference planes come from a total-least-squares fit of the un-ablated
surroundings; cavity points are then turned into (s, d) tuples and grouped
into train/validation/test splits.
"""

import logging
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np
import numpy.typing as npt

from cavitykin.domain.geometry import (
    DEFAULT_STANDOFF,
    depth_of_cut_measured,
    distance_to_laser_center,
    incident_plane,
)
from cavitykin.domain.models import (
    CavitySample,
    LaserConfig,
    LocalSurfaceFrame,
    RegressionDataset,
    Surface,
    Vector,
    as_point,
    as_unit,
)
from cavitykin.exceptions import DegenerateGeometry

logger = logging.getLogger(__name__)

COLLINEAR_TOLERANCE = 1e-9
DEFAULT_VALIDATION_FRACTION = 0.2


@dataclass(frozen=True, eq=False)
class ExclusionDisc:
    """Disc around a cavity whose points are left out of the plane fit."""

    center: Vector
    radius: float
    normal: Vector = field(default_factory=lambda: np.array([0.0, 0.0, 1.0]))

    def __post_init__(self) -> None:
        object.__setattr__(self, "center", as_point(self.center))
        object.__setattr__(self, "normal", as_unit(self.normal))

    def contains(self, points: npt.ArrayLike) -> npt.NDArray[np.bool_]:
        rel = np.atleast_2d(points) - self.center
        in_plane = rel - np.outer(rel @ self.normal, self.normal)
        return np.linalg.norm(in_plane, axis=1) < self.radius


def fit_local_frame(surface: Surface, exclude_roi: ExclusionDisc | None = None) -> LocalSurfaceFrame:
    """Total-least-squares plane through the surface points.

    The center is the centroid of the points used and the normal is the
    right singular vector of the smallest singular value, flipped to point
    towards +z (the laser side).

    Raises:
        DegenerateGeometry: With fewer than 3 usable points or collinear points.
    """
    points = surface.points
    if exclude_roi is not None:
        points = points[~exclude_roi.contains(points)]
    if len(points) < 3:
        raise DegenerateGeometry(f"Plane fit needs at least 3 points, got {len(points)}")

    centroid = points.mean(axis=0)
    _, singular, vt = np.linalg.svd(points - centroid, full_matrices=False)
    if singular[1] <= COLLINEAR_TOLERANCE * max(singular[0], 1.0):
        raise DegenerateGeometry("Points are collinear; the plane is undefined")
    normal = vt[2] if len(singular) == 3 else np.cross(vt[0], vt[1])
    if normal[2] < 0:
        normal = -normal
    logger.debug("Local frame fitted on %d points, residual %.3g", len(points), singular[-1])
    return LocalSurfaceFrame(center=centroid, normal=normal)


def extract_regression_tuples(
    cavity: Surface,
    frame: LocalSurfaceFrame,
    cfg: LaserConfig,
    standoff: float = DEFAULT_STANDOFF,
    cavity_id: int = 0,
) -> list[CavitySample]:
    """One (s, d) tuple per cavity point, in row order.

    d is the depth below the local frame along the beam; s is the radial
    distance of the point's projection on the incident plane.
    """
    d = np.atleast_1d(depth_of_cut_measured(cavity.points, frame, cfg.direction))
    s = np.atleast_1d(distance_to_laser_center(cavity.points, incident_plane(cfg, standoff)))
    return [
        CavitySample(s=float(si), d=float(di), cavity_id=cavity_id, point_index=k)
        for k, (si, di) in enumerate(zip(s, d), start=1)
    ]


def build_dataset(
    cavities: Sequence[Sequence[CavitySample]],
    test_cavities: Sequence[int] = (),
    val_fraction: float = DEFAULT_VALIDATION_FRACTION,
    seed: int = 0,
) -> RegressionDataset:
    """Assemble cavities into a split dataset.

    Cavities whose id is in test_cavities are held out entirely; the rest is
    shuffled with a seeded generator and split into training and validation
    by val_fraction.
    """
    if not 0 <= val_fraction < 1:
        raise ValueError(f"Validation fraction must lie in [0, 1), got {val_fraction}")
    samples = tuple(sample for cavity in cavities for sample in cavity)
    held_out = set(test_cavities)
    test = [i for i, sample in enumerate(samples) if sample.cavity_id in held_out]
    rest = np.array([i for i, sample in enumerate(samples) if sample.cavity_id not in held_out])
    rng = np.random.default_rng(seed)
    rest = rest[rng.permutation(len(rest))] if len(rest) else rest
    n_val = int(round(val_fraction * len(rest)))
    splits = {
        "train": tuple(sorted(int(i) for i in rest[n_val:])),
        "val": tuple(sorted(int(i) for i in rest[:n_val])),
        "test": tuple(test),
    }
    logger.info(
        "Dataset: %d train, %d val, %d test samples",
        len(splits["train"]), len(splits["val"]), len(splits["test"]),
    )
    return RegressionDataset(samples=samples, splits=splits)
