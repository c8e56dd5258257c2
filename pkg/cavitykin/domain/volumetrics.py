"""Volumetric comparison of predicted and ground-truth cavities.

Depths are integrated over a disc-shaped region of interest on the laser
incident plane with midpoint quadrature on square cells clipped to the disc:
V = sum D(p) dA(p). Over-cut, under-cut and 3D-cavity-IoU follow from the
pointwise max/min of the two depth fields.
"""

import logging
import math
from dataclasses import dataclass

import numpy as np
import numpy.typing as npt
from scipy.interpolate import LinearNDInterpolator
from scipy.spatial import cKDTree

from cavitykin.domain.geometry import (
    depth_of_cut_measured,
    plane_basis,
    project_to_incident_plane,
)
from cavitykin.domain.models import (
    DepthModel,
    IncidentPlane,
    LocalSurfaceFrame,
    Surface,
    Vector,
)
from cavitykin.exceptions import SparseCoverage, ZeroGroundTruth

logger = logging.getLogger(__name__)

DEFAULT_RADIUS = 1.0
DEFAULT_RESOLUTION = 64
MIN_RESOLUTION = 8
BOUNDARY_SUBSAMPLES = 8
MAX_UNCOVERED_FRACTION = 0.05
COVERAGE_SPACING_FACTOR = 2.0


@dataclass(frozen=True, eq=False)
class RoiGrid:
    """Quadrature samples of the ROI disc: positions on the plane and cell areas."""

    plane: IncidentPlane
    radius: float
    resolution: int
    offsets: Vector
    points: Vector
    areas: Vector

    def __len__(self) -> int:
        return len(self.areas)

    @property
    def distances(self) -> Vector:
        return np.hypot(self.offsets[:, 0], self.offsets[:, 1])


@dataclass(frozen=True, eq=False)
class DepthField:
    """Depth-of-cut per ROI sample (mm), aligned with RoiGrid rows."""

    values: Vector

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=np.float64)
        if np.any(values < 0) or not np.all(np.isfinite(values)):
            raise ValueError("Depth fields hold finite, non-negative depths")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)


@dataclass(frozen=True)
class VolumetricReport:
    """Volumes (mm^3) and percentage ratios of a predicted/ground-truth pair."""

    v_predict: float
    v_gt: float
    v_overlap: float
    over_cut_ratio: float
    under_cut_ratio: float
    iou: float
    radius: float
    resolution: int
    cells: int


def sample_roi(
    plane: IncidentPlane,
    radius: float = DEFAULT_RADIUS,
    resolution: int = DEFAULT_RESOLUTION,
) -> RoiGrid:
    """Uniform square-cell grid on the ROI disc around the laser origin.

    Cells cut by the circle keep only their inside part: the area is the
    inside fraction of an 8x8 sub-sampling and the sample point is the
    centroid of the inside sub-samples, so every sample lies in the disc.

    Args:
        plane: Incident plane; the disc is centered on its origin.
        radius: ROI radius in mm.
        resolution: Cells per mm (at least 8).
    """
    if not radius > 0:
        raise ValueError(f"ROI radius must be positive, got {radius}")
    if resolution < MIN_RESOLUTION:
        raise ValueError(f"Resolution must be at least {MIN_RESOLUTION} cells/mm")

    h = 1.0 / resolution
    n = math.ceil(radius / h)
    centers = (np.arange(-n, n) + 0.5) * h
    cu, cw = (a.ravel() for a in np.meshgrid(centers, centers, indexing="ij"))
    sub = ((np.arange(BOUNDARY_SUBSAMPLES) + 0.5) / BOUNDARY_SUBSAMPLES - 0.5) * h
    su, sw = (a.ravel() for a in np.meshgrid(sub, sub, indexing="ij"))

    u = cu[:, None] + su[None, :]
    w = cw[:, None] + sw[None, :]
    inside = u**2 + w**2 <= radius**2
    count = inside.sum(axis=1)
    keep = count > 0
    count = count[keep]
    offsets = np.column_stack(
        [
            np.where(inside[keep], u[keep], 0.0).sum(axis=1) / count,
            np.where(inside[keep], w[keep], 0.0).sum(axis=1) / count,
        ]
    )
    areas = count / BOUNDARY_SUBSAMPLES**2 * h * h

    e1, e2 = plane_basis(plane.normal)
    points = plane.origin + np.outer(offsets[:, 0], e1) + np.outer(offsets[:, 1], e2)
    return RoiGrid(
        plane=plane,
        radius=float(radius),
        resolution=int(resolution),
        offsets=offsets,
        points=points,
        areas=areas,
    )


def predicted_depth_field(model: DepthModel, grid: RoiGrid) -> DepthField:
    """D(p) = f(||p - p^o||) for every ROI sample."""
    return DepthField(np.asarray(model.depth(grid.distances), dtype=np.float64))


def measured_depth_field(
    surface: Surface,
    frame: LocalSurfaceFrame,
    grid: RoiGrid,
    method: str = "linear",
) -> DepthField:
    """Interpolate measured depths of a cavity surface onto the ROI samples.

    Cavity points are projected along the beam onto the incident plane;
    their depth below the local frame is interpolated piecewise-linearly
    (or by nearest sample with method="nearest").

    Raises:
        SparseCoverage: If more than 5% of the samples have no measured
            point within twice the median point spacing.
    """
    plane = grid.plane
    depths = np.atleast_1d(depth_of_cut_measured(surface.points, frame, plane.normal))
    e1, e2 = plane_basis(plane.normal)
    rel = project_to_incident_plane(surface.points, plane) - plane.origin
    uv = np.column_stack([rel @ e1, rel @ e2])

    tree = cKDTree(uv)
    if len(uv) > 1:
        spacing = float(np.median(tree.query(uv, k=2)[0][:, 1]))
    else:
        spacing = 0.0
    gap, nearest = tree.query(grid.offsets)
    uncovered = float(np.mean(gap > COVERAGE_SPACING_FACTOR * spacing))
    if uncovered > MAX_UNCOVERED_FRACTION:
        raise SparseCoverage(uncovered, MAX_UNCOVERED_FRACTION)

    if method == "nearest" or len(uv) < 3:
        values = depths[nearest]
    elif method == "linear":
        values = LinearNDInterpolator(uv, depths)(grid.offsets)
        outside = np.isnan(values)
        values[outside] = depths[nearest[outside]]
    else:
        raise ValueError(f"Unknown interpolation method '{method}'")
    return DepthField(np.maximum(values, 0.0))


def depth_field(
    grid: RoiGrid,
    *,
    model: DepthModel | None = None,
    surface: Surface | None = None,
    frame: LocalSurfaceFrame | None = None,
    method: str = "linear",
) -> DepthField:
    """Depth field from a model (predicted) or from a measured surface and frame."""
    if model is not None:
        return predicted_depth_field(model, grid)
    if surface is None or frame is None:
        raise ValueError("A measured depth field needs both a surface and a frame")
    return measured_depth_field(surface, frame, grid, method)


def cavity_volume(field: DepthField, grid: RoiGrid) -> float:
    """Integral of depth over the ROI (mm^3)."""
    return float(np.dot(field.values, grid.areas))


def compare_cavities(predicted: DepthField, gt: DepthField, grid: RoiGrid) -> VolumetricReport:
    """Over-cut, under-cut and 3D-cavity-IoU of a prediction against ground truth.

    The overlap depth is min(D_predict, D_gt); both cut ratios are relative to
    the ground-truth volume; IoU = 2 V_overlap / (V_gt + V_predict).

    Raises:
        ZeroGroundTruth: If the ground-truth volume is zero.
    """
    if len(predicted.values) != len(grid) or len(gt.values) != len(grid):
        raise ValueError("Depth fields must be sampled on the same grid")
    v_predict = cavity_volume(predicted, grid)
    v_gt = cavity_volume(gt, grid)
    if v_gt <= 0.0:
        raise ZeroGroundTruth("Ground-truth cavity has zero volume; cut ratios are undefined")

    excess = predicted.values - gt.values
    v_overlap = float(np.dot(np.minimum(predicted.values, gt.values), grid.areas))
    v_over = float(np.dot(np.maximum(excess, 0.0), grid.areas))
    v_under = float(np.dot(np.maximum(-excess, 0.0), grid.areas))
    report = VolumetricReport(
        v_predict=v_predict,
        v_gt=v_gt,
        v_overlap=v_overlap,
        over_cut_ratio=100.0 * v_over / v_gt,
        under_cut_ratio=100.0 * v_under / v_gt,
        iou=100.0 * 2.0 * v_overlap / (v_gt + v_predict),
        radius=grid.radius,
        resolution=grid.resolution,
        cells=len(grid),
    )
    logger.info("3D-cavity-IoU %.2f%% (over %.2f%%, under %.2f%%)",
                report.iou, report.over_cut_ratio, report.under_cut_ratio)
    return report


def depth_cells(
    grid: RoiGrid, predicted: DepthField, gt: DepthField
) -> list[tuple[float, ...]]:
    """Per-cell rows (u, w, x, y, z, area, predicted, gt) for plotting."""
    return [
        (float(o[0]), float(o[1]), *map(float, p), float(a), float(dp), float(dg))
        for o, p, a, dp, dg in zip(
            grid.offsets, grid.points, grid.areas, predicted.values, gt.values
        )
    ]


DEPTH_CELL_COLUMNS = ("u", "w", "x", "y", "z", "area", "predicted", "gt")


def field_from_values(values: npt.ArrayLike) -> DepthField:
    return DepthField(np.asarray(values, dtype=np.float64))
