"""Laser-incident-plane projection math.

Laser origin, projection of surface points onto the incident plane,
distance-to-laser-center and measured depth-of-cut. All functions accept a
single point of shape (3,) or a batch of shape (M, 3) and are pure.
"""

import math

import numpy as np
import numpy.typing as npt

from cavitykin.domain.models import (
    IncidentPlane,
    LaserConfig,
    LocalSurfaceFrame,
    Surface,
    Vector,
    as_unit,
)
from cavitykin.exceptions import DegenerateProjection, EmptySelection

DEFAULT_STANDOFF = 1.0
DEFAULT_TOP_FRACTION = 0.15
PARALLEL_TOLERANCE = 1e-6


def laser_origin(cfg: LaserConfig, standoff: float = DEFAULT_STANDOFF) -> Vector:
    """Return p^o = p^c - L_ref * v^c."""
    if not standoff > 0:
        raise ValueError(f"Standoff must be positive, got {standoff}")
    return cfg.center - standoff * cfg.direction


def incident_plane(cfg: LaserConfig, standoff: float = DEFAULT_STANDOFF) -> IncidentPlane:
    """Build the incident plane generated by a laser configuration."""
    return IncidentPlane(
        origin=laser_origin(cfg, standoff), normal=cfg.direction, standoff=standoff
    )


def project_to_incident_plane(p: npt.ArrayLike, plane: IncidentPlane) -> Vector:
    """Project points onto the incident plane along the beam axis.

    p_proj = p - [v.(p - p^o) / (v.(-v))] (-v)
    """
    p = np.asarray(p, dtype=np.float64)
    v = plane.normal
    along = (p - plane.origin) @ v / float(v @ -v)
    return p - np.multiply.outer(along, -v)


def distance_to_laser_center(p: npt.ArrayLike, plane: IncidentPlane) -> Vector | float:
    """Radial distance s from each projected point to the laser origin."""
    radial = project_to_incident_plane(p, plane) - plane.origin
    s = np.linalg.norm(radial, axis=-1)
    return float(s) if np.ndim(s) == 0 else s


def depth_of_cut_measured(
    p: npt.ArrayLike, frame: LocalSurfaceFrame, direction: npt.ArrayLike
) -> Vector | float:
    """Depth of each point below the local reference plane, measured along the beam.

    d = || [(-v^N).(p - p^N) / ((-v^N).(-v^c))] (-v^c) ||

    Raises:
        DegenerateProjection: If the beam is parallel to the reference plane.
    """
    v = as_unit(direction)
    n = frame.normal
    denom = float(-n @ -v)
    if abs(denom) <= PARALLEL_TOLERANCE:
        raise DegenerateProjection(
            f"Beam is parallel to the reference plane (|v^N.v^c| = {abs(denom):.3g})"
        )
    p = np.asarray(p, dtype=np.float64)
    t = (p - frame.center) @ -n / denom
    d = np.abs(t) * float(np.linalg.norm(v))
    return float(d) if np.ndim(d) == 0 else d


def top_fraction_mask(depths: npt.ArrayLike, top_fraction: float) -> npt.NDArray[np.bool_]:
    """Select depths in the top quantile by nearest rank; ties are kept."""
    depths = np.asarray(depths, dtype=np.float64)
    if not 0 < top_fraction <= 1:
        raise ValueError(f"top_fraction must lie in (0, 1], got {top_fraction}")
    rank = max(1, math.ceil(top_fraction * len(depths)))
    threshold = np.sort(depths)[::-1][rank - 1]
    return depths >= threshold


def estimate_incident_center(
    cavity: Surface,
    plane: IncidentPlane,
    depths: npt.ArrayLike,
    top_fraction: float = DEFAULT_TOP_FRACTION,
) -> Vector:
    """Estimate the laser center on the incident plane from the deepest points.

    Args:
        cavity: Measured cavity surface.
        plane: Incident plane the points are projected onto.
        depths: Depth-of-cut per cavity point, aligned with cavity rows.
        top_fraction: Quantile of deepest points averaged (default 15%).

    Returns:
        Mean projected coordinate of the selected points.

    Raises:
        EmptySelection: If the cavity has no points or no depths.
    """
    depths = np.asarray(depths, dtype=np.float64)
    if len(cavity) == 0 or depths.size == 0:
        raise EmptySelection("Cannot estimate an incident center from an empty cavity")
    if depths.shape != (len(cavity),):
        raise ValueError(
            f"Got {depths.size} depths for a cavity of {len(cavity)} points"
        )
    selected = cavity.points[top_fraction_mask(depths, top_fraction)]
    return project_to_incident_plane(selected, plane).mean(axis=0)


def plane_basis(normal: npt.ArrayLike) -> tuple[Vector, Vector]:
    """Deterministic orthonormal in-plane axes (e1, e2) for a plane normal."""
    n = as_unit(normal)
    helper = np.zeros(3)
    helper[int(np.argmin(np.abs(n)))] = 1.0
    e1 = np.cross(n, helper)
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(n, e1)
    return e1, e2


def projection_jacobians(
    p: npt.ArrayLike, center: npt.ArrayLike, direction: npt.ArrayLike, standoff: float
) -> tuple[Vector, Vector, Vector]:
    """Projected points and their Jacobians w.r.t. the raw configuration.

    The direction is taken as given (not normalized) so that the Jacobians
    differentiate exactly the function evaluated here. With
    c = v.(p - p^o) / (v.(-v)) the projection is p_proj = p + c v, and

        d p_proj / d p^c = -v v^T / (v.(-v))
        d p_proj / d v^c = c I + v (dc/dv)^T

    where p^o = p^c - L v also moves with v.

    Returns:
        (p_proj of shape (M, 3), d/dp^c of shape (3, 3), d/dv^c of shape (M, 3, 3)).
    """
    p = np.atleast_2d(np.asarray(p, dtype=np.float64))
    v = np.asarray(direction, dtype=np.float64)
    origin = np.asarray(center, dtype=np.float64) - standoff * v
    w = p - origin
    a = w @ v
    b = float(v @ -v)
    c = a / b
    proj = p + np.multiply.outer(c, v)

    d_center = -np.outer(v, v) / b
    dc_dv = (w + standoff * v) / b + np.multiply.outer(2.0 * a / b**2, v)
    d_direction = c[:, None, None] * np.eye(3) + v[None, :, None] * dc_dv[:, None, :]
    return proj, d_center, d_direction


def radial_gradient(
    proj: npt.ArrayLike, origin: npt.ArrayLike, eps: float = 1e-12
) -> tuple[Vector, Vector, npt.NDArray[np.bool_]]:
    """Distance s = ||p_proj - p^o|| and its gradient (p_proj - p^o) / s.

    Points within eps of the origin get a zero sub-gradient and are flagged.

    Returns:
        (s of shape (M,), ds/dp_proj of shape (M, 3), singular mask of shape (M,)).
    """
    radial = np.atleast_2d(proj) - np.asarray(origin, dtype=np.float64)
    s = np.linalg.norm(radial, axis=1)
    singular = s <= eps
    unit = np.divide(radial, s[:, None], out=np.zeros_like(radial), where=~singular[:, None])
    return s, unit, singular
