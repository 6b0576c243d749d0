"""Line and circle fits of a hand trajectory for articulated-object motion.

A sliding (prismatic) joint shows up as a straight hand path, a hinged
(revolute) one as a circular arc. Both fits are closed form:

* line: principal axis of the centered point cloud (total least squares);
* circle: best-fit plane by PCA, then the Kasa algebraic circle fit in that
  plane. The Kasa fit is biased toward smaller radii on short, noisy arcs.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateGeometry, InsufficientData

PRISMATIC_MARGIN = 0.05
_RANK_TOL = 1e-9


@dataclass(frozen=True)
class LineFit:
    direction: np.ndarray
    range_m: float
    rms_residual: float
    origin: np.ndarray


@dataclass(frozen=True)
class CircleFit:
    center: np.ndarray
    radius: float
    axis: np.ndarray
    swept_angle: float
    rms_residual: float


@dataclass(frozen=True)
class ArticulationModel:
    kind: str  # "prismatic" or "revolute"
    rms_residual: float
    direction: np.ndarray | None = None
    range_m: float | None = None
    center: np.ndarray | None = None
    radius: float | None = None
    axis: np.ndarray | None = None
    swept_angle: float | None = None
    line_residual: float | None = None
    circle_residual: float | None = None

    def to_json(self) -> dict:
        out: dict = {"kind": self.kind}
        if self.kind == "prismatic":
            out["direction"] = [float(v) for v in self.direction]
            out["range_m"] = float(self.range_m)
        else:
            out["axis"] = [float(v) for v in self.axis]
            out["center"] = [float(v) for v in self.center]
            out["radius"] = float(self.radius)
            out["swept_angle_rad"] = float(self.swept_angle)
        out["rms_residual_m"] = float(self.rms_residual)
        out["line_rms_residual_m"] = self.line_residual
        out["circle_rms_residual_m"] = self.circle_residual
        return out


def _as_points(points) -> np.ndarray:
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 3:
        raise ValueError(f"points must have shape (n, 3), got {pts.shape}")
    if not np.all(np.isfinite(pts)):
        raise ValueError("points must be finite")
    return pts


def _principal_axes(pts: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    centroid = pts.mean(axis=0)
    _, sing, vt = np.linalg.svd(pts - centroid, full_matrices=True)
    sing = np.concatenate([sing, np.zeros(3 - sing.size)])
    return centroid, sing, vt


def fit_line(points) -> LineFit:
    """Total-least-squares line through ``points``.

    The direction points from the first sample toward the last, so reversing
    the traversal flips it. ``range_m`` is the extent of the projections onto
    the direction.
    """
    pts = _as_points(points)
    if len(pts) < 2:
        raise InsufficientData("a line fit needs at least 2 points")
    centroid, sing, vt = _principal_axes(pts)
    scale = max(np.abs(pts).max(), 1.0)
    if sing[0] <= _RANK_TOL * scale:
        raise DegenerateGeometry("all points coincide")
    direction = vt[0]
    proj = (pts - centroid) @ direction
    if proj[-1] < proj[0] or (proj[-1] == proj[0] and direction[np.argmax(np.abs(direction))] < 0):
        direction, proj = -direction, -proj
    perp = (pts - centroid) - np.outer(proj, direction)
    rms = float(np.sqrt(np.mean(np.sum(perp**2, axis=1))))
    return LineFit(direction, float(proj.max() - proj.min()), rms, centroid)


def _kasa(x: np.ndarray, y: np.ndarray) -> tuple[float, float, float]:
    # x^2 + y^2 = 2 a x + 2 b y + c, with c = r^2 - a^2 - b^2
    A = np.column_stack([2 * x, 2 * y, np.ones_like(x)])
    rhs = x**2 + y**2
    (a, b, c), *_ = np.linalg.lstsq(A, rhs, rcond=None)
    r2 = c + a * a + b * b
    if not r2 > 0:
        raise DegenerateGeometry("circle fit produced a non-positive radius")
    return float(a), float(b), float(np.sqrt(r2))


def fit_circle(points) -> CircleFit:
    """Plane + Kasa circle fit of a 3-D arc.

    ``axis`` is the plane normal oriented so that the motion turns
    counter-clockwise about it; ``swept_angle`` is the accumulated angle from
    the first to the last point and may exceed pi.
    """
    pts = _as_points(points)
    if len(pts) < 3:
        raise InsufficientData("a circle fit needs at least 3 points")
    centroid, sing, vt = _principal_axes(pts)
    if sing[0] <= _RANK_TOL * max(np.abs(pts).max(), 1.0) or sing[1] <= _RANK_TOL * sing[0]:
        raise DegenerateGeometry("points are collinear")
    u, v, normal = vt[0], vt[1], vt[2]
    rel = pts - centroid
    x, y = rel @ u, rel @ v
    # subtracting the in-plane mean keeps the normal equations well conditioned
    a, b, radius = _kasa(x, y)
    center = centroid + a * u + b * v

    ang = np.arctan2(y - b, x - a)
    steps = np.diff(ang)
    steps = (steps + np.pi) % (2 * np.pi) - np.pi
    signed = float(np.sum(steps))
    axis = np.cross(u, v)
    axis = axis / np.linalg.norm(axis)
    if signed < 0:
        axis = -axis

    h = rel @ normal
    rho = np.hypot(x - a, y - b)
    rms = float(np.sqrt(np.mean(h**2 + (rho - radius) ** 2)))
    return CircleFit(center, radius, axis, abs(signed), rms)


def extent(points) -> float:
    """Span of the points along their principal axis."""
    pts = _as_points(points)
    centroid, _, vt = _principal_axes(pts)
    proj = (pts - centroid) @ vt[0]
    return float(proj.max() - proj.min())


def classify_articulation(points, margin: float = PRISMATIC_MARGIN) -> ArticulationModel:
    """Pick the prismatic or revolute model for a hand path.

    Residuals are divided by the path extent. The circle wins only when its
    normalized residual is below the line's by more than ``margin`` (relative),
    so near-straight arcs stay prismatic.
    """
    pts = _as_points(points)
    if len(pts) < 3:
        raise InsufficientData("classification needs at least 3 points")
    line = fit_line(pts)
    size = extent(pts)
    line_norm = line.rms_residual / size
    try:
        circle = fit_circle(pts)
    except DegenerateGeometry:
        circle = None

    if circle is not None and circle.rms_residual / size < (1.0 - margin) * line_norm:
        return ArticulationModel(
            kind="revolute",
            rms_residual=circle.rms_residual,
            center=circle.center,
            radius=circle.radius,
            axis=circle.axis,
            swept_angle=circle.swept_angle,
            line_residual=line.rms_residual,
            circle_residual=circle.rms_residual,
        )
    return ArticulationModel(
        kind="prismatic",
        rms_residual=line.rms_residual,
        direction=line.direction,
        range_m=line.range_m,
        line_residual=line.rms_residual,
        circle_residual=None if circle is None else circle.rms_residual,
    )
