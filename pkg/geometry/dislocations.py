"""
Dislocation loops on the interface plane x₁ = 0.

A loop Γ is a closed polygon in the (x₂, x₃) cross-section; the region D it
encloses is rasterized onto the axial faces of the interface node layer. The
displacement jumps by ``scale * burgers`` across every face of D.
"""

from __future__ import annotations

from dataclasses import dataclass
import logging
from typing import Iterable, Sequence

import numpy as np
from django.core.exceptions import ValidationError

from .grid import Grid

logger = logging.getLogger(__name__)

_EDGE_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class DislocationSpec:
    burgers: np.ndarray
    scale: float
    curve: np.ndarray
    faces: np.ndarray
    label: str = "loop"

    def __post_init__(self):
        norm = float(np.linalg.norm(self.burgers))
        if abs(norm - 1.0) > 1e-12:
            raise ValidationError(f"burgers direction must be a unit vector, got |b| = {norm}")
        if not np.isfinite(self.scale) or self.scale < 0.0:
            raise ValidationError(f"burgers scale must be non-negative, got {self.scale}")

    @classmethod
    def from_jump(cls, jump, faces: np.ndarray, curve, label: str) -> "DislocationSpec":
        """Surface carrying an arbitrary jump vector; a zero jump keeps direction e₁."""
        jump = np.asarray(jump, dtype=float)
        scale = float(np.linalg.norm(jump))
        burgers = jump / scale if scale > 0.0 else np.array([1.0, 0.0, 0.0])
        return cls(
            burgers=burgers,
            scale=scale,
            curve=np.asarray(curve, dtype=float),
            faces=np.asarray(faces, dtype=bool),
            label=label,
        )

    @property
    def jump(self) -> np.ndarray:
        return self.scale * np.asarray(self.burgers, dtype=float)

    @property
    def face_count(self) -> int:
        return int(self.faces.sum())

    def area(self, grid: Grid) -> float:
        return self.face_count * grid.spacing**2

    def restricted(self, faces: np.ndarray) -> "DislocationSpec":
        return DislocationSpec(self.burgers, self.scale, self.curve, self.faces & faces, self.label)

    def describe(self) -> dict:
        return {
            "label": self.label,
            "burgers": [float(v) for v in self.burgers],
            "scale": self.scale,
            "faces": self.face_count,
        }


def polygon_area(curve: np.ndarray) -> float:
    x, y = curve[:, 0], curve[:, 1]
    return 0.5 * abs(float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))))


def polygon_perimeter(curve: np.ndarray) -> float:
    return float(np.linalg.norm(np.roll(curve, -1, axis=0) - curve, axis=1).sum())


def _orientation(a, b, c):
    return (b[..., 0] - a[..., 0]) * (c[..., 1] - a[..., 1]) - (b[..., 1] - a[..., 1]) * (c[..., 0] - a[..., 0])


def _segments_cross(p1, p2, q1, q2) -> bool:
    o1, o2 = _orientation(p1, p2, q1), _orientation(p1, p2, q2)
    o3, o4 = _orientation(q1, q2, p1), _orientation(q1, q2, p2)
    if o1 * o2 < 0 and o3 * o4 < 0:
        return True

    def on_segment(a, b, c, o):
        return o == 0 and min(a[0], b[0]) <= c[0] <= max(a[0], b[0]) and min(a[1], b[1]) <= c[1] <= max(a[1], b[1])

    return on_segment(p1, p2, q1, o1) or on_segment(p1, p2, q2, o2) or on_segment(q1, q2, p1, o3) or on_segment(q1, q2, p2, o4)


def is_simple_polygon(curve: np.ndarray) -> bool:
    count = len(curve)
    if count < 3 or polygon_area(curve) == 0.0:
        return False
    for i in range(count):
        p1, p2 = curve[i], curve[(i + 1) % count]
        for j in range(i + 1, count):
            if j == i or (j + 1) % count == i or j == (i + 1) % count:
                continue
            if _segments_cross(p1, p2, curve[j], curve[(j + 1) % count]):
                return False
    return True


def points_in_polygon(points: np.ndarray, curve: np.ndarray) -> np.ndarray:
    """Even-odd test; points on an edge count as inside."""
    px = points[..., 0][..., None]
    py = points[..., 1][..., None]
    x1, y1 = curve[:, 0], curve[:, 1]
    x2, y2 = np.roll(x1, -1), np.roll(y1, -1)

    straddles = (y1 > py) != (y2 > py)
    with np.errstate(divide="ignore", invalid="ignore"):
        x_cross = x1 + (py - y1) * (x2 - x1) / (y2 - y1)
    inside = np.logical_xor.reduce(straddles & (px < x_cross), axis=-1)

    ex, ey = x2 - x1, y2 - y1
    length2 = ex * ex + ey * ey
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.nan_to_num(np.clip(((px - x1) * ex + (py - y1) * ey) / length2, 0.0, 1.0))
    gap = np.hypot(px - (x1 + t * ex), py - (y1 + t * ey))
    scale = max(1.0, float(np.abs(curve).max()))
    on_edge = np.any(gap <= _EDGE_TOL * scale, axis=-1)
    return inside | on_edge


def _closed_curve(curve) -> np.ndarray:
    curve = np.asarray(curve, dtype=float)
    if curve.ndim != 2 or curve.shape[1] != 2:
        raise ValidationError("dislocation curve must be a list of 2-D vertices")
    if len(curve) > 1 and np.array_equal(curve[0], curve[-1]):
        curve = curve[:-1]
    if len(curve) < 3:
        raise ValidationError("dislocation curve needs at least three vertices")
    if not np.all(np.isfinite(curve)):
        raise ValidationError("dislocation curve vertices must be finite")
    return curve


def rasterize_dislocation(
    curve: Sequence[Sequence[float]] | np.ndarray,
    grid: Grid,
    burgers: Sequence[float] | np.ndarray,
    *,
    scale: float = 1.0,
    label: str = "loop",
) -> DislocationSpec:
    """Jump surface of the region enclosed by ``curve`` on the interface faces."""
    curve = _closed_curve(curve)
    burgers = np.asarray(burgers, dtype=float)
    norm = float(np.linalg.norm(burgers))
    if norm == 0.0:
        raise ValidationError("burgers direction must be non-zero")
    if not is_simple_polygon(curve):
        raise ValidationError("dislocation curve must be a simple closed polygon")
    if not np.all(grid.cross_section.contains(curve[:, 0], curve[:, 1])):
        raise ValidationError("dislocation curve must lie strictly inside the cross-section")

    area = polygon_area(curve)
    if area < grid.spacing**2:
        logger.warning("dislocation %s unresolved: enclosed area %.3g is below one face", label, area)
        faces = np.zeros(grid.section_mask.shape, dtype=bool)
    else:
        faces = points_in_polygon(grid.face_centers(), curve) & grid.section_mask
    spec = DislocationSpec(burgers=burgers / norm, scale=float(scale), curve=curve, faces=faces, label=label)
    logger.debug("rasterized %s: %d faces, polygon area %.4g", label, spec.face_count, area)
    return spec


def face_jumps(grid: Grid, jumps: Iterable[DislocationSpec]) -> np.ndarray:
    """Jump vector per interface face, shape (n₂, n₃, 3)."""
    total = np.zeros(grid.section_mask.shape + (3,))
    covered = np.zeros(grid.section_mask.shape, dtype=bool)
    for spec in jumps:
        if spec.faces.shape != covered.shape:
            raise ValidationError(f"jump surface {spec.label} was rasterized for a different grid")
        if np.any(covered & spec.faces):
            raise ValidationError(f"jump surface {spec.label} overlaps another jump surface")
        covered |= spec.faces
        total[spec.faces] += spec.jump
    return total


def circle_polygon(center: Sequence[float], radius: float, vertices: int = 64) -> np.ndarray:
    angles = np.arange(vertices) * (2.0 * np.pi / vertices)
    return np.stack([center[0] + radius * np.cos(angles), center[1] + radius * np.sin(angles)], axis=1)


def square_polygon(center: Sequence[float], half_side: float) -> np.ndarray:
    cx, cy = center
    h = half_side
    return np.array([[cx - h, cy - h], [cx + h, cy - h], [cx + h, cy + h], [cx - h, cy + h]], dtype=float)
