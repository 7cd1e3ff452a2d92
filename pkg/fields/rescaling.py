"""
Thin-rod rescaling.

The rod of thickness h, Ω_h = (-L, L) × hS, is pulled back to the fixed domain
Ω = (-L, L) × S through z = (x₁, h x₂, h x₃). Grids of Ω_h and Ω share their
axial nodes and masks, so a field moves between them by copying nodal
placements; gradients transform by F_h = (F¹ | F²/h | F³/h).
"""

from __future__ import annotations

from dataclasses import dataclass, field
import logging
import math

import numpy as np
from django.core.exceptions import ValidationError

from geometry.dislocations import DislocationSpec
from geometry.grid import Grid

from .displacement import DisplacementField, StrainField

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class RescaledField:
    grid: Grid
    matrices: np.ndarray = field(repr=False)
    h: float = 1.0

    def masked(self) -> np.ndarray:
        return self.matrices[self.grid.cell_mask]


def _check_thickness(h: float) -> float:
    h = float(h)
    if not math.isfinite(h) or h <= 0.0:
        raise ValidationError(f"thickness h must be positive, got {h}")
    if h > 1.0:
        raise ValidationError(f"thickness h must not exceed 1, got {h}")
    return h


def rescale_matrices(matrices: np.ndarray, h: float) -> np.ndarray:
    scaled = np.array(matrices, dtype=float, copy=True)
    scaled[..., 1:] /= h
    return scaled


def rescale(strain: StrainField, h: float) -> RescaledField:
    h = _check_thickness(h)
    return RescaledField(strain.grid, rescale_matrices(strain.matrices, h), h)


def thin_grid(grid: Grid, h: float) -> Grid:
    """Grid of Ω_h conforming to ``grid`` (same axial nodes, same masks)."""
    h = _check_thickness(h)
    return Grid(
        cross_section=grid.cross_section.scaled(h),
        axial_nodes=grid.axial_nodes,
        spacing=grid.spacing * h,
        cell_mask=grid.cell_mask,
        node_mask=grid.node_mask,
    )


def _transverse_ratio(source: Grid, target: Grid) -> float:
    if source.shape != target.shape or not np.array_equal(source.axial_nodes, target.axial_nodes):
        raise ValidationError("grids are not conforming: shapes or axial nodes differ")
    if not np.array_equal(source.cell_mask, target.cell_mask):
        raise ValidationError("grids are not conforming: cell masks differ")
    if source.cross_section.shape != target.cross_section.shape:
        raise ValidationError("grids are not conforming: cross-section shapes differ")
    ratio = target.spacing / source.spacing
    extent_ratio = target.cross_section.half_extent / source.cross_section.half_extent
    if not math.isclose(ratio, extent_ratio, rel_tol=1e-12):
        raise ValidationError(
            f"grids are not conforming: spacing ratio {ratio} differs from cross-section ratio {extent_ratio}"
        )
    return ratio


def change_of_variables(u: DisplacementField, target: Grid) -> DisplacementField:
    """Move u onto a conforming grid scaled transversally (either direction).

    The deformation keeps its nodal values; only the reference coordinates and
    the jump curves change.
    """
    ratio = _transverse_ratio(u.grid, target)
    jumps = tuple(
        DislocationSpec(spec.burgers, spec.scale, spec.curve * ratio, spec.faces, spec.label) for spec in u.jumps
    )
    logger.debug("change of variables with transverse ratio %.6g", ratio)
    return DisplacementField(target, u.placement.copy(), jumps)
