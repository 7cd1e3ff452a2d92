"""Affine end slabs of the competitor class: F = P far left, F = Q far right."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from django.core.exceptions import ValidationError

from fields.displacement import DisplacementField
from geometry.grid import Grid

_CLAMP_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class EndClamp:
    P: np.ndarray = field(default_factory=lambda: np.eye(3))
    Q: np.ndarray = field(default_factory=lambda: np.eye(3))
    slab_depth: int = 1

    def __post_init__(self):
        for name in ("P", "Q"):
            matrix = np.asarray(getattr(self, name), dtype=float)
            if matrix.shape != (3, 3) or not np.all(np.isfinite(matrix)):
                raise ValidationError(f"clamp {name} must be a finite 3x3 matrix")
            object.__setattr__(self, name, matrix)
        if int(self.slab_depth) < 1:
            raise ValidationError(f"slab_depth must be at least 1, got {self.slab_depth}")

    def node_masks(self, grid: Grid) -> tuple[np.ndarray, np.ndarray]:
        """(left slab, right slab) node masks."""
        i0 = grid.interface_index
        n1 = grid.shape[0]
        if self.slab_depth >= i0 or n1 - self.slab_depth <= i0:
            raise ValidationError(f"slab_depth {self.slab_depth} reaches the interface; increase M")
        axial = np.arange(n1 + 1)[:, None, None]
        left = grid.node_mask & (axial <= self.slab_depth)
        right = grid.node_mask & (axial >= n1 - self.slab_depth)
        return left, right

    def targets(self, grid: Grid, translation=None) -> tuple[np.ndarray, np.ndarray]:
        """Slab placements P x and Q x + c for the masked slab nodes."""
        left, right = self.node_masks(grid)
        coords = grid.node_coords()
        left_values = coords[left] @ self.P.T
        right_values = coords[right] @ self.Q.T
        if translation is not None:
            right_values = right_values + np.asarray(translation, dtype=float)
        return left_values, right_values

    def translation_of(self, u: DisplacementField) -> np.ndarray:
        _, right = self.node_masks(u.grid)
        _, affine = self.targets(u.grid)
        return np.mean(u.placement[right] - affine, axis=0)

    def check(self, u: DisplacementField) -> np.ndarray:
        """Raise unless u matches the slabs; returns the right translation."""
        left_target, right_target = self.targets(u.grid)
        left, right = self.node_masks(u.grid)
        scale = 1.0 + float(np.abs(u.placement).max())
        if np.abs(u.placement[left] - left_target).max() > _CLAMP_TOL * scale:
            raise ValidationError("initial field does not satisfy the left clamp F = P")
        offset = u.placement[right] - right_target
        translation = offset.mean(axis=0)
        if np.abs(offset - translation).max() > _CLAMP_TOL * scale:
            raise ValidationError("initial field does not satisfy the right clamp F = Q")
        return translation

    def apply(self, u: DisplacementField, translation=None) -> DisplacementField:
        """u with both slabs overwritten by their affine targets."""
        left, right = self.node_masks(u.grid)
        left_values, right_values = self.targets(u.grid, translation)
        placement = u.placement.copy()
        placement[left] = left_values
        placement[right] = right_values
        return u.with_placement(placement)

    def describe(self) -> dict:
        return {"P": self.P.tolist(), "Q": self.Q.tolist(), "slab_depth": int(self.slab_depth)}
