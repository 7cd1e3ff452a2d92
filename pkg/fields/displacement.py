"""
Nodal deformation fields and their cell-wise gradients.

A field stores the placement y = x + u at every node. Nodes on the interface
layer hold the mean of the two one-sided traces of a jump surface, so a cell
on the left of a jump face sees ``y - b/2`` at its interface corners and a
cell on the right sees ``y + b/2``. The gradient of each cell is the average
of the eight trilinear shape-function gradients, which is exact for affine
placements.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Iterable

import numpy as np
from django.core.exceptions import ValidationError

from geometry.dislocations import DislocationSpec, face_jumps
from geometry.grid import Grid


def _jump_tuple(jumps) -> tuple[DislocationSpec, ...]:
    if jumps is None:
        return ()
    if isinstance(jumps, DislocationSpec):
        return (jumps,)
    return tuple(jumps)


@dataclass(frozen=True, eq=False)
class DisplacementField:
    grid: Grid
    placement: np.ndarray = field(repr=False)
    jumps: tuple[DislocationSpec, ...] = ()

    def __post_init__(self):
        placement = np.asarray(self.placement, dtype=float)
        expected = self.grid.node_shape + (3,)
        if placement.shape != expected:
            raise ValidationError(f"placement must have shape {expected}, got {placement.shape}")
        if not np.all(np.isfinite(placement)):
            raise ValidationError("field values must be finite")
        object.__setattr__(self, "placement", placement)
        object.__setattr__(self, "jumps", _jump_tuple(self.jumps))

    @classmethod
    def identity(cls, grid: Grid, jumps: Iterable[DislocationSpec] | None = None) -> "DisplacementField":
        return cls(grid, grid.node_coords(), _jump_tuple(jumps))

    @classmethod
    def from_displacement(cls, grid: Grid, values, jumps: Iterable[DislocationSpec] | None = None) -> "DisplacementField":
        return cls(grid, grid.node_coords() + np.asarray(values, dtype=float), _jump_tuple(jumps))

    @classmethod
    def from_map(
        cls,
        grid: Grid,
        displacement: Callable[[np.ndarray], np.ndarray],
        jumps: Iterable[DislocationSpec] | None = None,
    ) -> "DisplacementField":
        """Field whose displacement at x is ``displacement(x)``, x of shape (..., 3)."""
        coords = grid.node_coords()
        return cls(grid, coords + displacement(coords), _jump_tuple(jumps))

    @classmethod
    def affine(cls, grid: Grid, A, offset=None, jumps: Iterable[DislocationSpec] | None = None) -> "DisplacementField":
        """Placement y = A x + offset."""
        A = np.asarray(A, dtype=float)
        y = grid.node_coords() @ A.T
        if offset is not None:
            y = y + np.asarray(offset, dtype=float)
        return cls(grid, y, _jump_tuple(jumps))

    @property
    def values(self) -> np.ndarray:
        """Displacement u = y - x."""
        return self.placement - self.grid.node_coords()

    @cached_property
    def face_jumps(self) -> np.ndarray:
        return face_jumps(self.grid, self.jumps)

    def copy(self) -> "DisplacementField":
        return DisplacementField(self.grid, self.placement.copy(), self.jumps)

    def with_jumps(self, jumps: Iterable[DislocationSpec] | None) -> "DisplacementField":
        return DisplacementField(self.grid, self.placement, _jump_tuple(jumps))

    def with_placement(self, placement: np.ndarray) -> "DisplacementField":
        return DisplacementField(self.grid, placement, self.jumps)

    def translated(self, offset) -> "DisplacementField":
        return DisplacementField(self.grid, self.placement + np.asarray(offset, dtype=float), self.jumps)


@dataclass(frozen=True, eq=False)
class StrainField:
    grid: Grid
    matrices: np.ndarray = field(repr=False)
    source: DisplacementField | None = field(default=None, repr=False)

    def masked(self) -> np.ndarray:
        """One 3x3 matrix per masked cell, in lexicographic cell order."""
        return self.matrices[self.grid.cell_mask]


def cell_gradients(grid: Grid, nodal: np.ndarray, face_jump: np.ndarray | None = None) -> np.ndarray:
    """Per-cell deformation gradients, shape (n₁, n₂, n₃, 3, 3); entry [..., i, j] is ∂yᵢ/∂xⱼ."""
    t = grid.spacing
    lengths = grid.cell_lengths[:, None, None, None]

    d1 = nodal[1:] - nodal[:-1]
    g1 = (d1[:, :-1, :-1] + d1[:, 1:, :-1] + d1[:, :-1, 1:] + d1[:, 1:, 1:]) / (4.0 * lengths)
    d2 = nodal[:, 1:] - nodal[:, :-1]
    g2 = (d2[:-1, :, :-1] + d2[1:, :, :-1] + d2[:-1, :, 1:] + d2[1:, :, 1:]) / (4.0 * t)
    d3 = nodal[:, :, 1:] - nodal[:, :, :-1]
    g3 = (d3[:-1, :-1] + d3[1:, :-1] + d3[:-1, 1:] + d3[1:, 1:]) / (4.0 * t)

    if face_jump is not None and np.any(face_jump):
        i0 = grid.interface_index
        # Each interface corner moves by half the face jump, toward the side of the cell.
        g1[i0 - 1] -= face_jump / (2.0 * grid.cell_lengths[i0 - 1])
        g1[i0] -= face_jump / (2.0 * grid.cell_lengths[i0])

    return np.stack([g1, g2, g3], axis=-1)


def strain(u: DisplacementField) -> StrainField:
    """Absolutely continuous part of the gradient of u, jump faces excluded."""
    return StrainField(u.grid, cell_gradients(u.grid, u.placement, u.face_jumps), u)
