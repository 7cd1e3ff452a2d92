"""
Hexahedral grids over (-M, M) × cross-section.

Axis 0 is the rod axis x₁; axes 1 and 2 span the cross-section (x₂, x₃).
The cross-section box is symmetric about the axis with half-width
``n_half * spacing``; cells whose centers fall inside the cross-section are
masked in (stair-cased boundary). Arrays are indexed lexicographically by
(i₁, i₂, i₃) and frozen once the grid is built.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
import hashlib
import logging
import math
from typing import Literal

import numpy as np
from django.core.exceptions import ValidationError

logger = logging.getLogger(__name__)

Shape = Literal["disk", "square"]
MIN_CELLS_ACROSS = 4
_DIVISION_TOL = 1e-9


def _frozen(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class CrossSection:
    shape: Shape
    half_extent: float

    def __post_init__(self):
        if self.shape not in ("disk", "square"):
            raise ValidationError(f"cross-section shape must be 'disk' or 'square', got {self.shape!r}")
        if not np.isfinite(self.half_extent) or self.half_extent <= 0.0:
            raise ValidationError(f"cross-section half_extent must be positive, got {self.half_extent}")

    def contains(self, y, z) -> np.ndarray:
        """Strict interior test."""
        y = np.asarray(y, dtype=float)
        z = np.asarray(z, dtype=float)
        r = self.half_extent
        if self.shape == "disk":
            return y * y + z * z < r * r
        return (np.abs(y) < r) & (np.abs(z) < r)

    def scaled(self, factor: float) -> "CrossSection":
        return CrossSection(self.shape, self.half_extent * factor)

    @property
    def area(self) -> float:
        r = self.half_extent
        return math.pi * r * r if self.shape == "disk" else 4.0 * r * r


@dataclass(frozen=True, eq=False)
class Grid:
    cross_section: CrossSection
    axial_nodes: np.ndarray
    spacing: float
    cell_mask: np.ndarray
    node_mask: np.ndarray

    @property
    def shape(self) -> tuple[int, int, int]:
        return tuple(self.cell_mask.shape)

    @property
    def node_shape(self) -> tuple[int, int, int]:
        return tuple(self.node_mask.shape)

    @property
    def axial_half_length(self) -> float:
        return float(self.axial_nodes[-1])

    @cached_property
    def interface_index(self) -> int:
        """Node layer lying on the interface plane x₁ = 0."""
        return int(np.flatnonzero(self.axial_nodes == 0.0)[0])

    @cached_property
    def cell_lengths(self) -> np.ndarray:
        return _frozen(np.diff(self.axial_nodes))

    @property
    def axial_spacing(self) -> float | None:
        lengths = self.cell_lengths
        return float(lengths[0]) if np.all(lengths == lengths[0]) else None

    @cached_property
    def transverse_nodes(self) -> np.ndarray:
        n = self.shape[1]
        return _frozen((np.arange(n + 1) - n // 2) * self.spacing)

    @cached_property
    def transverse_centers(self) -> np.ndarray:
        n = self.shape[1]
        return _frozen((np.arange(n) + 0.5 - n // 2) * self.spacing)

    @cached_property
    def axial_centers(self) -> np.ndarray:
        return _frozen(0.5 * (self.axial_nodes[1:] + self.axial_nodes[:-1]))

    @cached_property
    def left_cells(self) -> np.ndarray:
        """Per axial layer: True when the cell centers lie in the left phase."""
        return _frozen(self.axial_centers < 0.0)

    @cached_property
    def section_mask(self) -> np.ndarray:
        """Masked cells of one axial layer, shape (n₂, n₃)."""
        return _frozen(self.cell_mask[0].copy())

    @cached_property
    def cell_volumes(self) -> np.ndarray:
        """Per-cell volume, zero outside the mask."""
        volume = self.cell_lengths[:, None, None] * self.spacing**2
        return _frozen(np.where(self.cell_mask, volume, 0.0))

    @property
    def masked_count(self) -> int:
        return int(self.cell_mask.sum())

    def node_coords(self) -> np.ndarray:
        x1, x2, x3 = np.meshgrid(self.axial_nodes, self.transverse_nodes, self.transverse_nodes, indexing="ij")
        return np.stack([x1, x2, x3], axis=-1)

    def cell_centers(self) -> np.ndarray:
        x1, x2, x3 = np.meshgrid(self.axial_centers, self.transverse_centers, self.transverse_centers, indexing="ij")
        return np.stack([x1, x2, x3], axis=-1)

    def face_centers(self) -> np.ndarray:
        """Centers (x₂, x₃) of the axial faces on one node layer, shape (n₂, n₃, 2)."""
        y, z = np.meshgrid(self.transverse_centers, self.transverse_centers, indexing="ij")
        return np.stack([y, z], axis=-1)

    @cached_property
    def digest(self) -> str:
        sha = hashlib.sha1()
        sha.update(f"{self.cross_section.shape}:{self.cross_section.half_extent!r}:{self.spacing!r}".encode())
        sha.update(np.ascontiguousarray(self.axial_nodes).tobytes())
        sha.update(np.packbits(self.cell_mask).tobytes())
        return sha.hexdigest()

    def describe(self) -> dict:
        return {
            "shape": self.cross_section.shape,
            "half_extent": self.cross_section.half_extent,
            "M": self.axial_half_length,
            "spacing": self.spacing,
            "cells": list(self.shape),
            "masked_cells": self.masked_count,
            "digest": self.digest,
        }


def _assemble(cross_section: CrossSection, axial_nodes: np.ndarray, spacing: float) -> Grid:
    n_half = math.ceil(cross_section.half_extent / spacing - _DIVISION_TOL)
    if 2 * n_half < MIN_CELLS_ACROSS or cross_section.half_extent < 2.0 * spacing * (1.0 - _DIVISION_TOL):
        raise ValidationError(
            f"grid under-resolved: half_extent {cross_section.half_extent} needs at least "
            f"{MIN_CELLS_ACROSS} cells of size {spacing} across"
        )
    centers = (np.arange(2 * n_half) + 0.5 - n_half) * spacing
    section = cross_section.contains(centers[:, None], centers[None, :])
    n1 = len(axial_nodes) - 1
    cell_mask = np.broadcast_to(section, (n1,) + section.shape).copy()

    corners = np.zeros((2 * n_half + 1, 2 * n_half + 1), dtype=bool)
    for dj in (0, 1):
        for dk in (0, 1):
            corners[dj : dj + 2 * n_half, dk : dk + 2 * n_half] |= section
    node_mask = np.broadcast_to(corners, (n1 + 1,) + corners.shape).copy()

    return Grid(
        cross_section=cross_section,
        axial_nodes=_frozen(np.asarray(axial_nodes, dtype=float).copy()),
        spacing=float(spacing),
        cell_mask=_frozen(cell_mask),
        node_mask=_frozen(node_mask),
    )


def build_grid(cross_section: CrossSection, M: float, spacing: float, *, transverse_spacing: float | None = None) -> Grid:
    """Uniform grid over (-M, M) × cross-section.

    ``transverse_spacing`` differs from ``spacing`` only for thin-rod grids
    whose cross-section has been scaled by h.
    """
    if not spacing > 0.0 or not M > 0.0:
        raise ValidationError(f"spacing and M must be positive, got spacing={spacing}, M={M}")
    ratio = M / spacing
    n = int(round(ratio))
    if abs(ratio - n) > _DIVISION_TOL * max(1.0, ratio):
        raise ValidationError(f"spacing {spacing} does not divide M = {M}; the interface x1 = 0 must be a grid plane")
    if 2 * n < MIN_CELLS_ACROSS:
        raise ValidationError(f"grid under-resolved: only {2 * n} axial cells")
    axial_nodes = np.arange(-n, n + 1) * float(spacing)
    grid = _assemble(cross_section, axial_nodes, transverse_spacing or spacing)
    logger.debug("built grid %s", grid.describe())
    return grid


def build_graded_grid(cross_section: CrossSection, axial_nodes, spacing: float) -> Grid:
    """Grid with arbitrary increasing axial nodes; one of them must be exactly 0."""
    axial_nodes = np.asarray(axial_nodes, dtype=float)
    if axial_nodes.ndim != 1 or np.any(np.diff(axial_nodes) <= 0.0):
        raise ValidationError("axial nodes must be strictly increasing")
    if not np.any(axial_nodes == 0.0):
        raise ValidationError("axial nodes must contain the interface plane x1 = 0")
    left = int(np.flatnonzero(axial_nodes == 0.0)[0])
    if left < 2 or len(axial_nodes) - 1 - left < 2:
        raise ValidationError("graded grid needs at least two cells on each side of the interface")
    return _assemble(cross_section, axial_nodes, spacing)
