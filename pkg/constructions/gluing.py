"""
Glued tiles: a square-section transition field carrying interface dislocations.

The square Q_r is covered by n × n enlarged tiles of half-side (r + μ)/n that
overlap on stripes of width 2μ/(n - 1). Each tile holds a translated copy of a
base transition field u computed on one enlarged tile. Far from the
interface all copies agree up to constants; matching them on the left and on
the right forces the constant of tile i to change by (H - I)Δᵢ across x₁ = 0,
with Δᵢ = (0, p̃ᵢ - p̃_ref). That change is the Burgers vector of the tile core.
In the overlap stripes the copies are blended with weights that switch over
the wedge |x - c| ≤ |x₁| tan θ̄, tan θ̄ = (half overlap)/M, and switch sharply at
x₁ = 0.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
import itertools
import logging
import math

import numpy as np
from django.core.exceptions import ValidationError

from fields.displacement import DisplacementField
from geometry.dislocations import DislocationSpec, square_polygon
from geometry.grid import CrossSection, Grid, build_graded_grid
from material.wells import ElasticModel
from solver.clamps import EndClamp
from solver.energy import cell_energies

from .breakdown import EnergyBreakdown

logger = logging.getLogger(__name__)

_ALIGN_TOL = 1e-9


def _grid_multiple(value: float, spacing: float) -> int | None:
    ratio = value / spacing
    nearest = round(ratio)
    return int(nearest) if abs(ratio - nearest) <= _ALIGN_TOL * max(1.0, abs(ratio)) else None


def snap_overlap(mu: float, r: float, spacing: float, tiles_per_side: int = 2) -> float:
    """Closest admissible overlap half-width to ``mu`` (at least two cells).

    Admissible: μ/a is a multiple of n - 1 and (r + μ)/a a multiple of n, so
    tile centers and blend junctions fall on grid planes.
    """
    n = tiles_per_side
    q = _grid_multiple(r, spacing)
    if q is None:
        raise ValidationError(f"spacing {spacing} does not divide r = {r}")
    target = mu / spacing
    candidates = [m for m in range(2, 2 * q) if m % (n - 1) == 0 and (q + m) % n == 0]
    if not candidates:
        raise ValidationError(f"no admissible overlap for r = {r} with spacing {spacing}")
    best = min(candidates, key=lambda m: (abs(m - target), -m))
    return best * spacing


@dataclass(frozen=True, eq=False)
class QuadrantGlueSpec:
    r: float
    mu: float
    base: DisplacementField
    tiles_per_side: int = 2
    slab_depth: int = 1
    strict: bool = False

    def __post_init__(self):
        if self.tiles_per_side not in (2, 4):
            raise ValidationError(f"tiles_per_side must be 2 or 4, got {self.tiles_per_side}")
        if not 0.0 < self.mu < self.r:
            raise ValidationError(f"overlap mu must lie in (0, r), got mu={self.mu}, r={self.r}")
        if self.mu > self.r / 8.0:
            if self.strict:
                raise ValidationError(f"overlap mu={self.mu:.4g} exceeds r/8={self.r / 8.0:.4g}")
            logger.warning("overlap mu=%.4g exceeds r/8=%.4g; the sector energy will not be small", self.mu, self.r / 8.0)

    @property
    def M(self) -> float:
        return self.base.grid.axial_half_length

    @property
    def spacing(self) -> float:
        return self.base.grid.spacing

    @property
    def tile_length(self) -> float:
        return 2.0 * (self.r + self.mu) / self.tiles_per_side

    @property
    def overlap(self) -> float:
        return 2.0 * self.mu / (self.tiles_per_side - 1)

    @cached_property
    def starts(self) -> np.ndarray:
        k = np.arange(self.tiles_per_side)
        return -self.r + k * (self.tile_length - self.overlap)

    @cached_property
    def centers(self) -> np.ndarray:
        """Shifted centers p̃ along one axis."""
        return self.starts + 0.5 * self.tile_length

    @cached_property
    def core_centers(self) -> np.ndarray:
        """Centers p of the tile cores along one axis."""
        core = 2.0 * self.r / self.tiles_per_side
        return -self.r + (np.arange(self.tiles_per_side) + 0.5) * core

    @cached_property
    def junctions(self) -> np.ndarray:
        return self.starts[1:] + 0.5 * self.overlap

    @property
    def tan_theta(self) -> float:
        return 0.5 * self.overlap / self.M

    @property
    def reference_tile(self) -> tuple[int, int]:
        return (0, self.tiles_per_side - 1)

    def tile_order(self) -> list[tuple[int, int]]:
        """Tiles in labelling order; the reference tile comes first."""
        n = self.tiles_per_side
        if n == 2:
            return [(0, 1), (1, 1), (1, 0), (0, 0)]
        rest = [tile for tile in itertools.product(range(n), range(n)) if tile != self.reference_tile]
        return [self.reference_tile] + rest

    def tile_label(self, position: int) -> str:
        prefix = "quadrant" if self.tiles_per_side == 2 else "tile"
        return f"{prefix}_{position + 1}"

    def shift(self, tile: tuple[int, int]) -> np.ndarray:
        """Δ = (0, p̃ - p̃_ref)."""
        ref = self.reference_tile
        return np.array(
            [0.0, self.centers[tile[0]] - self.centers[ref[0]], self.centers[tile[1]] - self.centers[ref[1]]]
        )

    def burgers_vectors(self, H: np.ndarray) -> dict[tuple[int, int], np.ndarray]:
        return {tile: (H - np.eye(3)) @ self.shift(tile) for tile in self.tile_order()}

    def validate(self, grid: Grid) -> None:
        a = self.spacing
        if self.mu < 2.0 * a * (1.0 - _ALIGN_TOL):
            raise ValidationError(f"overlap mu={self.mu} is not resolved by at least two cells of size {a}")
        if grid.cross_section.shape != "square" or not math.isclose(grid.cross_section.half_extent, self.r):
            raise ValidationError("glued field needs a square grid of half-side r")
        if not math.isclose(grid.spacing, a) or not np.array_equal(grid.axial_nodes, self.base.grid.axial_nodes):
            raise ValidationError("base field and target grid must share spacing and axial nodes")
        base_section = self.base.grid.cross_section
        if base_section.shape != "square" or not math.isclose(base_section.half_extent, 0.5 * self.tile_length):
            raise ValidationError(f"base field must live on a square of half-side (r + mu)/n = {0.5 * self.tile_length}")
        for name, value in (
            ("r", self.r),
            ("tile half-side", 0.5 * self.tile_length),
            ("half overlap", 0.5 * self.overlap),
        ):
            if _grid_multiple(value, a) is None:
                raise ValidationError(f"{name} = {value} is not a multiple of the spacing {a}; use snap_overlap")
        for center in self.centers:
            if _grid_multiple(center, a) is None:
                raise ValidationError(f"tile center {center} is not on a grid plane; use snap_overlap")

    def describe(self) -> dict:
        return {
            "r": self.r,
            "mu": self.mu,
            "tiles_per_side": self.tiles_per_side,
            "M": self.M,
            "tan_theta": self.tan_theta,
            "centers": [float(c) for c in self.centers],
        }


def base_grid_for(r: float, mu: float, M: float, spacing: float, tiles_per_side: int = 2) -> Grid:
    """Grid of one enlarged tile cylinder, on which the base field is computed."""
    half = (r + mu) / tiles_per_side
    n = _grid_multiple(M, spacing)
    if n is None:
        raise ValidationError(f"spacing {spacing} does not divide M = {M}")
    return build_graded_grid(CrossSection("square", half), np.arange(-n, n + 1) * float(spacing), spacing)


def _axis_weights(x1: np.ndarray, x: np.ndarray, junctions: np.ndarray, tan_theta: float):
    """Per-tile blend weights along one transverse axis, each of shape (len(x1), len(x)).

    Also returns where any weight is strictly between 0 and 1.
    """
    width = np.broadcast_to(np.abs(x1)[:, None] * tan_theta, (len(x1), len(x)))
    rhos = []
    for c in junctions:
        offset = np.broadcast_to(x[None, :] - c, width.shape)
        with np.errstate(divide="ignore", invalid="ignore"):
            s = np.where(width > 0.0, offset / width, np.sign(offset))
        rhos.append(0.5 * (1.0 + np.clip(s, -1.0, 1.0)))
    weights = [1.0 - rhos[0]]
    weights += [rhos[k - 1] - rhos[k] for k in range(1, len(rhos))]
    weights.append(rhos[-1])
    blended = np.zeros(width.shape, dtype=bool)
    for rho in rhos:
        blended |= (rho > 0.0) & (rho < 1.0)
    return weights, blended


def _cells_touching(node_flags: np.ndarray) -> np.ndarray:
    cells = np.zeros(tuple(s - 1 for s in node_flags.shape), dtype=bool)
    for a, b, c in itertools.product((0, 1), repeat=3):
        cells |= node_flags[a : a + cells.shape[0], b : b + cells.shape[1], c : c + cells.shape[2]]
    return cells


def glued_quadrant_field(
    spec: QuadrantGlueSpec, grid: Grid, model: ElasticModel
) -> tuple[DisplacementField, EnergyBreakdown]:
    spec.validate(grid)
    H = model.H
    a = grid.spacing
    base = spec.base
    i0 = grid.interface_index
    x1 = grid.axial_nodes
    xt = grid.transverse_nodes
    q = grid.shape[1] // 2
    qb = base.grid.shape[1] // 2

    w2, blend2 = _axis_weights(x1, xt, spec.junctions, spec.tan_theta)
    w3, blend3 = _axis_weights(x1, xt, spec.junctions, spec.tan_theta)
    side = np.where(np.arange(len(x1)) < i0, 0.0, np.where(np.arange(len(x1)) == i0, 0.5, 1.0))

    placement = np.zeros(grid.node_shape + (3,))
    jumps = []
    last = base.grid.node_shape[1] - 1
    for position, tile in enumerate(spec.tile_order()):
        weight = w2[tile[0]][:, :, None] * w3[tile[1]][:, None, :]
        offsets = [_grid_multiple(spec.centers[axis], a) for axis in tile]
        jb = np.arange(grid.node_shape[1]) - q - offsets[0] + qb
        kb = np.arange(grid.node_shape[2]) - q - offsets[1] + qb
        inside = ((jb >= 0) & (jb <= last))[:, None] & ((kb >= 0) & (kb <= last))[None, :]
        if np.any((weight > 0.0) & ~inside[None]):
            raise ValidationError(f"tile {tile} blends outside the base field; the overlap is inconsistent")
        copy = base.placement[:, np.clip(jb, 0, last)][:, :, np.clip(kb, 0, last)]
        p_tilde = np.array([0.0, spec.centers[tile[0]], spec.centers[tile[1]]])
        burgers = (H - np.eye(3)) @ spec.shift(tile)
        value = copy + p_tilde + side[:, None, None, None] * burgers
        placement += np.where(weight[..., None] > 0.0, weight[..., None] * value, 0.0)

        if tile == spec.reference_tile:
            continue
        core = 2.0 * spec.r / spec.tiles_per_side
        centers = grid.transverse_centers
        lo2, lo3 = -spec.r + tile[0] * core, -spec.r + tile[1] * core
        faces = (
            ((centers >= lo2) & (centers < lo2 + core))[:, None]
            & ((centers >= lo3) & (centers < lo3 + core))[None, :]
            & grid.section_mask
        )
        curve = square_polygon((spec.core_centers[tile[0]], spec.core_centers[tile[1]]), 0.5 * core)
        jumps.append(DislocationSpec.from_jump(burgers, faces, curve, spec.tile_label(position)))

    clamp = EndClamp(np.eye(3), H, spec.slab_depth)
    base_translation = clamp.translation_of(base)
    ref = spec.reference_tile
    p_ref = np.array([0.0, spec.centers[ref[0]], spec.centers[ref[1]]])
    field = clamp.apply(DisplacementField(grid, placement, tuple(jumps)), base_translation - (H - np.eye(3)) @ p_ref)

    energies = cell_energies(field, model)
    sector_1 = _cells_touching(np.broadcast_to(blend2[:, :, None], grid.node_shape)) & grid.cell_mask
    sector_2 = _cells_touching(np.broadcast_to(blend3[:, None, :], grid.node_shape)) & grid.cell_mask & ~sector_1
    tiles = grid.cell_mask & ~sector_1 & ~sector_2
    breakdown = EnergyBreakdown.from_regions(energies, {"tiles": tiles, "sector_1": sector_1, "sector_2": sector_2})
    logger.info(
        "glued %dx%d tiles: r=%.4g mu=%.4g energy=%.9e (tiles %.6e, sectors %.6e + %.6e)",
        spec.tiles_per_side,
        spec.tiles_per_side,
        spec.r,
        spec.mu,
        breakdown.total,
        breakdown.items["tiles"],
        breakdown.items["sector_1"],
        breakdown.items["sector_2"],
    )
    return field, breakdown


def restrict_to_disk(u: DisplacementField) -> DisplacementField:
    """Restriction of a square-section field to the inscribed disk."""
    section = u.grid.cross_section
    if section.shape != "square":
        raise ValidationError("only square-section fields can be restricted to the inscribed disk")
    disk = build_graded_grid(CrossSection("disk", section.half_extent), u.grid.axial_nodes, u.grid.spacing)
    if disk.node_shape != u.grid.node_shape:
        raise ValidationError("inscribed disk grid does not conform to the square grid")
    jumps = tuple(spec.restricted(disk.section_mask) for spec in u.jumps)
    return DisplacementField(disk, u.placement.copy(), jumps)
