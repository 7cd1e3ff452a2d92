"""
Recovery fields for the thin-rod limit.

Given a piecewise-rotation profile (R₀..Rₙ left of the interface,
S₀..S_k = Ŝ₀H..Ŝ_kH right of it), a thickness h and a band half-width σ, the
placement on the fixed domain Ω = (-L, L) × S is assembled from segments:

* rigid pieces      y = R (x₁, h x') + c
* rotation bands    y = ∫ P(s) e₁ ds + P(x₁)(0, h x') + l, P a geodesic path
* interface block   y = h v(x₁/h, x') + l₀, v a stored transition field

The constants are fixed by matching traces at every segment boundary, starting
from zero on the leftmost piece. Energies use the F_h rule with prefactor 1/h.
"""

from __future__ import annotations

from dataclasses import dataclass, field
import logging
import math
from typing import Sequence

import numpy as np
from django.core.exceptions import ValidationError
from scipy.spatial.transform import Rotation

from fields.displacement import DisplacementField
from geometry.dislocations import DislocationSpec
from geometry.grid import Grid, build_graded_grid
from material.rotations import is_rotation, rotation_log
from material.wells import ElasticModel
from solver.clamps import EndClamp
from solver.energy import cell_energies

from .breakdown import EnergyBreakdown

logger = logging.getLogger(__name__)

_TRACE_TOL = 1e-10
_QUADRATURE_POINTS = 16


class TraceMismatch(RuntimeError):
    """Adjacent recovery segments cannot be matched by a constant."""


def rotation_path(R0, R1, t):
    """Geodesic R₀ exp(t log(R₀ᵀR₁)); t may be a scalar or an array."""
    R0 = np.asarray(R0, dtype=float)
    R1 = np.asarray(R1, dtype=float)
    if not (is_rotation(R0) and is_rotation(R1)):
        raise ValidationError("rotation_path needs two proper rotations")
    t = np.asarray(t, dtype=float)
    rotvec = rotation_log(R0.T @ R1)
    flat = t.reshape(-1)
    path = R0 @ Rotation.from_rotvec(flat[:, None] * rotvec).as_matrix()
    path[flat == 0.0] = R0
    path[flat == 1.0] = R1
    return path.reshape(t.shape + (3, 3))


@dataclass(frozen=True, eq=False)
class RecoverySpec:
    left_breaks: tuple[float, ...]
    left_rotations: tuple[np.ndarray, ...]
    right_breaks: tuple[float, ...]
    right_rotations: tuple[np.ndarray, ...]
    h: float
    sigma: float
    block: DisplacementField = field(repr=False)
    length: float = 1.0
    axial_spacing: float | None = None
    block_energy: float | None = None
    eta: float | None = None
    slab_depth: int = 1
    strict: bool = False

    def __post_init__(self):
        object.__setattr__(self, "left_breaks", tuple(float(a) for a in self.left_breaks))
        object.__setattr__(self, "right_breaks", tuple(float(b) for b in self.right_breaks))
        object.__setattr__(self, "left_rotations", tuple(np.asarray(R, dtype=float) for R in self.left_rotations))
        object.__setattr__(self, "right_rotations", tuple(np.asarray(S, dtype=float) for S in self.right_rotations))
        if len(self.left_rotations) != len(self.left_breaks) + 1:
            raise ValidationError("left profile needs one rotation more than break points")
        if len(self.right_rotations) != len(self.right_breaks) + 1:
            raise ValidationError("right profile needs one rotation more than break points")
        for R in self.left_rotations + self.right_rotations:
            if not is_rotation(R):
                raise ValidationError("profile matrices must be proper rotations (right ones are multiplied by H)")
        if not 0.0 < self.h <= 1.0:
            raise ValidationError(f"thickness h must lie in (0, 1], got {self.h}")
        if not self.h < self.sigma < 1.0:
            raise ValidationError(f"band half-width must satisfy h < sigma < 1, got h={self.h}, sigma={self.sigma}")
        if self.h * self.block.grid.axial_half_length >= self.sigma:
            raise ValidationError("the rescaled interface block h*M must fit inside (-sigma, sigma)")
        points = (-self.length,) + self.left_breaks + (0.0,) + self.right_breaks + (self.length,)
        gaps = np.diff(points)
        inner = np.concatenate([[gaps[0] - self.sigma], gaps[1:-1] - 2.0 * self.sigma, [gaps[-1] - self.sigma]])
        if np.any(inner <= 0.0):
            raise ValidationError("break points must be more than 2*sigma apart and sigma away from the ends")
        if self.sigma / self.h < 10.0 or self.sigma > 0.1:
            if self.strict:
                raise ValidationError(
                    f"band half-width sigma={self.sigma:.4g} is outside h << sigma << 1 (sigma/h={self.sigma / self.h:.3g})"
                )
            logger.warning(
                "band half-width sigma=%.4g is outside h << sigma << 1 (sigma/h=%.3g)", self.sigma, self.sigma / self.h
            )

    @property
    def R_n(self) -> np.ndarray:
        return self.left_rotations[-1]

    def right_matrices(self, H: np.ndarray) -> list[np.ndarray]:
        return [S @ H for S in self.right_rotations]

    def block_clamp(self, H: np.ndarray) -> EndClamp:
        return EndClamp(self.R_n, self.right_rotations[0] @ H, self.slab_depth)

    def resolved_axial_spacing(self) -> float:
        return self.axial_spacing if self.axial_spacing is not None else self.sigma / 8.0


@dataclass(frozen=True, eq=False)
class _Segment:
    kind: str
    start: float
    end: float
    matrices: tuple[np.ndarray, ...]
    path: tuple[np.ndarray, np.ndarray] | None = None
    anchor: np.ndarray | None = None


def recovery_grid(spec: RecoverySpec) -> Grid:
    """Ω grid: the block's axial nodes scaled by h, coarse nodes outside."""
    block = spec.block.grid
    inner = spec.h * block.axial_nodes
    edge = float(inner[-1])
    coarse = spec.resolved_axial_spacing()
    count = max(2, math.ceil((spec.length - edge) / coarse - 1e-9))
    outer = np.linspace(edge, spec.length, count + 1)[1:]
    nodes = np.concatenate([-outer[::-1], inner, outer])
    return build_graded_grid(block.cross_section, nodes, block.spacing)


def _segments(spec: RecoverySpec, H: np.ndarray) -> list[_Segment]:
    sigma = spec.sigma
    segments = []
    bounds = [-spec.length] + [a for a in spec.left_breaks] + [0.0]
    for index, R in enumerate(spec.left_rotations):
        start = bounds[index] + (sigma if index > 0 else 0.0)
        end = bounds[index + 1] - sigma
        if index > 0:
            a = bounds[index]
            segments.append(_Segment("band", a - sigma, a + sigma, (), (spec.left_rotations[index - 1], R), np.eye(3)))
        segments.append(_Segment("piece", start, end, (R,)))
    segments.append(_Segment("block", -sigma, sigma, ()))
    bounds = [0.0] + [b for b in spec.right_breaks] + [spec.length]
    for index, S in enumerate(spec.right_rotations):
        start = bounds[index] + sigma
        end = bounds[index + 1] - (sigma if index < len(spec.right_rotations) - 1 else 0.0)
        if index > 0:
            b = bounds[index]
            segments.append(_Segment("band", b - sigma, b + sigma, (), (spec.right_rotations[index - 1], S), H))
        segments.append(_Segment("piece", start, end, (S @ H,)))
    return segments


def _band_values(segment: _Segment, x1: np.ndarray, transverse: np.ndarray, h: float) -> np.ndarray:
    width = segment.end - segment.start
    R0, R1 = segment.path
    t = np.clip((x1 - segment.start) / width, 0.0, 1.0)
    nodes, weights = np.polynomial.legendre.leggauss(_QUADRATURE_POINTS)
    s = (nodes[None, :] + 1.0) * 0.5 * t[:, None]
    columns = (rotation_path(R0, R1, s) @ segment.anchor)[..., :, 0]
    integral = 0.5 * width * t[:, None] * np.einsum("q,nqi->ni", weights, columns)
    P = rotation_path(R0, R1, t) @ segment.anchor
    return integral[:, None, None, :] + np.einsum("nij,klj->nkli", P, h * transverse)


def _rigid_values(matrix: np.ndarray, x1: np.ndarray, transverse: np.ndarray, h: float) -> np.ndarray:
    reference = np.zeros((len(x1),) + transverse.shape[:2] + (3,))
    reference[..., 0] = x1[:, None, None]
    reference[..., 1:] = h * transverse[None, :, :, 1:]
    return reference @ matrix.T


def recovery_sequence(
    spec: RecoverySpec, model: ElasticModel, grid: Grid | None = None
) -> tuple[DisplacementField, EnergyBreakdown]:
    """Recovery field on Ω and its rescaled energy (1/h)·∫ W(F_h)."""
    H = model.H
    expected = recovery_grid(spec)
    if grid is None:
        grid = expected
    elif not np.array_equal(grid.axial_nodes, expected.axial_nodes) or grid.digest != expected.digest:
        raise ValidationError("grid does not conform to the recovery layout; build it with recovery_grid")

    h = spec.h
    block = spec.block
    clamp = spec.block_clamp(H)
    clamp.check(block)
    c_right = clamp.translation_of(block)
    block_edge = h * block.grid.axial_half_length

    x1 = grid.axial_nodes
    coords = grid.node_coords()[0]
    transverse = np.zeros(coords.shape[:2] + (3,))
    transverse[..., 1:] = coords[..., 1:]
    scale = 1.0 + spec.length + float(np.abs(coords).max())

    def evaluate(segment: _Segment, points: np.ndarray) -> np.ndarray:
        points = np.atleast_1d(np.asarray(points, dtype=float))
        if segment.kind == "piece":
            return _rigid_values(segment.matrices[0], points, transverse, h)
        if segment.kind == "band":
            return _band_values(segment, points, transverse, h)
        values = np.empty((len(points),) + transverse.shape[:2] + (3,))
        inside = np.abs(points) <= block_edge * (1.0 + 1e-12)
        if np.any(inside):
            z = points[inside] / h
            index = np.searchsorted(block.grid.axial_nodes, z)
            index = np.clip(index, 0, len(block.grid.axial_nodes) - 1)
            if not np.allclose(block.grid.axial_nodes[index], z, rtol=0.0, atol=1e-9 * block.grid.axial_half_length):
                raise ValidationError("block values requested off the block's axial nodes")
            values[inside] = h * block.placement[index]
        left = points < -block_edge * (1.0 + 1e-12)
        right = points > block_edge * (1.0 + 1e-12)
        if np.any(left):
            values[left] = _rigid_values(spec.R_n, points[left], transverse, h)
        if np.any(right):
            values[right] = _rigid_values(clamp.Q, points[right], transverse, h) + h * c_right
        return values

    segments = _segments(spec, H)
    offsets = [np.zeros(3)]
    for previous, current in zip(segments, segments[1:]):
        boundary = current.start
        left_trace = evaluate(previous, boundary)[0] + offsets[-1]
        right_trace = evaluate(current, boundary)[0]
        difference = (left_trace - right_trace)[grid.node_mask[0]]
        offset = difference.mean(axis=0)
        residual = float(np.abs(difference - offset).max())
        if residual > _TRACE_TOL * scale:
            raise TraceMismatch(
                f"{previous.kind} and {current.kind} traces at x1={boundary:.6g} differ by more than a constant "
                f"(residual {residual:.3e})"
            )
        offsets.append(offset)

    placement = np.zeros(grid.node_shape + (3,))
    assigned = np.zeros(len(x1), dtype=bool)
    for segment, offset in zip(segments, offsets):
        selection = (x1 >= segment.start) & (x1 <= segment.end) & ~assigned
        if np.any(selection):
            placement[selection] = evaluate(segment, x1[selection]) + offset
            assigned |= selection
    if not assigned.all():
        raise TraceMismatch("recovery segments do not cover the axial nodes")

    jumps = tuple(
        DislocationSpec(jump.burgers, h * jump.scale, jump.curve, jump.faces, jump.label) for jump in block.jumps
    )
    u = DisplacementField(grid, placement, jumps)

    energies = cell_energies(u, model, thickness=h)
    centers = grid.axial_centers[:, None, None]
    in_block = (np.abs(centers) < spec.sigma) & grid.cell_mask
    in_bands = np.zeros_like(in_block)
    for segment in segments:
        if segment.kind == "band":
            in_bands |= (centers > segment.start) & (centers < segment.end) & grid.cell_mask
    pieces = grid.cell_mask & ~in_block & ~in_bands
    breakdown = EnergyBreakdown.from_regions(
        energies, {"interface_block": in_block, "bands": in_bands, "pieces": pieces}
    )
    logger.info(
        "recovery field: h=%.4g sigma=%.4g rescaled energy=%.9e (block %.6e, bands %.6e)",
        h,
        spec.sigma,
        breakdown.total,
        breakdown.items["interface_block"],
        breakdown.items["bands"],
    )
    return u, breakdown


def constant_profile(block: DisplacementField, h: float, sigma: float, **options) -> RecoverySpec:
    """Profile with one rotation on each side (n = k = 0), both the identity."""
    return RecoverySpec(
        left_breaks=(),
        left_rotations=(np.eye(3),),
        right_breaks=(),
        right_rotations=(np.eye(3),),
        h=h,
        sigma=sigma,
        block=block,
        **options,
    )


def profile_from_lists(
    left_breaks: Sequence[float],
    left_rotations: Sequence[np.ndarray],
    right_breaks: Sequence[float],
    right_rotations: Sequence[np.ndarray],
    **options,
) -> RecoverySpec:
    return RecoverySpec(tuple(left_breaks), tuple(left_rotations), tuple(right_breaks), tuple(right_rotations), **options)
