"""
Discrete Burgers circuits along lattice edges.

A loop is an (L, 3) array of node indices, closed (first row equals last) and
moving one node along one axis per step. The circuit is the midpoint rule for
the line integral of the strain: each edge adds its length times the
tangential column of the cells around it. Interface nodes carry the mean of
the two traces; an edge on the left of the plane sees ``y - b/2`` there, an
edge on the right or in the plane sees ``y + b/2`` and uses the right-hand
cells.
"""

from __future__ import annotations

import itertools
from typing import TYPE_CHECKING, Iterable

import numpy as np
from django.core.exceptions import ValidationError

from .dislocations import DislocationSpec, face_jumps
from .grid import Grid

if TYPE_CHECKING:  # pragma: no cover
    from fields.displacement import StrainField


class CirculationMismatch(RuntimeError):
    """Raised when a circuit disagrees with the jump data of its field."""


def plane_node_jumps(grid: Grid, jumps: Iterable[DislocationSpec]) -> tuple[np.ndarray, np.ndarray]:
    """Jump seen at each interface node and whether the node lies on a loop line.

    A node is on the line when its masked neighbouring faces carry different
    jumps.
    """
    per_face = face_jumps(grid, jumps)
    section = grid.section_mask
    n2, n3 = section.shape
    values = np.zeros((n2 + 1, n3 + 1, 3))
    low = np.full((n2 + 1, n3 + 1, 3), np.inf)
    high = np.full((n2 + 1, n3 + 1, 3), -np.inf)
    for dj in (0, 1):
        for dk in (0, 1):
            window = (slice(dj, dj + n2), slice(dk, dk + n3))
            masked = section[..., None]
            low[window] = np.where(masked, np.minimum(low[window], per_face), low[window])
            high[window] = np.where(masked, np.maximum(high[window], per_face), high[window])
    touched = np.isfinite(low[..., 0])
    values[touched] = low[touched]
    on_line = touched & np.any(high > low, axis=-1)
    return values, on_line


def _validate_loop(grid: Grid, loop) -> np.ndarray:
    loop = np.asarray(loop)
    if loop.ndim != 2 or loop.shape[1] != 3 or len(loop) < 2:
        raise ValidationError("loop must be an (L, 3) array of node indices")
    if not np.array_equal(loop[0], loop[-1]):
        raise ValidationError("loop is an open path; the last node must repeat the first")
    loop = loop.astype(int)
    steps = np.abs(np.diff(loop, axis=0))
    if np.any(steps.sum(axis=1) != 1):
        raise ValidationError("loop steps must move one node along a single axis")
    shape = np.array(grid.node_shape)
    if np.any(loop < 0) or np.any(loop >= shape):
        raise ValidationError("loop leaves the grid")
    if not np.all(grid.node_mask[tuple(loop.T)]):
        raise ValidationError("loop visits nodes outside the masked domain")
    return loop


def _adjacent_cells(grid: Grid, lower: np.ndarray, axis: int) -> list[tuple[int, int, int]]:
    """Cells sharing the edge from ``lower`` along ``axis``; in-plane edges take the right side."""
    i0 = grid.interface_index
    ranges = []
    for d in range(3):
        if d == axis:
            ranges.append((int(lower[d]),))
        elif d == 0 and lower[0] == i0:
            ranges.append((i0,))
        else:
            ranges.append(tuple(c for c in (int(lower[d]) - 1, int(lower[d])) if 0 <= c < grid.shape[d]))
    cells = list(itertools.product(*ranges))
    masked = [cell for cell in cells if grid.cell_mask[cell]]
    return masked or cells


def _trace_steps(field, loop: np.ndarray) -> np.ndarray:
    """Per-edge difference of the one-sided traces seen from the edge's side of the interface."""
    grid = field.grid
    i0 = grid.interface_index
    node_jump, on_line = plane_node_jumps(grid, field.jumps)
    start, end = loop[:-1], loop[1:]
    y_start = field.placement[tuple(start.T)].copy()
    y_end = field.placement[tuple(end.T)].copy()

    # Side of the interface each edge sits on: -1 left, +1 right or in-plane.
    side = np.where(np.maximum(start[:, 0], end[:, 0]) <= i0, -1.0, 1.0)
    side = np.where((start[:, 0] == i0) & (end[:, 0] == i0), 1.0, side)
    for nodes, values in ((start, y_start), (end, y_end)):
        at_plane = nodes[:, 0] == i0
        if np.any(on_line[nodes[at_plane, 1], nodes[at_plane, 2]]):
            raise ValidationError("loop touches a dislocation line on the interface")
        b = node_jump[nodes[at_plane, 1], nodes[at_plane, 2]]
        values[at_plane] += 0.5 * side[at_plane, None] * b
    return y_end - y_start


def burgers_circuit(strain: "StrainField", loop) -> np.ndarray:
    """Circulation of the strain along the loop; -(winding)·hb for linking loops.

    Each edge contributes its length times the tangential column of the
    adjacent cells' strain, plus the hourglass part of the placement along the
    edge (the exact edge difference minus the cell mean). The hourglass part
    vanishes on affine cells and does not depend on ``strain.matrices``, so a
    strain that was not derived from its field changes the circuit.
    """
    from fields.displacement import cell_gradients

    field = strain.source
    if field is None:
        raise ValidationError("burgers_circuit needs a strain that carries its source field")
    grid = field.grid
    loop = _validate_loop(grid, loop)
    steps = _trace_steps(field, loop)
    derived = cell_gradients(grid, field.placement, field.face_jumps)
    matrices = np.asarray(strain.matrices)
    if matrices.shape != derived.shape:
        raise ValidationError(f"strain matrices must have shape {derived.shape}, got {matrices.shape}")

    circuit = np.zeros(3)
    for start, end, step in zip(loop[:-1], loop[1:], steps):
        axis = int(np.flatnonzero(end != start)[0])
        lower = np.minimum(start, end)
        sign = 1.0 if end[axis] > start[axis] else -1.0
        length = grid.cell_lengths[lower[0]] if axis == 0 else grid.spacing
        index = tuple(np.array(_adjacent_cells(grid, lower, axis)).T)
        stored = matrices[index][:, :, axis].mean(axis=0)
        mean = derived[index][:, :, axis].mean(axis=0)
        circuit += step + sign * length * (stored - mean)
    return circuit


def crossing_loop(grid: Grid, inside: tuple[int, int], outside: tuple[int, int], *, depth: int = 1, winding: int = 1) -> np.ndarray:
    """Loop that crosses the interface left-to-right at ``inside`` and returns at ``outside``.

    Transverse legs run at axial layers i₀ ± depth, first along x₂, then x₃.
    Negative winding reverses the orientation.
    """
    i0 = grid.interface_index
    left, right = i0 - depth, i0 + depth
    if left < 0 or right >= grid.node_shape[0]:
        raise ValidationError("loop depth exceeds the axial extent")

    def transverse(layer, origin, target):
        path = []
        j, k = origin
        while j != target[0]:
            j += 1 if target[0] > j else -1
            path.append((layer, j, k))
        while k != target[1]:
            k += 1 if target[1] > k else -1
            path.append((layer, j, k))
        return path

    single = [(left, *inside)]
    single += [(i, *inside) for i in range(left + 1, right + 1)]
    single += transverse(right, inside, outside)
    single += [(i, *outside) for i in range(right - 1, left - 1, -1)]
    single += transverse(left, outside, inside)[:-1] if tuple(inside) != tuple(outside) else []
    single.append((left, *inside))

    loop = list(single)
    for _ in range(abs(winding) - 1):
        loop += single[1:]
    loop = np.array(loop, dtype=int)
    return loop[::-1].copy() if winding < 0 else loop


def verification_loops(grid: Grid, jumps: Iterable[DislocationSpec], *, depth: int = 1) -> list[tuple[str, np.ndarray, np.ndarray]]:
    """One linking loop per jump surface with its expected circuit.

    The loop crosses through the interior node of the surface closest to its
    face centroid and returns through the nearest jump-free interior node.
    """
    jumps = tuple(jumps)
    node_jump, on_line = plane_node_jumps(grid, jumps)
    section = grid.section_mask
    n2, n3 = section.shape

    interior = np.zeros((n2 + 1, n3 + 1), dtype=bool)
    interior[1:n2, 1:n3] = section[:-1, :-1] & section[1:, :-1] & section[:-1, 1:] & section[1:, 1:]
    interior &= ~on_line
    free = interior & np.all(node_jump == 0.0, axis=-1)
    for spec in jumps:
        free[1:n2, 1:n3] &= ~(spec.faces[:-1, :-1] | spec.faces[1:, :-1] | spec.faces[:-1, 1:] | spec.faces[1:, 1:])

    loops = []
    for spec in jumps:
        if spec.face_count == 0:
            continue
        owned = np.zeros_like(interior)
        owned[1:n2, 1:n3] = spec.faces[:-1, :-1] & spec.faces[1:, :-1] & spec.faces[:-1, 1:] & spec.faces[1:, 1:]
        owned &= interior
        if not owned.any() or not free.any():
            continue
        face_index = np.argwhere(spec.faces) + 0.5
        centroid = face_index.mean(axis=0)
        candidates = np.argwhere(owned)
        inside = candidates[np.argmin(np.linalg.norm(candidates - centroid, axis=1))]
        exits = np.argwhere(free)
        same_row = exits[exits[:, 1] == inside[1]]
        pool = same_row if len(same_row) else exits
        outside = pool[np.argmin(np.abs(pool - inside).sum(axis=1))]
        loop = crossing_loop(grid, tuple(inside), tuple(outside), depth=depth)
        expected = -(node_jump[tuple(inside)] - node_jump[tuple(outside)])
        loops.append((spec.label, loop, expected))
    return loops


def verify_circuits(strain: "StrainField", *, depth: int = 1, tol: float = 1e-10) -> list[dict]:
    """Re-check every jump surface of the strain's field; raises on disagreement."""
    field = strain.source
    checks = []
    for label, loop, expected in verification_loops(field.grid, field.jumps, depth=depth):
        circuit = burgers_circuit(strain, loop)
        error = float(np.abs(circuit - expected).max())
        if error > tol * (1.0 + float(np.linalg.norm(expected))):
            raise CirculationMismatch(f"circuit around {label} is {circuit.tolist()}, expected {expected.tolist()}")
        checks.append({"label": label, "circuit": [float(c) for c in circuit], "error": error})
    return checks
