"""
Discrete elastic energy and its exact nodal gradient.

Each masked cell contributes W_phase(F)·volume with one-point quadrature at
the cell center; the phase is left iff the center has x₁ < 0. For a thin rod
(thickness h < 1) F is the rescaled gradient (G¹ | G²/h | G³/h) and the total
carries the prefactor 1/h. Reductions run over the full cell array in a fixed
order, so the value does not depend on how the cells are visited.
"""

from __future__ import annotations

import logging

import numpy as np

from fields.displacement import DisplacementField, cell_gradients
from geometry.grid import Grid
from material.wells import ElasticModel, well_density

logger = logging.getLogger(__name__)


def _phase_densities(grid: Grid, F: np.ndarray, model: ElasticModel, *, with_gradient: bool):
    mask = grid.cell_mask
    left = mask & grid.left_cells[:, None, None]
    right = mask & ~grid.left_cells[:, None, None]
    density = np.zeros(grid.shape)
    gradient = np.zeros(grid.shape + (3, 3)) if with_gradient else None
    for selection, anchor in ((left, model.well_left), (right, model.well_right)):
        if not selection.any():
            continue
        if with_gradient:
            density[selection], gradient[selection] = well_density(F[selection], anchor, model.p, with_gradient=True)
        else:
            density[selection] = well_density(F[selection], anchor, model.p)
    return density, gradient


def _rescaled(G: np.ndarray, thickness: float) -> np.ndarray:
    if thickness == 1.0:
        return G
    F = G.copy()
    F[..., 1:] /= thickness
    return F


def cell_energies(u: DisplacementField, model: ElasticModel, *, thickness: float = 1.0) -> np.ndarray:
    """Per-cell contributions W·volume/h, zero outside the mask."""
    G = cell_gradients(u.grid, u.placement, u.face_jumps)
    density, _ = _phase_densities(u.grid, _rescaled(G, thickness), model, with_gradient=False)
    return density * u.grid.cell_volumes / thickness


def total_energy(u: DisplacementField, model: ElasticModel, *, thickness: float = 1.0) -> float:
    return float(np.sum(cell_energies(u, model, thickness=thickness)))


def _scatter_to_nodes(grid: Grid, P: np.ndarray) -> np.ndarray:
    """Adjoint of ``cell_gradients``: nodal forces from per-cell dE/dG."""
    lengths = grid.cell_lengths[:, None, None, None]
    axial = P[..., 0] / (4.0 * lengths)
    first = P[..., 1] / (4.0 * grid.spacing)
    second = P[..., 2] / (4.0 * grid.spacing)
    n1, n2, n3 = grid.shape
    nodal = np.zeros(grid.node_shape + (3,))
    for a in (0, 1):
        for b in (0, 1):
            for c in (0, 1):
                nodal[a : a + n1, b : b + n2, c : c + n3] += (
                    (2 * a - 1) * axial + (2 * b - 1) * first + (2 * c - 1) * second
                )
    return nodal


def energy_and_gradient(
    placement: np.ndarray,
    grid: Grid,
    face_jump: np.ndarray | None,
    model: ElasticModel,
    thickness: float = 1.0,
) -> tuple[float, np.ndarray]:
    G = cell_gradients(grid, placement, face_jump)
    density, dW = _phase_densities(grid, _rescaled(G, thickness), model, with_gradient=True)
    weights = grid.cell_volumes / thickness
    energy = float(np.sum(density * weights))
    P = dW * weights[..., None, None]
    if thickness != 1.0:
        P[..., 1:] /= thickness
    return energy, _scatter_to_nodes(grid, P)


def total_gradient(u: DisplacementField, model: ElasticModel, *, thickness: float = 1.0, clamp=None) -> np.ndarray:
    """dE/dy at every node, shape (N₁, N₂, N₃, 3); slab nodes of ``clamp`` are zeroed."""
    _, gradient = energy_and_gradient(u.placement, u.grid, u.face_jumps, model, thickness)
    if clamp is not None:
        left, right = clamp.node_masks(u.grid)
        gradient[left | right] = 0.0
    return gradient
