"""
Random displacement samples for the inequality probes.

Sample i of a run with seed s draws from ``default_rng([s, i])``, so doubling
the sample count keeps the first samples unchanged.
"""

from __future__ import annotations

import itertools

import numpy as np

from fields.displacement import cell_gradients
from geometry.grid import Grid

MODES_PER_AXIS = 3
SPIKE_FRACTION = 0.01
SPIKE_MAGNITUDE = 1e3


def sample_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng([seed, index])


def band_limited_field(grid: Grid, rng: np.random.Generator, modes: int = MODES_PER_AXIS) -> np.ndarray:
    """Sum of sine modes on the bounding box, scaled to unit max cell gradient."""
    coords = grid.node_coords()
    lower = coords.reshape(-1, 3).min(axis=0)
    extent = coords.reshape(-1, 3).max(axis=0) - lower
    phases = (coords - lower) / extent
    values = np.zeros(coords.shape)
    for m in itertools.product(range(1, modes + 1), repeat=3):
        amplitude = rng.standard_normal(3) / float(np.dot(m, m))
        shape = np.prod([np.sin(np.pi * m[axis] * phases[..., axis]) for axis in range(3)], axis=0)
        values += shape[..., None] * amplitude
    gradient = cell_gradients(grid, values)[grid.cell_mask]
    size = float(np.sqrt(np.sum(gradient * gradient, axis=(-2, -1))).max())
    return values / size if size > 0.0 else values


def spike_field(
    grid: Grid,
    rng: np.random.Generator,
    fraction: float = SPIKE_FRACTION,
    magnitude: float = SPIKE_MAGNITUDE,
) -> np.ndarray:
    """Isolated nodal kicks giving gradients of order ``magnitude`` in about ``fraction`` of the cells."""
    values = np.zeros(grid.node_shape + (3,))
    candidates = np.argwhere(grid.node_mask)
    count = max(1, int(round(fraction * grid.masked_count / 8.0)))
    chosen = candidates[rng.choice(len(candidates), size=count, replace=False)]
    directions = rng.standard_normal((count, 3))
    directions /= np.linalg.norm(directions, axis=1, keepdims=True)
    values[tuple(chosen.T)] = magnitude * grid.spacing * directions
    return values
