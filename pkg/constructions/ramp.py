"""
Mismatch ramp: the dislocation-free transition between the two wells.

The placement y(x) = φ(x₁) x + (1 - φ(x₁)) H x switches linearly from the
identity to H over |x₁| ≤ w, with φ = 1 for x₁ ≤ -w and φ = 0 for x₁ ≥ w.
Its energy is of order δ² r³ for w = r/2.
"""

from __future__ import annotations

from dataclasses import dataclass
import logging

import numpy as np
from django.core.exceptions import ValidationError

from fields.displacement import DisplacementField
from geometry.grid import Grid
from material.wells import ElasticModel
from solver.energy import total_energy

logger = logging.getLogger(__name__)

_DELTA_TOL = 1e-12


@dataclass(frozen=True)
class RampSpec:
    delta: float
    half_width: float

    def __post_init__(self):
        if not np.isfinite(self.delta) or self.delta < 0.0:
            raise ValidationError(f"ramp delta must be non-negative, got {self.delta}")
        if not self.half_width > 0.0:
            raise ValidationError(f"ramp half-width must be positive, got {self.half_width}")

    @classmethod
    def for_model(cls, model: ElasticModel, radius: float) -> "RampSpec":
        return cls(delta=model.mismatch.delta, half_width=0.5 * radius)

    def profile(self, x1: np.ndarray) -> np.ndarray:
        """φ(x₁)."""
        return np.clip(0.5 - np.asarray(x1, dtype=float) / (2.0 * self.half_width), 0.0, 1.0)


def mismatch_ramp(spec: RampSpec, grid: Grid, model: ElasticModel) -> tuple[DisplacementField, float]:
    if abs(spec.delta - model.mismatch.delta) > _DELTA_TOL * max(1.0, spec.delta):
        raise ValidationError(f"ramp delta {spec.delta} does not match the model mismatch |H - I| = {model.mismatch.delta}")
    outer = max(grid.cell_lengths[0], grid.cell_lengths[-1])
    if grid.axial_half_length < spec.half_width + outer:
        raise ValidationError(
            f"M = {grid.axial_half_length} must exceed the ramp half-width {spec.half_width} by one slab"
        )
    coords = grid.node_coords()
    phi = spec.profile(coords[..., 0])[..., None]
    placement = phi * coords + (1.0 - phi) * (coords @ model.H.T)
    u = DisplacementField(grid, placement)
    energy = total_energy(u, model)
    logger.info("mismatch ramp: delta=%.4g half_width=%.4g energy=%.9e", spec.delta, spec.half_width, energy)
    return u, energy
