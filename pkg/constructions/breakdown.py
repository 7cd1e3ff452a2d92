from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class EnergyBreakdown:
    """Total energy of a construction with its per-region parts."""

    total: float
    items: dict[str, float] = field(default_factory=dict)

    def __float__(self) -> float:
        return self.total

    def as_payload(self) -> dict:
        return {"total": self.total, **{key: self.items[key] for key in sorted(self.items)}}

    @classmethod
    def from_regions(cls, energies: np.ndarray, regions: dict[str, np.ndarray]) -> "EnergyBreakdown":
        """Sum per-cell energies over disjoint boolean cell regions."""
        items = {name: float(np.sum(np.where(mask, energies, 0.0))) for name, mask in regions.items()}
        return cls(total=float(np.sum(energies)), items=items)
