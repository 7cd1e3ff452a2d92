from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

STABILITY_BAND = 0.2


class ProbeViolation(RuntimeError):
    """An inequality failed on a sample with the constants under test."""


@dataclass(frozen=True)
class ProbeReport:
    probe: str
    mode: str
    samples: int
    max_ratio: float
    calibrated_constant: float
    stable: bool
    seed: int
    violations: int = 0
    details: dict = field(default_factory=dict)

    @classmethod
    def from_ratios(cls, probe: str, mode: str, ratios: np.ndarray, samples: int, seed: int, **details) -> "ProbeReport":
        """Report over 2n ratios: the constant is calibrated on the first n."""
        ratios = np.asarray(ratios, dtype=float)
        if not np.all(np.isfinite(ratios)):
            raise ProbeViolation(f"{probe} produced a non-finite ratio")
        calibrated = float(ratios[:samples].max())
        overall = float(ratios.max())
        stable = overall <= (1.0 + STABILITY_BAND) * calibrated
        return cls(
            probe=probe,
            mode=mode,
            samples=samples,
            max_ratio=overall,
            calibrated_constant=calibrated,
            stable=bool(stable),
            seed=seed,
            details=details,
        )

    def as_payload(self) -> dict:
        return {
            "probe": self.probe,
            "mode": self.mode,
            "samples": self.samples,
            "max_ratio": self.max_ratio,
            "calibrated_constant": self.calibrated_constant,
            "stable": self.stable,
            "seed": self.seed,
            "violations": self.violations,
            **self.details,
        }
