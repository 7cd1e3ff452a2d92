from __future__ import annotations

import logging

import numpy as np
from django.core.exceptions import ValidationError

from material.wells import DEFAULT_P, pointwise_equivalence_constants

from .generators import sample_rng
from .reports import ProbeReport, ProbeViolation

logger = logging.getLogger(__name__)

MAGNITUDE_RANGE = (1e-3, 1e3)
RELATIVE_SLACK = 1e-12


def equivalence_samples(samples: int, seed: int, index: int = 0) -> np.ndarray:
    """A = 0 first, then random directions with log-uniform |A| in ``MAGNITUDE_RANGE``."""
    rng = sample_rng(seed, index)
    directions = rng.standard_normal((samples - 1, 3, 3))
    directions /= np.linalg.norm(directions, axis=(1, 2), keepdims=True)
    low, high = np.log(MAGNITUDE_RANGE)
    magnitudes = np.exp(rng.uniform(low, high, samples - 1))
    return np.concatenate([np.zeros((1, 3, 3)), magnitudes[:, None, None] * directions])


def equivalence_sides(A: np.ndarray, G: np.ndarray, p: float) -> tuple[np.ndarray, np.ndarray]:
    """(m(A), |A|² ∧ (|A+G|^p + 1)) with m(A) = |A|² ∧ (|A|^p + 1)."""
    a2 = np.sum(A * A, axis=(-2, -1))
    shifted = A + G
    m = np.minimum(a2, a2 ** (0.5 * p) + 1.0)
    mid = np.minimum(a2, np.sum(shifted * shifted, axis=(-2, -1)) ** (0.5 * p) + 1.0)
    return m, mid


def pointwise_equivalence_probe(samples: int, G, p: float = DEFAULT_P, *, seed: int = 0) -> ProbeReport:
    """Check c₁ m(A) ≤ |A|² ∧ (|A+G|^p + 1) ≤ c₂ m(A) with the constructed constants.

    The reported ratio is mid/m per sample (1 where both vanish); the constants
    themselves are fixed, so every sample of both halves must satisfy them.
    """
    G = np.asarray(G, dtype=float)
    if G.shape != (3, 3) or not np.all(np.isfinite(G)):
        raise ValidationError("G must be a finite 3x3 matrix")
    if samples < 2:
        raise ValidationError("equivalence probe needs at least two samples")
    rho, c1, c2 = pointwise_equivalence_constants(float(np.linalg.norm(G)), p)

    A = np.concatenate([equivalence_samples(samples, seed, 0), equivalence_samples(samples, seed, 1)])
    m, mid = equivalence_sides(A, G, p)
    slack = RELATIVE_SLACK * np.maximum(m, 1.0)
    lower_bad = c1 * m > mid + slack
    upper_bad = mid > c2 * m + slack
    violations = int(np.count_nonzero(lower_bad | upper_bad))
    if violations:
        worst = int(np.flatnonzero(lower_bad | upper_bad)[0])
        raise ProbeViolation(
            f"pointwise equivalence fails on {violations} samples with c1={c1:.6g}, c2={c2:.6g}; "
            f"first at |A|={np.linalg.norm(A[worst]):.6g}"
        )
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = np.where(m > 0.0, mid / m, 1.0)
    report = ProbeReport.from_ratios(
        "equivalence",
        "pointwise",
        ratios,
        samples,
        seed,
        p=p,
        g_norm=float(np.linalg.norm(G)),
        rho=rho,
        c1=c1,
        c2=c2,
        min_ratio=float(ratios.min()),
    )
    logger.info("equivalence probe: c1=%.4g c2=%.4g ratios in [%.4g, %.4g]", c1, c2, ratios.min(), ratios.max())
    return report
