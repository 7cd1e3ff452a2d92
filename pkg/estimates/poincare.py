"""
Poincaré-type probe for truncated energies.

For zero-mean u with ε = ∫ |Du|² ∧ (|Du|^p + 1) < 1 the quantity
∫ (|u|² + |Du|²) ∧ (|Du|^p + |u|^p + 1) is compared with ε^{p/2}.
"""

from __future__ import annotations

from dataclasses import dataclass
import logging

import numpy as np
from django.core.exceptions import ValidationError
from scipy.optimize import brentq
from scipy.stats import linregress

from fields.displacement import cell_gradients
from geometry.grid import Grid
from material.wells import DEFAULT_P

from .generators import band_limited_field, sample_rng, spike_field
from .reports import ProbeReport

logger = logging.getLogger(__name__)

EPSILON_LADDER = (1e-1, 1e-2, 1e-3, 1e-4)
EXPONENT_SLACK = 0.15
DEFAULT_EPSILON = 1e-2


def _cell_values(grid: Grid, nodal: np.ndarray) -> np.ndarray:
    return 0.125 * (
        nodal[:-1, :-1, :-1]
        + nodal[1:, :-1, :-1]
        + nodal[:-1, 1:, :-1]
        + nodal[:-1, :-1, 1:]
        + nodal[1:, 1:, :-1]
        + nodal[1:, :-1, 1:]
        + nodal[:-1, 1:, 1:]
        + nodal[1:, 1:, 1:]
    )


def zero_mean(grid: Grid, nodal: np.ndarray) -> np.ndarray:
    """Shift u so that its cell-averaged integral over the masked domain vanishes."""
    volumes = grid.cell_volumes
    mean = np.einsum("abc,abcj->j", volumes, _cell_values(grid, nodal)) / volumes.sum()
    return nodal - mean


@dataclass(frozen=True)
class PoincareSides:
    epsilon: float
    lhs: float

    def ratio(self, p: float) -> float:
        if self.epsilon == 0.0:
            return 0.0
        return self.lhs / self.epsilon ** (0.5 * p)


def _truncated_dirichlet(D: np.ndarray, volumes: np.ndarray, p: float) -> float:
    norm2 = np.sum(D * D, axis=(-2, -1))
    return float(np.sum(np.minimum(norm2, norm2 ** (0.5 * p) + 1.0) * volumes))


def poincare_sides(grid: Grid, nodal: np.ndarray, p: float) -> PoincareSides:
    mask = grid.cell_mask
    volumes = grid.cell_volumes[mask]
    D = cell_gradients(grid, nodal)[mask]
    u = _cell_values(grid, nodal)[mask]
    du2 = np.sum(D * D, axis=(-2, -1))
    u2 = np.sum(u * u, axis=-1)
    growth = du2 ** (0.5 * p) + u2 ** (0.5 * p) + 1.0
    lhs = float(np.sum(np.minimum(u2 + du2, growth) * volumes))
    return PoincareSides(epsilon=_truncated_dirichlet(D, volumes, p), lhs=lhs)


def scale_to_epsilon(grid: Grid, nodal: np.ndarray, epsilon: float, p: float) -> np.ndarray:
    """Rescale u so that its truncated Dirichlet energy equals ``epsilon``."""
    if not 0.0 < epsilon < 1.0:
        raise ValidationError(f"target energy must lie in (0, 1), got {epsilon}")
    mask = grid.cell_mask
    volumes = grid.cell_volumes[mask]
    D = cell_gradients(grid, nodal)[mask]
    if not np.any(D):
        raise ValidationError("cannot rescale a field with vanishing gradient")

    def gap(log_scale: float) -> float:
        return np.log(_truncated_dirichlet(np.exp(log_scale) * D, volumes, p)) - np.log(epsilon)

    low, high = -60.0, 60.0
    log_scale = brentq(gap, low, high, xtol=1e-14)
    return np.exp(log_scale) * nodal


def poincare_sample(grid: Grid, seed: int, index: int, epsilon: float, p: float, *, spikes: bool = False) -> np.ndarray:
    rng = sample_rng(seed, index)
    values = band_limited_field(grid, rng)
    if spikes:
        values = values + spike_field(grid, rng)
    return scale_to_epsilon(grid, zero_mean(grid, values), epsilon, p)


def poincare_probe(
    samples: int,
    grid: Grid,
    p: float = DEFAULT_P,
    *,
    seed: int = 0,
    epsilon: float = DEFAULT_EPSILON,
    spike_every: int = 2,
) -> ProbeReport:
    if samples < 1:
        raise ValidationError("poincare probe needs at least one sample")
    ratios = np.empty(2 * samples)
    for index in range(2 * samples):
        spikes = spike_every > 0 and index % spike_every == spike_every - 1
        nodal = zero_mean(grid, poincare_sample(grid, seed, index, epsilon, p, spikes=spikes))
        ratios[index] = poincare_sides(grid, nodal, p).ratio(p)
    report = ProbeReport.from_ratios("poincare", "truncated", ratios, samples, seed, p=p, epsilon=epsilon)
    logger.info("poincare probe: constant %.4g at epsilon=%.1e, stable=%s", report.calibrated_constant, epsilon, report.stable)
    return report


@dataclass(frozen=True)
class ExponentFit:
    slope: float
    intercept: float
    epsilons: tuple[float, ...]
    lhs: tuple[float, ...]
    p: float

    @property
    def passes(self) -> bool:
        return self.slope >= 0.5 * self.p - EXPONENT_SLACK

    def as_payload(self) -> dict:
        return {
            "slope": self.slope,
            "intercept": self.intercept,
            "epsilons": list(self.epsilons),
            "lhs": list(self.lhs),
            "p": self.p,
            "passes": self.passes,
        }


def poincare_exponent(grid: Grid, p: float = DEFAULT_P, *, seed: int = 0, ladder=EPSILON_LADDER) -> ExponentFit:
    """Log-log slope of the left side against ε along one sample scaled through ``ladder``."""
    base = zero_mean(grid, band_limited_field(grid, sample_rng(seed, 0)))
    lhs = []
    for epsilon in ladder:
        sides = poincare_sides(grid, zero_mean(grid, scale_to_epsilon(grid, base, epsilon, p)), p)
        lhs.append(sides.lhs)
    fit = linregress(np.log(ladder), np.log(lhs))
    result = ExponentFit(
        slope=float(fit.slope),
        intercept=float(fit.intercept),
        epsilons=tuple(float(e) for e in ladder),
        lhs=tuple(lhs),
        p=p,
    )
    logger.info("poincare exponent: slope %.4f (threshold %.4f)", result.slope, 0.5 * p - EXPONENT_SLACK)
    return result
