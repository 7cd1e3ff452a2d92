"""
Rigidity probes on sampled gradient fields.

classic:    ∫ |Du - R|² ≤ C ∫ dist²(Du, SO(3))
truncated:  ∫ |Du - R|² ∧ (|Du|^p + 1) ≤ C ∫ dist²(Du, SO(3)) ∧ (|Du|^p + 1)

The rotation is only approximated, so the reported ratios over-estimate the
best constant of each sample.
"""

from __future__ import annotations

import logging
from typing import Literal

import numpy as np
from django.core.exceptions import ValidationError

from fields.displacement import cell_gradients
from geometry.grid import Grid
from material.rotations import closest_rotations, random_rotations
from material.wells import DEFAULT_P

from .generators import band_limited_field, sample_rng, spike_field
from .reports import ProbeReport, ProbeViolation

logger = logging.getLogger(__name__)

Mode = Literal["classic", "truncated"]
MIN_SAMPLES = 10
REFIT_STEPS = 5
_VANISHING = 1e-20
_RIGID_LHS_TOL = 1e-10


def _sides(G: np.ndarray, R: np.ndarray, volumes: np.ndarray, p: float, mode: Mode) -> tuple[float, float, np.ndarray]:
    residual = G - R
    quadratic = np.sum(residual * residual, axis=(-2, -1))
    nearest = G - closest_rotations(G)
    dist2 = np.sum(nearest * nearest, axis=(-2, -1))
    if mode == "classic":
        return float(np.sum(quadratic * volumes)), float(np.sum(dist2 * volumes)), quadratic
    growth = np.sum(G * G, axis=(-2, -1)) ** (0.5 * p) + 1.0
    truncated = np.minimum(quadratic, growth)
    if np.any(truncated > quadratic):
        raise ProbeViolation("truncated integrand exceeds the quadratic one")
    return float(np.sum(truncated * volumes)), float(np.sum(np.minimum(dist2, growth) * volumes)), truncated


def best_rotation(G: np.ndarray, volumes: np.ndarray, p: float, mode: Mode) -> np.ndarray:
    """Kabsch fit of the mean gradient, refit on the quadratic branch for the truncated side."""
    R = closest_rotations(np.einsum("c,cij->ij", volumes, G))
    if mode == "classic":
        return R
    best, value = R, _sides(G, R, volumes, p, mode)[0]
    for _ in range(REFIT_STEPS):
        growth = np.sum(G * G, axis=(-2, -1)) ** (0.5 * p) + 1.0
        residual = G - best
        active = np.sum(residual * residual, axis=(-2, -1)) <= growth
        if not active.any():
            break
        candidate = closest_rotations(np.einsum("c,cij->ij", volumes * active, G))
        candidate_value = _sides(G, candidate, volumes, p, mode)[0]
        if candidate_value >= value:
            break
        best, value = candidate, candidate_value
    return best


def rigidity_ratio(G: np.ndarray, volumes: np.ndarray, p: float, mode: Mode) -> float:
    R = best_rotation(G, volumes, p, mode)
    lhs, rhs, _ = _sides(G, R, volumes, p, mode)
    if rhs <= _VANISHING * float(volumes.sum()):
        if lhs > _RIGID_LHS_TOL:
            raise ProbeViolation(f"{mode} rigidity fails at a rigid motion: LHS={lhs:.3e} with RHS=0")
        return 1.0
    return lhs / rhs


def rigidity_sample(grid: Grid, seed: int, index: int, *, amplitude: float = 1e-3, spikes: bool = False) -> np.ndarray:
    """Cell gradients of R x + amplitude·smooth (+ spikes)."""
    rng = sample_rng(seed, index)
    R = random_rotations(1, rng)[0]
    values = grid.node_coords() @ R.T + amplitude * band_limited_field(grid, rng)
    if spikes:
        values = values + spike_field(grid, rng)
    return cell_gradients(grid, values)[grid.cell_mask]


def rigidity_ratio_probe(
    samples: int,
    grid: Grid,
    mode: Mode,
    *,
    p: float = DEFAULT_P,
    seed: int = 0,
    amplitude: float = 1e-3,
    spike_every: int = 2,
) -> ProbeReport:
    """Ratios LHS/RHS over 2·samples fields; every ``spike_every``-th field carries outliers."""
    if samples < MIN_SAMPLES:
        raise ValidationError(f"rigidity probe needs at least {MIN_SAMPLES} samples, got {samples}")
    if mode not in ("classic", "truncated"):
        raise ValidationError(f"unknown rigidity mode {mode!r}")
    volumes = grid.cell_volumes[grid.cell_mask]
    ratios = np.empty(2 * samples)
    for index in range(2 * samples):
        spikes = spike_every > 0 and index % spike_every == spike_every - 1
        G = rigidity_sample(grid, seed, index, amplitude=amplitude, spikes=spikes)
        ratios[index] = rigidity_ratio(G, volumes, p, mode)
    report = ProbeReport.from_ratios("rigidity", mode, ratios, samples, seed, p=p, amplitude=amplitude)
    logger.info("rigidity probe (%s): constant %.4g, stable=%s", mode, report.calibrated_constant, report.stable)
    return report
