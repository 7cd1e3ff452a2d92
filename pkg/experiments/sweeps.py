"""
Derived experiments built from the γ estimates and the constructions.

Sweep points travel through huey as plain dicts, so each point function takes
a payload built by ``model_payload`` / ``solver_payload`` and returns a row.
"""

from __future__ import annotations

import dataclasses
import logging
import math
from typing import Sequence

import numpy as np
import pandas as pd
from django.core.exceptions import ValidationError
from scipy.stats import linregress

from constructions.gluing import QuadrantGlueSpec, snap_overlap
from constructions.ramp import RampSpec, mismatch_ramp
from constructions.recovery import RecoverySpec, recovery_sequence
from material.rotations import axis_rotation
from material.wells import ElasticModel, MismatchSpec, incompatibility_margin
from solver.clamps import EndClamp
from solver.descent import SolverConfig, minimize
from solver.energy import total_energy

from .dispatch import run_points
from .gamma import gamma_dislocated, gamma_elastic, m_sensitivity, transition_grid

logger = logging.getLogger(__name__)

CELLS_PER_RADIUS = 16
REFERENCE_LENGTH = 1.0 / 64.0
MIN_SWEEP_POINTS = 4
CROSSOVER_COLUMNS = [
    "r",
    "spacing",
    "mu",
    "M",
    "elastic",
    "dislocated",
    "elastic_per_r3",
    "dislocated_per_r3",
]
SANDWICH_SLACK = 1e-6


def model_payload(model: ElasticModel) -> dict:
    return {"zeta": [float(z) for z in model.mismatch.zeta], "p": model.p}


def model_from_payload(payload: dict) -> ElasticModel:
    return ElasticModel(mismatch=MismatchSpec(zeta=tuple(payload["zeta"])), p=payload["p"])


def solver_payload(cfg: SolverConfig) -> dict:
    return dataclasses.asdict(cfg)


def model_for_delta(delta: float, p: float) -> ElasticModel:
    """Isotropic model with |H - I| = δ."""
    if delta < 0.0 or delta >= math.sqrt(3.0):
        raise ValidationError(f"delta must satisfy 0 <= delta < sqrt(3), got {delta}")
    zeta = 1.0 - delta / math.sqrt(3.0)
    return ElasticModel(mismatch=MismatchSpec(zeta=(zeta, zeta, zeta)), p=p)


def overlap_schedule(r: float, spacing: float, tiles_per_side: int = 2, reference_length: float = REFERENCE_LENGTH) -> float:
    """μ = r^{2/3} ℓ^{1/3} snapped to the closest admissible overlap."""
    target = r ** (2.0 / 3.0) * reference_length ** (1.0 / 3.0)
    return snap_overlap(target, r, spacing, tiles_per_side)


def crossover_point(payload: dict) -> dict:
    """Elastic and glued-dislocated estimates on the square section of half-side r."""
    model = model_from_payload(payload["model"])
    cfg = SolverConfig(**payload["solver"])
    r, a, M = payload["r"], payload["spacing"], payload["M"]
    tiles = payload.get("tiles_per_side", 2)
    mu = overlap_schedule(r, a, tiles, payload.get("reference_length", REFERENCE_LENGTH))

    elastic = gamma_elastic(r, M, a, model, cfg, shape="square")
    base = gamma_elastic((r + mu) / tiles, M, a, model, cfg, shape="square")
    spec = QuadrantGlueSpec(r=r, mu=mu, base=base.field, tiles_per_side=tiles, strict=payload.get("strict", False))
    dislocated = gamma_dislocated(r, M, a, spec, model, cfg)
    return {
        "r": r,
        "spacing": a,
        "mu": mu,
        "M": M,
        "elastic": elastic.energy,
        "dislocated": dislocated.energy,
        "elastic_per_r3": elastic.energy / r**3,
        "dislocated_per_r3": dislocated.energy / r**3,
        "construction": dislocated.construction_energy,
        "circuits": len(dislocated.circuits),
        "flagged": elastic.flagged or base.flagged or dislocated.flagged,
    }


def crossover_sweep(
    r_list: Sequence[float],
    delta: float | None,
    model: ElasticModel | None = None,
    cfg: SolverConfig | None = None,
    *,
    cells_per_radius: int = CELLS_PER_RADIUS,
    m_factor: float = 1.0,
    tiles_per_side: int = 2,
    reference_length: float = REFERENCE_LENGTH,
    strict: bool = False,
    threads: int | None = None,
) -> tuple[pd.DataFrame, dict]:
    """Elastic and dislocated energies per r³ over ``r_list``; returns (table, summary).

    The mismatch comes from ``model``; ``delta`` alone builds an isotropic model
    and, given together with a model, must agree with |H - I|.
    """
    r_list = [float(r) for r in r_list]
    if len(r_list) < MIN_SWEEP_POINTS:
        raise ValidationError(f"crossover sweep needs at least {MIN_SWEEP_POINTS} radii, got {len(r_list)}")
    if any(b <= a for a, b in zip(r_list, r_list[1:])):
        raise ValidationError("radii must be strictly increasing")
    if model is None:
        if delta is None:
            raise ValidationError("crossover sweep needs a model or a mismatch delta")
        model = model_for_delta(delta, ElasticModel().p)
    elif delta is not None and not math.isclose(delta, model.mismatch.delta, rel_tol=1e-9, abs_tol=1e-12):
        raise ValidationError(f"delta={delta:g} disagrees with the model mismatch |H - I| = {model.mismatch.delta:.6g}")
    delta = model.mismatch.delta
    cfg = cfg or SolverConfig()

    payloads = [
        {
            "r": r,
            "spacing": r / cells_per_radius,
            "M": m_factor * r,
            "tiles_per_side": tiles_per_side,
            "reference_length": reference_length,
            "strict": strict,
            "model": model_payload(model),
            "solver": solver_payload(cfg),
        }
        for r in r_list
    ]
    rows = run_points("crossover", payloads, threads)
    table = pd.DataFrame(rows)
    crossing = table[table["dislocated"] < table["elastic"]]
    crossover = float(crossing["r"].iloc[0]) if len(crossing) else None
    per_r3 = table["elastic_per_r3"]
    summary = {
        "delta": delta,
        "crossover_radius": crossover,
        "elastic_per_r3_spread": float((per_r3.max() - per_r3.min()) / per_r3.mean()) if per_r3.mean() > 0 else 0.0,
        "below_unit_elastic": bool(table["dislocated_per_r3"].iloc[-1] < table["elastic_per_r3"].iloc[0]),
        "flagged": bool(table["flagged"].any()),
    }
    if crossover is None:
        logger.info("crossover sweep delta=%.4g: no crossover in range", delta)
    else:
        logger.info("crossover sweep delta=%.4g: r* = %.4g", delta, crossover)
    return table, summary


def rotation_invariance_check(
    R_samples,
    r: float,
    M: float,
    a: float,
    model: ElasticModel,
    cfg: SolverConfig | None = None,
    *,
    shape: str = "disk",
) -> dict:
    """Max relative deviation of γ under clamps (R, R H) from the (I, H) estimate."""
    reference = gamma_elastic(r, M, a, model, cfg, shape=shape).energy
    deviations = []
    for R in R_samples:
        energy = gamma_elastic(r, M, a, model, cfg, shape=shape, rotation=R).energy
        scale = max(abs(reference), np.finfo(float).tiny)
        deviations.append(abs(energy - reference) / scale if reference != 0.0 else abs(energy))
    result = {
        "reference": reference,
        "deviations": deviations,
        "max_deviation": max(deviations, default=0.0),
    }
    logger.info("rotation invariance: max relative deviation %.3e over %d rotations", result["max_deviation"], len(deviations))
    return result


def axial_quarter_turns(count: int = 3) -> list[np.ndarray]:
    """Rotations about e₁ by multiples of 90°, which map the square lattice onto itself."""
    return [axis_rotation(0, k * 0.5 * math.pi) for k in range(1, count + 1)]


def gamma_convergence_trend(
    h_list: Sequence[float],
    spec: RecoverySpec,
    model: ElasticModel,
    cfg: SolverConfig | None = None,
    *,
    sigma_rule=math.sqrt,
    minimize_fields: bool = True,
) -> pd.DataFrame:
    """Rescaled energies of the recovery field and of its relaxation for each h."""
    h_list = [float(h) for h in h_list]
    if any(b >= a for a, b in zip(h_list, h_list[1:])):
        raise ValidationError("thicknesses must be strictly decreasing")
    cfg = cfg or SolverConfig()
    block_clamp = spec.block_clamp(model.H)
    gamma = spec.block_energy if spec.block_energy is not None else total_energy(spec.block, model)
    block_clamp.check(spec.block)

    rows = []
    for h in h_list:
        sigma = sigma_rule(h)
        current = dataclasses.replace(spec, h=h, sigma=sigma)
        field, breakdown = recovery_sequence(current, model)
        row = {
            "h": h,
            "sigma": sigma,
            "recovery": breakdown.total,
            "bands": breakdown.items["bands"],
            "interface_block": breakdown.items["interface_block"],
            "band_constant": breakdown.items["bands"] * sigma / h,
            "gamma_estimate": gamma,
        }
        if minimize_fields:
            thin = np.diag([1.0, h, h])
            clamp = EndClamp(
                current.left_rotations[0] @ thin,
                current.right_rotations[-1] @ model.H @ thin,
                current.slab_depth,
            )
            relaxed = minimize(field, clamp, cfg, model, thickness=h)
            row["minimized"] = relaxed.energy
            row["minimized_converged"] = relaxed.converged
            row["tolerance"] = cfg.tolerance_for(field.grid.masked_count)
        row["recovery_gap"] = (breakdown.total - gamma) / gamma if gamma > 0.0 else breakdown.total
        rows.append(row)
        logger.info("gamma trend h=%.4g: recovery %.9e (gamma %.9e)", h, breakdown.total, gamma)
    return pd.DataFrame(rows)


def mismatch_scaling(
    delta_list: Sequence[float],
    r: float,
    M: float,
    a: float,
    *,
    p: float | None = None,
    cfg: SolverConfig | None = None,
    shape: str = "disk",
    minimize_fields: bool = True,
) -> tuple[pd.DataFrame, dict]:
    """Ramp energy and γ against δ, with log-log slopes."""
    p = p if p is not None else ElasticModel().p
    rows = []
    for delta in delta_list:
        model = model_for_delta(delta, p)
        grid = transition_grid(r, M, a, shape)
        _, ramp_energy = mismatch_ramp(RampSpec.for_model(model, r), grid, model)
        row = {"delta": float(delta), "ramp": ramp_energy}
        if minimize_fields:
            row["gamma"] = gamma_elastic(r, M, a, model, cfg, shape=shape).energy
        rows.append(row)
    table = pd.DataFrame(rows)
    positive = table[table["delta"] > 0.0]
    slopes = {}
    for column in [c for c in ("ramp", "gamma") if c in table]:
        if len(positive) >= 2 and (positive[column] > 0.0).all():
            slopes[f"{column}_slope"] = float(linregress(np.log(positive["delta"]), np.log(positive[column])).slope)
    logger.info("mismatch scaling slopes: %s", slopes)
    return table, slopes


def cross_section_sandwich(
    r: float,
    M: float,
    a: float,
    model: ElasticModel,
    cfg: SolverConfig | None = None,
    *,
    slack: float | None = None,
) -> dict:
    """Disk r, square r and disk √2 r estimates; the square one should lie between the disks."""
    cfg = cfg or SolverConfig()
    inner = gamma_elastic(r, M, a, model, cfg, shape="disk")
    square = gamma_elastic(r, M, a, model, cfg, shape="square")
    outer = gamma_elastic(math.sqrt(2.0) * r, M, a, model, cfg, shape="disk")
    slack = slack if slack is not None else SANDWICH_SLACK * max(outer.energy, 1.0)
    result = {
        "disk_r": inner.energy,
        "square_r": square.energy,
        "disk_sqrt2_r": outer.energy,
        "slack": slack,
        "holds": inner.energy - slack <= square.energy <= outer.energy + slack,
    }
    logger.info("cross-section sandwich r=%.4g: %s", r, result)
    return result


def positivity_check(
    r: float,
    M: float,
    a: float,
    model: ElasticModel,
    cfg: SolverConfig | None = None,
    *,
    shape: str = "disk",
    seed: int = 0,
) -> dict:
    """Elastic estimate against ten solver tolerances, with the well incompatibility margin."""
    cfg = cfg or SolverConfig()
    estimate = gamma_elastic(r, M, a, model, cfg, shape=shape)
    margin = incompatibility_margin(model.H, seed=seed)
    return {
        "energy": estimate.energy,
        "tolerance": estimate.tolerance,
        "positive": estimate.energy > 10.0 * estimate.tolerance,
        "incompatibility": margin.as_payload(),
    }


def gamma_point(payload: dict) -> dict:
    model = model_from_payload(payload["model"])
    cfg = SolverConfig(**payload["solver"])
    rotation = payload.get("rotation")
    estimate = gamma_elastic(
        payload["r"],
        payload["M"],
        payload["spacing"],
        model,
        cfg,
        shape=payload.get("shape", "disk"),
        rotation=None if rotation is None else np.asarray(rotation),
    )
    return estimate.as_payload()


POINT_RUNNERS = {
    "crossover": crossover_point,
    "gamma": gamma_point,
}

__all__ = [
    "CROSSOVER_COLUMNS",
    "axial_quarter_turns",
    "cross_section_sandwich",
    "crossover_sweep",
    "gamma_convergence_trend",
    "m_sensitivity",
    "mismatch_scaling",
    "model_for_delta",
    "overlap_schedule",
    "positivity_check",
    "rotation_invariance_check",
]
