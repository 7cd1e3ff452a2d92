"""
One runner per run command. A runner turns a validated RunConfig into an
Outcome; the management command persists it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
import logging
import math

import numpy as np
import pandas as pd

from config.runconfig import RunConfig
from constructions.gluing import QuadrantGlueSpec, glued_quadrant_field
from constructions.ramp import RampSpec, mismatch_ramp
from constructions.recovery import constant_profile, recovery_sequence
from estimates.equivalence import pointwise_equivalence_probe
from estimates.poincare import poincare_exponent, poincare_probe
from estimates.rigidity import rigidity_ratio_probe
from fields.displacement import DisplacementField, strain
from geometry.circuits import verify_circuits
from geometry.dislocations import rasterize_dislocation
from material.rotations import random_rotations

from .gamma import gamma_dislocated, gamma_elastic, transition_grid
from .sweeps import (
    CROSSOVER_COLUMNS,
    cross_section_sandwich,
    crossover_sweep,
    gamma_convergence_trend,
    m_sensitivity,
    mismatch_scaling,
    overlap_schedule,
    positivity_check,
    rotation_invariance_check,
)

logger = logging.getLogger(__name__)

DEFAULT_R_LIST = (1.0, 2.0, 4.0, 8.0)
DEFAULT_H_LIST = (1.0 / 8.0, 1.0 / 16.0, 1.0 / 32.0)
DEFAULT_DELTA_LIST = (0.02, 0.04, 0.08)


@dataclass
class Outcome:
    label: str
    payload: dict
    summary: list[str]
    tables: dict[str, pd.DataFrame] = field(default_factory=dict)
    plots: dict[str, dict[str, np.ndarray]] = field(default_factory=dict)
    fields: dict[str, tuple[DisplacementField, float]] = field(default_factory=dict)
    flagged: bool = False


def _history_plot(result) -> dict[str, np.ndarray]:
    return {
        "iteration": np.array([record.iteration for record in result.history], dtype=float),
        "energy": np.array([record.energy for record in result.history]),
        "grad_norm": np.array([record.grad_norm for record in result.history]),
    }


def run_gamma(config: RunConfig, threads: int) -> Outcome:
    model = config.model()
    cfg = config.solver_config()
    r, M, a = config.grid_options()
    geometry = config.geometry
    shape = geometry["shape"]
    if geometry.get("polygon") is not None:
        grid = transition_grid(r, M, a, shape)
        spec = rasterize_dislocation(
            geometry["polygon"], grid, geometry["burgers"], scale=geometry["burgers_scale"], label="gamma"
        )
        estimate = gamma_dislocated(r, M, a, spec, model, cfg, shape=shape, slab_depth=geometry["slab_depth"])
    else:
        estimate = gamma_elastic(
            r,
            M,
            a,
            model,
            cfg,
            shape=shape,
            sensitivity=config.experiment.get("sensitivity", False),
            slab_depth=geometry["slab_depth"],
        )
    summary = [
        f"gamma ({estimate.kind}, {shape}, r={r:g}): {estimate.energy:.9e}",
        f"restarts: {', '.join(f'{e:.9e}' for e in estimate.restart_energies)}",
    ]
    if estimate.flagged:
        summary.append("flagged: no restart reached the gradient tolerance")
    if estimate.m_sensitivity is not None:
        summary.append("M-sensitivity: " + ", ".join(f"{e:.6e}" for e in estimate.m_sensitivity))
    return Outcome(
        label=f"{estimate.kind}-{shape}-r{r:g}",
        payload=estimate.as_payload(),
        summary=summary,
        plots={"history": _history_plot(estimate.result)},
        fields={"minimizer": (estimate.field, 1.0)},
        flagged=estimate.flagged,
    )


def run_sweep(config: RunConfig, threads: int) -> Outcome:
    experiment = config.experiment
    r_list = experiment.get("r_list") or list(DEFAULT_R_LIST)
    table, summary = crossover_sweep(
        r_list,
        None,
        config.model(),
        config.solver_config(),
        cells_per_radius=experiment["cells_per_radius"],
        m_factor=experiment["m_factor"],
        tiles_per_side=config.geometry["tiles_per_side"],
        reference_length=experiment["reference_length"],
        strict=experiment.get("strict", False),
        threads=threads,
    )
    crossover = summary["crossover_radius"]
    lines = [
        f"crossover sweep delta={summary['delta']:.6g} over r in {', '.join(f'{r:g}' for r in r_list)}",
        f"crossover radius: {crossover:g}" if crossover is not None else "crossover radius: none in range",
        f"elastic/r^3 spread: {summary['elastic_per_r3_spread']:.3%}",
    ]
    return Outcome(
        label=f"crossover-delta{summary['delta']:.6g}",
        payload={"summary": summary, "rows": table.to_dict(orient="records")},
        summary=lines,
        tables={"crossover": table[CROSSOVER_COLUMNS]},
        plots={
            "elastic": {"r": table["r"].to_numpy(), "energy_per_r3": table["elastic_per_r3"].to_numpy()},
            "dislocated": {"r": table["r"].to_numpy(), "energy_per_r3": table["dislocated_per_r3"].to_numpy()},
        },
        flagged=summary["flagged"],
    )


def _interface_block(config: RunConfig):
    r, M, a = config.grid_options()
    return gamma_elastic(r, M, a, config.model(), config.solver_config(), shape=config.geometry["shape"])


def run_construct(config: RunConfig, threads: int) -> Outcome:
    model = config.model()
    r, M, a = config.grid_options()
    geometry = config.geometry
    kind = config.experiment["construction"]

    if kind == "ramp":
        grid = transition_grid(r, M, a, geometry["shape"])
        u, energy = mismatch_ramp(RampSpec.for_model(model, r), grid, model)
        deviation = strain(u).masked() - np.eye(3)
        bound = float(np.sqrt(np.sum(deviation * deviation, axis=(-2, -1))).max())
        payload = {"energy": energy, "delta": model.mismatch.delta, "max_strain_deviation": bound}
        summary = [f"mismatch ramp energy: {energy:.9e}", f"max |G - I|: {bound:.6e} (2 delta = {2 * model.mismatch.delta:.6e})"]
        return Outcome(f"ramp-r{r:g}", payload, summary, fields={"ramp": (u, 1.0)})

    if kind == "glued":
        tiles = geometry["tiles_per_side"]
        mu = overlap_schedule(r, a, tiles, config.experiment["reference_length"])
        base = gamma_elastic((r + mu) / tiles, M, a, model, config.solver_config(), shape="square")
        spec = QuadrantGlueSpec(
            r=r,
            mu=mu,
            base=base.field,
            tiles_per_side=tiles,
            slab_depth=geometry["slab_depth"],
            strict=config.experiment.get("strict", False),
        )
        u, breakdown = glued_quadrant_field(spec, transition_grid(r, M, a, "square"), model)
        circuits = verify_circuits(strain(u))
        payload = {
            "spec": spec.describe(),
            "base_energy": base.energy,
            "breakdown": breakdown.as_payload(),
            "burgers": {spec.tile_label(i): b.tolist() for i, b in enumerate(spec.burgers_vectors(model.H).values())},
            "circuits": circuits,
        }
        summary = [f"glued field energy: {breakdown.total:.9e}"] + [
            f"  {name}: {value:.9e}" for name, value in breakdown.items.items()
        ]
        return Outcome(f"glued-r{r:g}-n{tiles}", payload, summary, fields={"glued": (u, 1.0)}, flagged=base.flagged)

    block = _interface_block(config)
    h = config.experiment["h"]
    spec = constant_profile(
        block.field, h, math.sqrt(h), block_energy=block.energy, strict=config.experiment.get("strict", False)
    )
    u, breakdown = recovery_sequence(spec, model)
    payload = {"h": h, "sigma": spec.sigma, "block_energy": block.energy, "breakdown": breakdown.as_payload()}
    summary = [f"recovery field (h={h:g}) rescaled energy: {breakdown.total:.9e}", f"interface block gamma: {block.energy:.9e}"]
    return Outcome(f"recovery-h{h:g}", payload, summary, fields={"recovery": (u, h)}, flagged=block.flagged)


def run_probe(config: RunConfig, threads: int) -> Outcome:
    experiment = config.experiment
    r, M, a = config.grid_options()
    grid = transition_grid(r, M, a, config.geometry["shape"])
    p = config.model().p
    seed = config.seed
    samples = experiment["samples"]
    chosen = ("rigidity", "poincare", "equivalence") if experiment["probe"] == "all" else (experiment["probe"],)

    reports = {}
    if "rigidity" in chosen:
        reports["rigidity"] = rigidity_ratio_probe(max(samples, 10), grid, experiment["mode"], p=p, seed=seed)
    if "poincare" in chosen:
        reports["poincare"] = poincare_probe(samples, grid, p, seed=seed, epsilon=experiment["epsilon"])
    if "equivalence" in chosen:
        G = experiment["g_scale"] * np.eye(3)
        reports["equivalence"] = pointwise_equivalence_probe(samples, G, p, seed=seed)

    payload = {name: report.as_payload() for name, report in reports.items()}
    summary = [
        f"{name}: max ratio {report.max_ratio:.6g}, constant {report.calibrated_constant:.6g}, stable={report.stable}"
        for name, report in reports.items()
    ]
    plots = {}
    if "poincare" in chosen:
        fit = poincare_exponent(grid, p, seed=seed)
        payload["poincare_exponent"] = fit.as_payload()
        summary.append(f"poincare exponent: slope {fit.slope:.4f} (needs >= {0.5 * p - 0.15:.4f})")
        plots["poincare_ladder"] = {"epsilon": np.array(fit.epsilons), "lhs": np.array(fit.lhs)}
    table = pd.DataFrame([{"probe": name, **report.as_payload()} for name, report in reports.items()])
    return Outcome(
        f"probe-{experiment['probe']}",
        payload,
        summary,
        tables={"probes": table[["probe", "mode", "samples", "max_ratio", "calibrated_constant", "stable", "seed"]]},
        plots=plots,
        flagged=not all(report.stable for report in reports.values()),
    )


def run_gammaconv(config: RunConfig, threads: int) -> Outcome:
    model = config.model()
    h_list = config.experiment.get("h_list") or list(DEFAULT_H_LIST)
    block = _interface_block(config)
    template = constant_profile(
        block.field, h_list[0], math.sqrt(h_list[0]), block_energy=block.energy, strict=config.experiment.get("strict", False)
    )
    table = gamma_convergence_trend(h_list, template, model, config.solver_config())
    last = table.iloc[-1]
    summary = [
        f"gamma estimate: {block.energy:.9e}",
        *(f"h={row.h:g}: recovery {row.recovery:.9e}, minimized {row.minimized:.9e}" for row in table.itertuples()),
        f"relative gap at h={last['h']:g}: {last['recovery_gap']:.3%}",
    ]
    return Outcome(
        f"gammaconv-r{config.geometry['r']:g}",
        {"gamma_estimate": block.energy, "rows": table.to_dict(orient="records")},
        summary,
        tables={"gammaconv": table},
        plots={"recovery": {"h": table["h"].to_numpy(), "energy": table["recovery"].to_numpy()}},
        flagged=block.flagged,
    )


def run_scaling(config: RunConfig, threads: int) -> Outcome:
    experiment = config.experiment
    model = config.model()
    cfg = config.solver_config()
    r, M, a = config.grid_options()
    shape = config.geometry["shape"]
    deltas = experiment.get("delta_list") or list(DEFAULT_DELTA_LIST)

    table, slopes = mismatch_scaling(deltas, r, M, a, p=model.p, cfg=cfg, shape=shape)
    payload = {"slopes": slopes, "rows": table.to_dict(orient="records")}
    summary = [f"{name}: {value:.4f}" for name, value in slopes.items()]
    checks = experiment.get("checks") or []
    if "positivity" in checks:
        payload["positivity"] = positivity_check(r, M, a, model, cfg, shape=shape, seed=config.seed)
        summary.append(f"positivity: {payload['positivity']['positive']}")
    if "sandwich" in checks:
        payload["sandwich"] = cross_section_sandwich(r, M, a, model, cfg)
        summary.append(f"sandwich holds: {payload['sandwich']['holds']}")
    if "rotation" in checks:
        rotations = random_rotations(experiment["rotations"], np.random.default_rng(config.seed))
        payload["rotation"] = rotation_invariance_check(rotations, r, M, a, model, cfg, shape=shape)
        summary.append(f"rotation invariance: max deviation {payload['rotation']['max_deviation']:.3e}")
    if "sensitivity" in checks:
        payload["sensitivity"] = m_sensitivity(r, M, a, model, cfg, shape=shape)
        summary.append(f"M-sensitivity gaps shrink: {payload['sensitivity']['gaps_shrink']}")
    return Outcome(
        f"scaling-r{r:g}",
        payload,
        summary,
        tables={"scaling": table},
        plots={"ramp": {"delta": table["delta"].to_numpy(), "energy": table["ramp"].to_numpy()}},
    )


RUNNERS = {
    "gamma": run_gamma,
    "sweep": run_sweep,
    "construct": run_construct,
    "probe": run_probe,
    "gammaconv": run_gammaconv,
    "scaling": run_scaling,
}
