import datetime as dt
import json
import math
from pathlib import Path

import numpy as np
import pandas as pd
import pytest
from django.core.exceptions import ValidationError
from freezegun import freeze_time

from constructions.ramp import RampSpec, mismatch_ramp
from constructions.recovery import constant_profile, profile_from_lists
from experiments.gamma import gamma_dislocated, gamma_elastic, m_sensitivity, transition_grid
from experiments.models import ExperimentRecord
from experiments.records import config_hash, content_id, persist
from experiments.sweeps import (
    CROSSOVER_COLUMNS,
    axial_quarter_turns,
    cross_section_sandwich,
    crossover_sweep,
    gamma_convergence_trend,
    mismatch_scaling,
    model_for_delta,
    positivity_check,
    rotation_invariance_check,
)
from fields.displacement import DisplacementField
from geometry.dislocations import rasterize_dislocation, square_polygon
from geometry.grid import CrossSection, build_grid
from material.rotations import axis_rotation
from solver.descent import SolverConfig
from tests.factories import ExperimentRecordFactory

R, M, A = 0.25, 0.25, 0.0625
CANONICAL = "material:\n  alpha: 0.05\n"


@pytest.fixture
def quick():
    return SolverConfig(max_iter=20, restarts=0)


@pytest.mark.story("S-106")
def test_stress_free_transition_costs_nothing(flat_model, quick):
    estimate = gamma_elastic(R, M, A, flat_model, quick)
    assert estimate.energy <= 1e-24
    assert estimate.converged
    assert not estimate.flagged
    assert estimate.restart_energies == (estimate.energy,)
    assert estimate.as_payload()["kind"] == "elastic"


@pytest.mark.story("S-106")
def test_minimized_estimate_improves_on_the_ramp(model, quick):
    estimate = gamma_elastic(R, M, A, model, quick)
    grid = transition_grid(R, M, A)
    _, ramp_energy = mismatch_ramp(RampSpec(model.mismatch.delta, 0.125), grid, model)
    assert 0.0 < estimate.energy <= ramp_energy
    assert estimate.field.grid.digest == grid.digest
    assert estimate.per_volume == pytest.approx(estimate.energy / R**3)


@pytest.mark.story("S-106")
def test_empty_jump_reproduces_the_elastic_estimate(model, quick):
    grid = transition_grid(R, M, A)
    loop = rasterize_dislocation(square_polygon((0.0, 0.0), 0.125), grid, [0.0, 1.0, 0.0], scale=0.0, label="flat")
    elastic = gamma_elastic(R, M, A, model, quick)
    dislocated = gamma_dislocated(R, M, A, loop, model, quick)
    assert dislocated.energy == pytest.approx(elastic.energy, rel=1e-9)
    assert dislocated.dislocation == "flat"
    assert [check["label"] for check in dislocated.circuits] == ["flat"]


@pytest.mark.story("S-106")
def test_jump_surface_is_rechecked_on_the_minimizer(model, quick):
    grid = transition_grid(R, M, A)
    loop = rasterize_dislocation(square_polygon((0.0, 0.0), 0.125), grid, [0.0, 1.0, 0.0], scale=0.01, label="core")
    estimate = gamma_dislocated(R, M, A, loop, model, quick)
    assert estimate.circuits[0]["error"] <= 1e-10
    np.testing.assert_allclose(estimate.circuits[0]["circuit"], [0.0, -0.01, 0.0], atol=1e-12)
    wider = rasterize_dislocation(square_polygon((0.0, 0.0), 0.125), transition_grid(0.5, M, A), [0.0, 1.0, 0.0])
    with pytest.raises(ValidationError, match="different grid"):
        gamma_dislocated(R, M, A, wider, model, quick)


@pytest.mark.story("S-106")
def test_m_sensitivity_of_a_stress_free_rod(flat_model, quick):
    report = m_sensitivity(R, M, A, flat_model, quick)
    assert len(report["energies"]) == 3
    assert max(report["energies"]) <= 1e-24
    assert report["monotone"]
    assert report["decay_exponent"] is None


@pytest.mark.story("S-106")
def test_rotated_clamps_leave_the_estimate_unchanged(model, quick):
    identity = rotation_invariance_check([np.eye(3)], R, M, A, model, quick)
    assert identity["max_deviation"] == 0.0
    turned = rotation_invariance_check(axial_quarter_turns(1), R, M, A, model, quick)
    assert turned["max_deviation"] <= 1e-6


@pytest.mark.story("S-106")
def test_crossover_sweep_table(quick):
    radii = [0.5, 1.0, 1.5, 2.0]
    table, summary = crossover_sweep(radii, 0.0, cfg=quick, cells_per_radius=8, threads=1)
    assert set(CROSSOVER_COLUMNS) <= set(table.columns)
    assert table["r"].tolist() == radii
    assert (table["spacing"] == table["r"] / 8).all()
    assert table["elastic"].max() <= 1e-20
    assert summary["delta"] == 0.0
    assert summary["flagged"] is False

    fanned, _ = crossover_sweep(radii, 0.0, cfg=quick, cells_per_radius=8, threads=2)
    pd.testing.assert_frame_equal(fanned, table)


@pytest.mark.story("S-106")
def test_crossover_sweep_needs_increasing_radii(quick):
    with pytest.raises(ValidationError, match="at least 4"):
        crossover_sweep([0.5, 1.0, 2.0], 0.1, cfg=quick)
    with pytest.raises(ValidationError, match="strictly increasing"):
        crossover_sweep([0.5, 1.0, 0.75, 2.0], 0.1, cfg=quick)


@pytest.mark.story("S-106")
def test_recovery_trend_tracks_the_block_energy(model):
    block_grid = build_grid(CrossSection("square", 0.25), 0.25, A)
    block, block_energy = mismatch_ramp(RampSpec(model.mismatch.delta, 0.125), block_grid, model)
    spec = constant_profile(block, 1.0 / 16.0, 0.25)
    table = gamma_convergence_trend([1.0 / 16.0, 1.0 / 64.0], spec, model, minimize_fields=False)
    assert table["sigma"].tolist() == [0.25, 0.125]
    np.testing.assert_allclose(table["gamma_estimate"], block_energy)
    np.testing.assert_allclose(table["recovery"], block_energy, rtol=1e-9)
    assert (table["bands"] == 0.0).all()
    with pytest.raises(ValidationError, match="strictly decreasing"):
        gamma_convergence_trend([1.0 / 64.0, 1.0 / 16.0], spec, model)


@pytest.mark.story("S-106")
def test_ramp_energy_scales_with_the_square_of_the_mismatch():
    table, slopes = mismatch_scaling([0.02, 0.04, 0.08], R, M, A, minimize_fields=False)
    assert "gamma" not in table
    assert 1.9 <= slopes["ramp_slope"] <= 2.1


@pytest.mark.story("S-106")
def test_model_for_delta_has_the_requested_mismatch():
    model = model_for_delta(0.1, 1.5)
    assert model.mismatch.delta == pytest.approx(0.1)
    with pytest.raises(ValidationError):
        model_for_delta(2.0, 1.5)


@pytest.mark.story("S-106")
def test_stress_free_model_is_not_certified_positive(flat_model, quick):
    report = positivity_check(R, M, A, flat_model, quick)
    assert report["positive"] is False
    assert report["incompatibility"]["refined_min"] <= 1e-4


@pytest.mark.story("S-106")
def test_cross_section_sandwich_without_mismatch(flat_model, quick):
    result = cross_section_sandwich(R, M, A, flat_model, quick)
    assert result["holds"]
    assert max(result["disk_r"], result["square_r"], result["disk_sqrt2_r"]) <= 1e-20


def persist_twice(tmp_path):
    table = pd.DataFrame({"r": [1.0, 2.0], "energy": [0.1 / 3.0, 2.0 / 7.0]})
    plots = {"history": {"iteration": np.arange(3.0), "energy": np.array([3.0, 2.0, 1.0])}}
    return [
        persist(
            "gamma",
            "demo",
            canonical_config=CANONICAL,
            seed=3,
            payload={"energy": np.float64(0.25), "rows": (1, 2)},
            tables={"table": table},
            plots=plots,
            out=tmp_path / name,
            code_version="v0.1.0",
            wall_clock_seconds=seconds,
        )
        for name, seconds in (("first", 1.5), ("second", 9.0))
    ]


@pytest.mark.story("S-106")
def test_persisted_files_are_deterministic(tmp_path):
    first, second = persist_twice(tmp_path)
    first_dir, second_dir = Path(first.output_dir), Path(second.output_dir)
    assert first_dir.parent == tmp_path / "first"
    assert first_dir.name == second_dir.name
    for name in ("record.json", "config.yaml", "table.csv", "history.dat"):
        assert (first_dir / name).read_bytes() == (second_dir / name).read_bytes()

    header = f"# config_hash={config_hash(CANONICAL)}"
    assert (first_dir / "table.csv").read_text().splitlines()[0] == header
    assert (first_dir / "config.yaml").read_text().splitlines()[0] == header
    body = json.loads((first_dir / "record.json").read_text())
    assert body["payload"] == {"energy": 0.25, "rows": [1, 2]}
    assert body["content_id"] == content_id(CANONICAL.encode())
    assert "wall_clock_seconds" not in body
    assert not second.flagged
    assert first.same_result_as(second)
    assert ExperimentRecord.objects.count() == 2


@pytest.mark.story("S-106")
def test_content_id_matches_git_blob_ids():
    assert content_id(b"") == "e69de29bb2d1d6434b8b29ae775ad8c2e48c5391"
    assert content_id(b"hello\n") == "ce013625030ba8dba906f756967f9e9ca394464a"


@pytest.mark.story("S-106")
@freeze_time("2026-03-01 12:00:00")
def test_record_rows():
    record = ExperimentRecordFactory(label="demo", flagged=True)
    assert record.created_at == dt.datetime(2026, 3, 1, 12, 0, tzinfo=dt.timezone.utc)
    assert str(record).startswith("gamma:demo [")
    assert str(record).endswith("flagged")
    twin = ExperimentRecordFactory(config_hash=record.config_hash, payload=record.payload, seed=record.seed)
    assert record.same_result_as(twin)
    assert not record.same_result_as(ExperimentRecordFactory(payload={"energy": math.pi}))


@pytest.mark.story("S-106")
def test_crossover_sweep_takes_the_mismatch_from_the_model(model, quick):
    radii = [0.5, 1.0, 1.5, 2.0]
    with pytest.raises(ValidationError, match="disagrees"):
        crossover_sweep(radii, 0.2, model, quick)
    with pytest.raises(ValidationError, match="needs a model"):
        crossover_sweep(radii, None, cfg=quick)


@pytest.mark.story("S-106")
def test_crossover_sweep_with_mismatch(model, quick):
    table, summary = crossover_sweep([0.5, 1.0, 1.5, 2.0], None, model, quick, cells_per_radius=8, threads=1)
    assert summary["delta"] == pytest.approx(model.mismatch.delta)
    assert (table["elastic"] > 0.0).all()
    assert (table["dislocated"] <= table["construction"] * (1.0 + 1e-9)).all()
    assert (table["circuits"] == 3).all()


@pytest.mark.story("S-106")
def test_band_constant_is_stable_under_refinement(flat_model):
    block = DisplacementField.identity(build_grid(CrossSection("square", 0.25), 0.25, A))
    spec = profile_from_lists(
        [-1.0],
        [axis_rotation(0, 0.2), np.eye(3)],
        [],
        [np.eye(3)],
        h=1.0 / 8.0,
        sigma=math.sqrt(1.0 / 8.0),
        block=block,
        length=2.0,
    )
    table = gamma_convergence_trend([1.0 / 8.0, 1.0 / 16.0, 1.0 / 32.0], spec, flat_model, minimize_fields=False)
    assert (table["bands"] > 0.0).all()
    constants = table["band_constant"]
    assert (abs(constants / constants.mean() - 1.0) <= 0.3).all()


@pytest.mark.story("S-106")
def test_minimized_trend_improves_on_the_recovery_field(model):
    block_grid = build_grid(CrossSection("square", 0.25), 0.25, A)
    block, _ = mismatch_ramp(RampSpec(model.mismatch.delta, 0.125), block_grid, model)
    spec = constant_profile(block, 1.0 / 16.0, 0.25)
    table = gamma_convergence_trend([1.0 / 16.0], spec, model, SolverConfig(max_iter=30, restarts=0))
    assert {"minimized", "minimized_converged", "tolerance"} <= set(table.columns)
    assert (table["minimized"] > 0.0).all()
    assert (table["minimized"] <= table["recovery"] * (1.0 + 1e-9)).all()


@pytest.mark.story("S-106")
def test_rerun_with_a_different_result_is_flagged(tmp_path):
    records = [
        persist(
            "gamma",
            "demo",
            canonical_config=CANONICAL,
            seed=3,
            payload={"energy": energy},
            out=tmp_path / name,
            code_version="v0.1.0",
        )
        for name, energy in (("first", 0.25), ("second", 0.5))
    ]
    first, second = records
    assert not first.flagged
    assert second.flagged
    assert ExperimentRecord.objects.get(pk=second.pk).flagged
