import numpy as np
import pytest
from django.core.exceptions import ValidationError

from estimates import (
    ProbeReport,
    ProbeViolation,
    pointwise_equivalence_probe,
    poincare_exponent,
    poincare_probe,
    poincare_sides,
    rigidity_ratio,
    rigidity_ratio_probe,
    rigidity_sample,
    scale_to_epsilon,
    zero_mean,
)
from estimates.generators import band_limited_field, sample_rng
from material.rotations import axis_rotation


@pytest.mark.story("S-107")
def test_equivalence_without_shift_is_an_identity():
    report = pointwise_equivalence_probe(50, np.zeros((3, 3)), seed=3)
    assert report.details["c1"] == 1.0
    assert report.details["c2"] == 1.0
    assert report.max_ratio == pytest.approx(1.0)
    assert report.details["min_ratio"] == pytest.approx(1.0)
    assert report.violations == 0


@pytest.mark.story("S-107")
@pytest.mark.parametrize("g", [0.1, 5.0])
def test_equivalence_constants_hold_for_large_shifts(g):
    report = pointwise_equivalence_probe(200, g * np.eye(3), seed=1)
    details = report.details
    assert details["c1"] * (1.0 - 1e-12) <= details["min_ratio"]
    assert report.max_ratio <= details["c2"] * (1.0 + 1e-12)
    assert details["g_norm"] == pytest.approx(g * np.sqrt(3.0))


@pytest.mark.story("S-107")
def test_equivalence_check_arguments():
    with pytest.raises(ValidationError, match="3x3"):
        pointwise_equivalence_probe(10, np.zeros((2, 2)))
    with pytest.raises(ValidationError, match="two samples"):
        pointwise_equivalence_probe(1, np.zeros((3, 3)))


@pytest.mark.story("S-107")
@pytest.mark.parametrize("mode", ["classic", "truncated"])
def test_rigid_gradients_give_the_unit_ratio(mode):
    R = axis_rotation(2, 0.7)
    G = np.broadcast_to(R, (20, 3, 3)).copy()
    assert rigidity_ratio(G, np.full(20, 0.05), 1.5, mode) == 1.0


@pytest.mark.story("S-107")
def test_truncation_is_invisible_without_outliers(disk_grid):
    classic = rigidity_ratio_probe(10, disk_grid, "classic", seed=4, spike_every=0)
    truncated = rigidity_ratio_probe(10, disk_grid, "truncated", seed=4, spike_every=0)
    assert classic.calibrated_constant == pytest.approx(truncated.calibrated_constant, rel=1e-9)
    assert classic.max_ratio >= classic.calibrated_constant
    assert classic.details["amplitude"] == 1e-3


@pytest.mark.story("S-107")
def test_rigidity_check_arguments(disk_grid):
    with pytest.raises(ValidationError, match="at least 10"):
        rigidity_ratio_probe(5, disk_grid, "classic")
    with pytest.raises(ValidationError, match="unknown rigidity mode"):
        rigidity_ratio_probe(10, disk_grid, "linear")


@pytest.mark.story("S-107")
def test_zero_field_has_no_poincare_ratio(disk_grid):
    sides = poincare_sides(disk_grid, np.zeros(disk_grid.node_shape + (3,)), 1.5)
    assert sides.epsilon == 0.0
    assert sides.ratio(1.5) == 0.0


@pytest.mark.story("S-107")
def test_scaling_hits_the_target_energy(disk_grid):
    nodal = zero_mean(disk_grid, band_limited_field(disk_grid, sample_rng(0, 0)))
    scaled = scale_to_epsilon(disk_grid, nodal, 1e-2, 1.5)
    assert poincare_sides(disk_grid, scaled, 1.5).epsilon == pytest.approx(1e-2, rel=1e-8)
    with pytest.raises(ValidationError, match="must lie in"):
        scale_to_epsilon(disk_grid, nodal, 1.5, 1.5)
    with pytest.raises(ValidationError, match="vanishing gradient"):
        scale_to_epsilon(disk_grid, np.zeros_like(nodal), 1e-2, 1.5)


@pytest.mark.story("S-107")
def test_poincare_exponent_meets_the_threshold(disk_grid):
    fit = poincare_exponent(disk_grid, 1.5, seed=2)
    assert fit.passes
    assert fit.slope < 1.5
    assert fit.as_payload()["epsilons"] == [1e-1, 1e-2, 1e-3, 1e-4]


@pytest.mark.story("S-107")
def test_poincare_check_reports_finite_constants(disk_grid):
    report = poincare_probe(2, disk_grid, seed=5)
    assert report.samples == 2
    assert report.details["epsilon"] == 1e-2
    assert 0.0 < report.calibrated_constant <= report.max_ratio


@pytest.mark.story("S-107")
def test_reports_calibrate_on_the_first_half():
    stable = ProbeReport.from_ratios("rigidity", "classic", np.array([1.0, 2.0, 1.0, 2.3]), 2, 0)
    assert stable.calibrated_constant == 2.0
    assert stable.stable
    drifting = ProbeReport.from_ratios("rigidity", "classic", np.array([1.0, 2.0, 1.0, 3.0]), 2, 0)
    assert not drifting.stable
    assert drifting.as_payload()["max_ratio"] == 3.0
    with pytest.raises(ProbeViolation, match="non-finite"):
        ProbeReport.from_ratios("rigidity", "classic", np.array([1.0, np.nan]), 1, 0)


@pytest.mark.story("S-107")
def test_truncation_caps_a_spiked_field():
    R = axis_rotation(2, 0.7)
    s = 100.0
    S = s * np.outer(R[:, 1], [1.0, 0.0, 0.0])
    G = np.concatenate([np.broadcast_to(R + S, (10, 3, 3)), np.broadcast_to(R - S, (10, 3, 3))])
    volumes = np.full(20, 0.05)
    t = np.sqrt(4.0 + s * s)
    classic = rigidity_ratio(G, volumes, 1.5, "classic")
    truncated = rigidity_ratio(G, volumes, 1.5, "truncated")
    assert classic == pytest.approx(s * s / (t * (t - 2.0)), rel=1e-8)
    assert truncated == pytest.approx(1.0, rel=1e-12)
    assert classic > truncated


@pytest.mark.story("S-107")
@pytest.mark.parametrize("mode", ["classic", "truncated"])
def test_spiked_samples_keep_the_ratio_above_one(disk_grid, mode):
    assert np.abs(rigidity_sample(disk_grid, 4, 1, spikes=True)).max() > 50.0
    report = rigidity_ratio_probe(10, disk_grid, mode, seed=4)
    assert report.calibrated_constant >= 1.0 - 1e-9
    assert report.max_ratio >= report.calibrated_constant
