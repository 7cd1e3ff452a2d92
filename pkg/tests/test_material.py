import math

import numpy as np
import pytest
from django.core.exceptions import ValidationError

from material.rotations import axis_rotation, closest_rotations, is_rotation, random_rotations, rotation_log
from material.wells import (
    LEFT,
    RIGHT,
    ElasticModel,
    MismatchSpec,
    dist_to_rotation_well,
    energy_density,
    energy_density_gradient,
    incompatibility_margin,
    mismatch_to_H,
    pointwise_equivalence_constants,
)


@pytest.mark.story("S-101")
def test_wells_vanish_on_their_anchors(model):
    assert energy_density(LEFT, np.eye(3), model) <= 1e-24
    assert energy_density(RIGHT, model.H, model) <= 1e-24
    R = axis_rotation(1, 0.7)
    assert energy_density(LEFT, R, model) <= 1e-24
    assert energy_density(RIGHT, R @ model.H, model) <= 1e-24


@pytest.mark.story("S-101")
def test_density_is_frame_indifferent(model, rng):
    rotations = random_rotations(200, rng)
    matrices = np.eye(3) + 0.5 * rng.standard_normal((200, 3, 3))
    for R, A in zip(rotations, matrices):
        for phase in (LEFT, RIGHT):
            plain = energy_density(phase, A, model)
            rotated = energy_density(phase, R @ A, model)
            assert abs(rotated - plain) <= 1e-12 * max(1.0, plain)


@pytest.mark.story("S-101")
def test_density_is_capped_by_the_growth_term(model):
    A = 1000.0 * np.eye(3)
    capped = energy_density(LEFT, A, model)
    assert capped == pytest.approx(math.sqrt(3.0) ** 1.5 * 1000.0**1.5 + 1.0, rel=1e-12)
    assert capped < dist_to_rotation_well(A, np.eye(3)) ** 2


@pytest.mark.story("S-101")
@pytest.mark.parametrize("scale", [0.3, 5.0])
def test_density_gradient_matches_central_differences(model, rng, scale):
    step = 1e-6
    for _ in range(20):
        A = np.eye(3) + scale * rng.standard_normal((3, 3))
        for phase in (LEFT, RIGHT):
            dist2 = dist_to_rotation_well(A, model.anchor(phase)) ** 2
            growth = np.linalg.norm(A) ** model.p + 1.0
            if abs(dist2 - growth) < 1e-3 * growth:
                continue
            analytic = energy_density_gradient(phase, A, model)
            numeric = np.zeros((3, 3))
            for i in range(3):
                for j in range(3):
                    E = np.zeros((3, 3))
                    E[i, j] = step
                    numeric[i, j] = (energy_density(phase, A + E, model) - energy_density(phase, A - E, model)) / (2 * step)
            np.testing.assert_allclose(analytic, numeric, rtol=1e-5, atol=1e-6 * max(1.0, np.abs(analytic).max()))


@pytest.mark.story("S-101")
def test_mismatch_matrix_rejects_degenerate_alpha():
    np.testing.assert_allclose(mismatch_to_H(0.05), 0.95 * np.eye(3))
    with pytest.raises(ValidationError, match="det H"):
        mismatch_to_H(1.2)
    with pytest.raises(ValidationError):
        mismatch_to_H(-0.1)
    with pytest.raises(ValidationError):
        MismatchSpec(zeta=(1.0, 0.0, 1.0))


@pytest.mark.story("S-101")
def test_growth_exponent_must_lie_between_one_and_two():
    with pytest.raises(ValidationError, match="p must lie"):
        ElasticModel(p=2.0)
    assert ElasticModel.isotropic(0.1, 1.2).mismatch.delta == pytest.approx(0.1 * math.sqrt(3.0))


@pytest.mark.story("S-101")
def test_closest_rotation_never_returns_a_reflection():
    R = closest_rotations(np.diag([1.0, 1.0, -1.0]))
    assert is_rotation(R)
    stack = closest_rotations(np.stack([np.eye(3), -np.eye(3), np.diag([2.0, 3.0, 4.0])]))
    assert all(is_rotation(S) for S in stack)
    np.testing.assert_allclose(stack[2], np.eye(3), atol=1e-12)


@pytest.mark.story("S-101")
def test_rotation_log_fixes_the_branch_at_pi():
    np.testing.assert_allclose(rotation_log(axis_rotation(2, math.pi)), [0.0, 0.0, math.pi], atol=1e-9)
    np.testing.assert_allclose(rotation_log(axis_rotation(2, -math.pi)), [0.0, 0.0, math.pi], atol=1e-9)
    np.testing.assert_allclose(rotation_log(axis_rotation(0, 0.4)), [0.4, 0.0, 0.0], atol=1e-12)


@pytest.mark.story("S-101")
def test_equivalence_constants():
    assert pointwise_equivalence_constants(0.0, 1.5) == (1.0, 1.0, 1.0)
    rho, c1, c2 = pointwise_equivalence_constants(5.0, 1.5)
    assert rho == pytest.approx(5.0 / (1.0 - 2.0 ** (-1.0 / 1.5)))
    assert 0.0 < c1 <= 0.5
    assert c2 == pytest.approx(2.0**0.5 * 5.0**1.5 + 1.0)
    with pytest.raises(ValidationError):
        pointwise_equivalence_constants(-1.0, 1.5)


@pytest.mark.story("S-101")
def test_incompatibility_margin_of_uniform_contraction():
    report = incompatibility_margin(0.95 * np.eye(3), samples=500, seed=3)
    assert report.refined_min <= report.sampled_min
    assert report.refined_min == pytest.approx(math.sqrt(2.0) * 0.05, abs=1e-4)
    assert is_rotation(report.best_rotation, tol=1e-8)
    assert report.as_payload()["samples"] == 500
