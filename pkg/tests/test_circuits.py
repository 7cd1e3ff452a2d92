import numpy as np
import pytest
from django.core.exceptions import ValidationError

from fields.displacement import DisplacementField, StrainField, strain
from geometry.circuits import (
    CirculationMismatch,
    burgers_circuit,
    crossing_loop,
    plane_node_jumps,
    verification_loops,
    verify_circuits,
)
from geometry.dislocations import rasterize_dislocation, square_polygon

INSIDE = (8, 8)
OUTSIDE = (2, 8)


@pytest.fixture
def loop_spec(square_grid):
    return rasterize_dislocation(square_polygon((0.0, 0.0), 0.25), square_grid, [0.0, 0.0, 1.0], scale=0.1, label="core")


@pytest.mark.story("S-102")
def test_plane_nodes_on_the_loop_line(square_grid, loop_spec):
    values, on_line = plane_node_jumps(square_grid, [loop_spec])
    np.testing.assert_allclose(values[8, 8], [0.0, 0.0, 0.1])
    np.testing.assert_allclose(values[2, 8], 0.0)
    assert on_line[4, 8] and on_line[12, 8]
    assert not on_line[8, 8] and not on_line[2, 8]


@pytest.mark.story("S-102")
@pytest.mark.parametrize("winding", [1, 2, -1])
def test_circuit_of_a_continuous_placement_is_minus_the_jump(square_grid, loop_spec, winding):
    u = DisplacementField.identity(square_grid, [loop_spec])
    loop = crossing_loop(square_grid, INSIDE, OUTSIDE, winding=winding)
    circuit = burgers_circuit(strain(u), loop)
    np.testing.assert_allclose(circuit, -winding * np.array([0.0, 0.0, 0.1]), atol=1e-12)


@pytest.mark.story("S-102")
def test_circuit_of_an_affine_field_without_jumps_vanishes(square_grid):
    A = np.array([[1.1, 0.2, 0.0], [0.0, 0.9, 0.3], [0.1, 0.0, 1.0]])
    u = DisplacementField.affine(square_grid, A, offset=[0.5, 0.0, -1.0])
    circuit = burgers_circuit(strain(u), crossing_loop(square_grid, INSIDE, OUTSIDE, depth=3))
    np.testing.assert_allclose(circuit, 0.0, atol=1e-12)


@pytest.mark.story("S-102")
def test_loop_through_the_line_is_rejected(square_grid, loop_spec):
    u = DisplacementField.identity(square_grid, [loop_spec])
    with pytest.raises(ValidationError, match="dislocation line"):
        burgers_circuit(strain(u), crossing_loop(square_grid, (4, 8), OUTSIDE))


@pytest.mark.story("S-102")
def test_open_or_diagonal_loops_are_rejected(square_grid):
    u = DisplacementField.identity(square_grid)
    loop = crossing_loop(square_grid, INSIDE, OUTSIDE)
    with pytest.raises(ValidationError, match="open path"):
        burgers_circuit(strain(u), loop[:-1])
    diagonal = np.array([[7, 8, 8], [8, 9, 9], [7, 8, 8]])
    with pytest.raises(ValidationError, match="single axis"):
        burgers_circuit(strain(u), diagonal)


@pytest.mark.story("S-102")
def test_verification_loops_cover_each_surface(square_grid, loop_spec):
    loops = verification_loops(square_grid, [loop_spec])
    assert [label for label, _, _ in loops] == ["core"]
    _, _, expected = loops[0]
    np.testing.assert_allclose(expected, [0.0, 0.0, -0.1])

    checks = verify_circuits(strain(DisplacementField.identity(square_grid, [loop_spec])))
    assert checks[0]["label"] == "core"
    assert checks[0]["error"] <= 1e-12



@pytest.mark.story("S-102")
def test_circuit_reads_the_stored_strain(square_grid, loop_spec):
    u = DisplacementField.identity(square_grid, [loop_spec])
    derived = strain(u)
    loop = crossing_loop(square_grid, INSIDE, OUTSIDE)

    doubled = StrainField(square_grid, 2.0 * derived.matrices, u)
    np.testing.assert_allclose(burgers_circuit(doubled, loop), [0.0, 0.0, -0.2], atol=1e-12)
    zeroed = StrainField(square_grid, np.zeros_like(derived.matrices), u)
    np.testing.assert_allclose(burgers_circuit(zeroed, loop), 0.0, atol=1e-12)

    with pytest.raises(CirculationMismatch, match="circuit around core"):
        verify_circuits(doubled)
    with pytest.raises(ValidationError, match="source field"):
        burgers_circuit(StrainField(square_grid, derived.matrices), loop)


@pytest.mark.story("S-102")
def test_circuit_of_a_curved_field_stays_exact(square_grid, loop_spec):
    u = DisplacementField.from_map(
        square_grid,
        lambda x: 0.05 * np.stack([np.sin(3.0 * x[..., 1]) * x[..., 0], x[..., 0] ** 2, np.cos(x[..., 2]) * x[..., 1]], axis=-1),
        [loop_spec],
    )
    for inside in (INSIDE, (5, 8)):
        circuit = burgers_circuit(strain(u), crossing_loop(square_grid, inside, OUTSIDE, depth=2))
        np.testing.assert_allclose(circuit, [0.0, 0.0, -0.1], atol=1e-12)
