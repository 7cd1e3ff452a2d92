import numpy as np
import pytest
from django.core.exceptions import ValidationError

from fields.displacement import DisplacementField, cell_gradients, strain
from fields.rescaling import change_of_variables, rescale, rescale_matrices, thin_grid
from fields.storage import load_field, save_field
from geometry.dislocations import DislocationSpec, rasterize_dislocation, square_polygon
from geometry.grid import CrossSection, build_grid


@pytest.mark.story("S-103")
def test_affine_field_has_constant_strain(square_grid):
    A = np.array([[1.0, 0.1, 0.0], [0.2, 0.95, 0.0], [0.0, -0.3, 1.05]])
    u = DisplacementField.affine(square_grid, A, offset=[1.0, 2.0, 3.0])
    G = strain(u).masked()
    assert G.shape == (square_grid.masked_count, 3, 3)
    np.testing.assert_allclose(G, np.broadcast_to(A, G.shape), atol=1e-12)
    np.testing.assert_allclose(u.values, square_grid.node_coords() @ (A - np.eye(3)).T + [1.0, 2.0, 3.0], atol=1e-12)


@pytest.mark.story("S-103")
def test_full_section_jump_leaves_the_strain_untouched(square_grid):
    b = 0.05
    spec = DislocationSpec(
        burgers=np.array([1.0, 0.0, 0.0]),
        scale=b,
        curve=square_polygon((0.0, 0.0), 0.4),
        faces=square_grid.section_mask.copy(),
        label="full",
    )

    def translate_right(x):
        shift = np.zeros(x.shape)
        shift[..., 0] = np.where(x[..., 0] > 0.0, b, np.where(x[..., 0] == 0.0, 0.5 * b, 0.0))
        return shift

    u = DisplacementField.from_map(square_grid, translate_right, [spec])
    G = strain(u).masked()
    np.testing.assert_allclose(G, np.broadcast_to(np.eye(3), G.shape), atol=1e-12)


@pytest.mark.story("S-103")
def test_jump_correction_only_touches_the_interface_layers(square_grid):
    spec = rasterize_dislocation(square_polygon((0.0, 0.0), 0.25), square_grid, [1.0, 0.0, 0.0], scale=0.1)
    u = DisplacementField.identity(square_grid, [spec])
    G = cell_gradients(square_grid, u.placement, u.face_jumps)
    i0 = square_grid.interface_index
    away = np.delete(G, [i0 - 1, i0], axis=0)
    np.testing.assert_allclose(away, np.broadcast_to(np.eye(3), away.shape), atol=1e-12)
    expected = 1.0 - 0.1 / (2.0 * square_grid.spacing)
    assert G[i0, 8, 8, 0, 0] == pytest.approx(expected)
    assert G[i0 - 1, 8, 8, 0, 0] == pytest.approx(expected)
    assert G[i0, 0, 0, 0, 0] == pytest.approx(1.0)


@pytest.mark.story("S-103")
def test_thin_rod_rescaling_divides_transverse_columns():
    F = np.arange(9.0).reshape(3, 3)
    scaled = rescale_matrices(F, 0.25)
    np.testing.assert_allclose(scaled[:, 0], F[:, 0])
    np.testing.assert_allclose(scaled[:, 1:], 4.0 * F[:, 1:])
    np.testing.assert_allclose(F, np.arange(9.0).reshape(3, 3))


@pytest.mark.story("S-103")
def test_rescaled_identity_of_the_thin_rod(square_grid):
    thin = thin_grid(square_grid, 0.5)
    assert thin.spacing == pytest.approx(0.5 * square_grid.spacing)
    assert thin.cross_section.half_extent == pytest.approx(0.25)
    assert np.array_equal(thin.cell_mask, square_grid.cell_mask)

    # x -> (x1, h x2, h x3) on the fixed domain is the identity of the thin rod.
    u = DisplacementField.affine(square_grid, np.diag([1.0, 0.5, 0.5]))
    F_h = rescale(strain(u), 0.5).masked()
    np.testing.assert_allclose(F_h, np.broadcast_to(np.eye(3), F_h.shape), atol=1e-12)
    with pytest.raises(ValidationError, match="must not exceed 1"):
        rescale(strain(u), 2.0)


@pytest.mark.story("S-103")
def test_change_of_variables_scales_the_jump_curves(square_grid):
    spec = rasterize_dislocation(square_polygon((0.0, 0.0), 0.25), square_grid, [0.0, 1.0, 0.0], scale=0.05)
    u = DisplacementField.identity(square_grid, [spec])
    moved = change_of_variables(u, thin_grid(square_grid, 0.5))
    np.testing.assert_allclose(moved.placement, u.placement)
    np.testing.assert_allclose(moved.jumps[0].curve, 0.5 * spec.curve)
    assert np.array_equal(moved.jumps[0].faces, spec.faces)
    with pytest.raises(ValidationError, match="not conforming"):
        change_of_variables(u, build_grid(CrossSection("square", 0.5), 0.25, 0.0625))


@pytest.mark.story("S-103")
def test_stored_field_restores_placement_and_jumps(square_grid, tmp_path, rng):
    spec = rasterize_dislocation(square_polygon((0.0, 0.0), 0.25), square_grid, [0.0, 0.0, 1.0], scale=0.02, label="core")
    u = DisplacementField.from_displacement(square_grid, 1e-3 * rng.standard_normal(square_grid.node_shape + (3,)), [spec])
    path = save_field(u, tmp_path / "fields" / "u.npz", h=0.25, config_hash="abc")

    restored, h = load_field(path, square_grid)
    assert h == 0.25
    np.testing.assert_array_equal(restored.placement, u.placement)
    assert restored.jumps[0].label == "core"
    assert restored.jumps[0].scale == 0.02
    np.testing.assert_array_equal(restored.face_jumps, u.face_jumps)

    with pytest.raises(ValidationError, match="different grid"):
        load_field(path, build_grid(CrossSection("disk", 0.5), 0.5, 0.0625))


@pytest.mark.story("S-103")
def test_field_values_must_be_finite(square_grid):
    placement = square_grid.node_coords().copy()
    placement[0, 0, 0, 0] = np.nan
    with pytest.raises(ValidationError, match="finite"):
        DisplacementField(square_grid, placement)
    with pytest.raises(ValidationError, match="shape"):
        DisplacementField(square_grid, placement[:-1])
