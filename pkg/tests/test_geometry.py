import numpy as np
import pytest
from django.core.exceptions import ValidationError

from geometry.dislocations import (
    DislocationSpec,
    circle_polygon,
    face_jumps,
    points_in_polygon,
    polygon_area,
    rasterize_dislocation,
    square_polygon,
)
from geometry.grid import CrossSection, build_graded_grid, build_grid


@pytest.mark.story("S-102")
def test_uniform_grid_layout(square_grid):
    assert square_grid.shape == (16, 16, 16)
    assert square_grid.node_shape == (17, 17, 17)
    assert square_grid.interface_index == 8
    assert square_grid.axial_nodes[8] == 0.0
    assert square_grid.masked_count == 16**3
    assert square_grid.cell_volumes.sum() == pytest.approx(1.0)


@pytest.mark.story("S-102")
def test_disk_mask_counts_cells_with_centers_inside(disk_grid):
    assert disk_grid.section_mask.sum() == 52
    assert np.array_equal(disk_grid.section_mask, disk_grid.section_mask.T)
    assert not disk_grid.node_mask[0, 0, 0]
    assert disk_grid.node_mask[0, 4, 4]


@pytest.mark.story("S-102")
def test_grid_rejects_spacing_that_misses_the_interface():
    with pytest.raises(ValidationError, match="does not divide"):
        build_grid(CrossSection("disk", 0.5), 0.5, 0.07)


@pytest.mark.story("S-102")
def test_grid_rejects_under_resolved_sections():
    with pytest.raises(ValidationError, match="under-resolved"):
        build_grid(CrossSection("square", 0.1), 0.5, 0.0625)
    with pytest.raises(ValidationError):
        CrossSection("triangle", 1.0)


@pytest.mark.story("S-102")
def test_graded_grid_needs_the_interface_plane():
    with pytest.raises(ValidationError, match="interface plane"):
        build_graded_grid(CrossSection("square", 0.5), [-1.0, -0.5, 0.25, 0.5, 1.0], 0.125)
    grid = build_graded_grid(CrossSection("square", 0.5), [-1.0, -0.5, -0.25, 0.0, 0.25, 0.5, 1.0], 0.125)
    assert grid.interface_index == 3
    assert grid.axial_spacing is None


@pytest.mark.story("S-102")
def test_digest_tracks_layout(square_grid):
    same = build_grid(CrossSection("square", 0.5), 0.5, 0.0625)
    other = build_grid(CrossSection("disk", 0.5), 0.5, 0.0625)
    assert same.digest == square_grid.digest
    assert other.digest != square_grid.digest


@pytest.mark.story("S-102")
def test_square_loop_rasterizes_to_enclosed_faces(square_grid):
    spec = rasterize_dislocation(square_polygon((0.0, 0.0), 0.25), square_grid, [0.0, 0.0, 2.0], scale=0.1)
    assert spec.face_count == 64
    assert spec.area(square_grid) == pytest.approx(0.25)
    np.testing.assert_allclose(spec.burgers, [0.0, 0.0, 1.0])
    np.testing.assert_allclose(spec.jump, [0.0, 0.0, 0.1])
    assert spec.faces[4:12, 4:12].all()
    assert not spec.faces[3].any()


@pytest.mark.story("S-102")
def test_unresolved_loop_keeps_an_empty_surface(square_grid):
    spec = rasterize_dislocation(square_polygon((0.0, 0.0), 0.01), square_grid, [1.0, 0.0, 0.0])
    assert spec.face_count == 0


@pytest.mark.story("S-102")
def test_loop_must_stay_inside_the_section(square_grid):
    with pytest.raises(ValidationError, match="strictly inside"):
        rasterize_dislocation(square_polygon((0.0, 0.0), 0.6), square_grid, [1.0, 0.0, 0.0])
    bowtie = [[-0.2, -0.2], [0.2, 0.2], [0.2, -0.2], [-0.2, 0.2]]
    with pytest.raises(ValidationError, match="simple"):
        rasterize_dislocation(bowtie, square_grid, [1.0, 0.0, 0.0])


@pytest.mark.story("S-102")
def test_overlapping_surfaces_are_rejected(square_grid):
    first = rasterize_dislocation(square_polygon((0.0, 0.0), 0.25), square_grid, [1.0, 0.0, 0.0], label="a")
    second = rasterize_dislocation(square_polygon((0.1, 0.1), 0.2), square_grid, [0.0, 1.0, 0.0], label="b")
    with pytest.raises(ValidationError, match="overlaps"):
        face_jumps(square_grid, [first, second])


@pytest.mark.story("S-102")
def test_zero_jump_keeps_a_unit_direction(square_grid):
    spec = DislocationSpec.from_jump(np.zeros(3), square_grid.section_mask, square_polygon((0, 0), 0.4), "flat")
    assert spec.scale == 0.0
    np.testing.assert_allclose(spec.burgers, [1.0, 0.0, 0.0])
    assert not face_jumps(square_grid, [spec]).any()
    with pytest.raises(ValidationError, match="unit vector"):
        DislocationSpec(np.array([2.0, 0.0, 0.0]), 1.0, square_polygon((0, 0), 0.4), square_grid.section_mask)


@pytest.mark.story("S-102")
def test_polygon_helpers():
    circle = circle_polygon((0.0, 0.0), 1.0, vertices=256)
    assert polygon_area(circle) == pytest.approx(np.pi, rel=1e-3)
    inside = points_in_polygon(np.array([[0.0, 0.0], [2.0, 0.0]]), square_polygon((0.0, 0.0), 1.0))
    assert inside.tolist() == [True, False]
