from .circuits import (
    CirculationMismatch,
    burgers_circuit,
    crossing_loop,
    plane_node_jumps,
    verification_loops,
    verify_circuits,
)
from .dislocations import (
    DislocationSpec,
    circle_polygon,
    face_jumps,
    points_in_polygon,
    polygon_area,
    rasterize_dislocation,
    square_polygon,
)
from .grid import CrossSection, Grid, build_graded_grid, build_grid

__all__ = [
    "CirculationMismatch",
    "CrossSection",
    "DislocationSpec",
    "Grid",
    "build_graded_grid",
    "build_grid",
    "burgers_circuit",
    "circle_polygon",
    "crossing_loop",
    "face_jumps",
    "plane_node_jumps",
    "points_in_polygon",
    "polygon_area",
    "rasterize_dislocation",
    "square_polygon",
    "verification_loops",
    "verify_circuits",
]
