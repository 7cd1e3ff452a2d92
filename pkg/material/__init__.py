from .rotations import axis_rotation, closest_rotations, is_rotation, random_rotations, rotation_log
from .wells import (
    LEFT,
    RIGHT,
    ElasticModel,
    IncompatibilityReport,
    MismatchSpec,
    dist_to_rotation_well,
    energy_density,
    energy_density_gradient,
    incompatibility_margin,
    mismatch_to_H,
    pointwise_equivalence_constants,
    well_density,
)

__all__ = [
    "LEFT",
    "RIGHT",
    "ElasticModel",
    "IncompatibilityReport",
    "MismatchSpec",
    "axis_rotation",
    "closest_rotations",
    "dist_to_rotation_well",
    "energy_density",
    "energy_density_gradient",
    "incompatibility_margin",
    "is_rotation",
    "mismatch_to_H",
    "pointwise_equivalence_constants",
    "random_rotations",
    "rotation_log",
    "well_density",
]
