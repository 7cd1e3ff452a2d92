from .breakdown import EnergyBreakdown
from .gluing import QuadrantGlueSpec, base_grid_for, glued_quadrant_field, restrict_to_disk, snap_overlap
from .ramp import RampSpec, mismatch_ramp
from .recovery import (
    RecoverySpec,
    TraceMismatch,
    constant_profile,
    profile_from_lists,
    recovery_grid,
    recovery_sequence,
    rotation_path,
)

__all__ = [
    "EnergyBreakdown",
    "QuadrantGlueSpec",
    "RampSpec",
    "RecoverySpec",
    "TraceMismatch",
    "base_grid_for",
    "constant_profile",
    "glued_quadrant_field",
    "mismatch_ramp",
    "profile_from_lists",
    "recovery_grid",
    "recovery_sequence",
    "restrict_to_disk",
    "rotation_path",
    "snap_overlap",
]
