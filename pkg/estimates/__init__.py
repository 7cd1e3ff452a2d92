from .equivalence import equivalence_sides, pointwise_equivalence_probe
from .generators import band_limited_field, sample_rng, spike_field
from .poincare import ExponentFit, poincare_exponent, poincare_probe, poincare_sides, scale_to_epsilon, zero_mean
from .reports import ProbeReport, ProbeViolation
from .rigidity import best_rotation, rigidity_ratio, rigidity_ratio_probe, rigidity_sample

__all__ = [
    "ExponentFit",
    "ProbeReport",
    "ProbeViolation",
    "band_limited_field",
    "best_rotation",
    "equivalence_sides",
    "pointwise_equivalence_probe",
    "poincare_exponent",
    "poincare_probe",
    "poincare_sides",
    "rigidity_ratio",
    "rigidity_ratio_probe",
    "rigidity_sample",
    "sample_rng",
    "scale_to_epsilon",
    "spike_field",
    "zero_mean",
]
