from .clamps import EndClamp
from .descent import (
    IterationRecord,
    MinimizationResult,
    SolverConfig,
    SolverDivergence,
    minimize,
    minimize_multistart,
    perturbed_start,
)
from .energy import cell_energies, energy_and_gradient, total_energy, total_gradient

__all__ = [
    "EndClamp",
    "IterationRecord",
    "MinimizationResult",
    "SolverConfig",
    "SolverDivergence",
    "cell_energies",
    "energy_and_gradient",
    "minimize",
    "minimize_multistart",
    "perturbed_start",
    "total_energy",
    "total_gradient",
]
