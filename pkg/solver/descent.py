"""
Limited-memory quasi-Newton descent with Armijo backtracking.

The unknowns are the placements of the free nodes plus the translation of the
right slab; the left slab is pinned at P x. Slab nodes are rebuilt from their
affine targets on every evaluation, so the clamp holds exactly at each
iterate.
"""

from __future__ import annotations

from collections import deque
import dataclasses
from dataclasses import dataclass, replace
import logging
import math

import numpy as np
from django.core.exceptions import ValidationError

from fields.displacement import DisplacementField
from material.wells import ElasticModel

from .clamps import EndClamp
from .energy import energy_and_gradient

logger = logging.getLogger(__name__)

_CURVATURE_TOL = 1e-12
_MIN_STEP = 1e-20
_FIRST_STEP_FRACTION = 0.1


class SolverDivergence(RuntimeError):
    """Non-finite energy during a line search."""


@dataclass(frozen=True)
class SolverConfig:
    grad_tol: float | None = None
    max_iter: int = 50_000
    backtrack: float = 0.5
    armijo: float = 1e-4
    memory: int = 8
    seed: int = 0
    restarts: int = 3
    perturbation: float = 1e-3
    log_every: int = 100

    def __post_init__(self):
        if self.grad_tol is not None and not self.grad_tol > 0.0:
            raise ValidationError(f"grad_tol must be positive, got {self.grad_tol}")
        if self.max_iter < 0:
            raise ValidationError(f"max_iter must be non-negative, got {self.max_iter}")
        if not 0.0 < self.backtrack < 1.0:
            raise ValidationError(f"backtracking factor must lie in (0, 1), got {self.backtrack}")
        if not 0.0 < self.armijo < 1.0:
            raise ValidationError(f"Armijo constant must lie in (0, 1), got {self.armijo}")
        if self.memory < 0 or self.restarts < 0 or self.perturbation < 0.0:
            raise ValidationError("memory, restarts and perturbation must be non-negative")
        if self.log_every < 1:
            raise ValidationError("log_every must be at least 1")

    def tolerance_for(self, masked_cells: int) -> float:
        if self.grad_tol is not None:
            return self.grad_tol
        return 1e-6 * math.sqrt(masked_cells)


@dataclass(frozen=True)
class IterationRecord:
    iteration: int
    energy: float
    grad_norm: float
    step: float


@dataclass(frozen=True, eq=False)
class MinimizationResult:
    energy: float
    iterations: int
    grad_norm: float
    field: DisplacementField = dataclasses.field(repr=False)
    converged: bool
    history: tuple[IterationRecord, ...] = dataclasses.field(default=(), repr=False)
    translation: np.ndarray = dataclasses.field(default_factory=lambda: np.zeros(3), repr=False)
    restart_energies: tuple[float, ...] = ()
    stop_reason: str = ""

    def summary(self) -> dict:
        return {
            "energy": self.energy,
            "iterations": self.iterations,
            "grad_norm": self.grad_norm,
            "converged": self.converged,
            "restart_energies": list(self.restart_energies),
            "stop_reason": self.stop_reason,
        }


class _ClampedProblem:
    """Flat vector view of a clamped field: free-node placements then the right translation."""

    def __init__(self, u0: DisplacementField, clamp: EndClamp, model: ElasticModel, thickness: float):
        self.grid = u0.grid
        self.model = model
        self.thickness = thickness
        self.clamp = clamp
        self.jumps = u0.jumps
        self.face_jump = u0.face_jumps
        self.left, self.right = clamp.node_masks(self.grid)
        self.free = self.grid.node_mask & ~self.left & ~self.right
        self.base = u0.placement.copy()
        self.left_values, self.right_affine = clamp.targets(self.grid)

    def pack(self, u: DisplacementField, translation: np.ndarray) -> np.ndarray:
        return np.concatenate([u.placement[self.free].ravel(), np.asarray(translation, dtype=float)])

    def placement(self, x: np.ndarray) -> np.ndarray:
        y = self.base.copy()
        y[self.free] = x[:-3].reshape(-1, 3)
        y[self.left] = self.left_values
        y[self.right] = self.right_affine + x[-3:]
        return y

    def field(self, x: np.ndarray) -> DisplacementField:
        return DisplacementField(self.grid, self.placement(x), self.jumps)

    def evaluate(self, x: np.ndarray) -> tuple[float, np.ndarray]:
        energy, nodal = energy_and_gradient(self.placement(x), self.grid, self.face_jump, self.model, self.thickness)
        gradient = np.concatenate([nodal[self.free].ravel(), nodal[self.right].sum(axis=0)])
        return energy, gradient


def _two_loop(gradient: np.ndarray, memory: deque, first_scale: float) -> np.ndarray:
    q = gradient.copy()
    alphas = []
    for s, y, rho in reversed(memory):
        alpha = rho * np.dot(s, q)
        q -= alpha * y
        alphas.append(alpha)
    if memory:
        s, y, _ = memory[-1]
        q *= np.dot(s, y) / np.dot(y, y)
    else:
        q *= first_scale
    for (s, y, rho), alpha in zip(memory, reversed(alphas)):
        beta = rho * np.dot(y, q)
        q += (alpha - beta) * s
    return -q


def minimize(
    u0: DisplacementField,
    clamp: EndClamp,
    cfg: SolverConfig,
    model: ElasticModel,
    *,
    thickness: float = 1.0,
) -> MinimizationResult:
    translation = clamp.check(u0)
    problem = _ClampedProblem(u0, clamp, model, thickness)
    tolerance = cfg.tolerance_for(u0.grid.masked_count)

    x = problem.pack(u0, translation)
    energy, gradient = problem.evaluate(x)
    grad_norm = float(np.abs(gradient).max()) if gradient.size else 0.0
    history = [IterationRecord(0, energy, grad_norm, 0.0)]

    if cfg.max_iter == 0:
        return MinimizationResult(
            energy=energy,
            iterations=0,
            grad_norm=grad_norm,
            field=u0,
            converged=False,
            history=tuple(history),
            translation=translation,
            stop_reason="max_iter",
        )

    memory: deque = deque(maxlen=max(cfg.memory, 1))
    iteration = 0
    converged = grad_norm <= tolerance
    stop_reason = "converged" if converged else "max_iter"
    while not converged and iteration < cfg.max_iter:
        first_scale = _FIRST_STEP_FRACTION * u0.grid.spacing / max(grad_norm, np.finfo(float).tiny)
        direction = _two_loop(gradient, memory, first_scale)
        slope = float(np.dot(gradient, direction))
        if not slope < 0.0:
            memory.clear()
            direction = -first_scale * gradient
            slope = float(np.dot(gradient, direction))

        step = 1.0
        while True:
            candidate = x + step * direction
            new_energy, new_gradient = problem.evaluate(candidate)
            if not math.isfinite(new_energy):
                raise SolverDivergence(
                    f"energy became non-finite at iteration {iteration + 1} (step {step:.3e}); the field blew up"
                )
            if new_energy <= energy + cfg.armijo * step * slope:
                break
            step *= cfg.backtrack
            if step < _MIN_STEP:
                break
        if step < _MIN_STEP:
            stop_reason = "line_search"
            logger.warning("line search stalled at iteration %d, grad=%.3e", iteration, grad_norm)
            break

        s = candidate - x
        y = new_gradient - gradient
        sy = float(np.dot(s, y))
        if cfg.memory and sy > _CURVATURE_TOL * np.linalg.norm(s) * np.linalg.norm(y):
            memory.append((s, y, 1.0 / sy))

        x, energy, gradient = candidate, new_energy, new_gradient
        grad_norm = float(np.abs(gradient).max())
        iteration += 1
        history.append(IterationRecord(iteration, energy, grad_norm, step))
        if iteration % cfg.log_every == 0:
            logger.info("iter=%d energy=%.12e grad=%.3e", iteration, energy, grad_norm)
        if grad_norm <= tolerance:
            converged = True
            stop_reason = "converged"

    logger.info(
        "descent finished: iter=%d energy=%.12e grad=%.3e converged=%s (%s)",
        iteration,
        energy,
        grad_norm,
        converged,
        stop_reason,
    )
    return MinimizationResult(
        energy=energy,
        iterations=iteration,
        grad_norm=grad_norm,
        field=problem.field(x),
        converged=converged,
        history=tuple(history),
        translation=x[-3:].copy(),
        stop_reason=stop_reason,
    )


def perturbed_start(u0: DisplacementField, clamp: EndClamp, cfg: SolverConfig, restart: int) -> DisplacementField:
    """u0 with seeded noise of size ``perturbation · spacing`` on the free nodes."""
    left, right = clamp.node_masks(u0.grid)
    free = u0.grid.node_mask & ~left & ~right
    rng = np.random.default_rng([cfg.seed, restart])
    placement = u0.placement.copy()
    placement[free] += cfg.perturbation * u0.grid.spacing * rng.standard_normal((int(free.sum()), 3))
    return u0.with_placement(placement)


def minimize_multistart(
    u0: DisplacementField,
    clamp: EndClamp,
    cfg: SolverConfig,
    model: ElasticModel,
    *,
    thickness: float = 1.0,
) -> MinimizationResult:
    """Run from u0 and from ``cfg.restarts`` perturbed copies; keep the lowest energy."""
    results = [minimize(u0, clamp, cfg, model, thickness=thickness)]
    for restart in range(1, cfg.restarts + 1):
        start = perturbed_start(u0, clamp, cfg, restart)
        results.append(minimize(start, clamp, cfg, model, thickness=thickness))
    energies = tuple(result.energy for result in results)
    best = min(range(len(results)), key=lambda index: energies[index])
    logger.info("multistart energies %s; keeping restart %d", ["%.9e" % e for e in energies], best)
    return replace(results[best], restart_energies=energies)
