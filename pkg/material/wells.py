"""
Two-well truncated energy density of the biphase rod.

The left phase (x₁ < 0) relaxes to SO(3), the right phase to SO(3)H with
H = diag(ζ₁, ζ₂, ζ₃). Each density is the squared distance to its well capped
by the growth bound: W(A) = dist²(A, SO(3)K) ∧ (|A|^p + 1). Every function here
accepts a single 3x3 matrix or a stack of shape (..., 3, 3).
"""

from __future__ import annotations

from dataclasses import dataclass, field
import logging
from typing import Literal

import numpy as np
from django.core.exceptions import ValidationError
from scipy.optimize import minimize as scipy_minimize
from scipy.spatial.transform import Rotation

from .rotations import closest_rotations, random_rotations

logger = logging.getLogger(__name__)

Phase = Literal["left", "right"]
LEFT: Phase = "left"
RIGHT: Phase = "right"

DEFAULT_P = 1.5
DEFAULT_ALPHA = 0.05


def mismatch_to_H(alpha: float) -> np.ndarray:
    """Isotropic mismatch matrix (1 - α)·I."""
    alpha = float(alpha)
    if not np.isfinite(alpha) or alpha < 0.0:
        raise ValidationError(f"alpha must satisfy 0 <= alpha < 1, got {alpha}")
    if alpha >= 1.0:
        raise ValidationError(f"alpha = {alpha} makes H degenerate; det H > 0 requires alpha < 1")
    return np.diag([1.0 - alpha] * 3)


@dataclass(frozen=True)
class MismatchSpec:
    zeta: tuple[float, float, float]
    alpha: float | None = None

    def __post_init__(self):
        if len(self.zeta) != 3:
            raise ValidationError("zeta needs exactly three stretch ratios")
        if any(not np.isfinite(z) or z <= 0.0 for z in self.zeta):
            raise ValidationError(f"every zeta entry must be positive so that det H > 0, got {self.zeta}")
        if self.alpha is not None and tuple(self.zeta) != (1.0 - self.alpha,) * 3:
            raise ValidationError("zeta must equal (1 - alpha) in every entry when alpha is given")

    @classmethod
    def from_alpha(cls, alpha: float) -> "MismatchSpec":
        H = mismatch_to_H(alpha)
        return cls(zeta=tuple(float(z) for z in np.diag(H)), alpha=float(alpha))

    @property
    def H(self) -> np.ndarray:
        return np.diag(np.asarray(self.zeta, dtype=float))

    @property
    def delta(self) -> float:
        """Size of the mismatch, |H - I|."""
        return float(np.linalg.norm(self.H - np.eye(3)))


@dataclass(frozen=True)
class ElasticModel:
    mismatch: MismatchSpec = field(default_factory=lambda: MismatchSpec.from_alpha(DEFAULT_ALPHA))
    p: float = DEFAULT_P

    def __post_init__(self):
        if not 1.0 < self.p < 2.0:
            raise ValidationError(f"growth exponent p must lie in (1, 2), got {self.p}")

    @classmethod
    def isotropic(cls, alpha: float = DEFAULT_ALPHA, p: float = DEFAULT_P) -> "ElasticModel":
        return cls(mismatch=MismatchSpec.from_alpha(alpha), p=p)

    @property
    def H(self) -> np.ndarray:
        return self.mismatch.H

    @property
    def well_left(self) -> np.ndarray:
        return np.eye(3)

    @property
    def well_right(self) -> np.ndarray:
        return self.mismatch.H

    def anchor(self, phase: Phase) -> np.ndarray:
        if phase == LEFT:
            return self.well_left
        if phase == RIGHT:
            return self.well_right
        raise ValidationError(f"unknown phase {phase!r}")


def _as_matrices(A) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    if A.shape[-2:] != (3, 3):
        raise ValidationError(f"expected 3x3 matrices, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValidationError("matrix entries must be finite")
    return A


def well_density(A, K, p: float, *, with_gradient: bool = False):
    """dist²(A, SO(3)K) ∧ (|A|^p + 1), optionally with its gradient.

    On a tie between the branches the dist² branch is selected, for both the
    value and the gradient.
    """
    A = np.asarray(A, dtype=float)
    K = np.asarray(K, dtype=float)
    residual = A - closest_rotations(A, K) @ K
    dist2 = np.sum(residual * residual, axis=(-2, -1))
    norm = np.sqrt(np.sum(A * A, axis=(-2, -1)))
    growth = norm**p + 1.0
    on_well = dist2 <= growth
    density = np.where(on_well, dist2, growth)
    if not with_gradient:
        return density
    with np.errstate(divide="ignore", invalid="ignore"):
        scale = np.where(norm > 0.0, p * norm ** (p - 2.0), 0.0)
    gradient = np.where(on_well[..., None, None], 2.0 * residual, scale[..., None, None] * A)
    return density, gradient


def dist_to_rotation_well(A, K) -> float:
    """min over R in SO(3) of |A - R K| (Frobenius)."""
    A = _as_matrices(A)
    K = _as_matrices(K)
    if abs(np.linalg.det(K)) <= 0.0:
        raise ValidationError("well anchor K must be invertible")
    residual = A - closest_rotations(A, K) @ K
    return float(np.sqrt(np.sum(residual * residual)))


def energy_density(phase: Phase, A, model: ElasticModel) -> float:
    return float(well_density(_as_matrices(A), model.anchor(phase), model.p))


def energy_density_gradient(phase: Phase, A, model: ElasticModel) -> np.ndarray:
    _, gradient = well_density(_as_matrices(A), model.anchor(phase), model.p, with_gradient=True)
    return gradient


def pointwise_equivalence_constants(g_norm: float, p: float) -> tuple[float, float, float]:
    """(ρ, c₁, c₂) with c₁ m(A) ≤ |A|² ∧ (|A+G|^p + 1) ≤ c₂ m(A) for |G| = g_norm.

    Here m(A) = |A|² ∧ (|A|^p + 1). ρ is the radius beyond which
    |A+G|^p + 1 > (|A|^p + 1)/2; below it the growth term is at least 1.
    The upper constant follows from (|A| + |G|)^p ≤ 2^(p-1)(|A|^p + |G|^p).
    """
    if g_norm < 0.0 or not np.isfinite(g_norm):
        raise ValidationError("|G| must be finite and non-negative")
    if g_norm == 0.0:
        return 1.0, 1.0, 1.0
    rho = max(1.0, g_norm / (1.0 - 2.0 ** (-1.0 / p)))
    c1 = min(1.0 / (rho**p + 1.0), 0.5)
    c2 = max(2.0 ** (p - 1.0), 2.0 ** (p - 1.0) * g_norm**p + 1.0)
    return rho, c1, c2


@dataclass(frozen=True)
class IncompatibilityReport:
    sampled_min: float
    refined_min: float
    best_rotation: np.ndarray = field(repr=False)
    samples: int
    seed: int

    def as_payload(self) -> dict:
        return {
            "sampled_min": self.sampled_min,
            "refined_min": self.refined_min,
            "samples": self.samples,
            "seed": self.seed,
        }


def incompatibility_margin(H, *, samples: int = 2000, seed: int = 0) -> IncompatibilityReport:
    """Sampled minimum of |R - H - a⊗e₁| over rotations R and vectors a.

    For fixed R the best a cancels the first column, leaving the norm of the
    last two columns of R - H. The best sample is polished with BFGS over the
    rotation vector.
    """
    H = _as_matrices(H)
    rotations = random_rotations(samples, np.random.default_rng(seed))
    values = np.linalg.norm((rotations - H)[:, :, 1:], axis=(1, 2))
    best = int(np.argmin(values))

    def objective(rotvec):
        R = Rotation.from_rotvec(rotvec).as_matrix()
        return float(np.linalg.norm((R - H)[:, 1:]))

    start = Rotation.from_matrix(rotations[best]).as_rotvec()
    polished = scipy_minimize(objective, start, method="BFGS")
    refined = min(float(polished.fun), float(values[best]))
    best_rotation = Rotation.from_rotvec(polished.x).as_matrix() if polished.fun < values[best] else rotations[best]
    logger.info("well incompatibility margin: sampled=%.6g refined=%.6g", values[best], refined)
    return IncompatibilityReport(
        sampled_min=float(values[best]),
        refined_min=refined,
        best_rotation=best_rotation,
        samples=samples,
        seed=seed,
    )
