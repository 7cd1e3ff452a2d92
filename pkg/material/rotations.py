"""Rotation helpers shared by the density, the constructions and the probes."""

from __future__ import annotations

import numpy as np
from scipy.spatial.transform import Rotation

PI_BRANCH_TOL = 1e-9


def closest_rotations(A: np.ndarray, K: np.ndarray | None = None) -> np.ndarray:
    """Rotations R minimizing |A - R K| for a stack of 3x3 matrices.

    Kabsch form: with A Kᵀ = U Σ Vᵀ the optimum is U diag(1, 1, s) Vᵀ where
    s = sign det(U Vᵀ), so reflections are never returned.
    """
    A = np.asarray(A, dtype=float)
    B = A if K is None else A @ np.swapaxes(np.asarray(K, dtype=float), -1, -2)
    U, _, Vt = np.linalg.svd(B)
    sign = np.sign(np.linalg.det(U @ Vt))
    sign = np.where(sign == 0.0, 1.0, sign)
    U = U.copy()
    U[..., :, 2] *= sign[..., None]
    return U @ Vt


def random_rotations(count: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed rotations from normalized Gaussian quaternions."""
    quaternions = rng.standard_normal((count, 4))
    return Rotation.from_quat(quaternions).as_matrix()


def axis_rotation(axis: int, angle: float) -> np.ndarray:
    vector = np.zeros(3)
    vector[axis] = angle
    return Rotation.from_rotvec(vector).as_matrix()


def rotation_log(R: np.ndarray) -> np.ndarray:
    """Rotation vector of R, with a fixed branch at angle π.

    At π the axis is read off the symmetric part (R + I)/2 = n nᵀ from its
    largest diagonal column, and its first non-negligible entry is made positive.
    """
    R = np.asarray(R, dtype=float)
    rotvec = Rotation.from_matrix(R).as_rotvec()
    angle = float(np.linalg.norm(rotvec))
    if abs(angle - np.pi) > PI_BRANCH_TOL:
        return rotvec
    symmetric = 0.25 * (R + R.T) + 0.5 * np.eye(3)
    column = int(np.argmax(np.diag(symmetric)))
    axis = symmetric[:, column] / np.sqrt(symmetric[column, column])
    axis /= np.linalg.norm(axis)
    leading = axis[np.flatnonzero(np.abs(axis) > 1e-12)[0]]
    if leading < 0:
        axis = -axis
    return np.pi * axis


def is_rotation(R: np.ndarray, tol: float = 1e-10) -> bool:
    R = np.asarray(R, dtype=float)
    if R.shape != (3, 3) or not np.all(np.isfinite(R)):
        return False
    return bool(np.abs(R.T @ R - np.eye(3)).max() <= tol and abs(np.linalg.det(R) - 1.0) <= tol)
