"""Six-dimensional velocity/force algebra.

Spatial velocities are stacked ``[v; w]`` (linear first) and spatial forces
``[f; tau]`` (force first).  A :class:`FrameTransform` ``(R, r)`` from frame B
to frame A induces the 6x6 matrix ``U = [[R, 0], [skew(r) R, R]]`` with

* velocity:  ``V_B = U.T @ V_A``
* force:     ``F_A = U @ F_B``
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

ORTHONORMAL_TOL = 1e-8

# Unit selectors for the six stacked components.
X_F, Y_F, Z_F, X_TAU, Y_TAU, Z_TAU = np.eye(6)


class FrameError(ValueError):
    """Raised for rotations that are not proper orthonormal matrices."""


def skew(r) -> np.ndarray:
    """Cross-product matrix: ``skew(r) @ x == np.cross(r, x)``."""
    x, y, z = np.asarray(r, dtype=float).tolist()
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


def rot_x(a: float) -> np.ndarray:
    c, s = math.cos(a), math.sin(a)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def rot_y(a: float) -> np.ndarray:
    c, s = math.cos(a), math.sin(a)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def rot_z(a: float) -> np.ndarray:
    c, s = math.cos(a), math.sin(a)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def check_rotation(R: np.ndarray, tol: float = ORTHONORMAL_TOL) -> None:
    R = np.asarray(R, dtype=float)
    if R.shape != (3, 3):
        raise FrameError(f"rotation must be 3x3, got {R.shape}")
    drift = np.linalg.norm(R.T @ R - np.eye(3))
    if drift > tol:
        raise FrameError(f"rotation not orthonormal (|R^T R - I| = {drift:.3e})")
    if np.linalg.det(R) < 0.0:
        raise FrameError("rotation has determinant -1 (reflection)")


@dataclass(frozen=True)
class SpatialVelocity:
    linear: np.ndarray
    angular: np.ndarray

    @classmethod
    def from_array(cls, V) -> "SpatialVelocity":
        V = np.asarray(V, dtype=float)
        return cls(V[:3].copy(), V[3:].copy())

    def as_array(self) -> np.ndarray:
        return np.concatenate([self.linear, self.angular])


@dataclass(frozen=True)
class SpatialForce:
    force: np.ndarray
    moment: np.ndarray

    @classmethod
    def from_array(cls, F) -> "SpatialForce":
        F = np.asarray(F, dtype=float)
        return cls(F[:3].copy(), F[3:].copy())

    def as_array(self) -> np.ndarray:
        return np.concatenate([self.force, self.moment])


def _vec(x) -> np.ndarray:
    if isinstance(x, SpatialVelocity | SpatialForce):
        return x.as_array()
    return np.asarray(x, dtype=float)


@dataclass(frozen=True)
class FrameTransform:
    """Pose of frame B relative to frame A: rotation ``A_R_B`` and offset ``A_r_AB``."""

    rotation: np.ndarray = field(default_factory=lambda: np.eye(3))
    offset: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        R = np.asarray(self.rotation, dtype=float)
        r = np.asarray(self.offset, dtype=float).reshape(3)
        check_rotation(R)
        object.__setattr__(self, "rotation", R)
        object.__setattr__(self, "offset", r)

    @classmethod
    def identity(cls) -> "FrameTransform":
        return cls.unchecked(np.eye(3), np.zeros(3))

    @classmethod
    def unchecked(cls, rotation: np.ndarray, offset: np.ndarray) -> "FrameTransform":
        """Build from arrays known to be valid (products of checked rotations)."""
        t = object.__new__(cls)
        object.__setattr__(t, "rotation", rotation)
        object.__setattr__(t, "offset", offset)
        return t

    def matrix(self) -> np.ndarray:
        return to_matrix(self)


def to_matrix(t: FrameTransform) -> np.ndarray:
    R, r = t.rotation, t.offset
    U = np.zeros((6, 6))
    U[:3, :3] = R
    U[3:, 3:] = R
    U[3:, :3] = skew(r) @ R
    return U


def transform_velocity(t: FrameTransform, vA):
    """Express the velocity of A (given in A) at frame B: ``U^T V_A``."""
    out = to_matrix(t).T @ _vec(vA)
    return SpatialVelocity.from_array(out) if isinstance(vA, SpatialVelocity) else out


def transform_force(t: FrameTransform, fB):
    """Map a force/moment acting at B (given in B) to frame A: ``U F_B``."""
    out = to_matrix(t) @ _vec(fB)
    return SpatialForce.from_array(out) if isinstance(fB, SpatialForce) else out


def compose(t1: FrameTransform, t2: FrameTransform) -> FrameTransform:
    """``t1`` maps B->A, ``t2`` maps C->B; the result maps C->A."""
    R = t1.rotation @ t2.rotation
    r = t1.offset + t1.rotation @ t2.offset
    return FrameTransform.unchecked(R, r)


def inverse(t: FrameTransform) -> FrameTransform:
    Rt = t.rotation.T
    return FrameTransform.unchecked(Rt, -Rt @ t.offset)


def random_rotation(rng: np.random.Generator) -> np.ndarray:
    q = rng.normal(size=4)
    q /= np.linalg.norm(q)
    w, x, y, z = q
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w)],
            [2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w)],
            [2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y)],
        ]
    )


def random_transform(rng: np.random.Generator, scale: float = 1.0) -> FrameTransform:
    return FrameTransform(random_rotation(rng), scale * rng.normal(size=3))


def motion_cross(V) -> np.ndarray:
    """Spatial motion cross-product operator for ``[v; w]`` ordering."""
    V = _vec(V)
    v, w = V[:3], V[3:]
    X = np.zeros((6, 6))
    X[:3, :3] = skew(w)
    X[:3, 3:] = skew(v)
    X[3:, 3:] = skew(w)
    return X


def force_cross(V) -> np.ndarray:
    """Dual operator acting on forces: ``force_cross(V) == -motion_cross(V).T``."""
    return -motion_cross(V).T
