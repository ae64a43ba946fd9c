"""Rigid transforms and end-effector states.

All rotations are proper (det +1) 3x3 matrices. End-effector states carry a
position and an intrinsic X-Y-Z Euler triple (roll, pitch, yaw), meaning the
rotation is built as Rx(roll) @ Ry(pitch) @ Rz(yaw) with each rotation applied
about the already-rotated body axes. Angles are kept in (-pi, pi].

The closed-form Euler conversion formulas here are the reference definition
for the whole package; the compiled kernels mirror them entry for entry.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "RigidTransform",
    "EndEffectorState",
    "compose",
    "invert",
    "state_to_transform",
    "transform_to_state",
    "normalize_angle",
]

# Rotation blocks must be orthonormal with unit determinant to this tolerance.
ORTHONORMALITY_TOL = 1e-9
# compose() re-orthonormalizes its result when drift exceeds this.
COMPOSE_DRIFT_TOL = 1e-12
# |sin(pitch)| at or beyond 1 - this is treated as gimbal lock.
GIMBAL_LOCK_TOL = 1e-12


def normalize_angle(angle: float) -> float:
    """Wrap an angle into (-pi, pi]."""
    wrapped = angle % (2.0 * math.pi)
    if wrapped > math.pi:
        wrapped -= 2.0 * math.pi
    return wrapped


def _as_readonly(array: np.ndarray) -> np.ndarray:
    out = np.ascontiguousarray(array, dtype=np.float64)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class RigidTransform:
    """An SE(3) element stored as a rotation matrix and a translation vector."""

    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self) -> None:
        rotation = _as_readonly(self.rotation)
        translation = _as_readonly(self.translation)
        if rotation.shape != (3, 3):
            raise ValueError(f"rotation must be 3x3, got {rotation.shape}")
        if translation.shape != (3,):
            raise ValueError(f"translation must be a 3-vector, got {translation.shape}")
        if not (np.isfinite(rotation).all() and np.isfinite(translation).all()):
            raise ValueError("transform entries must be finite")
        drift = np.abs(rotation.T @ rotation - np.eye(3)).max()
        if drift > ORTHONORMALITY_TOL:
            raise ValueError(f"rotation is not orthonormal (drift {drift:.3e})")
        det = np.linalg.det(rotation)
        if abs(det - 1.0) > ORTHONORMALITY_TOL:
            raise ValueError(f"rotation must have determinant +1, got {det!r}")
        object.__setattr__(self, "rotation", rotation)
        object.__setattr__(self, "translation", translation)

    @classmethod
    def identity(cls) -> "RigidTransform":
        return cls(np.eye(3), np.zeros(3))

    @classmethod
    def from_matrix(cls, matrix: np.ndarray) -> "RigidTransform":
        matrix = np.asarray(matrix, dtype=np.float64)
        if matrix.shape != (4, 4):
            raise ValueError(f"expected a 4x4 matrix, got {matrix.shape}")
        if not np.array_equal(matrix[3], np.array([0.0, 0.0, 0.0, 1.0])):
            raise ValueError("bottom row must be exactly (0, 0, 0, 1)")
        return cls(matrix[:3, :3], matrix[:3, 3])

    @property
    def matrix(self) -> np.ndarray:
        out = np.eye(4)
        out[:3, :3] = self.rotation
        out[:3, 3] = self.translation
        return out

    def transform_point(self, point: np.ndarray) -> np.ndarray:
        return self.rotation @ np.asarray(point, dtype=np.float64) + self.translation

    def transform_points(self, points: np.ndarray) -> np.ndarray:
        points = np.asarray(points, dtype=np.float64)
        return points @ self.rotation.T + self.translation

    def to_flat(self) -> list[float]:
        """Serialize as 16 row-major homogeneous-matrix entries."""
        return [float(v) for v in self.matrix.reshape(16)]

    @classmethod
    def from_flat(cls, values) -> "RigidTransform":
        values = np.asarray(list(values), dtype=np.float64)
        if values.shape != (16,):
            raise ValueError(f"expected 16 numbers, got shape {values.shape}")
        return cls.from_matrix(values.reshape(4, 4))


@dataclass(frozen=True)
class EndEffectorState:
    """A 6-DoF end-effector pose: position plus roll/pitch/yaw Euler angles."""

    position: np.ndarray
    orientation: np.ndarray

    def __post_init__(self) -> None:
        position = np.ascontiguousarray(self.position, dtype=np.float64)
        orientation = np.asarray(self.orientation, dtype=np.float64)
        if position.shape != (3,) or orientation.shape != (3,):
            raise ValueError("position and orientation must be 3-vectors")
        if not (np.isfinite(position).all() and np.isfinite(orientation).all()):
            raise ValueError("state entries must be finite")
        orientation = np.array([normalize_angle(a) for a in orientation])
        position.setflags(write=False)
        orientation.setflags(write=False)
        object.__setattr__(self, "position", position)
        object.__setattr__(self, "orientation", _as_readonly(orientation))

    @classmethod
    def from_vector(cls, values) -> "EndEffectorState":
        values = np.asarray(list(values) if not isinstance(values, np.ndarray) else values,
                            dtype=np.float64).reshape(6)
        return cls(values[:3], values[3:])

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.position, self.orientation])

    def to_flat(self) -> list[float]:
        return [float(v) for v in self.as_vector()]


def compose(a: RigidTransform, b: RigidTransform) -> RigidTransform:
    """Return a then-apply-b chaining, i.e. the matrix product a @ b.

    Long compose chains accumulate rounding drift; when the result's rotation
    drifts from orthonormality by more than COMPOSE_DRIFT_TOL it is snapped
    back via polar decomposition (nearest rotation in Frobenius norm).
    """
    rotation = a.rotation @ b.rotation
    translation = a.rotation @ b.translation + a.translation
    drift = np.abs(rotation.T @ rotation - np.eye(3)).max()
    if drift > COMPOSE_DRIFT_TOL:
        rotation = _nearest_rotation(rotation)
    return RigidTransform(rotation, translation)


def invert(h: RigidTransform) -> RigidTransform:
    """Closed-form SE(3) inverse: (R, t) -> (R^T, -R^T t)."""
    rt = h.rotation.T
    return RigidTransform(rt, -(rt @ h.translation))


def _nearest_rotation(matrix: np.ndarray) -> np.ndarray:
    u, _, vt = np.linalg.svd(matrix)
    rotation = u @ vt
    if np.linalg.det(rotation) < 0.0:
        u = u.copy()
        u[:, 2] = -u[:, 2]
        rotation = u @ vt
    return rotation


def euler_to_matrix(roll: float, pitch: float, yaw: float) -> np.ndarray:
    """Rotation matrix for intrinsic X-Y-Z angles: Rx(roll) @ Ry(pitch) @ Rz(yaw)."""
    cr, sr = math.cos(roll), math.sin(roll)
    cp, sp = math.cos(pitch), math.sin(pitch)
    cy, sy = math.cos(yaw), math.sin(yaw)
    return np.array([
        [cp * cy, -cp * sy, sp],
        [cr * sy + sr * sp * cy, cr * cy - sr * sp * sy, -sr * cp],
        [sr * sy - cr * sp * cy, sr * cy + cr * sp * sy, cr * cp],
    ])


def matrix_to_euler(rotation: np.ndarray) -> tuple[float, float, float]:
    """Extract intrinsic X-Y-Z angles from a rotation matrix.

    At gimbal lock (|pitch| = pi/2) roll and yaw act about the same axis, so
    the split is fixed by convention: roll := 0 and the whole residual
    rotation goes into yaw.
    """
    sp = min(1.0, max(-1.0, float(rotation[0, 2])))
    if abs(sp) >= 1.0 - GIMBAL_LOCK_TOL:
        pitch = math.copysign(math.pi / 2.0, sp)
        roll = 0.0
        yaw = math.atan2(rotation[1, 0], rotation[1, 1])
    else:
        pitch = math.asin(sp)
        roll = math.atan2(-rotation[1, 2], rotation[2, 2])
        yaw = math.atan2(-rotation[0, 1], rotation[0, 0])
    return normalize_angle(roll), normalize_angle(pitch), normalize_angle(yaw)


def state_to_transform(state: EndEffectorState) -> RigidTransform:
    roll, pitch, yaw = state.orientation
    return RigidTransform(euler_to_matrix(roll, pitch, yaw), state.position)


def transform_to_state(h: RigidTransform) -> EndEffectorState:
    roll, pitch, yaw = matrix_to_euler(h.rotation)
    return EndEffectorState(h.translation, np.array([roll, pitch, yaw]))
