"""Serial-chain robot model, forward/inverse kinematics, and Jacobians.

A robot is a fixed-base chain of revolute or prismatic joints. Each joint
carries a constant origin transform (parent frame to joint frame) and a unit
axis in the joint frame; link i is the body rigidly attached downstream of
joint i, with a lumped point mass at the link frame origin and optional
collision shapes expressed in that frame.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import _kernels
from .se3 import RigidTransform, compose
from .shapes import Shape, pack_shape

__all__ = [
    "Joint",
    "RobotModel",
    "Unreachable",
    "IKParams",
    "forward_kinematics",
    "link_frames",
    "jacobian",
    "inverse_kinematics",
    "check_joint_jump",
]

REVOLUTE = "revolute"
PRISMATIC = "prismatic"

UNIT_AXIS_TOL = 1e-9
# max |dq| between consecutive waypoints accepted by check_joint_jump
DEFAULT_MAX_JOINT_JUMP = 0.5


@dataclass(frozen=True)
class Joint:
    """One degree of freedom: `origin` then a motion about/along `axis`."""

    kind: str
    axis: np.ndarray
    origin: RigidTransform
    limits: tuple[float, float]
    mass: float = 1.0

    def __post_init__(self) -> None:
        if self.kind not in (REVOLUTE, PRISMATIC):
            raise ValueError(f"unknown joint kind {self.kind!r}")
        axis = np.ascontiguousarray(self.axis, dtype=np.float64)
        if axis.shape != (3,):
            raise ValueError("axis must be a 3-vector")
        if abs(np.linalg.norm(axis) - 1.0) > UNIT_AXIS_TOL:
            raise ValueError("joint axis must be a unit vector")
        axis.setflags(write=False)
        object.__setattr__(self, "axis", axis)
        lo, hi = float(self.limits[0]), float(self.limits[1])
        if not lo < hi:
            raise ValueError(f"joint limits must satisfy lo < hi, got {(lo, hi)}")
        object.__setattr__(self, "limits", (lo, hi))
        if self.mass < 0.0:
            raise ValueError("link mass must be non-negative")


@dataclass(frozen=True)
class RobotModel:
    """Immutable chain description plus per-link collision shapes."""

    name: str
    joints: tuple[Joint, ...]
    ee_offset: RigidTransform
    link_collision: tuple[tuple[Shape, ...], ...] = ()
    gravity: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, -9.81]))
    # link index pairs excluded from self-collision on top of adjacent ones
    self_collision_exclude: frozenset[tuple[int, int]] = frozenset()

    def __post_init__(self) -> None:
        if not self.joints:
            raise ValueError("robot needs at least one joint")
        joints = tuple(self.joints)
        link_collision = tuple(tuple(s) for s in self.link_collision)
        if not link_collision:
            link_collision = tuple(() for _ in joints)
        if len(link_collision) != len(joints):
            raise ValueError("link_collision must have one entry per joint")
        gravity = np.ascontiguousarray(self.gravity, dtype=np.float64)
        if gravity.shape != (3,):
            raise ValueError("gravity must be a 3-vector")
        gravity.setflags(write=False)
        object.__setattr__(self, "joints", joints)
        object.__setattr__(self, "link_collision", link_collision)
        object.__setattr__(self, "gravity", gravity)
        object.__setattr__(self, "self_collision_exclude",
                           frozenset(tuple(sorted(p)) for p in self.self_collision_exclude))

    @property
    def dof(self) -> int:
        return len(self.joints)

    @property
    def limits_array(self) -> np.ndarray:
        return np.array([j.limits for j in self.joints])

    def home_configuration(self) -> np.ndarray:
        """All-zeros clipped into limits; the tracking seed for rollouts."""
        limits = self.limits_array
        return np.clip(np.zeros(self.dof), limits[:, 0], limits[:, 1])

    def within_limits(self, q: np.ndarray) -> bool:
        limits = self.limits_array
        q = np.asarray(q, dtype=np.float64)
        return bool(np.all(q >= limits[:, 0]) and np.all(q <= limits[:, 1]))

    def clamp_to_limits(self, q: np.ndarray) -> np.ndarray:
        limits = self.limits_array
        return np.clip(np.asarray(q, dtype=np.float64), limits[:, 0], limits[:, 1])

    @property
    def max_reach(self) -> float:
        """Conservative bound on end-effector distance from the base."""
        reach = float(np.linalg.norm(self.ee_offset.translation))
        for joint in self.joints:
            reach += float(np.linalg.norm(joint.origin.translation))
            if joint.kind == PRISMATIC:
                reach += max(abs(joint.limits[0]), abs(joint.limits[1]))
        return reach + 1e-9

    @cached_property
    def packed(self) -> dict:
        """Kernel-ready array form of the chain; computed once per model."""
        nj = self.dof
        jtypes = np.array([0 if j.kind == REVOLUTE else 1 for j in self.joints],
                          dtype=np.int64)
        axes = np.ascontiguousarray([j.axis for j in self.joints])
        org_rot = np.ascontiguousarray([j.origin.rotation for j in self.joints])
        org_tr = np.ascontiguousarray([j.origin.translation for j in self.joints])
        limits = np.ascontiguousarray(self.limits_array)
        masses = np.array([j.mass for j in self.joints])
        kinds = []
        datas = []
        links = []
        for link, shapes in enumerate(self.link_collision):
            for shape in shapes:
                kind, data = pack_shape(shape)
                kinds.append(kind)
                datas.append(data)
                links.append(link)
        ls_kind = np.array(kinds, dtype=np.int64) if kinds else np.empty(0, dtype=np.int64)
        ls_data = (np.ascontiguousarray(datas)
                   if datas else np.empty((0, 16)))
        ls_link = np.array(links, dtype=np.int64) if links else np.empty(0, dtype=np.int64)
        pairs = []
        excluded = self.self_collision_exclude
        for a in range(len(ls_kind)):
            for b in range(a + 1, len(ls_kind)):
                la, lb = int(ls_link[a]), int(ls_link[b])
                if abs(la - lb) <= 1:
                    continue  # same or adjacent links never self-collide
                if (min(la, lb), max(la, lb)) in excluded:
                    continue
                pairs.append((a, b))
        self_pairs = (np.array(pairs, dtype=np.int64)
                      if pairs else np.empty((0, 2), dtype=np.int64))
        return {
            "jtypes": jtypes,
            "axes": axes,
            "org_rot": org_rot,
            "org_tr": org_tr,
            "limits": limits,
            "ee_rot": np.ascontiguousarray(self.ee_offset.rotation),
            "ee_tr": np.ascontiguousarray(self.ee_offset.translation),
            "masses": masses,
            "gravity": np.ascontiguousarray(self.gravity),
            "q_home": self.home_configuration(),
            "reach_bound": self.max_reach,
            "ls_kind": ls_kind,
            "ls_data": ls_data,
            "ls_link": ls_link,
            "self_pairs": self_pairs,
        }


@dataclass(frozen=True)
class Unreachable:
    """IK failure report: final residuals and the iteration count spent."""

    position_error: float
    orientation_error: float
    iterations: int


@dataclass(frozen=True)
class IKParams:
    damping: float = 1e-2
    step_clamp: float = 0.2
    max_iters: int = 300
    tol_pos: float = 1e-4
    tol_rot: float = 1e-3
    restarts: int = 15


def _check_q(robot: RobotModel, q) -> np.ndarray:
    q = np.ascontiguousarray(q, dtype=np.float64)
    if q.shape != (robot.dof,):
        raise ValueError(f"expected {robot.dof} joint values, got shape {q.shape}")
    return q


def forward_kinematics(robot: RobotModel, q) -> RigidTransform:
    """World pose of the end effector for joint configuration q."""
    q = _check_q(robot, q)
    p = robot.packed
    rot, tr = _kernels.fk_pose(p["jtypes"], p["axes"], p["org_rot"], p["org_tr"],
                               p["ee_rot"], p["ee_tr"], q)
    return RigidTransform(rot, tr)


def link_frames(robot: RobotModel, q) -> list[RigidTransform]:
    """World pose of every link frame (after its joint motion)."""
    q = _check_q(robot, q)
    frames = []
    current = RigidTransform.identity()
    for joint, value in zip(robot.joints, q):
        current = compose(current, joint.origin)
        if joint.kind == REVOLUTE:
            motion = RigidTransform(_kernels.axis_angle_rot(joint.axis, value),
                                    np.zeros(3))
        else:
            motion = RigidTransform(np.eye(3), joint.axis * value)
        current = compose(current, motion)
        frames.append(current)
    return frames


def jacobian(robot: RobotModel, q) -> np.ndarray:
    """Geometric Jacobian at the end effector, rows (linear; angular)."""
    q = _check_q(robot, q)
    p = robot.packed
    return _kernels.ee_jacobian(p["jtypes"], p["axes"], p["org_rot"], p["org_tr"],
                                p["ee_rot"], p["ee_tr"], q)


def inverse_kinematics(robot: RobotModel, target: RigidTransform,
                       seed=None, params: IKParams = IKParams()):
    """Damped least-squares IK toward a full 6-DoF pose.

    Returns the joint vector on convergence, else an Unreachable record
    carrying the best residual reached. The seed defaults to the home
    configuration; iterates stay clamped inside joint limits throughout.
    When the first descent stalls in a local minimum, a fixed sequence of
    restart seeds spread over the limit box is tried, so results depend only
    on the arguments, never on call order.
    """
    p = robot.packed
    if seed is None:
        seed = p["q_home"]
    seed = _check_q(robot, seed)
    seed = robot.clamp_to_limits(seed)
    limits = p["limits"]
    tgt_rot = np.ascontiguousarray(target.rotation)
    tgt_tr = np.ascontiguousarray(target.translation)

    restart_rng = np.random.Generator(np.random.Philox(key=0x5EED_1C))
    best = None
    for attempt in range(1 + max(0, params.restarts)):
        if attempt > 0:
            u = restart_rng.random(robot.dof)
            seed = limits[:, 0] + u * (limits[:, 1] - limits[:, 0])
        ok, q, pos_err, rot_err, iters = _kernels.ik_solve(
            p["jtypes"], p["axes"], p["org_rot"], p["org_tr"],
            p["ee_rot"], p["ee_tr"], limits, p["reach_bound"],
            tgt_rot, tgt_tr, seed,
            params.damping, params.step_clamp, params.max_iters,
            params.tol_pos, params.tol_rot)
        if ok:
            return q
        if best is None or pos_err + rot_err < best[0] + best[1]:
            best = (float(pos_err), float(rot_err), int(iters))
    return Unreachable(position_error=best[0],
                       orientation_error=best[1],
                       iterations=best[2])


def check_joint_jump(path, max_step: float = DEFAULT_MAX_JOINT_JUMP) -> bool:
    """True iff no joint moves more than max_step between consecutive rows."""
    path = np.asarray(path, dtype=np.float64)
    if path.ndim != 2 or path.shape[0] < 2:
        return True
    steps = np.abs(np.diff(path, axis=0))
    return bool(steps.max() <= max_step)
