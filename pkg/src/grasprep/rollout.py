"""Deterministic open-loop grasp rollout against a scene.

A trajectory is a sequence of 6D end-effector states plus one gripper
command. The rollout IK-tracks each waypoint from the previous solution,
closes the gripper fingers toward the target from the commanded step on,
extracts fingertip contacts, and decides success with a quasi-static
force-closure proxy plus a simulated 5 cm lift. Everything is kinematic:
no integrator, no friction, so identical inputs give bit-identical outputs.

The gripper is a synergy-driven set of up to five spherical fingertips
hanging below the end-effector frame (along -z) that close along the +-x
axis; each finger freezes at its first contact with the target.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING

import numpy as np

from . import _kernels
from .kinematics import IKParams, RobotModel
from .scene import CONTACT_MARGIN, SceneModel
from .se3 import RigidTransform

if TYPE_CHECKING:  # only for annotations; quality imports this module
    from .quality import NoiseSample

__all__ = [
    "SYNERGIES",
    "GripperCommand",
    "Trajectory",
    "Contact",
    "GraspOutcome",
    "RolloutParams",
    "rollout",
    "grasp_success",
    "quasi_static_torques",
    "export_trace",
]

SYNERGIES = ("parallel", "thumb_index", "thumb_mid", "thumb_index_mid", "all_hand")

MAX_TRAJECTORY_STEPS = 1024
FINGER_COUNT = int(_kernels.F_MAX)

_REASONS = {
    _kernels.STATUS_OK: "ok",
    _kernels.STATUS_IK: "ik_unreachable",
    _kernels.STATUS_COLLISION: "collision",
}


@dataclass(frozen=True)
class GripperCommand:
    """When to close, with which finger synergy, from which opening."""

    close_step: int
    synergy: str = "parallel"
    aperture: float = 0.08

    def __post_init__(self) -> None:
        if self.synergy not in SYNERGIES:
            raise ValueError(f"unknown synergy {self.synergy!r}")
        if self.close_step < 0:
            raise ValueError("close_step must be non-negative")
        if not self.aperture > 0.0:
            raise ValueError("aperture must be positive")

    @property
    def synergy_index(self) -> int:
        return SYNERGIES.index(self.synergy)


@dataclass(frozen=True)
class Trajectory:
    """n end-effector states (x, y, z, roll, pitch, yaw) plus the gripper."""

    states: np.ndarray
    gripper: GripperCommand

    def __post_init__(self) -> None:
        states = np.ascontiguousarray(self.states, dtype=np.float64)
        if states.ndim != 2 or states.shape[1] != 6:
            raise ValueError("states must have shape (n, 6)")
        n = states.shape[0]
        if not 2 <= n <= MAX_TRAJECTORY_STEPS:
            raise ValueError(f"trajectory length must be in [2, {MAX_TRAJECTORY_STEPS}]")
        if not np.all(np.isfinite(states)):
            raise ValueError("states must be finite")
        if self.gripper.close_step >= n:
            raise ValueError("close_step must be < trajectory length")
        states.setflags(write=False)
        object.__setattr__(self, "states", states)

    @property
    def n_steps(self) -> int:
        return int(self.states.shape[0])


@dataclass(frozen=True)
class Contact:
    """One fingertip touching the target, in object-frame coordinates."""

    point: np.ndarray
    normal: np.ndarray
    finger: int


@dataclass(frozen=True)
class RolloutParams:
    ik: IKParams = field(default_factory=IKParams)
    contact_margin: float = CONTACT_MARGIN
    closure_substeps: int = 20
    opposition_deg: float = 60.0
    lift_height: float = 0.05


@dataclass(frozen=True)
class GraspOutcome:
    """Everything a rollout produced; paths share one truncated length."""

    success: bool
    reason: str
    lift_ok: bool
    grasp_start_step: int
    grasp_end_step: int
    joint_path: np.ndarray          # (m, dof)
    object_rotations: np.ndarray    # (m, 3, 3)
    object_translations: np.ndarray  # (m, 3)
    torque_path: np.ndarray         # (m, dof)
    contact_mask: np.ndarray        # (m, FINGER_COUNT) bool
    contact_points: np.ndarray      # (m, FINGER_COUNT, 3) object frame
    contact_normals: np.ndarray     # (m, FINGER_COUNT, 3) object frame

    @property
    def n_steps(self) -> int:
        return int(self.joint_path.shape[0])

    @property
    def object_pose_path(self) -> list[RigidTransform]:
        return [RigidTransform(r, t) for r, t in
                zip(self.object_rotations, self.object_translations)]

    def contacts_at(self, step: int) -> list[Contact]:
        out = []
        for f in range(FINGER_COUNT):
            if self.contact_mask[step, f]:
                out.append(Contact(point=self.contact_points[step, f].copy(),
                                   normal=self.contact_normals[step, f].copy(),
                                   finger=f))
        return out

    @property
    def final_contacts(self) -> list[Contact]:
        if self.n_steps == 0:
            return []
        return self.contacts_at(self.n_steps - 1)

    def first_contact_point(self) -> np.ndarray | None:
        """Object-frame point of the earliest fingertip contact, if any."""
        for step in range(self.n_steps):
            for f in range(FINGER_COUNT):
                if self.contact_mask[step, f]:
                    return self.contact_points[step, f].copy()
        return None


def _identity_noise(n: int, dof: int):
    return (np.eye(3), np.zeros(3), np.zeros((n, dof)), 1.0, np.zeros(3), 0.0)


def rollout(robot: RobotModel, scene: SceneModel, traj: Trajectory,
            noise: "NoiseSample | None" = None,
            params: RolloutParams = RolloutParams()) -> GraspOutcome:
    """Run one trajectory to a GraspOutcome.

    IK failure at a waypoint truncates the paths before it; a collision at a
    pre-closure waypoint (or any post-closure collision not involving the
    target) truncates the paths at it. Both are failures with the reason
    recorded, never exceptions.
    """
    n = traj.n_steps
    dof = robot.dof
    if noise is None:
        drot, dtr, joint_noise, mass_scale, com_off, margin_off = \
            _identity_noise(n, dof)
    else:
        drot = np.ascontiguousarray(noise.pose_delta_rotation)
        dtr = np.ascontiguousarray(noise.pose_delta_translation)
        joint_noise = np.ascontiguousarray(noise.joint_offsets(n, dof))
        mass_scale = float(noise.mass_scale)
        com_off = np.ascontiguousarray(noise.com_offset)
        margin_off = float(noise.margin_offset)

    rp = robot.packed
    sp = scene.packed
    target = scene.target

    joint_path = np.zeros((n, dof))
    obj_rot_path = np.zeros((n, 3, 3))
    obj_tr_path = np.zeros((n, 3))
    torque_path = np.zeros((n, dof))
    contact_mask = np.zeros((n, FINGER_COUNT), dtype=np.bool_)
    contact_points = np.zeros((n, FINGER_COUNT, 3))
    contact_normals = np.zeros((n, FINGER_COUNT, 3))

    status, n_valid, grasp_start, grasp_end, success, lift_ok = \
        _kernels.rollout_kernel(
            rp["jtypes"], rp["axes"], rp["org_rot"], rp["org_tr"],
            rp["ee_rot"], rp["ee_tr"], rp["limits"], rp["reach_bound"],
            rp["masses"], rp["gravity"], rp["q_home"],
            rp["ls_kind"], rp["ls_data"], rp["ls_link"], rp["self_pairs"],
            sp["obs_kind"], sp["obs_data"],
            sp["tg_kind"], sp["tg_data"],
            np.ascontiguousarray(target.pose.rotation),
            np.ascontiguousarray(target.pose.translation),
            target.mass, np.ascontiguousarray(target.center_of_mass),
            traj.states, traj.gripper.close_step,
            traj.gripper.synergy_index, traj.gripper.aperture,
            drot, dtr, joint_noise, mass_scale, com_off, margin_off,
            params.ik.damping, params.ik.step_clamp, params.ik.max_iters,
            params.ik.tol_pos, params.ik.tol_rot,
            params.contact_margin, params.closure_substeps,
            math.cos(math.radians(params.opposition_deg)), params.lift_height,
            joint_path, obj_rot_path, obj_tr_path, torque_path,
            contact_mask, contact_points, contact_normals)

    m = int(n_valid)
    grasp_end = min(int(grasp_end), m)
    return GraspOutcome(
        success=bool(success),
        reason=_REASONS[int(status)],
        lift_ok=bool(lift_ok),
        grasp_start_step=int(grasp_start),
        grasp_end_step=grasp_end,
        joint_path=joint_path[:m],
        object_rotations=obj_rot_path[:m],
        object_translations=obj_tr_path[:m],
        torque_path=torque_path[:m],
        contact_mask=contact_mask[:m],
        contact_points=contact_points[:m],
        contact_normals=contact_normals[:m],
    )


def grasp_success(contacts, center_of_mass, closure_axis,
                  lift_ok: bool = True, opposition_deg: float = 60.0) -> bool:
    """Quasi-static success predicate on a final contact set.

    True iff (a) some contact pair's normals oppose within opposition_deg,
    (b) the contact spread straddles the center of mass when projected on
    the closure axis, and (c) the lift check passed. All geometry is in one
    common frame; the predicate is invariant under rigidly transforming
    contacts, normals, COM, and axis together.
    """
    contacts = list(contacts)
    if len(contacts) < 2 or not lift_ok:
        return False
    opposition_cos = math.cos(math.radians(opposition_deg))
    opposing = any(
        float(np.dot(a.normal, b.normal)) <= -opposition_cos
        for i, a in enumerate(contacts) for b in contacts[i + 1:])
    if not opposing:
        return False
    axis = np.asarray(closure_axis, dtype=np.float64)
    com = np.asarray(center_of_mass, dtype=np.float64)
    spans = [float(np.dot(axis, c.point - com)) for c in contacts]
    return min(spans) <= 0.0 <= max(spans)


def quasi_static_torques(robot: RobotModel, q, payload_mass: float = 0.0,
                         ) -> np.ndarray:
    """Gravity-balancing joint torques with link masses at link origins and
    an optional payload lumped at the end effector."""
    q = np.ascontiguousarray(q, dtype=np.float64)
    if q.shape != (robot.dof,):
        raise ValueError(f"expected {robot.dof} joint values, got shape {q.shape}")
    if payload_mass < 0.0:
        raise ValueError("payload_mass must be non-negative")
    rp = robot.packed
    return _kernels.gravity_torques(rp["jtypes"], rp["axes"], rp["org_rot"],
                                    rp["org_tr"], rp["ee_rot"], rp["ee_tr"],
                                    q, rp["masses"], rp["gravity"],
                                    float(payload_mass))


def export_trace(robot: RobotModel, outcome: GraspOutcome, path) -> None:
    """Write one row per rollout step: joints, EE pose, object pose, torques,
    contact count. Floats use repr so identical outcomes give identical files."""
    from .kinematics import forward_kinematics
    from .se3 import transform_to_state

    dof = robot.dof
    header = (["step"]
              + [f"q{j}" for j in range(dof)]
              + ["ee_x", "ee_y", "ee_z", "ee_roll", "ee_pitch", "ee_yaw"]
              + ["obj_x", "obj_y", "obj_z", "obj_roll", "obj_pitch", "obj_yaw"]
              + [f"tau{j}" for j in range(dof)]
              + ["contact_count"])
    lines = [",".join(header)]
    for i in range(outcome.n_steps):
        ee = transform_to_state(forward_kinematics(robot, outcome.joint_path[i]))
        obj = transform_to_state(RigidTransform(outcome.object_rotations[i],
                                                outcome.object_translations[i]))
        row = ([str(i)]
               + [repr(v) for v in outcome.joint_path[i]]
               + [repr(v) for v in ee.as_vector()]
               + [repr(v) for v in obj.as_vector()]
               + [repr(v) for v in outcome.torque_path[i]]
               + [str(int(outcome.contact_mask[i].sum()))])
        lines.append(",".join(row))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
