"""Re-targeting archived grasps to an observed object pose.

A repertoire trajectory is expressed in world coordinates, but what makes
it a grasp is the hand's motion relative to the object. Adaptation rigidly
transports each end-effector state so that its pose relative to the
observed object equals the original's pose relative to the simulated one;
the feasibility filter then replays the result kinematically and accepts
it only when every waypoint is IK-solvable without joint jumps or
collisions.

Frame names follow one fixed convention: `a_from_b` maps b-frame
coordinates into a-frame coordinates. The observed object pose is the
camera extrinsics composed with the detector output, and the adaptation
transform is built from explicit invert/compose calls so each term is
auditable on its own.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .kinematics import DEFAULT_MAX_JOINT_JUMP, IKParams, RobotModel
from .rollout import Trajectory
from .scene import SceneModel
from .se3 import (
    EndEffectorState,
    RigidTransform,
    compose,
    invert,
    state_to_transform,
    transform_to_state,
)

__all__ = [
    "AdaptationFrames",
    "FilterReport",
    "adapt_state",
    "adapt_trajectory",
    "filter_trajectory",
    "select_grasps",
    "FILTER_CAUSES",
]

FILTER_CAUSES = ("none", "ik_unreachable", "joint_jump", "collision")


@dataclass(frozen=True)
class AdaptationFrames:
    """The three transforms deployment needs.

    world_from_camera comes from extrinsic calibration, camera_from_object
    from the pose estimator, world_from_object_sim from the scene the
    repertoire was generated in.
    """

    world_from_camera: RigidTransform
    camera_from_object: RigidTransform
    world_from_object_sim: RigidTransform

    def world_from_object(self) -> RigidTransform:
        return compose(self.world_from_camera, self.camera_from_object)

    def correction(self) -> RigidTransform:
        """Transform applied to world-frame states: new object pose composed
        with the inverse of the simulated one."""
        return compose(self.world_from_object(),
                       invert(self.world_from_object_sim))


def _adapt_row(row: np.ndarray, correction: RigidTransform) -> np.ndarray:
    moved = compose(correction,
                    state_to_transform(EndEffectorState.from_vector(row)))
    return transform_to_state(moved).as_vector()


def adapt_state(state: EndEffectorState,
                frames: AdaptationFrames) -> EndEffectorState:
    """Transport one end-effector state to the observed object.

    The result's pose relative to the observed object equals the input's
    pose relative to the simulated object.
    """
    return transform_to_state(
        compose(frames.correction(), state_to_transform(state)))


def adapt_trajectory(traj: Trajectory, frames: AdaptationFrames) -> Trajectory:
    """adapt_state applied to every waypoint; the gripper command rides
    along unchanged."""
    correction = frames.correction()
    states = np.empty_like(traj.states)
    for i in range(traj.n_steps):
        states[i] = _adapt_row(traj.states[i], correction)
    return Trajectory(states=states, gripper=traj.gripper)


@dataclass(frozen=True)
class FilterReport:
    accepted: bool
    first_fail_step: int
    cause: str
    joint_path: np.ndarray | None

    def __bool__(self) -> bool:
        return self.accepted


def filter_trajectory(traj: Trajectory, robot: RobotModel, scene: SceneModel,
                      max_step: float = DEFAULT_MAX_JOINT_JUMP,
                      ik: IKParams = IKParams()) -> FilterReport:
    """Kinematic feasibility: IK at every waypoint (each seeded from the
    previous solution), per-joint step continuity, and collision freedom
    with the target object ignored once closure starts.

    Failures come back as a report, never as an exception.
    """
    rp = robot.packed
    sp = scene.packed
    target = scene.target
    joint_path = np.zeros((traj.n_steps, robot.dof))
    accepted, fail_step, cause = _kernels.track_filter_kernel(
        rp["jtypes"], rp["axes"], rp["org_rot"], rp["org_tr"],
        rp["ee_rot"], rp["ee_tr"], rp["limits"], rp["reach_bound"],
        rp["q_home"],
        rp["ls_kind"], rp["ls_data"], rp["ls_link"], rp["self_pairs"],
        sp["obs_kind"], sp["obs_data"], sp["tg_kind"], sp["tg_data"],
        np.ascontiguousarray(target.pose.rotation),
        np.ascontiguousarray(target.pose.translation),
        traj.states, traj.gripper.close_step,
        ik.damping, ik.step_clamp, ik.max_iters, ik.tol_pos, ik.tol_rot,
        max_step, joint_path)
    return FilterReport(accepted=bool(accepted),
                        first_fail_step=int(fail_step),
                        cause=FILTER_CAUSES[int(cause)],
                        joint_path=joint_path if accepted else None)


def select_grasps(ranked, top_k: int | None = None,
                  descriptor_region: tuple[np.ndarray, np.ndarray] | None = None,
                  min_robustness: float | None = None) -> list:
    """Narrow a ranked elite list to a deployment scenario.

    Filters compose: descriptor box membership and a robustness floor
    first, then truncation to the k best. Rank order is preserved and an
    empty result is a valid answer.
    """
    picked = list(ranked)
    if descriptor_region is not None:
        lo, hi = (np.asarray(b, dtype=np.float64) for b in descriptor_region)
        if lo.shape != (3,) or hi.shape != (3,):
            raise ValueError("descriptor_region bounds must have shape (3,)")
        picked = [s for s in picked
                  if np.all(s.elite.descriptor >= lo)
                  and np.all(s.elite.descriptor <= hi)]
    if min_robustness is not None:
        picked = [s for s in picked if s.quality.robustness >= min_robustness]
    if top_k is not None:
        if top_k < 0:
            raise ValueError("top_k must be >= 0")
        picked = picked[:top_k]
    return picked
