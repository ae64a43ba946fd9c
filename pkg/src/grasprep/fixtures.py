"""Bundled desk-scale robots, objects, and scenes.

Everything here is built in code so tests have a single source of truth;
the text files under data/ are generated from these constructors and ship
with the package for the CLI. Dimensions are meters and chosen so a grasp
episode runs in well under a millisecond of simulated arm motion.
"""

from __future__ import annotations

import numpy as np

from .kinematics import Joint, RobotModel
from .rollout import GripperCommand, Trajectory
from .scene import ObjectModel, SceneModel, make_object
from .se3 import RigidTransform, euler_to_matrix
from .shapes import Box, Capsule, HalfSpace, Sphere

__all__ = [
    "desk_arm",
    "seven_joint_arm",
    "six_joint_arm",
    "pudding_box",
    "power_drill",
    "mug",
    "orange",
    "spatula",
    "bundled_objects",
    "pinch_box_scene",
    "pinch_box_trajectory",
    "bundled_robots",
]

_IDENTITY = RigidTransform.identity


def _t(x: float, y: float, z: float) -> RigidTransform:
    return RigidTransform(np.eye(3), np.array([x, y, z]))


def desk_arm() -> RobotModel:
    """Gantry-style desk robot: prismatic x/y/z plus a wrist yaw.

    The end effector reaches exactly (qx, qy, qz) with orientation Rz(yaw),
    which makes IK benign and keeps the grasp search focused on trajectory
    shape rather than arm dexterity. A wrist sphere is the only collision
    body, so the chassis never blocks the fingers but crashing the wrist
    into the table or the target still counts.
    """
    joints = (
        Joint("prismatic", np.array([1.0, 0.0, 0.0]), _IDENTITY(),
              (-0.6, 0.6), mass=2.0),
        Joint("prismatic", np.array([0.0, 1.0, 0.0]), _IDENTITY(),
              (-0.6, 0.6), mass=2.0),
        Joint("prismatic", np.array([0.0, 0.0, 1.0]), _IDENTITY(),
              (0.02, 0.65), mass=1.5),
        Joint("revolute", np.array([0.0, 0.0, 1.0]), _IDENTITY(),
              (-3.1, 3.1), mass=0.5),
    )
    link_collision = (
        (), (), (),
        (Sphere(np.array([0.0, 0.0, 0.0]), 0.03),),
    )
    return RobotModel(name="desk4", joints=joints, ee_offset=_IDENTITY(),
                      link_collision=link_collision)


def seven_joint_arm() -> RobotModel:
    """Generic 7R arm with alternating z/y axes, capsule link bodies."""
    z = np.array([0.0, 0.0, 1.0])
    y = np.array([0.0, 1.0, 0.0])
    joints = (
        Joint("revolute", z, _t(0.0, 0.0, 0.20), (-2.9, 2.9), mass=3.0),
        Joint("revolute", y, _t(0.0, 0.0, 0.12), (-1.9, 1.9), mass=3.0),
        Joint("revolute", z, _t(0.0, 0.0, 0.25), (-2.9, 2.9), mass=2.5),
        Joint("revolute", y, _t(0.0, 0.0, 0.10), (-2.1, 2.1), mass=2.5),
        Joint("revolute", z, _t(0.0, 0.0, 0.25), (-2.9, 2.9), mass=2.0),
        Joint("revolute", y, _t(0.0, 0.0, 0.08), (-2.1, 2.1), mass=1.5),
        Joint("revolute", z, _t(0.0, 0.0, 0.09), (-3.0, 3.0), mass=0.8),
    )
    cap = lambda z0, z1, r: Capsule(np.array([0.0, 0.0, z0]),
                                    np.array([0.0, 0.0, z1]), r)
    link_collision = (
        (cap(-0.16, 0.0, 0.06),),
        (cap(0.0, 0.20, 0.055),),
        (cap(-0.20, 0.0, 0.05),),
        (cap(0.0, 0.20, 0.05),),
        (cap(-0.20, 0.0, 0.045),),
        (),
        (Sphere(np.array([0.0, 0.0, 0.0]), 0.04),),
    )
    return RobotModel(name="arm7", joints=joints,
                      ee_offset=_t(0.0, 0.0, 0.06),
                      link_collision=link_collision,
                      self_collision_exclude=frozenset({(0, 2), (2, 4)}))


def six_joint_arm() -> RobotModel:
    """Classic 6R elbow arm (shoulder pan/lift, elbow, 3R wrist)."""
    z = np.array([0.0, 0.0, 1.0])
    y = np.array([0.0, 1.0, 0.0])
    x = np.array([1.0, 0.0, 0.0])
    joints = (
        Joint("revolute", z, _t(0.0, 0.0, 0.16), (-3.1, 3.1), mass=3.5),
        Joint("revolute", y, _t(0.0, 0.0, 0.10), (-2.2, 2.2), mass=4.0),
        Joint("revolute", y, _t(0.0, 0.0, 0.35), (-2.5, 2.5), mass=2.5),
        Joint("revolute", x, _t(0.09, 0.0, 0.32), (-3.1, 3.1), mass=1.5),
        Joint("revolute", y, _t(0.09, 0.0, 0.0), (-2.0, 2.0), mass=1.0),
        Joint("revolute", x, _t(0.07, 0.0, 0.0), (-3.1, 3.1), mass=0.5),
    )
    cap = lambda p0, p1, r: Capsule(np.array(p0), np.array(p1), r)
    link_collision = (
        (cap([0, 0, -0.12], [0, 0, 0], 0.06),),
        (cap([0, 0, 0], [0, 0, 0.33], 0.055),),
        (cap([0, 0, 0], [0.09, 0, 0.30], 0.045),),
        (),
        (Sphere(np.array([0.035, 0.0, 0.0]), 0.045),),
        (),
    )
    return RobotModel(name="arm6", joints=joints,
                      ee_offset=_t(0.05, 0.0, 0.0),
                      link_collision=link_collision)


def bundled_robots() -> dict[str, RobotModel]:
    return {r.name: r for r in (desk_arm(), seven_joint_arm(), six_joint_arm())}


def _box_vertices(half: np.ndarray, center=(0.0, 0.0, 0.0)) -> np.ndarray:
    corners = np.array([[sx, sy, sz] for sx in (-1, 1)
                        for sy in (-1, 1) for sz in (-1, 1)], dtype=np.float64)
    return corners * np.asarray(half) + np.asarray(center, dtype=np.float64)


def pudding_box() -> ObjectModel:
    half = np.array([0.02, 0.02, 0.02])
    return make_object("pudding_box", (Box(half),), _box_vertices(half))


def power_drill() -> ObjectModel:
    body = Capsule(np.array([0.0, 0.0, 0.0]), np.array([0.0, 0.0, 0.11]), 0.028)
    handle = Box(np.array([0.016, 0.016, 0.05]), pose=_t(0.0, 0.0, -0.05))
    verts = np.vstack([
        _box_vertices(np.array([0.028, 0.028, 0.07]), (0.0, 0.0, 0.07)),
        _box_vertices(np.array([0.016, 0.016, 0.05]), (0.0, 0.0, -0.05)),
    ])
    return make_object("power_drill", (body, handle), verts)


def mug() -> ObjectModel:
    # squat cylinder stand-in built from a fat capsule plus a handle bar
    body = Capsule(np.array([0.0, 0.0, -0.025]), np.array([0.0, 0.0, 0.025]), 0.04)
    handle = Box(np.array([0.008, 0.018, 0.03]), pose=_t(0.052, 0.0, 0.0))
    verts = np.vstack([
        _box_vertices(np.array([0.04, 0.04, 0.048])),
        _box_vertices(np.array([0.008, 0.018, 0.03]), (0.052, 0.0, 0.0)),
    ])
    return make_object("mug", (body, handle), verts)


def orange() -> ObjectModel:
    shape = Sphere(np.array([0.0, 0.0, 0.0]), 0.038)
    verts = _box_vertices(np.array([0.038, 0.038, 0.038]))
    return make_object("orange", (shape,), verts)


def spatula() -> ObjectModel:
    blade = Box(np.array([0.045, 0.035, 0.004]), pose=_t(0.055, 0.0, 0.0))
    handle = Capsule(np.array([0.0, 0.0, 0.0]), np.array([-0.11, 0.0, 0.0]), 0.011)
    verts = np.vstack([
        _box_vertices(np.array([0.045, 0.035, 0.004]), (0.055, 0.0, 0.0)),
        _box_vertices(np.array([0.055, 0.011, 0.011]), (-0.055, 0.0, 0.0)),
    ])
    return make_object("spatula", (blade, handle), verts)


def bundled_objects() -> dict[str, ObjectModel]:
    objs = (pudding_box(), power_drill(), mug(), orange(), spatula())
    return {o.id: o for o in objs}


PINCH_BOX_POSE = (0.3, 0.0, 0.02)


def pinch_box_scene() -> SceneModel:
    """A 4 cm cube on the table in front of the desk arm."""
    target_pose = _t(*PINCH_BOX_POSE)
    target = pudding_box().at_pose(target_pose)
    return SceneModel(
        table=HalfSpace(np.array([0.0, 0.0, 1.0]), 0.0),
        objects=(target,),
        target_id="pudding_box",
        camera_pose=RigidTransform(euler_to_matrix(0.0, 1.1, 0.0),
                                   np.array([-0.25, 0.0, 0.9])),
        object_sim_pose=target_pose,
    )


def pinch_box_trajectory(n_steps: int = 12) -> Trajectory:
    """Canonical antipodal side pinch on the bundled cube.

    Descends over the box center to fingertip mid-height, then closes the
    parallel jaws along x and holds. Verified geometry: tips start at
    x = 0.3 +- 0.04 and meet the faces at x = 0.3 +- 0.02 with opposing
    normals through the center of mass.
    """
    if n_steps < 6:
        raise ValueError("pinch fixture needs at least 6 steps")
    close_step = n_steps - 4
    hover = np.array([0.3, 0.0, 0.25, 0.0, 0.0, 0.0])
    grasp = np.array([0.3, 0.0, 0.11, 0.0, 0.0, 0.0])
    states = np.empty((n_steps, 6))
    for i in range(close_step + 1):
        a = i / close_step
        states[i] = hover + a * (grasp - hover)
    states[close_step + 1:] = grasp
    return Trajectory(states=states,
                      gripper=GripperCommand(close_step=close_step,
                                             synergy="parallel",
                                             aperture=0.08))
