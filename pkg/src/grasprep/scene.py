"""Collision world: objects on a table, a camera frame, and queries.

The world frame W is fixed. Each object carries its current pose
(world_from_object); the scene additionally records the camera pose
(world_from_camera) and the pose the target object had when trajectories
were generated (world_from_object_sim). All queries are pure; updating a
pose means building a new scene value.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import cached_property

import numpy as np

from . import _kernels
from .kinematics import RobotModel
from .se3 import RigidTransform
from .shapes import HalfSpace, Shape, bounding_radius, pack_shape, shape_aabb

__all__ = [
    "ObjectModel",
    "SceneModel",
    "object_mass_properties",
    "make_object",
    "robot_collides",
    "DEFAULT_DENSITY",
    "CONTACT_MARGIN",
]

DEFAULT_DENSITY = 1.5
# gap (m) at or below which a separation still counts as touching
CONTACT_MARGIN = 1e-3


def object_mass_properties(vertices, density: float = DEFAULT_DENSITY,
                           ) -> tuple[float, np.ndarray]:
    """Mass and center of mass from a vertex cloud.

    The center of mass is the plain vertex mean. Mass is density times the
    volume of the cloud's axis-aligned bounding box, a deliberate
    approximation that stays deterministic for any input order.
    """
    pts = np.asarray(vertices, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 3 or pts.shape[0] < 4:
        raise ValueError("need at least 4 vertices of dimension 3")
    if not np.all(np.isfinite(pts)):
        raise ValueError("vertices must be finite")
    centered = pts - pts.mean(axis=0)
    sv = np.linalg.svd(centered, compute_uv=False)
    if sv[2] <= 1e-12 * max(sv[0], 1.0):
        raise ValueError("degenerate vertex set: points are coplanar")
    extent = pts.max(axis=0) - pts.min(axis=0)
    mass = float(density) * float(np.prod(extent))
    return mass, pts.mean(axis=0)


@dataclass(frozen=True)
class ObjectModel:
    """A rigid object: collision shapes and mass data in its own frame."""

    id: str
    shapes: tuple[Shape, ...]
    vertices: np.ndarray
    mass: float
    center_of_mass: np.ndarray
    pose: RigidTransform = field(default_factory=RigidTransform.identity)

    def __post_init__(self) -> None:
        if not self.shapes:
            raise ValueError("object needs at least one shape")
        object.__setattr__(self, "shapes", tuple(self.shapes))
        if not self.mass > 0.0:
            raise ValueError("object mass must be positive")
        com = np.ascontiguousarray(self.center_of_mass, dtype=np.float64)
        if com.shape != (3,) or not np.all(np.isfinite(com)):
            raise ValueError("center_of_mass must be a finite 3-vector")
        com.setflags(write=False)
        object.__setattr__(self, "center_of_mass", com)
        verts = np.ascontiguousarray(self.vertices, dtype=np.float64)
        verts.setflags(write=False)
        object.__setattr__(self, "vertices", verts)

    def at_pose(self, pose: RigidTransform) -> "ObjectModel":
        return replace(self, pose=pose)

    @cached_property
    def aabb(self) -> tuple[np.ndarray, np.ndarray]:
        """Object-frame bounds over all collision shapes."""
        los, his = zip(*(shape_aabb(s) for s in self.shapes))
        return np.min(los, axis=0), np.max(his, axis=0)

    @cached_property
    def bounding_radius(self) -> float:
        return bounding_radius(self.shapes)

    @cached_property
    def packed_shapes(self) -> tuple[np.ndarray, np.ndarray]:
        kinds = np.array([pack_shape(s)[0] for s in self.shapes], dtype=np.int64)
        data = np.ascontiguousarray([pack_shape(s)[1] for s in self.shapes])
        return kinds, data


def make_object(object_id: str, shapes, vertices,
                density: float = DEFAULT_DENSITY,
                pose: RigidTransform | None = None) -> ObjectModel:
    """Build an ObjectModel, deriving mass and COM from the vertices."""
    mass, com = object_mass_properties(vertices, density)
    return ObjectModel(id=object_id, shapes=tuple(shapes),
                       vertices=np.asarray(vertices, dtype=np.float64),
                       mass=mass, center_of_mass=com,
                       pose=pose if pose is not None else RigidTransform.identity())


@dataclass(frozen=True)
class SceneModel:
    """Table, objects, and the frames trajectories are expressed against."""

    table: HalfSpace
    objects: tuple[ObjectModel, ...]
    target_id: str
    camera_pose: RigidTransform = field(default_factory=RigidTransform.identity)
    object_sim_pose: RigidTransform = field(default_factory=RigidTransform.identity)

    def __post_init__(self) -> None:
        object.__setattr__(self, "objects", tuple(self.objects))
        ids = [o.id for o in self.objects]
        if len(set(ids)) != len(ids):
            raise ValueError("object ids must be unique")
        if ids.count(self.target_id) != 1:
            raise ValueError(f"scene must contain exactly one object "
                             f"with target id {self.target_id!r}")

    @property
    def target(self) -> ObjectModel:
        for obj in self.objects:
            if obj.id == self.target_id:
                return obj
        raise AssertionError("unreachable: target validated in __post_init__")

    def with_target_pose(self, pose: RigidTransform) -> "SceneModel":
        objects = tuple(o.at_pose(pose) if o.id == self.target_id else o
                        for o in self.objects)
        return replace(self, objects=objects)

    @cached_property
    def packed(self) -> dict:
        """World-frame obstacle arrays plus target shapes kept in local frame.

        Obstacles are the table and every non-target object, all baked into
        world coordinates. Target shapes stay in the object frame so rollout
        noise can re-pose them cheaply.
        """
        obs_kinds: list[int] = []
        obs_data: list[np.ndarray] = []
        kind, data = pack_shape(self.table)
        obs_kinds.append(kind)
        obs_data.append(data)
        for obj in self.objects:
            if obj.id == self.target_id:
                continue
            kinds, datas = obj.packed_shapes
            rot = np.ascontiguousarray(obj.pose.rotation)
            tr = np.ascontiguousarray(obj.pose.translation)
            for k, d in zip(kinds, datas):
                obs_kinds.append(int(k))
                obs_data.append(_kernels.shape_to_world(int(k), d, rot, tr))
        target = self.target
        tg_kind, tg_data = target.packed_shapes
        return {
            "obs_kind": np.array(obs_kinds, dtype=np.int64),
            "obs_data": np.ascontiguousarray(obs_data),
            "tg_kind": tg_kind,
            "tg_data": tg_data,
        }


def robot_collides(robot: RobotModel, q, scene: SceneModel,
                   ignore_target: bool = False) -> bool:
    """True iff any link shape penetrates the world or another link.

    Penetration means strictly negative distance; tangency does not count.
    The target object is skipped when ignore_target is set, which is how the
    closure phase of a grasp avoids rejecting intended contact.
    """
    q = np.ascontiguousarray(q, dtype=np.float64)
    if q.shape != (robot.dof,):
        raise ValueError(f"expected {robot.dof} joint values, got shape {q.shape}")
    rp = robot.packed
    sp = scene.packed
    target = scene.target
    return bool(_kernels.robot_collision(
        rp["jtypes"], rp["axes"], rp["org_rot"], rp["org_tr"],
        rp["ee_rot"], rp["ee_tr"], q,
        rp["ls_kind"], rp["ls_data"], rp["ls_link"], rp["self_pairs"],
        sp["obs_kind"], sp["obs_data"],
        sp["tg_kind"], sp["tg_data"],
        np.ascontiguousarray(target.pose.rotation),
        np.ascontiguousarray(target.pose.translation),
        not ignore_target))
