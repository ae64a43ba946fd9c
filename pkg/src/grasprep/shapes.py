"""Collision primitives and pairwise signed distance.

Four primitives cover every body in this package: spheres, capsules, boxes,
and half-spaces. Shape parameters live in the owning body's local frame; a
world pose is supplied at query time. Signed distance is negative exactly
when the shapes overlap, and both witness points are returned so callers can
recover contact normals.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .se3 import RigidTransform

__all__ = [
    "Sphere",
    "Capsule",
    "Box",
    "HalfSpace",
    "Shape",
    "pack_shape",
    "shape_distance",
    "shape_aabb",
    "bounding_radius",
]


def _vec3(value, name: str) -> np.ndarray:
    out = np.ascontiguousarray(value, dtype=np.float64)
    if out.shape != (3,):
        raise ValueError(f"{name} must be a 3-vector")
    if not np.all(np.isfinite(out)):
        raise ValueError(f"{name} must be finite")
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class Sphere:
    center: np.ndarray
    radius: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "center", _vec3(self.center, "center"))
        if not self.radius > 0.0:
            raise ValueError("radius must be positive")


@dataclass(frozen=True)
class Capsule:
    """Segment from p0 to p1 swept by a sphere of the given radius."""

    p0: np.ndarray
    p1: np.ndarray
    radius: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "p0", _vec3(self.p0, "p0"))
        object.__setattr__(self, "p1", _vec3(self.p1, "p1"))
        if not self.radius > 0.0:
            raise ValueError("radius must be positive")


@dataclass(frozen=True)
class Box:
    """Oriented box: half extents along the axes of its own pose frame."""

    half_extents: np.ndarray
    pose: RigidTransform = field(default_factory=RigidTransform.identity)

    def __post_init__(self) -> None:
        he = _vec3(self.half_extents, "half_extents")
        if not np.all(he > 0.0):
            raise ValueError("half_extents must be positive")
        object.__setattr__(self, "half_extents", he)


@dataclass(frozen=True)
class HalfSpace:
    """Solid region {x : normal . x <= offset}; the normal points out."""

    normal: np.ndarray
    offset: float

    def __post_init__(self) -> None:
        normal = np.ascontiguousarray(self.normal, dtype=np.float64)
        if normal.shape != (3,):
            raise ValueError("normal must be a 3-vector")
        norm = float(np.linalg.norm(normal))
        if not norm > 0.0:
            raise ValueError("normal must be nonzero")
        normal = normal / norm
        normal.setflags(write=False)
        object.__setattr__(self, "normal", normal)
        object.__setattr__(self, "offset", float(self.offset) / norm)


Shape = Sphere | Capsule | Box | HalfSpace


def pack_shape(shape: Shape) -> tuple[int, np.ndarray]:
    """Flatten a shape into the (kind, 16-float) layout the kernels use."""
    data = np.zeros(16)
    if isinstance(shape, Sphere):
        data[0:3] = shape.center
        data[3] = shape.radius
        return _kernels.KIND_SPHERE, data
    if isinstance(shape, Capsule):
        data[0:3] = shape.p0
        data[3:6] = shape.p1
        data[6] = shape.radius
        return _kernels.KIND_CAPSULE, data
    if isinstance(shape, Box):
        data[0:3] = shape.half_extents
        data[3:12] = shape.pose.rotation.reshape(9)
        data[12:15] = shape.pose.translation
        return _kernels.KIND_BOX, data
    if isinstance(shape, HalfSpace):
        data[0:3] = shape.normal
        data[3] = shape.offset
        return _kernels.KIND_HALFSPACE, data
    raise TypeError(f"not a shape: {shape!r}")


def shape_distance(shape_a: Shape, pose_a: RigidTransform,
                   shape_b: Shape, pose_b: RigidTransform,
                   ) -> tuple[float, np.ndarray, np.ndarray]:
    """Signed distance between two posed shapes plus world witness points.

    The distance is the surface gap when positive and the penetration depth
    negated when the interiors overlap. Witness points realize the gap for
    separated shapes; under penetration they are representative deepest
    points on each surface.
    """
    kind_a, data_a = pack_shape(shape_a)
    kind_b, data_b = pack_shape(shape_b)
    wd_a = _kernels.shape_to_world(kind_a, data_a,
                                   np.ascontiguousarray(pose_a.rotation),
                                   np.ascontiguousarray(pose_a.translation))
    wd_b = _kernels.shape_to_world(kind_b, data_b,
                                   np.ascontiguousarray(pose_b.rotation),
                                   np.ascontiguousarray(pose_b.translation))
    dist, pa, pb = _kernels.dist_shapes(kind_a, wd_a, kind_b, wd_b)
    return float(dist), pa, pb


def shape_aabb(shape: Shape) -> tuple[np.ndarray, np.ndarray]:
    """Axis-aligned bounds of one shape in its owning body's frame."""
    if isinstance(shape, Sphere):
        return shape.center - shape.radius, shape.center + shape.radius
    if isinstance(shape, Capsule):
        lo = np.minimum(shape.p0, shape.p1) - shape.radius
        hi = np.maximum(shape.p0, shape.p1) + shape.radius
        return lo, hi
    if isinstance(shape, Box):
        # extent of a rotated box along each axis: |R| @ half_extents
        reach = np.abs(shape.pose.rotation) @ shape.half_extents
        center = shape.pose.translation
        return center - reach, center + reach
    raise ValueError(f"shape has unbounded extent: {shape!r}")


def bounding_radius(shapes) -> float:
    """Radius about the body-frame origin enclosing all given shapes."""
    radius = 0.0
    for shape in shapes:
        lo, hi = shape_aabb(shape)
        corner = np.maximum(np.abs(lo), np.abs(hi))
        radius = max(radius, float(np.linalg.norm(corner)))
    return radius
