"""Feasibility maps of a grasp repertoire over a box of object poses.

The working space is discretized into cell-center positions crossed with a
small orientation set. A fixed subset of the repertoire is sampled once;
for every grid pose each sampled trajectory is rigidly adapted there and
run through the kinematic feasibility filter. The per-pose count of
accepted adaptations is the heatmap value.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .adaptation import (
    FILTER_CAUSES,
    AdaptationFrames,
    adapt_trajectory,
    filter_trajectory,
)
from .kinematics import DEFAULT_MAX_JOINT_JUMP, IKParams, RobotModel
from .rollout import Trajectory
from .scene import SceneModel
from .se3 import RigidTransform

__all__ = [
    "GridSpec",
    "GridResult",
    "default_orientations",
    "grid_poses",
    "evaluate_grid",
    "export_heatmap",
]


def _rot_y(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def _rot_z(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def default_orientations() -> tuple[np.ndarray, ...]:
    """Two tilts about y crossed with three spins about z, identity first."""
    out = []
    for ay in (0.0, math.pi / 2.0):
        for az in (0.0, 2.0 * math.pi / 3.0, 4.0 * math.pi / 3.0):
            out.append(_rot_y(ay) @ _rot_z(az))
    return tuple(out)


@dataclass(frozen=True, eq=False)
class GridSpec:
    box_min: np.ndarray
    box_max: np.ndarray
    divisions: tuple[int, int, int]
    orientations: tuple[np.ndarray, ...] = ()
    trajectories_per_pose: int = 5
    seed: int = 0

    def __post_init__(self) -> None:
        lo = np.ascontiguousarray(self.box_min, dtype=np.float64)
        hi = np.ascontiguousarray(self.box_max, dtype=np.float64)
        object.__setattr__(self, "box_min", lo)
        object.__setattr__(self, "box_max", hi)
        if lo.shape != (3,) or hi.shape != (3,):
            raise ValueError("box bounds must have shape (3,)")
        if (lo >= hi).any():
            raise ValueError("box min must be < max per axis")
        if len(self.divisions) != 3 or any(d < 1 for d in self.divisions):
            raise ValueError("divisions must be three positive integers")
        object.__setattr__(self, "divisions",
                           tuple(int(d) for d in self.divisions))
        orients = self.orientations if self.orientations \
            else default_orientations()
        checked = []
        for rot in orients:
            rot = np.ascontiguousarray(rot, dtype=np.float64)
            if rot.shape != (3, 3) or \
                    not np.allclose(rot @ rot.T, np.eye(3), atol=1e-9) or \
                    abs(np.linalg.det(rot) - 1.0) > 1e-9:
                raise ValueError("orientations must be rotation matrices")
            checked.append(rot)
        object.__setattr__(self, "orientations", tuple(checked))
        if self.trajectories_per_pose < 1:
            raise ValueError("trajectories_per_pose must be >= 1")

    @property
    def n_poses(self) -> int:
        nx, ny, nz = self.divisions
        return nx * ny * nz * len(self.orientations)


def grid_poses(spec: GridSpec, base_rotation: np.ndarray | None = None,
               ) -> list[RigidTransform]:
    """Cell-center object poses in row-major cell order, orientations
    innermost. Each pose's rotation is the grid orientation applied on top
    of `base_rotation` (the object's nominal rotation)."""
    base = np.eye(3) if base_rotation is None else \
        np.ascontiguousarray(base_rotation, dtype=np.float64)
    nx, ny, nz = spec.divisions
    width = (spec.box_max - spec.box_min) / np.array([nx, ny, nz])
    poses = []
    for ix in range(nx):
        for iy in range(ny):
            for iz in range(nz):
                center = spec.box_min + (np.array([ix, iy, iz]) + 0.5) * width
                for orient in spec.orientations:
                    poses.append(RigidTransform(orient @ base, center))
    return poses


@dataclass(eq=False)
class GridResult:
    spec: GridSpec
    cells: np.ndarray
    orientation_index: np.ndarray
    positions: np.ndarray
    feasible: np.ndarray
    causes: np.ndarray
    n_sampled: int

    @property
    def n_poses(self) -> int:
        return self.positions.shape[0]

    def totals(self) -> dict[str, int]:
        out = {"poses": self.n_poses,
               "feasible": int(self.feasible.sum()),
               "max_per_pose": self.n_sampled}
        for ci, name in enumerate(FILTER_CAUSES):
            if ci == 0:
                continue
            out[name] = int((self.causes == ci).sum())
        return out


def evaluate_grid(source, robot: RobotModel, scene: SceneModel,
                  spec: GridSpec, max_step: float = DEFAULT_MAX_JOINT_JUMP,
                  ik: IKParams = IKParams(), workers: int = 1) -> GridResult:
    """Count feasible adapted trajectories at every grid pose.

    `source` is an archive or a plain trajectory list. The subset of
    trajectories_per_pose trajectories is drawn once (seeded) and reused
    for every pose, so pose columns are directly comparable.
    """
    if hasattr(source, "elites"):
        trajectories = [e.trajectory for e in source.elites()]
    else:
        trajectories = list(source)
    if not trajectories:
        raise ValueError("empty repertoire: nothing to adapt")
    for t in trajectories:
        if not isinstance(t, Trajectory):
            raise TypeError("source must yield Trajectory records")

    k = min(spec.trajectories_per_pose, len(trajectories))
    rng = np.random.Generator(
        np.random.Philox(np.random.SeedSequence([spec.seed])))
    chosen = sorted(rng.choice(len(trajectories), size=k, replace=False))
    sampled = [trajectories[int(i)] for i in chosen]

    sim = scene.object_sim_pose
    poses = grid_poses(spec, base_rotation=sim.rotation)
    n_orient = len(spec.orientations)

    def check(pose: RigidTransform) -> tuple[int, list[int]]:
        frames = AdaptationFrames(world_from_camera=RigidTransform.identity(),
                                  camera_from_object=pose,
                                  world_from_object_sim=sim)
        local = scene.with_target_pose(pose)
        count = 0
        causes = []
        for traj in sampled:
            report = filter_trajectory(adapt_trajectory(traj, frames),
                                       robot, local, max_step, ik)
            causes.append(FILTER_CAUSES.index(report.cause))
            if report.accepted:
                count += 1
        return count, causes

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(check, poses))
    else:
        outcomes = [check(p) for p in poses]

    nx, ny, nz = spec.divisions
    cells = np.array([(ix, iy, iz)
                      for ix in range(nx) for iy in range(ny)
                      for iz in range(nz)
                      for _ in range(n_orient)], dtype=np.int64)
    orientation_index = np.array(
        [oi for _ in range(nx * ny * nz) for oi in range(n_orient)],
        dtype=np.int64)
    positions = np.array([p.translation for p in poses])
    feasible = np.array([c for c, _ in outcomes], dtype=np.int64)
    causes = np.array([cs for _, cs in outcomes], dtype=np.int64)
    return GridResult(spec=spec, cells=cells,
                      orientation_index=orientation_index,
                      positions=positions, feasible=feasible, causes=causes,
                      n_sampled=k)


def export_heatmap(result: GridResult, path: str) -> None:
    """Comma-separated feasibility table, one row per pose.

    `position_total` repeats the per-position sum over that position's
    orientations, so position-level maps need no regrouping. Identical
    results always serialize to identical bytes.
    """
    n_orient = len(result.spec.orientations)
    sums = result.feasible.reshape(-1, n_orient).sum(axis=1)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("x,y,z,orientation,feasible,position_total\n")
        for row in range(result.n_poses):
            x, y, z = (float(v) for v in result.positions[row])
            fh.write(f"{x!r},{y!r},{z!r},"
                     f"{int(result.orientation_index[row])},"
                     f"{int(result.feasible[row])},"
                     f"{int(sums[row // n_orient])}\n")
