"""Grasp quality metrics under domain randomization.

Nine per-trajectory metrics estimate how well a simulated grasp will
survive reality: temporal variances of the contact set and the object
state, Monte-Carlo success ratios under object-pose and joint noise, and
gravity-torque energy over three episode windows. Noise draws are
counter-based, so a sample is a pure function of (spec, index) and every
caller sees the same perturbations; this makes scores comparable across
candidates and runs.

The dynamics family (mass, center of mass, contact margin) is drawn
alongside the other two and applies whenever a full sample is passed to
rollout; the two robustness ratios deliberately isolate one family each so
the scores stay attributable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np

from . import _kernels
from .kinematics import RobotModel
from .rollout import RolloutParams, Trajectory, rollout
from .scene import SceneModel

__all__ = [
    "ObjectPoseNoise",
    "JointNoise",
    "DynamicsNoise",
    "NoiseSpec",
    "NoiseSample",
    "QualityVector",
    "sample_noise",
    "compute_quality",
    "fitness",
    "rank_repertoire",
    "ScoredElite",
    "DEFAULT_WEIGHTS",
]

# default sigmas stand in for hardware-calibrated values
DEFAULT_SIGMA_POS = 0.005
DEFAULT_SIGMA_ROT = 0.02
DEFAULT_SIGMA_JOINT = 0.005

DEFAULT_WEIGHTS = {"robustness": 0.5, "robustness_noise_joint": 0.5}

_STREAM_POSE = 0
_STREAM_JOINT = 1
_STREAM_DYNAMICS = 2


@dataclass(frozen=True)
class ObjectPoseNoise:
    sigma_pos: float = DEFAULT_SIGMA_POS
    sigma_rot: float = DEFAULT_SIGMA_ROT


@dataclass(frozen=True)
class JointNoise:
    sigma: float = DEFAULT_SIGMA_JOINT


@dataclass(frozen=True)
class DynamicsNoise:
    sigma_mass_rel: float = 0.05
    sigma_com: float = 0.002
    sigma_margin: float = 0.0005


@dataclass(frozen=True)
class NoiseSpec:
    """Declares the three perturbation families plus the sample budget."""

    object_pose: ObjectPoseNoise = ObjectPoseNoise()
    joints: JointNoise = JointNoise()
    dynamics: DynamicsNoise = DynamicsNoise()
    samples: int = 8
    seed: int = 0

    def __post_init__(self) -> None:
        sigmas = (self.object_pose.sigma_pos, self.object_pose.sigma_rot,
                  self.joints.sigma, self.dynamics.sigma_mass_rel,
                  self.dynamics.sigma_com, self.dynamics.sigma_margin)
        if any(s < 0.0 for s in sigmas):
            raise ValueError("noise sigmas must be non-negative")
        if self.samples < 1:
            raise ValueError("samples must be >= 1")

    @classmethod
    def zero(cls, samples: int = 1, seed: int = 0) -> "NoiseSpec":
        return cls(object_pose=ObjectPoseNoise(0.0, 0.0),
                   joints=JointNoise(0.0),
                   dynamics=DynamicsNoise(0.0, 0.0, 0.0),
                   samples=samples, seed=seed)


def _generator(seed: int, index: int, stream: int) -> np.random.Generator:
    return np.random.Generator(
        np.random.Philox(np.random.SeedSequence([seed, index, stream])))


@lru_cache(maxsize=65536)
def _joint_offsets_cached(seed: int, index: int, sigma: float,
                          n_steps: int, n_joints: int) -> np.ndarray:
    if sigma == 0.0:
        out = np.zeros((n_steps, n_joints))
    else:
        rng = _generator(seed, index, _STREAM_JOINT)
        out = sigma * rng.standard_normal((n_steps, n_joints))
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class NoiseSample:
    """Concrete perturbations for one Monte-Carlo rollout.

    Joint offsets materialize lazily because their shape depends on the
    trajectory; the draw is still a pure function of (seed, index).
    """

    seed: int
    index: int
    pose_delta_rotation: np.ndarray
    pose_delta_translation: np.ndarray
    joint_sigma: float
    mass_scale: float
    com_offset: np.ndarray
    margin_offset: float

    def joint_offsets(self, n_steps: int, n_joints: int) -> np.ndarray:
        return _joint_offsets_cached(self.seed, self.index, self.joint_sigma,
                                     n_steps, n_joints)

    def pose_only(self) -> "NoiseSample":
        return replace(self, joint_sigma=0.0, mass_scale=1.0,
                       com_offset=np.zeros(3), margin_offset=0.0)

    def joints_only(self) -> "NoiseSample":
        return replace(self, pose_delta_rotation=np.eye(3),
                       pose_delta_translation=np.zeros(3),
                       mass_scale=1.0, com_offset=np.zeros(3),
                       margin_offset=0.0)


def sample_noise(spec: NoiseSpec, index: int) -> NoiseSample:
    """Draw sample `index` of the spec: zero-mean Gaussians per declared
    sigma, deterministic in (spec.seed, index)."""
    if not 0 <= index < spec.samples:
        raise ValueError(f"index {index} outside [0, {spec.samples})")
    pose_rng = _generator(spec.seed, index, _STREAM_POSE)
    rotvec = spec.object_pose.sigma_rot * pose_rng.standard_normal(3)
    dtr = spec.object_pose.sigma_pos * pose_rng.standard_normal(3)
    angle = float(np.linalg.norm(rotvec))
    if angle < 1e-300:
        drot = np.eye(3)
    else:
        drot = _kernels.axis_angle_rot(rotvec / angle, angle)
    dyn_rng = _generator(spec.seed, index, _STREAM_DYNAMICS)
    mass_scale = max(1e-6, 1.0 + spec.dynamics.sigma_mass_rel
                     * float(dyn_rng.standard_normal()))
    com_offset = spec.dynamics.sigma_com * dyn_rng.standard_normal(3)
    margin_offset = spec.dynamics.sigma_margin * float(dyn_rng.standard_normal())
    return NoiseSample(seed=spec.seed, index=index,
                       pose_delta_rotation=drot, pose_delta_translation=dtr,
                       joint_sigma=spec.joints.sigma, mass_scale=mass_scale,
                       com_offset=com_offset, margin_offset=margin_offset)


def noise_samples(spec: NoiseSpec) -> list[NoiseSample]:
    return [sample_noise(spec, i) for i in range(spec.samples)]


@dataclass(frozen=True)
class QualityVector:
    touch_var: float
    obj_s_var: float
    obj_pose_var: float
    obj_orient_var: float
    robustness_noise_joint: float
    robustness: float
    energy: float
    energy_grasp: float
    energy_post_grasp: float
    nominal_failure: bool = False

    METRICS = ("touch_var", "obj_s_var", "obj_pose_var", "obj_orient_var",
               "robustness_noise_joint", "robustness", "energy",
               "energy_grasp", "energy_post_grasp")

    def as_dict(self) -> dict[str, float]:
        return {name: float(getattr(self, name)) for name in self.METRICS}


def _trace_cov(points: np.ndarray) -> float:
    if points.shape[0] < 2:
        return 0.0
    centered = points - points.mean(axis=0)
    return float(np.sum(centered * centered) / points.shape[0])


def _chordal_mean_rotation(rotations: np.ndarray) -> np.ndarray:
    m = rotations.mean(axis=0)
    u, _, vt = np.linalg.svd(m)
    r = u @ vt
    if np.linalg.det(r) < 0.0:
        u[:, -1] = -u[:, -1]
        r = u @ vt
    return r


def _orientation_variance(rotations: np.ndarray) -> float:
    if rotations.shape[0] < 2:
        return 0.0
    mean_rot = _chordal_mean_rotation(rotations)
    deviations = np.empty((rotations.shape[0], 3))
    for i, rot in enumerate(rotations):
        deviations[i] = _kernels.rot_to_rotvec(
            np.ascontiguousarray(rot @ mean_rot.T))
    return _trace_cov(deviations)


def _energy_window(torques: np.ndarray, start: int, stop: int) -> float:
    start = max(0, min(start, torques.shape[0]))
    stop = max(start, min(stop, torques.shape[0]))
    if stop == start:
        return 0.0
    # compensated summation in fixed element order keeps parallel callers
    # bit-identical to serial ones
    return math.fsum(np.abs(torques[start:stop]).ravel().tolist())


def _success_ratio(robot, scene, traj, samples, restrict, params) -> float:
    hits = 0
    for sample in samples:
        outcome = rollout(robot, scene, traj, noise=restrict(sample),
                          params=params)
        if outcome.success:
            hits += 1
    return hits / len(samples)


def compute_quality(traj: Trajectory, robot: RobotModel, scene: SceneModel,
                    spec: NoiseSpec, params: RolloutParams = RolloutParams(),
                    touch_window: str = "grasp_end",
                    samples: list[NoiseSample] | None = None,
                    nominal=None) -> QualityVector:
    """Evaluate all nine metrics for one trajectory.

    Variances are temporal statistics of the noise-free rollout; the two
    robustness ratios are Monte-Carlo success rates with one perturbation
    family active each. A trajectory whose noise-free rollout fails gets
    both ratios pinned to 0 and is flagged, so rankings stay total.
    `samples` overrides the spec-derived draw (callers batching many
    evaluations pass one shared set); `nominal` accepts that trajectory's
    already-computed noise-free outcome to avoid repeating it.
    """
    if touch_window not in ("grasp_end", "grasp_start"):
        raise ValueError("touch_window must be 'grasp_end' or 'grasp_start'")
    if nominal is None:
        nominal = rollout(robot, scene, traj, params=params)
    m = nominal.n_steps

    anchor = (nominal.grasp_end_step if touch_window == "grasp_end"
              else nominal.grasp_start_step)
    anchor = max(0, min(anchor, m))
    # per-finger temporal scatter, averaged over fingers that touched;
    # pooling across fingers would count static grasp spread as motion
    finger_vars = []
    for f in range(nominal.contact_mask.shape[1]):
        col = nominal.contact_mask[anchor:, f]
        if col.any():
            finger_vars.append(_trace_cov(nominal.contact_points[anchor:, f][col]))
    touch_var = float(np.mean(finger_vars)) if finger_vars else 0.0
    obj_pose_var = _trace_cov(nominal.object_translations)
    obj_orient_var = _orientation_variance(nominal.object_rotations)

    energy = _energy_window(nominal.torque_path, 0, m)
    energy_grasp = _energy_window(nominal.torque_path,
                                  nominal.grasp_start_step, m)
    energy_post = _energy_window(nominal.torque_path,
                                 nominal.grasp_end_step, m)

    if nominal.success:
        if samples is None:
            samples = noise_samples(spec)
        pose = spec.object_pose
        if pose.sigma_pos == 0.0 and pose.sigma_rot == 0.0:
            robustness = 1.0
        else:
            robustness = _success_ratio(robot, scene, traj, samples,
                                        NoiseSample.pose_only, params)
        if spec.joints.sigma == 0.0:
            robustness_joint = 1.0
        else:
            robustness_joint = _success_ratio(robot, scene, traj, samples,
                                              NoiseSample.joints_only, params)
        flagged = False
    else:
        robustness = 0.0
        robustness_joint = 0.0
        flagged = True

    return QualityVector(
        touch_var=touch_var,
        obj_s_var=obj_pose_var + obj_orient_var,
        obj_pose_var=obj_pose_var,
        obj_orient_var=obj_orient_var,
        robustness_noise_joint=robustness_joint,
        robustness=robustness,
        energy=energy,
        energy_grasp=energy_grasp,
        energy_post_grasp=energy_post,
        nominal_failure=flagged,
    )


def fitness(quality: QualityVector, weights: dict[str, float] | None = None,
            ) -> float:
    """Weighted sum of metrics; default is the mean of the two robustness
    ratios, which is what the repertoire search optimizes."""
    if weights is None:
        weights = DEFAULT_WEIGHTS
    total = 0.0
    for name, weight in weights.items():
        if name not in QualityVector.METRICS:
            raise ValueError(f"unknown metric {name!r}")
        total += weight * float(getattr(quality, name))
    return total


@dataclass(frozen=True)
class ScoredElite:
    cell: tuple[int, ...]
    elite: object
    quality: QualityVector
    fitness: float


def rank_repertoire(archive, robot: RobotModel, scene: SceneModel,
                    spec: NoiseSpec, weights: dict[str, float] | None = None,
                    params: RolloutParams = RolloutParams()) -> list[ScoredElite]:
    """Score every elite with one shared sample set and sort best-first.

    Order is total and permutation-independent: fitness descending, then
    descriptor lexicographic, then cell index.
    """
    shared = noise_samples(spec)
    scored = []
    for cell, elite in archive.items():
        quality = compute_quality(elite.trajectory, robot, scene, spec,
                                  params=params, samples=shared)
        scored.append(ScoredElite(cell=cell, elite=elite, quality=quality,
                                  fitness=fitness(quality, weights)))
    scored.sort(key=lambda s: (-s.fitness, tuple(s.elite.descriptor), s.cell))
    return scored
