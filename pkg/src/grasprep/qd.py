"""Quality-diversity search over grasp trajectories.

A genome is a short sequence of end-effector waypoints plus a closure
fraction and a synergy choice; decoding interpolates it into a dense
trajectory. The archive is a regular 3D grid over the target object's
bounding box, indexed by where the hand first touches the object, and a
cell keeps the best-scoring successful grasp that landed in it. The search
is the standard batched loop: fill from random genomes until the first
success, then select uniformly from the archive and mutate.

Everything is counter-seeded. Candidate genomes are drawn serially from
one generator and evaluations are pure functions of the genome, so a run
is reproducible bit-for-bit at any worker count.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from math import floor

import numpy as np

from . import _kernels
from .kinematics import RobotModel
from .quality import NoiseSpec, QualityVector, compute_quality, fitness, noise_samples
from .rollout import (
    SYNERGIES,
    GraspOutcome,
    GripperCommand,
    RolloutParams,
    Trajectory,
    rollout,
)
from .scene import ObjectModel, SceneModel
from .se3 import euler_to_matrix, matrix_to_euler

__all__ = [
    "Genome",
    "SearchBounds",
    "MutationParams",
    "MapElitesConfig",
    "Elite",
    "Archive",
    "GenerationStats",
    "MapElitesResult",
    "decode",
    "mutate",
    "random_genome",
    "compute_descriptor",
    "approach_bounds",
    "run_map_elites",
]

MIN_WAYPOINTS = 3
MAX_WAYPOINTS = 16
DESCRIPTOR_INFLATION = 0.02


@dataclass(frozen=True, eq=False)
class Genome:
    """Search-space encoding of one grasp attempt."""

    waypoints: np.ndarray
    close_fraction: float
    synergy: str = "parallel"
    aperture: float = 0.08

    def __post_init__(self) -> None:
        wp = np.ascontiguousarray(self.waypoints, dtype=np.float64)
        object.__setattr__(self, "waypoints", wp)
        if wp.ndim != 2 or wp.shape[1] != 6:
            raise ValueError("waypoints must have shape (k, 6)")
        if not MIN_WAYPOINTS <= wp.shape[0] <= MAX_WAYPOINTS:
            raise ValueError(
                f"waypoint count must be in [{MIN_WAYPOINTS}, {MAX_WAYPOINTS}]")
        if not np.isfinite(wp).all():
            raise ValueError("waypoints must be finite")
        if not 0.0 <= self.close_fraction <= 1.0:
            raise ValueError("close_fraction must be in [0, 1]")
        if self.synergy not in SYNERGIES:
            raise ValueError(f"unknown synergy {self.synergy!r}")


@dataclass(frozen=True)
class SearchBounds:
    """Per-dimension box for waypoint genes (x, y, z, roll, pitch, yaw).

    A dimension with lower == upper is pinned: random draws and mutations
    both collapse onto that value.
    """

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self) -> None:
        lo = np.ascontiguousarray(self.lower, dtype=np.float64)
        hi = np.ascontiguousarray(self.upper, dtype=np.float64)
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)
        if lo.shape != (6,) or hi.shape != (6,):
            raise ValueError("bounds must have shape (6,)")
        if not (np.isfinite(lo).all() and np.isfinite(hi).all()):
            raise ValueError("bounds must be finite")
        if (lo > hi).any():
            raise ValueError("lower bound exceeds upper bound")

    def clamp(self, waypoints: np.ndarray) -> np.ndarray:
        return np.clip(waypoints, self.lower, self.upper)


@dataclass(frozen=True)
class MutationParams:
    sigma_pos: float = 0.02
    sigma_rot: float = 0.1
    gene_rate: float = 0.3
    sigma_close: float = 0.05
    synergy_rate: float = 0.05


def _slerp(rot_a: np.ndarray, rot_b: np.ndarray, t: float) -> np.ndarray:
    rel = np.ascontiguousarray(rot_a.T @ rot_b)
    rotvec = _kernels.rot_to_rotvec(rel)
    angle = float(np.linalg.norm(rotvec))
    if angle < 1e-12:
        return rot_a
    step = _kernels.axis_angle_rot(rotvec / angle, t * angle)
    return rot_a @ step


def decode(genome: Genome, n_steps: int = 12) -> Trajectory:
    """Expand waypoints into an n-step trajectory.

    Positions interpolate linearly and orientations along the geodesic
    between consecutive waypoints. Steps that land exactly on a waypoint
    copy it bitwise, so a decoded trajectory always passes through its
    genome's waypoints.
    """
    if n_steps < 2:
        raise ValueError("n_steps must be >= 2")
    wp = genome.waypoints
    k = wp.shape[0]
    states = np.empty((n_steps, 6))
    for i in range(n_steps):
        s = i * (k - 1) / (n_steps - 1)
        j = min(int(floor(s)), k - 2)
        t = s - j
        if t == 0.0:
            states[i] = wp[j]
        elif i == n_steps - 1:
            states[i] = wp[k - 1]
        else:
            states[i, :3] = (1.0 - t) * wp[j, :3] + t * wp[j + 1, :3]
            rot = _slerp(euler_to_matrix(*wp[j, 3:]),
                         euler_to_matrix(*wp[j + 1, 3:]), t)
            states[i, 3:] = matrix_to_euler(rot)
    close_step = int(round(genome.close_fraction * (n_steps - 1)))
    close_step = min(max(close_step, 0), n_steps - 1)
    gripper = GripperCommand(close_step=close_step, synergy=genome.synergy,
                             aperture=genome.aperture)
    return Trajectory(states=states, gripper=gripper)


def random_genome(bounds: SearchBounds, rng: np.random.Generator,
                  n_waypoints: int = 4) -> Genome:
    span = bounds.upper - bounds.lower
    wp = bounds.lower + rng.random((n_waypoints, 6)) * span
    close = float(rng.random())
    synergy = SYNERGIES[int(rng.integers(len(SYNERGIES)))]
    return Genome(waypoints=wp, close_fraction=close, synergy=synergy)


def mutate(genome: Genome, bounds: SearchBounds, rng: np.random.Generator,
           params: MutationParams = MutationParams()) -> Genome:
    """Gaussian gene perturbation with a fixed random-draw schedule.

    Every call consumes the same number of draws whatever the genome
    content, so downstream candidates never shift when one mutation
    happens to be a no-op.
    """
    k = genome.waypoints.shape[0]
    scale = np.array([params.sigma_pos] * 3 + [params.sigma_rot] * 3)
    pert = rng.standard_normal((k, 6)) * scale
    gene_mask = rng.random((k, 6)) < params.gene_rate
    close_pert = float(rng.standard_normal()) * params.sigma_close
    close_hit = float(rng.random()) < params.gene_rate
    synergy_hit = float(rng.random()) < params.synergy_rate
    synergy_pick = int(rng.integers(len(SYNERGIES) - 1))

    wp = bounds.clamp(genome.waypoints + np.where(gene_mask, pert, 0.0))
    close = genome.close_fraction + (close_pert if close_hit else 0.0)
    close = min(max(close, 0.0), 1.0)
    synergy = genome.synergy
    if synergy_hit:
        others = [s for s in SYNERGIES if s != genome.synergy]
        synergy = others[synergy_pick]
    return Genome(waypoints=wp, close_fraction=close, synergy=synergy,
                  aperture=genome.aperture)


def compute_descriptor(outcome: GraspOutcome) -> np.ndarray | None:
    """Behavior descriptor: first object-frame touch point, None if the
    hand never touched the object."""
    return outcome.first_contact_point()


@dataclass(frozen=True, eq=False)
class Elite:
    genome: Genome
    trajectory: Trajectory
    descriptor: np.ndarray
    quality: QualityVector
    fitness: float
    eval_index: int


class Archive:
    """Regular descriptor grid keeping the best elite per cell.

    Descriptors outside the box clamp onto the border cells, so every
    finite descriptor maps somewhere and coverage stays well-defined.
    Replacement needs strictly higher fitness; ties keep the incumbent.
    """

    def __init__(self, lower: np.ndarray, upper: np.ndarray,
                 dims: tuple[int, int, int] = (10, 10, 10)) -> None:
        lower = np.ascontiguousarray(lower, dtype=np.float64)
        upper = np.ascontiguousarray(upper, dtype=np.float64)
        if lower.shape != (3,) or upper.shape != (3,):
            raise ValueError("archive bounds must have shape (3,)")
        if (lower >= upper).any():
            raise ValueError("archive bounds must satisfy lower < upper")
        if len(dims) != 3 or any(d < 1 for d in dims):
            raise ValueError("grid dims must be three positive integers")
        self.lower = lower
        self.upper = upper
        self.dims = tuple(int(d) for d in dims)
        self._cells: dict[tuple[int, int, int], Elite] = {}

    @classmethod
    def for_object(cls, obj: ObjectModel,
                   dims: tuple[int, int, int] = (10, 10, 10),
                   inflation: float = DESCRIPTOR_INFLATION) -> "Archive":
        lo, hi = obj.aabb
        return cls(lo - inflation, hi + inflation, dims)

    def cell_index(self, descriptor: np.ndarray) -> tuple[int, int, int]:
        idx = []
        for a in range(3):
            width = (self.upper[a] - self.lower[a]) / self.dims[a]
            cell = int(floor((descriptor[a] - self.lower[a]) / width))
            idx.append(min(max(cell, 0), self.dims[a] - 1))
        return tuple(idx)

    def offer(self, elite: Elite) -> bool:
        cell = self.cell_index(elite.descriptor)
        incumbent = self._cells.get(cell)
        if incumbent is None or elite.fitness > incumbent.fitness:
            self._cells[cell] = elite
            return True
        return False

    def __len__(self) -> int:
        return len(self._cells)

    def __contains__(self, cell: tuple[int, int, int]) -> bool:
        return tuple(cell) in self._cells

    def get(self, cell: tuple[int, int, int]) -> Elite | None:
        return self._cells.get(tuple(cell))

    def items(self) -> list[tuple[tuple[int, int, int], Elite]]:
        return sorted(self._cells.items())

    def elites(self) -> list[Elite]:
        return [e for _, e in self.items()]

    def coverage(self) -> float:
        return len(self._cells) / float(np.prod(self.dims))

    def best(self) -> Elite | None:
        if not self._cells:
            return None
        return max(self.items(), key=lambda kv: kv[1].fitness)[1]


def approach_bounds(scene: SceneModel, xy_margin: float = 0.15,
                    z_range: tuple[float, float] = (0.05, 0.30),
                    yaw_range: tuple[float, float] = (-0.8, 0.8),
                    ) -> SearchBounds:
    """Default waypoint box: a column around the target with level
    (roll = pitch = 0) hand orientations and bounded yaw.

    The yaw span is kept narrow enough that decoded per-step yaw deltas
    stay below the default joint-jump limit, so every archived elite also
    passes the deployment feasibility filter at the original pose.
    """
    center = scene.object_sim_pose.translation
    lower = np.array([center[0] - xy_margin, center[1] - xy_margin,
                      z_range[0], 0.0, 0.0, yaw_range[0]])
    upper = np.array([center[0] + xy_margin, center[1] + xy_margin,
                      z_range[1], 0.0, 0.0, yaw_range[1]])
    return SearchBounds(lower=lower, upper=upper)


@dataclass(frozen=True)
class MapElitesConfig:
    budget: int = 2000
    batch_size: int = 32
    grid_dims: tuple[int, int, int] = (10, 10, 10)
    seed: int = 0
    n_steps: int = 12
    n_waypoints: int = 4
    bounds: SearchBounds | None = None
    noise: NoiseSpec = NoiseSpec()
    rollout: RolloutParams = RolloutParams()
    success_gate: bool = True
    workers: int = 1
    touch_window: str = "grasp_end"
    inflation: float = DESCRIPTOR_INFLATION

    def __post_init__(self) -> None:
        if self.budget < 0:
            raise ValueError("budget must be >= 0")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")


@dataclass(frozen=True)
class GenerationStats:
    generation: int
    evaluations: int
    successes: int
    archive_size: int
    coverage: float
    best_fitness: float
    mean_fitness: float


@dataclass
class MapElitesResult:
    archive: Archive
    config: MapElitesConfig
    evaluations: int
    successes: int
    generations: list[GenerationStats] = field(default_factory=list)
    diagnostic: str | None = None

    def write_log(self, path: str, comment: str | None = None) -> None:
        cols = ("generation", "evaluations", "successes", "archive_size",
                "coverage", "best_fitness", "mean_fitness")
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            if comment is not None:
                fh.write(f"# {comment}\n")
            fh.write("\t".join(cols) + "\n")
            for g in self.generations:
                fh.write("\t".join(repr(getattr(g, c)) for c in cols) + "\n")


def run_map_elites(robot: RobotModel, scene: SceneModel,
                   config: MapElitesConfig = MapElitesConfig(),
                   on_generation=None) -> MapElitesResult:
    """Batched archive search spending exactly `config.budget` rollouts.

    While the archive is empty, candidates are random genomes; afterwards
    a uniformly chosen elite is mutated. Candidates with no object contact
    have no descriptor and are discarded; with the success gate on (the
    default), so are contacts that fail to become grasps. If the whole
    budget passes without one success the result carries a diagnostic and
    an empty archive rather than an error.

    `on_generation` is called with each GenerationStats as it is recorded
    (progress reporting); it must not mutate the archive.
    """
    bounds = config.bounds if config.bounds is not None else approach_bounds(scene)
    archive = Archive.for_object(scene.target, config.grid_dims,
                                 config.inflation)
    rng = np.random.Generator(
        np.random.Philox(np.random.SeedSequence([config.seed])))
    shared = noise_samples(config.noise)
    pool = (ThreadPoolExecutor(max_workers=config.workers)
            if config.workers > 1 else None)

    def evaluate(traj: Trajectory):
        nominal = rollout(robot, scene, traj, params=config.rollout)
        quality = compute_quality(traj, robot, scene, config.noise,
                                  params=config.rollout,
                                  touch_window=config.touch_window,
                                  samples=shared, nominal=nominal)
        return nominal, quality, compute_descriptor(nominal)

    evaluations = 0
    successes = 0
    generations: list[GenerationStats] = []
    try:
        generation = 0
        while evaluations < config.budget:
            batch = min(config.batch_size, config.budget - evaluations)
            genomes = []
            elites = archive.elites()
            for _ in range(batch):
                if not elites:
                    genomes.append(random_genome(bounds, rng,
                                                 config.n_waypoints))
                else:
                    parent = elites[int(rng.integers(len(elites)))]
                    genomes.append(mutate(parent.genome, bounds, rng))
            trajectories = [decode(g, config.n_steps) for g in genomes]
            if pool is not None:
                results = list(pool.map(evaluate, trajectories))
            else:
                results = [evaluate(t) for t in trajectories]
            for genome, traj, (nominal, quality, desc) in zip(
                    genomes, trajectories, results):
                index = evaluations
                evaluations += 1
                if nominal.success:
                    successes += 1
                if desc is None:
                    continue
                if config.success_gate and not nominal.success:
                    continue
                archive.offer(Elite(genome=genome, trajectory=traj,
                                    descriptor=desc, quality=quality,
                                    fitness=fitness(quality),
                                    eval_index=index))
            fits = [e.fitness for e in archive.elites()]
            generations.append(GenerationStats(
                generation=generation, evaluations=evaluations,
                successes=successes, archive_size=len(archive),
                coverage=archive.coverage(),
                best_fitness=max(fits) if fits else 0.0,
                mean_fitness=float(np.mean(fits)) if fits else 0.0))
            if on_generation is not None:
                on_generation(generations[-1])
            generation += 1
    finally:
        if pool is not None:
            pool.shutdown(wait=True)

    diagnostic = None
    if successes == 0:
        diagnostic = ("no successful grasp within the evaluation budget; "
                      "archive left empty")
    return MapElitesResult(archive=archive, config=config,
                           evaluations=evaluations, successes=successes,
                           generations=generations, diagnostic=diagnostic)
