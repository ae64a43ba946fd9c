"""Acceptance gate: ten pipeline-level checks, one printed line each.

Each test exercises one shipping criterion end to end, prints a single
PASS/FAIL line (bypassing capture so the line always reaches the log),
and then asserts. The module-scoped fixture runs one desk-scale archive
search that most criteria share.
"""

import dataclasses
import json
import time

import numpy as np
import pytest

from grasprep import persistence as pz
from grasprep.adaptation import AdaptationFrames, adapt_state, adapt_trajectory
from grasprep.cli import main as cli_main
from grasprep.fixtures import (
    bundled_robots,
    desk_arm,
    pinch_box_scene,
    pinch_box_trajectory,
    seven_joint_arm,
)
from grasprep.kinematics import forward_kinematics, inverse_kinematics, jacobian
from grasprep.persistence import FileFormatError
from grasprep.qd import (
    Archive,
    Elite,
    Genome,
    MapElitesConfig,
    compute_descriptor,
    decode,
    run_map_elites,
)
from grasprep.quality import (
    JointNoise,
    NoiseSpec,
    ObjectPoseNoise,
    QualityVector,
    compute_quality,
)
from grasprep.rollout import rollout
from grasprep.se3 import EndEffectorState, RigidTransform, euler_to_matrix
from grasprep.workspace import GridSpec, default_orientations, evaluate_grid, grid_poses


@pytest.fixture
def report(capfd):
    """Reporter that prints one PASS/FAIL line past pytest's capture."""

    def emit(num: int, desc: str, ok: bool) -> None:
        line = f"ACCEPTANCE {num:2d} {'PASS' if ok else 'FAIL'}  {desc}"
        with capfd.disabled():
            print(line, flush=True)

    return emit


BUDGET = 10_000
SEED = 11
GRID_DIMS = (16, 16, 16)  # fine enough for a several-hundred-elite archive


@pytest.fixture(scope="module")
def fixture_run():
    """Desk-scale archive search shared by most criteria."""
    robot, scene = desk_arm(), pinch_box_scene()
    config = MapElitesConfig(budget=BUDGET, batch_size=64, seed=SEED,
                             grid_dims=GRID_DIMS, workers=4)
    start = time.perf_counter()
    result = run_map_elites(robot, scene, config)
    elapsed = time.perf_counter() - start
    return robot, scene, config, result, elapsed


def _hom(rotation: np.ndarray, translation: np.ndarray) -> np.ndarray:
    h = np.eye(4)
    h[:3, :3] = rotation
    h[:3, 3] = translation
    return h


def _hom_of_state(vec: np.ndarray) -> np.ndarray:
    return _hom(euler_to_matrix(vec[3], vec[4], vec[5]), vec[:3])


def _hom_of_transform(t: RigidTransform) -> np.ndarray:
    return _hom(t.rotation, t.translation)


def test_criterion_01_identity_adaptation(fixture_run, report):
    robot, scene, config, result, _ = fixture_run
    desc = "identity adaptation reproduces archived trajectories (1e-9)"
    ok = False
    try:
        elites = result.archive.elites()
        assert len(elites) >= 200, (
            f"fixture archive has {len(elites)} elites; the timing bound "
            f"is stated for a 200-elite repertoire")
        identity_frames = AdaptationFrames(
            world_from_camera=RigidTransform.identity(),
            camera_from_object=scene.object_sim_pose,
            world_from_object_sim=scene.object_sim_pose)
        worst = 0.0
        for elite in elites:
            adapted = adapt_trajectory(elite.trajectory, identity_frames)
            worst = max(worst, float(np.abs(
                adapted.states - elite.trajectory.states).max()))
        assert worst <= 1e-9, f"max waypoint-entry deviation {worst:.3e}"

        start = time.perf_counter()
        for elite in elites[:200]:
            adapt_trajectory(elite.trajectory, identity_frames)
        elapsed = time.perf_counter() - start
        assert elapsed < 1.0, f"200-elite adaptation took {elapsed:.2f}s"
        ok = True
    finally:
        report(1, desc, ok)


def test_criterion_02_relative_pose_oracle(report):
    desc = "adapted pose relative to O equals original relative to O_sim " \
           "(1000 random frames, 1e-9)"
    ok = False
    try:
        rng = np.random.default_rng(2024)

        def random_transform():
            angles = rng.uniform(-np.pi, np.pi, 3)
            return RigidTransform(euler_to_matrix(*angles),
                                  rng.uniform(-0.8, 0.8, 3))

        start = time.perf_counter()
        worst = 0.0
        for _ in range(1000):
            state = np.concatenate([rng.uniform(-0.8, 0.8, 3),
                                    rng.uniform(-np.pi, np.pi, 3)])
            frames = AdaptationFrames(world_from_camera=random_transform(),
                                      camera_from_object=random_transform(),
                                      world_from_object_sim=random_transform())
            adapted = adapt_state(EndEffectorState.from_vector(state), frames)

            # oracle: raw 4x4 products, no shared code with the adapt path
            h_old = _hom_of_state(state)
            h_new = _hom_of_state(adapted.as_vector())
            h_obj = (_hom_of_transform(frames.world_from_camera)
                     @ _hom_of_transform(frames.camera_from_object))
            h_sim = _hom_of_transform(frames.world_from_object_sim)
            lhs = np.linalg.inv(h_obj) @ h_new
            rhs = np.linalg.inv(h_sim) @ h_old
            worst = max(worst, float(np.abs(lhs - rhs).max()))
        elapsed = time.perf_counter() - start
        assert worst <= 1e-9, f"worst relative-pose deviation {worst:.3e}"
        assert elapsed < 5.0, f"1000 frame sets took {elapsed:.2f}s"
        ok = True
    finally:
        report(2, desc, ok)


def test_criterion_03_grid_counting(report):
    desc = "grid arithmetic: 2500 positions, 3750 posed grid, 5x6=30 cap"
    ok = False
    try:
        dense = GridSpec(box_min=np.zeros(3),
                         box_max=np.array([1.0, 1.0, 0.01]),
                         divisions=(50, 50, 1),
                         orientations=(np.eye(3),))
        assert dense.n_poses == 2500
        assert len(grid_poses(dense)) == 2500

        posed = GridSpec(box_min=np.zeros(3),
                         box_max=np.array([1.0, 1.0, 0.01]),
                         divisions=(25, 25, 1))
        assert len(posed.orientations) == 6
        assert posed.n_poses == 3750
        assert len(grid_poses(posed)) == 3750

        assert posed.trajectories_per_pose * len(posed.orientations) == 30
        ok = True
    finally:
        report(3, desc, ok)


def test_criterion_04_reach_boundary(fixture_run, report):
    robot, scene, config, result, _ = fixture_run
    desc = "beyond-reach poses report 0 feasible; O_sim reports k; " \
           "20x20 grid < 30s"
    ok = False
    try:
        # true reach bound: the gantry position equals its slide values,
        # so limit-box corners bound every reachable end-effector position
        limits = np.array([j.limits for j in robot.joints])
        corners = []
        for bits in range(2 ** robot.dof):
            q = np.array([limits[j][(bits >> j) & 1]
                          for j in range(robot.dof)])
            corners.append(np.linalg.norm(
                forward_kinematics(robot, q).translation))
        reach = max(corners)
        radius = scene.target.bounding_radius

        center = scene.object_sim_pose.translation
        width = 0.25
        spec = GridSpec(
            box_min=np.array([center[0] - 9.5 * width,
                              center[1] - 9.5 * width, 0.015]),
            box_max=np.array([center[0] + 10.5 * width,
                              center[1] + 10.5 * width, 0.025]),
            divisions=(20, 20, 1), orientations=(np.eye(3),),
            trajectories_per_pose=5, seed=3)
        start = time.perf_counter()
        grid = evaluate_grid(result.archive, robot, scene, spec, workers=4)
        elapsed = time.perf_counter() - start
        assert elapsed < 30.0, f"20x20 grid took {elapsed:.1f}s"

        beyond = np.linalg.norm(grid.positions, axis=1) > reach + radius
        assert beyond.sum() > 100, "grid too small to exercise the bound"
        assert (grid.feasible[beyond] == 0).all(), (
            f"{int((grid.feasible[beyond] > 0).sum())} beyond-reach poses "
            f"reported feasible trajectories")

        at_sim = np.isclose(grid.positions, center,
                            atol=1e-9).all(axis=1)
        assert at_sim.sum() == 1, "grid must place one cell center at O_sim"
        assert grid.feasible[at_sim][0] == grid.n_sampled == 5, (
            f"O_sim cell: {grid.feasible[at_sim][0]} of {grid.n_sampled}")
        ok = True
    finally:
        report(4, desc, ok)


def test_criterion_05_desk_scale_run(fixture_run, tmp_path, report):
    robot, scene, config, result, elapsed = fixture_run
    desc = f"budget-{BUDGET} run < 5 min, monotone coverage, " \
           f"repeat run gives bit-identical archive file"
    ok = False
    try:
        assert elapsed < 300.0, f"run took {elapsed:.0f}s"
        assert len(result.archive) > 0
        assert result.evaluations == BUDGET
        coverages = [g.coverage for g in result.generations]
        assert all(a <= b for a, b in zip(coverages, coverages[1:])), (
            "coverage decreased between generations")

        # same seed, fresh run, different worker count
        again = run_map_elites(robot, scene,
                               dataclasses.replace(config, workers=1))
        first = str(tmp_path / "first.txt")
        second = str(tmp_path / "second.txt")
        pz.save_repertoire(result, first, robot, scene)
        pz.save_repertoire(again, second, robot, scene)
        with open(first, "rb") as fa, open(second, "rb") as fb:
            assert fa.read() == fb.read(), "archive files differ"
        ok = True
    finally:
        report(5, desc, ok)


def test_criterion_06_replay_soundness(fixture_run, report):
    robot, scene, config, result, _ = fixture_run
    desc = "every archived elite replays to success with its exact " \
           "descriptor"
    ok = False
    try:
        for elite in result.archive.elites():
            outcome = rollout(robot, scene, elite.trajectory,
                              params=config.rollout)
            assert outcome.success, (
                f"elite {elite.eval_index} no longer succeeds on replay")
            replayed = compute_descriptor(outcome)
            assert replayed is not None
            assert np.array_equal(replayed, elite.descriptor), (
                f"elite {elite.eval_index} descriptor changed on replay")
        ok = True
    finally:
        report(6, desc, ok)


def test_criterion_07_quality_zero_cases(fixture_run, report):
    robot, scene, config, result, _ = fixture_run
    desc = "sigma=0 gives unit robustness, static object gives zero " \
           "variances, energy windows nest"
    ok = False
    try:
        zero = NoiseSpec.zero()
        for elite in result.archive.elites():
            q = compute_quality(elite.trajectory, robot, scene, zero,
                                params=config.rollout)
            assert q.robustness == 1.0, (
                f"elite {elite.eval_index}: robustness {q.robustness}")
            assert q.robustness_noise_joint == 1.0, (
                f"elite {elite.eval_index}: joint robustness "
                f"{q.robustness_noise_joint}")

        static = compute_quality(pinch_box_trajectory(), robot, scene, zero)
        assert static.obj_pose_var <= 1e-12
        assert static.obj_orient_var <= 1e-12
        assert static.obj_s_var <= 1e-12

        for elite in result.archive.elites():
            q = elite.quality
            assert q.energy >= q.energy_grasp >= q.energy_post_grasp >= 0.0, (
                f"elite {elite.eval_index}: window nesting violated")
        ok = True
    finally:
        report(7, desc, ok)


def test_criterion_08_robustness_monotone(fixture_run, report):
    robot, scene, config, result, _ = fixture_run
    desc = "mean robustness non-increasing across sigma_pos 0, 0.005, 0.05"
    ok = False
    try:
        elites = result.archive.elites()
        nominals = [rollout(robot, scene, e.trajectory,
                            params=config.rollout) for e in elites]
        means = []
        for sigma in (0.0, 0.005, 0.05):
            spec = NoiseSpec(object_pose=ObjectPoseNoise(sigma, 0.0),
                             joints=JointNoise(0.0),
                             samples=8, seed=123)
            values = [compute_quality(e.trajectory, robot, scene, spec,
                                      params=config.rollout,
                                      nominal=n).robustness
                      for e, n in zip(elites, nominals)]
            means.append(float(np.mean(values)))
        assert means[0] == 1.0, f"sigma=0 mean robustness {means[0]}"
        assert means[0] >= means[1] >= means[2], (
            f"means not non-increasing: {means}")
        ok = True
    finally:
        report(8, desc, ok)


def test_criterion_09_kinematics_numerics(report):
    desc = "Jacobian matches central differences (1e-5); IK >= 95% on " \
           "200 FK targets < 10s"
    ok = False
    try:
        from scipy.spatial.transform import Rotation

        rng = np.random.default_rng(31)
        robots = list(bundled_robots().values())
        step = 1e-6
        for i in range(100):
            robot = robots[i % len(robots)]
            limits = np.array([j.limits for j in robot.joints])
            q = rng.uniform(np.maximum(limits[:, 0], -2.0),
                            np.minimum(limits[:, 1], 2.0))
            jac = jacobian(robot, q)
            for j in range(robot.dof):
                qp, qm = q.copy(), q.copy()
                qp[j] += step
                qm[j] -= step
                fp = forward_kinematics(robot, qp)
                fm = forward_kinematics(robot, qm)
                lin = (fp.translation - fm.translation) / (2 * step)
                ang = Rotation.from_matrix(
                    fp.rotation @ fm.rotation.T).as_rotvec() / (2 * step)
                assert np.abs(jac[:3, j] - lin).max() < 1e-5
                assert np.abs(jac[3:, j] - ang).max() < 1e-5

        robot = seven_joint_arm()
        limits = np.array([j.limits for j in robot.joints])
        rng = np.random.default_rng(42)
        converged = 0
        start = time.perf_counter()
        for _ in range(200):
            q = rng.uniform(limits[:, 0], limits[:, 1])
            target = forward_kinematics(robot, q)
            sol = inverse_kinematics(robot, target)
            if not isinstance(sol, np.ndarray):
                continue
            ee = forward_kinematics(robot, sol)
            pos = np.linalg.norm(ee.translation - target.translation)
            cos = (np.trace(ee.rotation @ target.rotation.T) - 1.0) / 2.0
            rot = float(np.arccos(np.clip(cos, -1.0, 1.0)))
            if pos <= 1e-4 and rot <= 1e-3:
                converged += 1
        elapsed = time.perf_counter() - start
        assert converged >= 190, f"IK converged on {converged}/200 targets"
        assert elapsed < 10.0, f"IK sweep took {elapsed:.1f}s"
        ok = True
    finally:
        report(9, desc, ok)


def _random_archive(rng):
    lower = rng.uniform(-1.0, 0.0, 3)
    upper = lower + rng.uniform(0.5, 2.0, 3)
    archive = Archive(lower=lower, upper=upper,
                      dims=tuple(int(d) for d in rng.integers(2, 8, 3)))
    for i in range(int(rng.integers(1, 10))):
        genome = Genome(waypoints=rng.standard_normal(
                            (int(rng.integers(3, 7)), 6)),
                        close_fraction=float(rng.random()),
                        synergy="parallel",
                        aperture=float(rng.uniform(0.02, 0.2)))
        descriptor = rng.uniform(lower, upper)
        archive.offer(Elite(
            genome=genome, trajectory=decode(genome, 12),
            descriptor=descriptor,
            quality=QualityVector(*(float(v) for v in rng.random(9))),
            fitness=float(rng.random()), eval_index=i))
    return archive


def test_criterion_10_persistence(fixture_run, tmp_path, report):
    robot, scene, config, result, _ = fixture_run
    desc = "50 archives round-trip exactly; corrupt/hash loads fail " \
           "loudly; CLI re-runs byte-identical"
    ok = False
    try:
        rng = np.random.default_rng(99)
        for trial in range(50):
            archive = _random_archive(rng)
            path = str(tmp_path / "roundtrip.txt")
            pz.save_repertoire(archive, path, robot, scene)
            back = pz.load_repertoire(path, robot=robot, scene=scene).archive
            assert len(back) == len(archive)
            for (c1, e1), (c2, e2) in zip(archive.items(), back.items()):
                assert c1 == c2
                assert np.array_equal(e1.descriptor, e2.descriptor)
                assert np.array_equal(e1.genome.waypoints,
                                      e2.genome.waypoints)
                assert e1.genome.close_fraction == e2.genome.close_fraction
                assert np.array_equal(e1.trajectory.states,
                                      e2.trajectory.states)
                assert e1.quality == e2.quality
                assert e1.fitness == e2.fitness
                assert e1.eval_index == e2.eval_index

        # corrupted record cites its index
        sample = str(tmp_path / "sample.txt")
        pz.save_repertoire(_random_archive(np.random.default_rng(7)),
                           sample, robot, scene)
        lines = open(sample).read().splitlines()
        assert len(lines) > 3
        record = min(3, len(lines) - 3)
        broken = json.loads(lines[2 + record])
        del broken["trajectory"]
        lines[2 + record] = json.dumps(broken, sort_keys=True)
        open(sample, "w").write("\n".join(lines) + "\n")
        with pytest.raises(FileFormatError, match=f"record {record}"):
            pz.load_repertoire(sample)

        # model hash mismatch is rejected
        good = str(tmp_path / "good.txt")
        pz.save_repertoire(_random_archive(np.random.default_rng(8)),
                           good, robot, scene)
        with pytest.raises(FileFormatError, match="hash mismatch"):
            pz.load_repertoire(good, robot=bundled_robots()["arm6"])

        # every CLI subcommand, run twice with identical inputs,
        # rewrites identical bytes (figures included)
        outputs = {}
        for tag in ("x", "y"):
            d = tmp_path / tag
            d.mkdir()
            rep = str(d / "rep.txt")
            assert cli_main(["generate", "--budget", "192", "--batch", "32",
                             "--seed", "0", "--samples", "2",
                             "--out", rep, "--log", str(d / "gen.tsv")]) == 0
            assert cli_main(["score", "--repertoire", rep,
                             "--out", str(d / "scores.tsv")]) == 0
            assert cli_main(["select", "--repertoire", rep, "--top-k", "5",
                             "--out", str(d / "best.txt")]) == 0
            assert cli_main(["adapt", "--repertoire", str(d / "best.txt"),
                             "--camera-object", "0.32,-0.01,0.02,0,0,0.2",
                             "--out", str(d / "adapted.txt"),
                             "--report", str(d / "filter.txt")]) == 0
            assert cli_main(["grid-eval", "--repertoire", str(d / "best.txt"),
                             "--box", "0.25,-0.05,0.015,0.35,0.05,0.025",
                             "--div", "2,1,1", "--orient-set", "identity",
                             "--k", "2", "--out", str(d / "heat.csv")]) == 0
            assert cli_main(["export", "--repertoire", str(d / "best.txt"),
                             "--out-dir", str(d / "traces"),
                             "--limit", "2"]) == 0
            blobs = {}
            for name in ("rep.txt", "gen.tsv", "gen_coverage.png",
                         "scores.tsv", "scores_scores.png", "best.txt",
                         "adapted.txt", "filter.txt", "heat.csv",
                         "heat_heatmap.png"):
                blobs[name] = open(d / name, "rb").read()
            for trace in sorted((d / "traces").iterdir()):
                blobs[f"traces/{trace.name}"] = trace.read_bytes()
            outputs[tag] = blobs
        assert outputs["x"].keys() == outputs["y"].keys()
        for name, blob in outputs["x"].items():
            assert outputs["y"][name] == blob, f"{name} differs on re-run"
        ok = True
    finally:
        report(10, desc, ok)
