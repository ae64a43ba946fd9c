import math

import numpy as np
import pytest

from grasprep.fixtures import desk_arm, pinch_box_scene, pinch_box_trajectory
from grasprep.qd import MapElitesConfig, run_map_elites
from grasprep.quality import NoiseSpec
from grasprep.workspace import (
    GridSpec,
    default_orientations,
    evaluate_grid,
    export_heatmap,
    grid_poses,
)


def _identity_spec(center, half=0.005, k=5, seed=0):
    center = np.asarray(center, dtype=np.float64)
    return GridSpec(box_min=center - half, box_max=center + half,
                    divisions=(1, 1, 1), orientations=(np.eye(3),),
                    trajectories_per_pose=k, seed=seed)


def _small_archive(budget=256, seed=5):
    return run_map_elites(desk_arm(), pinch_box_scene(),
                          MapElitesConfig(budget=budget, batch_size=32,
                                          seed=seed,
                                          noise=NoiseSpec(samples=2, seed=0))
                          ).archive


def test_grid_counts_match_figure_arithmetic():
    flat = GridSpec(box_min=np.array([-0.35, -0.35, 0.015]),
                    box_max=np.array([0.35, 0.35, 0.025]),
                    divisions=(50, 50, 1), orientations=(np.eye(3),))
    assert len(grid_poses(flat)) == 2500
    assert flat.n_poses == 2500
    six = GridSpec(box_min=np.array([-0.35, -0.35, 0.015]),
                   box_max=np.array([0.35, 0.35, 0.025]),
                   divisions=(25, 25, 1))
    assert len(six.orientations) == 6
    assert len(grid_poses(six)) == 3750
    # five trajectories over six orientations caps a position at 30
    assert six.trajectories_per_pose * len(six.orientations) == 30


def test_single_cell_pose_is_box_center():
    spec = _identity_spec([0.4, -0.2, 0.1])
    poses = grid_poses(spec)
    assert len(poses) == 1
    assert np.allclose(poses[0].translation, [0.4, -0.2, 0.1], atol=1e-15)
    assert np.array_equal(poses[0].rotation, np.eye(3))


def test_cell_centers_row_major():
    spec = GridSpec(box_min=np.zeros(3), box_max=np.array([1.0, 1.0, 0.1]),
                    divisions=(2, 2, 1), orientations=(np.eye(3),))
    got = np.array([p.translation for p in grid_poses(spec)])
    expect = np.array([[0.25, 0.25, 0.05], [0.25, 0.75, 0.05],
                       [0.75, 0.25, 0.05], [0.75, 0.75, 0.05]])
    assert np.allclose(got, expect, atol=1e-15)


def test_orientation_composes_with_base_rotation():
    spec = GridSpec(box_min=np.zeros(3), box_max=np.ones(3),
                    divisions=(1, 1, 1),
                    orientations=(np.array([[0.0, -1.0, 0.0],
                                            [1.0, 0.0, 0.0],
                                            [0.0, 0.0, 1.0]]),))
    base = np.array([[0.0, 1.0, 0.0], [-1.0, 0.0, 0.0], [0.0, 0.0, 1.0]])
    pose = grid_poses(spec, base_rotation=base)[0]
    assert np.allclose(pose.rotation, np.eye(3), atol=1e-15)


def test_default_orientations_shape():
    orients = default_orientations()
    assert len(orients) == 6
    assert np.allclose(orients[0], np.eye(3), atol=1e-15)
    for rot in orients:
        assert np.allclose(rot @ rot.T, np.eye(3), atol=1e-12)
        assert abs(np.linalg.det(rot) - 1.0) < 1e-12
    flat = {tuple(np.round(r, 9).ravel()) for r in orients}
    assert len(flat) == 6


def test_spec_validation():
    with pytest.raises(ValueError):
        GridSpec(box_min=np.ones(3), box_max=np.zeros(3), divisions=(1, 1, 1))
    with pytest.raises(ValueError):
        GridSpec(box_min=np.zeros(3), box_max=np.ones(3), divisions=(0, 1, 1))
    with pytest.raises(ValueError):
        GridSpec(box_min=np.zeros(3), box_max=np.ones(3), divisions=(1, 1, 1),
                 orientations=(np.ones((3, 3)),))
    with pytest.raises(ValueError):
        GridSpec(box_min=np.zeros(3), box_max=np.ones(3), divisions=(1, 1, 1),
                 trajectories_per_pose=0)


def test_identity_pose_keeps_all_sampled_feasible():
    robot, scene = desk_arm(), pinch_box_scene()
    archive = _small_archive()
    assert len(archive) >= 3
    spec = _identity_spec(scene.object_sim_pose.translation, k=3)
    result = evaluate_grid(archive, robot, scene, spec)
    assert result.n_sampled == 3
    assert result.feasible.tolist() == [3]
    assert (result.causes == 0).all()


def test_far_poses_are_infeasible():
    robot, scene = desk_arm(), pinch_box_scene()
    spec = _identity_spec([3.0, 3.0, 0.02], k=2)
    result = evaluate_grid([pinch_box_trajectory()], robot, scene, spec)
    assert result.n_sampled == 1  # capped at the repertoire size
    assert result.feasible.tolist() == [0]
    assert result.totals()["ik_unreachable"] == 1


def test_empty_and_invalid_sources():
    robot, scene = desk_arm(), pinch_box_scene()
    spec = _identity_spec(scene.object_sim_pose.translation)
    with pytest.raises(ValueError):
        evaluate_grid([], robot, scene, spec)
    with pytest.raises(TypeError):
        evaluate_grid([np.zeros(6)], robot, scene, spec)


def test_orientation_set_discriminates_reachability():
    # z spins stay graspable for a yaw-only wrist; y tilts demand pitch
    # the gantry cannot produce
    robot, scene = desk_arm(), pinch_box_scene()
    center = scene.object_sim_pose.translation
    spec = GridSpec(box_min=center - 0.005, box_max=center + 0.005,
                    divisions=(1, 1, 1), trajectories_per_pose=1, seed=0)
    result = evaluate_grid([pinch_box_trajectory()], robot, scene, spec)
    assert result.feasible.tolist() == [1, 1, 1, 0, 0, 0]


def test_grid_deterministic_and_parallel_invariant():
    robot, scene = desk_arm(), pinch_box_scene()
    archive = _small_archive()
    center = scene.object_sim_pose.translation
    spec = GridSpec(box_min=center - np.array([0.3, 0.3, 0.005]),
                    box_max=center + np.array([0.3, 0.3, 0.005]),
                    divisions=(3, 3, 1), orientations=(np.eye(3),),
                    trajectories_per_pose=2, seed=9)
    serial = evaluate_grid(archive, robot, scene, spec, workers=1)
    again = evaluate_grid(archive, robot, scene, spec, workers=1)
    threaded = evaluate_grid(archive, robot, scene, spec, workers=3)
    for other in (again, threaded):
        assert np.array_equal(serial.feasible, other.feasible)
        assert np.array_equal(serial.causes, other.causes)
        assert np.array_equal(serial.positions, other.positions)


def test_export_heatmap_layout(tmp_path):
    robot, scene = desk_arm(), pinch_box_scene()
    center = scene.object_sim_pose.translation
    spec = GridSpec(box_min=center - np.array([0.2, 0.2, 0.005]),
                    box_max=center + np.array([0.2, 0.2, 0.005]),
                    divisions=(2, 2, 1), trajectories_per_pose=1, seed=0)
    result = evaluate_grid([pinch_box_trajectory()], robot, scene, spec)
    path = tmp_path / "heat.csv"
    export_heatmap(result, str(path))
    text = path.read_text()
    lines = text.splitlines()
    assert lines[0] == "x,y,z,orientation,feasible,position_total"
    assert len(lines) == 1 + result.n_poses == 1 + 4 * 6

    export_heatmap(result, str(tmp_path / "heat2.csv"))
    assert (tmp_path / "heat2.csv").read_text() == text

    # position_total repeats the orientation sum within each position block
    rows = [line.split(",") for line in lines[1:]]
    for p in range(4):
        block = rows[p * 6:(p + 1) * 6]
        total = sum(int(r[4]) for r in block)
        assert all(int(r[5]) == total for r in block)
        assert [int(r[3]) for r in block] == list(range(6))

    # coordinates are plain parseable decimals that round-trip exactly
    for row, pos in zip(rows, result.positions):
        assert [float(v) for v in row[:3]] == [pos[0], pos[1], pos[2]]
