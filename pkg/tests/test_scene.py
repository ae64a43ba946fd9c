import numpy as np
import pytest
from scipy.spatial import cKDTree
from scipy.spatial.transform import Rotation

from grasprep.kinematics import Joint, RobotModel, link_frames
from grasprep.scene import (
    ObjectModel,
    SceneModel,
    make_object,
    object_mass_properties,
    robot_collides,
)
from grasprep.se3 import RigidTransform
from grasprep.shapes import (
    Box,
    Capsule,
    HalfSpace,
    Sphere,
    bounding_radius,
    shape_aabb,
    shape_distance,
)


def _ident():
    return RigidTransform.identity()


def _pose(rng, scale=0.3):
    return RigidTransform(Rotation.random(random_state=rng).as_matrix(),
                          rng.uniform(-scale, scale, 3))


def _sample_box_surface(box: Box, n_per_face=32):
    h = box.half_extents
    pts = []
    for axis in range(3):
        for sign in (-1.0, 1.0):
            u = np.linspace(-1, 1, n_per_face)
            v = np.linspace(-1, 1, n_per_face)
            uu, vv = np.meshgrid(u, v)
            face = np.zeros((n_per_face * n_per_face, 3))
            face[:, axis] = sign * h[axis]
            others = [a for a in range(3) if a != axis]
            face[:, others[0]] = uu.ravel() * h[others[0]]
            face[:, others[1]] = vv.ravel() * h[others[1]]
            pts.append(face)
    pts = np.vstack(pts)
    return box.pose.transform_points(pts)


def _sample_capsule_surface(cap: Capsule, n_axial=48, n_circ=48):
    seg = cap.p1 - cap.p0
    length = np.linalg.norm(seg)
    axis = seg / length if length > 1e-12 else np.array([0.0, 0.0, 1.0])
    ref = np.array([1.0, 0.0, 0.0])
    if abs(axis @ ref) > 0.9:
        ref = np.array([0.0, 1.0, 0.0])
    u = np.cross(axis, ref)
    u /= np.linalg.norm(u)
    v = np.cross(axis, u)
    pts = []
    for t in np.linspace(0.0, 1.0, n_axial):
        center = cap.p0 + t * seg
        for a in np.linspace(0, 2 * np.pi, n_circ, endpoint=False):
            pts.append(center + cap.radius * (np.cos(a) * u + np.sin(a) * v))
    # hemispherical caps
    for center, d in ((cap.p0, -axis), (cap.p1, axis)):
        for phi in np.linspace(0.05, np.pi / 2, 12):
            for a in np.linspace(0, 2 * np.pi, n_circ, endpoint=False):
                direction = (np.sin(phi) * (np.cos(a) * u + np.sin(a) * v)
                             + np.cos(phi) * d)
                pts.append(center + cap.radius * direction)
    return np.asarray(pts)


def test_two_unit_spheres_analytic():
    a = Sphere(np.zeros(3), 1.0)
    b = Sphere(np.array([3.0, 0.0, 0.0]), 1.0)
    d, pa, pb = shape_distance(a, _ident(), b, _ident())
    assert abs(d - 1.0) < 1e-12
    assert np.allclose(pa, [1.0, 0.0, 0.0], atol=1e-12)
    assert np.allclose(pb, [2.0, 0.0, 0.0], atol=1e-12)


def test_sphere_halfspace_penetration_analytic():
    s = Sphere(np.array([0.0, 0.0, 0.05]), 0.1)
    table = HalfSpace(np.array([0.0, 0.0, 1.0]), 0.0)
    d, _, _ = shape_distance(s, _ident(), table, _ident())
    assert abs(d - (-0.05)) < 1e-12


def test_sphere_box_analytic():
    s = Sphere(np.zeros(3), 0.5)
    b = Box(np.array([1.0, 1.0, 1.0]), pose=RigidTransform(np.eye(3), np.array([3.0, 0.0, 0.0])))
    d, pa, pb = shape_distance(s, _ident(), b, _ident())
    assert abs(d - 1.5) < 1e-12
    assert np.allclose(pa, [0.5, 0.0, 0.0], atol=1e-12)
    assert np.allclose(pb, [2.0, 0.0, 0.0], atol=1e-12)
    # deep penetration: sphere center inside the box
    b2 = Box(np.array([1.0, 1.0, 1.0]))
    d2, _, _ = shape_distance(s, _ident(), b2, _ident())
    assert abs(d2 - (-1.5)) < 1e-12


def test_capsule_box_matches_sampling_oracle():
    rng = np.random.default_rng(21)
    checked = 0
    while checked < 12:
        cap = Capsule(rng.uniform(-0.2, 0.2, 3), rng.uniform(-0.2, 0.2, 3),
                      rng.uniform(0.02, 0.06))
        box = Box(rng.uniform(0.03, 0.12, 3), pose=_pose(rng, 0.05))
        pose_a = _pose(rng)
        pose_b = _pose(rng)
        d, pa, pb = shape_distance(cap, pose_a, box, pose_b)
        if d <= 1e-3:  # sampling oracle only sound for separated pairs
            continue
        checked += 1
        cap_w = Capsule(pose_a.transform_point(cap.p0),
                        pose_a.transform_point(cap.p1), cap.radius)
        box_w = Box(box.half_extents,
                    pose=RigidTransform(pose_b.rotation @ box.pose.rotation,
                                        pose_b.transform_point(box.pose.translation)))
        tree = cKDTree(_sample_box_surface(box_w))
        sampled, _ = tree.query(_sample_capsule_surface(cap_w))
        assert abs(d - sampled.min()) < 2e-3
        assert abs(d - np.linalg.norm(pa - pb)) < 1e-9


def test_box_box_matches_sampling_oracle():
    rng = np.random.default_rng(22)
    checked = 0
    while checked < 12:
        a = Box(rng.uniform(0.03, 0.12, 3), pose=_pose(rng, 0.05))
        b = Box(rng.uniform(0.03, 0.12, 3), pose=_pose(rng, 0.05))
        pose_a = _pose(rng)
        pose_b = _pose(rng)
        d, pa, pb = shape_distance(a, pose_a, b, pose_b)
        if d <= 1e-3:
            continue
        checked += 1
        def world(box, pose):
            return Box(box.half_extents,
                       pose=RigidTransform(pose.rotation @ box.pose.rotation,
                                           pose.transform_point(box.pose.translation)))
        tree = cKDTree(_sample_box_surface(world(a, pose_a), 48))
        sampled, _ = tree.query(_sample_box_surface(world(b, pose_b), 48))
        assert abs(d - sampled.min()) < 2e-3
        assert abs(d - np.linalg.norm(pa - pb)) < 1e-9


def test_box_box_penetration_axis_aligned():
    # overlap of axis-aligned boxes: depth is the smallest axis overlap
    a = Box(np.array([0.1, 0.1, 0.1]))
    b = Box(np.array([0.1, 0.1, 0.1]),
            pose=RigidTransform(np.eye(3), np.array([0.15, 0.0, 0.0])))
    d, _, _ = shape_distance(a, _ident(), b, _ident())
    assert abs(d - (-0.05)) < 1e-9


def test_capsule_sphere_penetration():
    cap = Capsule(np.array([-0.1, 0.0, 0.0]), np.array([0.1, 0.0, 0.0]), 0.05)
    s = Sphere(np.array([0.0, 0.0, 0.06]), 0.03)
    d, _, _ = shape_distance(s, _ident(), cap, _ident())
    assert abs(d - (-0.02)) < 1e-12


def test_distance_symmetry():
    rng = np.random.default_rng(33)
    shapes = [
        Sphere(rng.uniform(-0.1, 0.1, 3), 0.05),
        Capsule(rng.uniform(-0.2, 0.2, 3), rng.uniform(-0.2, 0.2, 3), 0.04),
        Box(rng.uniform(0.02, 0.1, 3), pose=_pose(rng, 0.02)),
        HalfSpace(np.array([0.0, 0.0, 1.0]), -0.4),
    ]
    for i, a in enumerate(shapes):
        for b in shapes[i:]:
            if isinstance(a, HalfSpace) and isinstance(b, HalfSpace):
                continue
            pa = _pose(rng) if not isinstance(a, HalfSpace) else _ident()
            pb = _pose(rng) if not isinstance(b, HalfSpace) else _ident()
            d1, w1a, w1b = shape_distance(a, pa, b, pb)
            d2, w2b, w2a = shape_distance(b, pb, a, pa)
            assert abs(d1 - d2) < 1e-12
            assert np.allclose(w1a, w2a, atol=1e-9)
            assert np.allclose(w1b, w2b, atol=1e-9)


def test_distance_rigid_invariance():
    rng = np.random.default_rng(44)
    for _ in range(30):
        a = Capsule(rng.uniform(-0.15, 0.15, 3), rng.uniform(-0.15, 0.15, 3),
                    rng.uniform(0.01, 0.05))
        b = Box(rng.uniform(0.02, 0.1, 3), pose=_pose(rng, 0.03))
        pose_a = _pose(rng)
        pose_b = _pose(rng)
        d0, _, _ = shape_distance(a, pose_a, b, pose_b)
        g = _pose(rng, 1.0)
        moved_a = RigidTransform(g.rotation @ pose_a.rotation,
                                 g.transform_point(pose_a.translation))
        moved_b = RigidTransform(g.rotation @ pose_b.rotation,
                                 g.transform_point(pose_b.translation))
        d1, _, _ = shape_distance(a, moved_a, b, moved_b)
        assert abs(d0 - d1) < 1e-9


def test_mass_properties_unit_cube():
    corners = np.array([[x, y, z] for x in (0.0, 1.0)
                        for y in (0.0, 1.0) for z in (0.0, 1.0)])
    mass, com = object_mass_properties(corners, density=1.5)
    assert abs(mass - 1.5) < 1e-12
    assert np.allclose(com, [0.5, 0.5, 0.5], atol=1e-15)


def test_mass_properties_symmetric_cloud():
    rng = np.random.default_rng(55)
    half = rng.uniform(-1.0, 1.0, (40, 3))
    cloud = np.vstack([half, -half])
    _, com = object_mass_properties(cloud)
    assert np.allclose(com, 0.0, atol=1e-12)


def test_mass_properties_mean_oracle():
    rng = np.random.default_rng(56)
    cloud = rng.uniform(-0.2, 0.5, (100, 3))
    mass, com = object_mass_properties(cloud, density=2.0)
    assert np.allclose(com, cloud.mean(axis=0), atol=1e-15)
    extent = cloud.max(axis=0) - cloud.min(axis=0)
    assert abs(mass - 2.0 * extent.prod()) < 1e-12


def test_mass_properties_degenerate_errors():
    with pytest.raises(ValueError):
        object_mass_properties(np.zeros((3, 3)))
    coplanar = np.array([[0.0, 0, 0], [1, 0, 0], [0, 1, 0], [1, 1, 0], [0.3, 0.7, 0]])
    with pytest.raises(ValueError):
        object_mass_properties(coplanar)


def _probe_robot():
    # single prismatic z joint carrying a sphere: a vertical probe
    z = np.array([0.0, 0.0, 1.0])
    return RobotModel(
        name="probe",
        joints=(Joint("prismatic", z, _ident(), (-1.0, 1.0)),),
        ee_offset=_ident(),
        link_collision=((Sphere(np.zeros(3), 0.05),),),
    )


def _probe_scene(target_pose=None):
    target = make_object(
        "blk", (Box(np.array([0.05, 0.05, 0.05])),),
        np.array([[x, y, z] for x in (-0.05, 0.05)
                  for y in (-0.05, 0.05) for z in (-0.05, 0.05)]),
        pose=target_pose or RigidTransform(np.eye(3), np.array([0.5, 0.0, 0.05])))
    return SceneModel(table=HalfSpace(np.array([0.0, 0.0, 1.0]), 0.0),
                      objects=(target,), target_id="blk")


def test_robot_collides_trivial_cases():
    robot = _probe_robot()
    scene = _probe_scene()
    assert not robot_collides(robot, [0.5], scene)       # hovering high
    assert robot_collides(robot, [-0.1], scene)          # sphere below table
    assert robot_collides(robot, [0.04], scene)          # grazing into table


def test_robot_collides_target_toggle():
    robot = _probe_robot()
    # target directly under the probe path
    scene = _probe_scene(RigidTransform(np.eye(3), np.array([0.0, 0.0, 0.12])))
    assert robot_collides(robot, [0.12], scene, ignore_target=False)
    assert not robot_collides(robot, [0.12], scene, ignore_target=True)


def test_robot_collides_matches_pairwise_oracle():
    rng = np.random.default_rng(66)
    z = np.array([0.0, 0.0, 1.0])
    y = np.array([0.0, 1.0, 0.0])
    robot = RobotModel(
        name="two", joints=(
            Joint("revolute", z, RigidTransform(np.eye(3), np.array([0.0, 0.0, 0.3])), (-3, 3)),
            Joint("revolute", y, RigidTransform(np.eye(3), np.array([0.0, 0.0, 0.2])), (-3, 3)),
        ),
        ee_offset=_ident(),
        link_collision=(
            (Capsule(np.zeros(3), np.array([0.0, 0.0, 0.2]), 0.04),),
            (Sphere(np.array([0.0, 0.0, 0.1]), 0.06),),
        ))
    scene = _probe_scene(RigidTransform(np.eye(3), np.array([0.2, 0.0, 0.35])))
    table_shape = scene.table
    target = scene.target
    for _ in range(200):
        q = rng.uniform(-3.0, 3.0, 2)
        frames = link_frames(robot, q)
        expected = False
        for link, shapes in enumerate(robot.link_collision):
            for shape in shapes:
                d, _, _ = shape_distance(shape, frames[link], table_shape, _ident())
                expected = expected or d < 0.0
                for tshape in target.shapes:
                    d, _, _ = shape_distance(shape, frames[link], tshape, target.pose)
                    expected = expected or d < 0.0
        # links 0 and 1 are adjacent: no self-pair contribution
        assert robot_collides(robot, q, scene) == expected


def test_collision_monotone_under_inflation():
    rng = np.random.default_rng(77)
    z = np.array([0.0, 0.0, 1.0])
    scene = _probe_scene(RigidTransform(np.eye(3), np.array([0.0, 0.0, 0.3])))
    for _ in range(60):
        r = rng.uniform(0.01, 0.08)
        base = RobotModel(
            name="p", joints=(Joint("prismatic", z, _ident(), (-1.0, 1.0)),),
            ee_offset=_ident(), link_collision=((Sphere(np.zeros(3), r),),))
        fat = RobotModel(
            name="p", joints=(Joint("prismatic", z, _ident(), (-1.0, 1.0)),),
            ee_offset=_ident(), link_collision=((Sphere(np.zeros(3), r + 0.02),),))
        q = [rng.uniform(-0.2, 0.6)]
        if robot_collides(base, q, scene):
            assert robot_collides(fat, q, scene)


def test_scene_validation():
    target = make_object(
        "a", (Sphere(np.zeros(3), 0.05),),
        np.array([[0.0, 0, 0], [0.1, 0, 0], [0, 0.1, 0], [0, 0, 0.1], [0.1, 0.1, 0.1]]))
    with pytest.raises(ValueError):
        SceneModel(table=HalfSpace(np.array([0.0, 0.0, 1.0]), 0.0),
                   objects=(target,), target_id="missing")
    with pytest.raises(ValueError):
        SceneModel(table=HalfSpace(np.array([0.0, 0.0, 1.0]), 0.0),
                   objects=(target, target), target_id="a")


def test_object_model_validation():
    verts = np.array([[0.0, 0, 0], [0.1, 0, 0], [0, 0.1, 0], [0, 0, 0.1]])
    with pytest.raises(ValueError):
        ObjectModel(id="x", shapes=(), vertices=verts, mass=1.0,
                    center_of_mass=np.zeros(3))
    with pytest.raises(ValueError):
        ObjectModel(id="x", shapes=(Sphere(np.zeros(3), 0.1),), vertices=verts,
                    mass=0.0, center_of_mass=np.zeros(3))


def test_shape_validation():
    with pytest.raises(ValueError):
        Sphere(np.zeros(3), 0.0)
    with pytest.raises(ValueError):
        Box(np.array([0.1, 0.0, 0.1]))
    with pytest.raises(ValueError):
        HalfSpace(np.zeros(3), 0.0)
    # non-unit normals are normalized, offset rescaled to keep the same set
    h = HalfSpace(np.array([0.0, 0.0, 2.0]), 4.0)
    assert np.allclose(h.normal, [0, 0, 1]) and h.offset == 2.0


def test_aabb_and_bounding_radius():
    box = Box(np.array([0.1, 0.2, 0.3]))
    lo, hi = shape_aabb(box)
    assert np.allclose(lo, [-0.1, -0.2, -0.3]) and np.allclose(hi, [0.1, 0.2, 0.3])
    cap = Capsule(np.array([0.0, 0.0, 0.0]), np.array([0.0, 0.0, 0.2]), 0.05)
    lo, hi = shape_aabb(cap)
    assert np.allclose(lo, [-0.05, -0.05, -0.05]) and np.allclose(hi, [0.05, 0.05, 0.25])
    r = bounding_radius([Sphere(np.array([0.1, 0.0, 0.0]), 0.05)])
    assert r >= 0.15 - 1e-12
    with pytest.raises(ValueError):
        shape_aabb(HalfSpace(np.array([0.0, 0.0, 1.0]), 0.0))
