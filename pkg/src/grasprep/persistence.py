"""Self-describing text files for models, repertoires, and run configs.

Every file is one format family: a magic first line `#grasprep/<kind> v1`,
a JSON header object on the second line, then one JSON record per line.
Floats serialize through Python's shortest round-tripping repr, so
save followed by load reproduces every numeric field exactly. Robots and
objects are content-addressed: a repertoire header records the SHA-256 of
the models it was generated against, and loading against different models
fails loudly instead of silently replaying grasps on the wrong geometry.
"""

from __future__ import annotations

import hashlib
import io
import json
from dataclasses import dataclass, replace
from importlib import resources

import numpy as np

from .kinematics import IKParams, Joint, RobotModel
from .qd import (
    Archive,
    Elite,
    Genome,
    MapElitesConfig,
    MapElitesResult,
    MutationParams,
    SearchBounds,
)
from .quality import (
    DynamicsNoise,
    JointNoise,
    NoiseSpec,
    ObjectPoseNoise,
    QualityVector,
)
from .rollout import GripperCommand, RolloutParams, Trajectory
from .scene import ObjectModel, SceneModel
from .se3 import RigidTransform

__all__ = [
    "FORMAT_VERSION",
    "EULER_CONVENTION",
    "RunConfig",
    "config_hash",
    "model_hash",
    "save_robot",
    "load_robot",
    "save_object",
    "load_object",
    "save_scene",
    "load_scene",
    "save_repertoire",
    "load_repertoire",
    "read_repertoire_header",
    "write_report",
    "load_report",
    "LoadedRepertoire",
    "bundled_path",
    "resolve_robot",
    "resolve_scene",
]

FORMAT_VERSION = 1
EULER_CONVENTION = "intrinsic-xyz"
_MAGIC_PREFIX = "#grasprep/"


class FileFormatError(ValueError):
    """Raised for malformed, mismatched, or corrupted grasprep files."""


def _dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"),
                      allow_nan=False)


def _render(kind: str, header: dict, records: list[dict]) -> str:
    out = io.StringIO()
    out.write(f"{_MAGIC_PREFIX}{kind} v{FORMAT_VERSION}\n")
    out.write(_dumps(header) + "\n")
    for record in records:
        out.write(_dumps(record) + "\n")
    return out.getvalue()


def _write_doc(path: str, kind: str, header: dict,
               records: list[dict]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(_render(kind, header, records))


def _parse_doc(text: str, kind: str, origin: str) -> tuple[dict, list[dict]]:
    lines = text.splitlines()
    if not lines or not lines[0].startswith(_MAGIC_PREFIX):
        raise FileFormatError(f"{origin}: not a grasprep file")
    magic = lines[0][len(_MAGIC_PREFIX):].split(" ")
    if len(magic) != 2 or magic[1] != f"v{FORMAT_VERSION}":
        raise FileFormatError(f"{origin}: unsupported format version "
                              f"{lines[0]!r}")
    if magic[0] != kind:
        raise FileFormatError(f"{origin}: expected kind {kind!r}, "
                              f"found {magic[0]!r}")
    if len(lines) < 2:
        raise FileFormatError(f"{origin}: missing header")
    try:
        header = json.loads(lines[1])
    except json.JSONDecodeError as exc:
        raise FileFormatError(f"{origin}: malformed header: {exc}") from exc
    records = []
    for i, line in enumerate(lines[2:]):
        if not line.strip():
            continue
        try:
            records.append(json.loads(line))
        except json.JSONDecodeError as exc:
            raise FileFormatError(f"{origin}: record {i}: malformed JSON "
                                  f"({exc})") from exc
    return header, records


def _read_doc(path: str, kind: str) -> tuple[dict, list[dict]]:
    with open(path, "r", encoding="utf-8") as fh:
        return _parse_doc(fh.read(), kind, origin=str(path))


def _floats(values, n: int, what: str) -> list[float]:
    if not isinstance(values, list) or len(values) != n:
        raise FileFormatError(f"{what} must be a list of {n} numbers")
    return [float(v) for v in values]


# -- geometry codecs ---------------------------------------------------------

def _transform_to_list(h: RigidTransform) -> list[float]:
    return h.to_flat()


def _transform_from_list(values, what: str) -> RigidTransform:
    return RigidTransform.from_flat(_floats(values, 16, what))


def _shape_to_dict(shape) -> dict:
    from .shapes import Box, Capsule, HalfSpace, Sphere

    if isinstance(shape, Sphere):
        return {"kind": "sphere", "center": [float(v) for v in shape.center],
                "radius": float(shape.radius)}
    if isinstance(shape, Capsule):
        return {"kind": "capsule", "p0": [float(v) for v in shape.p0],
                "p1": [float(v) for v in shape.p1],
                "radius": float(shape.radius)}
    if isinstance(shape, Box):
        return {"kind": "box",
                "half_extents": [float(v) for v in shape.half_extents],
                "pose": _transform_to_list(shape.pose)}
    if isinstance(shape, HalfSpace):
        return {"kind": "half_space",
                "normal": [float(v) for v in shape.normal],
                "offset": float(shape.offset)}
    raise TypeError(f"unknown shape type {type(shape).__name__}")


def _shape_from_dict(data: dict, what: str):
    from .shapes import Box, Capsule, HalfSpace, Sphere

    kind = data.get("kind")
    if kind == "sphere":
        return Sphere(center=np.array(_floats(data["center"], 3, what)),
                      radius=float(data["radius"]))
    if kind == "capsule":
        return Capsule(p0=np.array(_floats(data["p0"], 3, what)),
                       p1=np.array(_floats(data["p1"], 3, what)),
                       radius=float(data["radius"]))
    if kind == "box":
        return Box(half_extents=np.array(_floats(data["half_extents"], 3,
                                                 what)),
                   pose=_transform_from_list(data["pose"], what))
    if kind == "half_space":
        return HalfSpace(normal=np.array(_floats(data["normal"], 3, what)),
                         offset=float(data["offset"]))
    raise FileFormatError(f"{what}: unknown shape kind {kind!r}")


# -- robots ------------------------------------------------------------------

def _robot_doc(robot: RobotModel) -> tuple[dict, list[dict]]:
    header = {
        "name": robot.name,
        "dof": robot.dof,
        "ee_offset": _transform_to_list(robot.ee_offset),
        "gravity": [float(v) for v in robot.gravity],
        "self_collision_exclude": sorted(
            list(p) for p in robot.self_collision_exclude),
    }
    records = []
    for i, joint in enumerate(robot.joints):
        records.append({
            "type": "joint",
            "kind": joint.kind,
            "axis": [float(v) for v in joint.axis],
            "origin": _transform_to_list(joint.origin),
            "limits": [joint.limits[0], joint.limits[1]],
            "mass": float(joint.mass),
        })
        for shape in robot.link_collision[i]:
            records.append({"type": "link_shape", "link": i,
                            "shape": _shape_to_dict(shape)})
    return header, records


def save_robot(robot: RobotModel, path: str) -> None:
    header, records = _robot_doc(robot)
    _write_doc(path, "robot", header, records)


def _robot_from_doc(header: dict, records: list[dict],
                    origin: str) -> RobotModel:
    joints: list[Joint] = []
    link_shapes: dict[int, list] = {}
    for i, rec in enumerate(records):
        what = f"{origin}: record {i}"
        try:
            if rec.get("type") == "joint":
                joints.append(Joint(
                    kind=rec["kind"],
                    axis=np.array(_floats(rec["axis"], 3, what)),
                    origin=_transform_from_list(rec["origin"], what),
                    limits=(float(rec["limits"][0]), float(rec["limits"][1])),
                    mass=float(rec["mass"])))
            elif rec.get("type") == "link_shape":
                link_shapes.setdefault(int(rec["link"]), []).append(
                    _shape_from_dict(rec["shape"], what))
            else:
                raise FileFormatError(f"{what}: unknown record type "
                                      f"{rec.get('type')!r}")
        except (KeyError, TypeError, IndexError) as exc:
            raise FileFormatError(f"{what}: {exc!r}") from exc
    collision = tuple(tuple(link_shapes.get(i, ())) for i in range(len(joints)))
    return RobotModel(
        name=str(header["name"]),
        joints=tuple(joints),
        ee_offset=_transform_from_list(header["ee_offset"],
                                       f"{origin}: header"),
        link_collision=collision,
        gravity=np.array(_floats(header["gravity"], 3, f"{origin}: header")),
        self_collision_exclude=frozenset(
            (int(a), int(b)) for a, b in header["self_collision_exclude"]))


def load_robot(path: str) -> RobotModel:
    header, records = _read_doc(path, "robot")
    return _robot_from_doc(header, records, str(path))


# -- objects -----------------------------------------------------------------

def _object_doc(obj: ObjectModel) -> tuple[dict, list[dict]]:
    header = {
        "id": obj.id,
        "mass": float(obj.mass),
        "center_of_mass": [float(v) for v in obj.center_of_mass],
        "pose": _transform_to_list(obj.pose),
    }
    records = [{"type": "shape", "shape": _shape_to_dict(s)}
               for s in obj.shapes]
    records.append({"type": "vertices",
                    "points": [[float(v) for v in row]
                               for row in obj.vertices]})
    return header, records


def save_object(obj: ObjectModel, path: str) -> None:
    header, records = _object_doc(obj)
    _write_doc(path, "object", header, records)


def _object_from_doc(header: dict, records: list[dict],
                     origin: str) -> ObjectModel:
    shapes = []
    vertices = None
    for i, rec in enumerate(records):
        what = f"{origin}: record {i}"
        try:
            if rec.get("type") == "shape":
                shapes.append(_shape_from_dict(rec["shape"], what))
            elif rec.get("type") == "vertices":
                vertices = np.array([_floats(row, 3, what)
                                     for row in rec["points"]])
            else:
                raise FileFormatError(f"{what}: unknown record type "
                                      f"{rec.get('type')!r}")
        except (KeyError, TypeError) as exc:
            raise FileFormatError(f"{what}: {exc!r}") from exc
    if vertices is None:
        raise FileFormatError(f"{origin}: object file has no vertices record")
    return ObjectModel(
        id=str(header["id"]),
        shapes=tuple(shapes),
        vertices=vertices,
        mass=float(header["mass"]),
        center_of_mass=np.array(_floats(header["center_of_mass"], 3,
                                        f"{origin}: header")),
        pose=_transform_from_list(header["pose"], f"{origin}: header"))


def load_object(path: str) -> ObjectModel:
    header, records = _read_doc(path, "object")
    return _object_from_doc(header, records, str(path))


# -- scenes ------------------------------------------------------------------

def save_scene(scene: SceneModel, path: str) -> None:
    header = {
        "target_id": scene.target_id,
        "table": _shape_to_dict(scene.table),
        "camera_pose": _transform_to_list(scene.camera_pose),
        "object_sim_pose": _transform_to_list(scene.object_sim_pose),
    }
    records = []
    for obj in scene.objects:
        obj_header, obj_records = _object_doc(obj)
        records.append({"type": "object", "header": obj_header,
                        "records": obj_records})
    _write_doc(path, "scene", header, records)


def load_scene(path: str) -> SceneModel:
    origin = str(path)
    header, records = _read_doc(path, "scene")
    objects = []
    for i, rec in enumerate(records):
        what = f"{origin}: record {i}"
        if rec.get("type") != "object":
            raise FileFormatError(f"{what}: unknown record type "
                                  f"{rec.get('type')!r}")
        try:
            objects.append(_object_from_doc(rec["header"], rec["records"],
                                            what))
        except (KeyError, TypeError) as exc:
            raise FileFormatError(f"{what}: {exc!r}") from exc
    return SceneModel(
        table=_shape_from_dict(header["table"], f"{origin}: header"),
        objects=tuple(objects),
        target_id=str(header["target_id"]),
        camera_pose=_transform_from_list(header["camera_pose"],
                                         f"{origin}: header"),
        object_sim_pose=_transform_from_list(header["object_sim_pose"],
                                             f"{origin}: header"))


# -- hashing -----------------------------------------------------------------

def model_hash(model) -> str:
    """Content address of a robot or object: SHA-256 over its canonical
    serialization.

    An object's pose is excluded: the same geometry observed at a new
    pose is still the same object, and adapted repertoires must keep
    matching it."""
    if isinstance(model, RobotModel):
        header, records = _robot_doc(model)
        text = _render("robot", header, records)
    elif isinstance(model, ObjectModel):
        header, records = _object_doc(replace(
            model, pose=RigidTransform.identity()))
        text = _render("object", header, records)
    else:
        raise TypeError("model_hash takes a RobotModel or ObjectModel")
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


# -- run configuration -------------------------------------------------------

@dataclass(frozen=True)
class RunConfig:
    """Every knob a pipeline run depends on, embedded in run outputs.

    base_offset is a forward-compatibility hook for robots whose base is
    not the world origin; only the identity is accepted today.
    """

    qd: MapElitesConfig = MapElitesConfig()
    mutation: MutationParams = MutationParams()
    max_step: float = 0.5
    base_offset: tuple[float, ...] = (0.0,) * 6

    def __post_init__(self) -> None:
        if tuple(float(v) for v in self.base_offset) != (0.0,) * 6:
            raise ValueError("non-identity base offsets are not supported")
        object.__setattr__(self, "base_offset", (0.0,) * 6)


def _noise_to_dict(spec: NoiseSpec) -> dict:
    return {
        "object_pose": {"sigma_pos": spec.object_pose.sigma_pos,
                        "sigma_rot": spec.object_pose.sigma_rot},
        "joints": {"sigma": spec.joints.sigma},
        "dynamics": {"sigma_mass_rel": spec.dynamics.sigma_mass_rel,
                     "sigma_com": spec.dynamics.sigma_com,
                     "sigma_margin": spec.dynamics.sigma_margin},
        "samples": spec.samples,
        "seed": spec.seed,
    }


def _noise_from_dict(d: dict) -> NoiseSpec:
    return NoiseSpec(
        object_pose=ObjectPoseNoise(float(d["object_pose"]["sigma_pos"]),
                                    float(d["object_pose"]["sigma_rot"])),
        joints=JointNoise(float(d["joints"]["sigma"])),
        dynamics=DynamicsNoise(float(d["dynamics"]["sigma_mass_rel"]),
                               float(d["dynamics"]["sigma_com"]),
                               float(d["dynamics"]["sigma_margin"])),
        samples=int(d["samples"]), seed=int(d["seed"]))


def _rollout_params_to_dict(p: RolloutParams) -> dict:
    return {
        "ik": {"damping": p.ik.damping, "step_clamp": p.ik.step_clamp,
               "max_iters": p.ik.max_iters, "tol_pos": p.ik.tol_pos,
               "tol_rot": p.ik.tol_rot, "restarts": p.ik.restarts},
        "contact_margin": p.contact_margin,
        "closure_substeps": p.closure_substeps,
        "opposition_deg": p.opposition_deg,
        "lift_height": p.lift_height,
    }


def _rollout_params_from_dict(d: dict) -> RolloutParams:
    ik = d["ik"]
    return RolloutParams(
        ik=IKParams(damping=float(ik["damping"]),
                    step_clamp=float(ik["step_clamp"]),
                    max_iters=int(ik["max_iters"]),
                    tol_pos=float(ik["tol_pos"]),
                    tol_rot=float(ik["tol_rot"]),
                    restarts=int(ik["restarts"])),
        contact_margin=float(d["contact_margin"]),
        closure_substeps=int(d["closure_substeps"]),
        opposition_deg=float(d["opposition_deg"]),
        lift_height=float(d["lift_height"]))


def _config_to_dict(config: RunConfig) -> dict:
    qd = config.qd
    return {
        "qd": {
            "budget": qd.budget,
            "batch_size": qd.batch_size,
            "grid_dims": list(qd.grid_dims),
            "seed": qd.seed,
            "n_steps": qd.n_steps,
            "n_waypoints": qd.n_waypoints,
            "bounds": None if qd.bounds is None else {
                "lower": [float(v) for v in qd.bounds.lower],
                "upper": [float(v) for v in qd.bounds.upper]},
            "noise": _noise_to_dict(qd.noise),
            "rollout": _rollout_params_to_dict(qd.rollout),
            "success_gate": qd.success_gate,
            # worker count is an execution detail: it never changes
            # results, so it must not change output files or hashes
            "touch_window": qd.touch_window,
            "inflation": qd.inflation,
        },
        "mutation": {
            "sigma_pos": config.mutation.sigma_pos,
            "sigma_rot": config.mutation.sigma_rot,
            "gene_rate": config.mutation.gene_rate,
            "sigma_close": config.mutation.sigma_close,
            "synergy_rate": config.mutation.synergy_rate,
        },
        "max_step": config.max_step,
        "base_offset": list(config.base_offset),
    }


def _config_from_dict(d: dict) -> RunConfig:
    qd = d["qd"]
    bounds = None
    if qd["bounds"] is not None:
        bounds = SearchBounds(
            lower=np.array(_floats(qd["bounds"]["lower"], 6, "config bounds")),
            upper=np.array(_floats(qd["bounds"]["upper"], 6, "config bounds")))
    return RunConfig(
        qd=MapElitesConfig(
            budget=int(qd["budget"]), batch_size=int(qd["batch_size"]),
            grid_dims=tuple(int(v) for v in qd["grid_dims"]),
            seed=int(qd["seed"]), n_steps=int(qd["n_steps"]),
            n_waypoints=int(qd["n_waypoints"]), bounds=bounds,
            noise=_noise_from_dict(qd["noise"]),
            rollout=_rollout_params_from_dict(qd["rollout"]),
            success_gate=bool(qd["success_gate"]),
            touch_window=str(qd["touch_window"]),
            inflation=float(qd["inflation"])),
        mutation=MutationParams(
            sigma_pos=float(d["mutation"]["sigma_pos"]),
            sigma_rot=float(d["mutation"]["sigma_rot"]),
            gene_rate=float(d["mutation"]["gene_rate"]),
            sigma_close=float(d["mutation"]["sigma_close"]),
            synergy_rate=float(d["mutation"]["synergy_rate"])),
        max_step=float(d["max_step"]),
        base_offset=tuple(float(v) for v in d["base_offset"]))


def config_hash(config: RunConfig) -> str:
    return hashlib.sha256(
        _dumps(_config_to_dict(config)).encode("utf-8")).hexdigest()


# -- repertoires -------------------------------------------------------------

def _genome_to_dict(g: Genome) -> dict:
    return {"waypoints": [[float(v) for v in row] for row in g.waypoints],
            "close_fraction": float(g.close_fraction),
            "synergy": g.synergy,
            "aperture": float(g.aperture)}


def _genome_from_dict(d: dict, what: str) -> Genome:
    wp = d["waypoints"]
    if not isinstance(wp, list) or not wp:
        raise FileFormatError(f"{what}: genome waypoints missing")
    return Genome(waypoints=np.array([_floats(row, 6, what) for row in wp]),
                  close_fraction=float(d["close_fraction"]),
                  synergy=str(d["synergy"]),
                  aperture=float(d["aperture"]))


def _trajectory_to_dict(t: Trajectory) -> dict:
    return {"states": [[float(v) for v in row] for row in t.states],
            "close_step": int(t.gripper.close_step),
            "synergy": t.gripper.synergy,
            "aperture": float(t.gripper.aperture)}


def _trajectory_from_dict(d: dict, what: str) -> Trajectory:
    rows = d["states"]
    if not isinstance(rows, list) or len(rows) < 2:
        raise FileFormatError(f"{what}: trajectory needs >= 2 states")
    return Trajectory(
        states=np.array([_floats(row, 6, what) for row in rows]),
        gripper=GripperCommand(close_step=int(d["close_step"]),
                               synergy=str(d["synergy"]),
                               aperture=float(d["aperture"])))


def _quality_to_dict(q: QualityVector) -> dict:
    out = q.as_dict()
    out["nominal_failure"] = bool(q.nominal_failure)
    return out


def _quality_from_dict(d: dict) -> QualityVector:
    kwargs = {name: float(d[name]) for name in QualityVector.METRICS}
    kwargs["nominal_failure"] = bool(d["nominal_failure"])
    return QualityVector(**kwargs)


def _elite_record(cell: tuple[int, int, int], elite: Elite) -> dict:
    return {
        "cell": list(cell),
        "eval_index": int(elite.eval_index),
        "fitness": float(elite.fitness),
        "descriptor": [float(v) for v in elite.descriptor],
        "genome": _genome_to_dict(elite.genome),
        "trajectory": _trajectory_to_dict(elite.trajectory),
        "quality": _quality_to_dict(elite.quality),
        "outcome": {"success": not elite.quality.nominal_failure},
    }


def _elite_from_record(rec: dict, what: str) -> tuple[tuple[int, ...], Elite]:
    try:
        cell = tuple(int(v) for v in rec["cell"])
        if len(cell) != 3:
            raise FileFormatError(f"{what}: cell must have three indices")
        elite = Elite(
            genome=_genome_from_dict(rec["genome"], what),
            trajectory=_trajectory_from_dict(rec["trajectory"], what),
            descriptor=np.array(_floats(rec["descriptor"], 3, what)),
            quality=_quality_from_dict(rec["quality"]),
            fitness=float(rec["fitness"]),
            eval_index=int(rec["eval_index"]))
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, FileFormatError):
            raise
        raise FileFormatError(f"{what}: {exc!r}") from exc
    return cell, elite


@dataclass
class LoadedRepertoire:
    archive: Archive
    header: dict
    config: RunConfig


def read_repertoire_header(path: str) -> dict:
    """Parse just the header of a repertoire file (no records)."""
    with open(path, "r", encoding="utf-8") as fh:
        first = fh.readline()
        second = fh.readline()
    header, _ = _parse_doc(first + second, "repertoire", origin=str(path))
    return header


def save_repertoire(result, path: str, robot: RobotModel, scene: SceneModel,
                    config: RunConfig | None = None,
                    extra_header: dict | None = None) -> None:
    """Write an archive (or a full run result) with model hashes and the
    effective configuration embedded."""
    if isinstance(result, MapElitesResult):
        archive = result.archive
        eval_count = result.evaluations
        if config is None:
            config = RunConfig(qd=result.config)
    else:
        archive = result
        eval_count = max((e.eval_index + 1 for e in archive.elites()),
                         default=0)
        if config is None:
            config = RunConfig()
    target = scene.target
    header = {
        "format_version": FORMAT_VERSION,
        "euler_convention": EULER_CONVENTION,
        "robot_id": robot.name,
        "robot_hash": model_hash(robot),
        "object_id": target.id,
        "object_hash": model_hash(target),
        "object_sim_pose": _transform_to_list(scene.object_sim_pose),
        "grid_dims": list(archive.dims),
        "grid_lower": [float(v) for v in archive.lower],
        "grid_upper": [float(v) for v in archive.upper],
        "seed": config.qd.seed,
        "eval_count": eval_count,
        "config": _config_to_dict(config),
        "config_hash": config_hash(config),
    }
    if extra_header:
        header.update(extra_header)
    records = [_elite_record(cell, elite) for cell, elite in archive.items()]
    _write_doc(path, "repertoire", header, records)


def load_repertoire(path: str, robot: RobotModel | None = None,
                    scene: SceneModel | None = None) -> LoadedRepertoire:
    """Read a repertoire; when models are supplied their content hashes
    must match the ones recorded at save time."""
    origin = str(path)
    header, records = _read_doc(path, "repertoire")
    if header.get("format_version") != FORMAT_VERSION:
        raise FileFormatError(f"{origin}: unsupported format_version "
                              f"{header.get('format_version')!r}")
    if robot is not None and model_hash(robot) != header.get("robot_hash"):
        raise FileFormatError(
            f"{origin}: robot hash mismatch: file was generated against "
            f"robot {header.get('robot_id')!r}, not the supplied model")
    if scene is not None:
        if model_hash(scene.target) != header.get("object_hash"):
            raise FileFormatError(
                f"{origin}: object hash mismatch: file was generated "
                f"against object {header.get('object_id')!r}, not the "
                f"supplied scene target")
    archive = Archive(
        lower=np.array(_floats(header["grid_lower"], 3, f"{origin}: header")),
        upper=np.array(_floats(header["grid_upper"], 3, f"{origin}: header")),
        dims=tuple(int(v) for v in header["grid_dims"]))
    for i, rec in enumerate(records):
        cell, elite = _elite_from_record(rec, f"{origin}: record {i}")
        expected = archive.cell_index(elite.descriptor)
        if cell != expected:
            raise FileFormatError(
                f"{origin}: record {i}: cell {cell} does not match the "
                f"descriptor's cell {expected}")
        archive._cells[cell] = elite
    return LoadedRepertoire(archive=archive, header=header,
                            config=_config_from_dict(header["config"]))


def write_report(path: str, header: dict, records: list[dict]) -> None:
    """Write a feasibility-filter report (adaptation audit trail)."""
    _write_doc(path, "filter_report", header, records)


def load_report(path: str) -> tuple[dict, list[dict]]:
    return _read_doc(path, "filter_report")


# -- bundled data ------------------------------------------------------------

def bundled_path(category: str, name: str):
    """Path-like handle to a packaged model file (robots/objects/scenes)."""
    if category not in ("robots", "objects", "scenes"):
        raise ValueError(f"unknown data category {category!r}")
    return resources.files("grasprep").joinpath("data", category,
                                                f"{name}.txt")


def _load_named(category: str, name: str, loader):
    source = bundled_path(category, name)
    if not source.is_file():
        raise FileNotFoundError(f"no bundled {category[:-1]} named {name!r}")
    with resources.as_file(source) as real:
        return loader(str(real))


def resolve_robot(spec: str) -> RobotModel:
    """Accept either a file path or a bundled robot name."""
    import os

    if os.path.exists(spec):
        return load_robot(spec)
    return _load_named("robots", spec, load_robot)


def resolve_scene(spec: str) -> SceneModel:
    import os

    if os.path.exists(spec):
        return load_scene(spec)
    return _load_named("scenes", spec, load_scene)
