"""Command-line pipeline: generate, score, select, adapt, grid-eval, export.

Every subcommand is non-interactive and deterministic: given identical
inputs and flags it rewrites byte-identical output files. Diagnostics and
progress go to stderr; data goes to files or stdout. Exit codes: 0 on
success, 1 on a domain failure (bad file, empty repertoire, unresolvable
model), 2 on a usage error.
"""

from __future__ import annotations

import argparse
import dataclasses
import os
import sys

import numpy as np

from . import persistence as pz
from .adaptation import (
    FILTER_CAUSES,
    AdaptationFrames,
    adapt_trajectory,
    filter_trajectory,
    select_grasps,
)
from .kinematics import DEFAULT_MAX_JOINT_JUMP
from .persistence import FileFormatError, RunConfig
from .qd import Archive, MapElitesConfig, run_map_elites
from .quality import (
    DEFAULT_SIGMA_JOINT,
    DEFAULT_SIGMA_POS,
    DEFAULT_SIGMA_ROT,
    DEFAULT_WEIGHTS,
    JointNoise,
    NoiseSpec,
    ObjectPoseNoise,
    QualityVector,
    rank_repertoire,
)
from .rollout import export_trace, rollout
from .se3 import RigidTransform, euler_to_matrix
from .workspace import GridSpec, default_orientations, evaluate_grid, export_heatmap

__all__ = ["main"]

PROGRESS_EVERY = 512


def _resolve_workers(value: int | None) -> int:
    """Flag wins, then the environment, then the logical core count."""
    if value is not None:
        return max(1, value)
    env = os.environ.get("GRASPREP_WORKERS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def _parse_floats(text: str, counts: tuple[int, ...], what: str) -> list[float]:
    try:
        values = [float(v) for v in text.split(",")]
    except ValueError:
        raise ValueError(f"{what}: expected comma-separated numbers, "
                         f"got {text!r}")
    if len(values) not in counts:
        raise ValueError(f"{what}: expected {' or '.join(map(str, counts))} "
                         f"numbers, got {len(values)}")
    return values


def _parse_transform(text: str, what: str) -> RigidTransform:
    """Either 16 row-major homogeneous entries or x,y,z,roll,pitch,yaw."""
    values = _parse_floats(text, (16, 6), what)
    if len(values) == 16:
        return RigidTransform.from_flat(values)
    x, y, z, roll, pitch, yaw = values
    return RigidTransform(euler_to_matrix(roll, pitch, yaw),
                          np.array([x, y, z]))


def _parse_ints(text: str, n: int, what: str) -> tuple[int, ...]:
    parts = text.split(",")
    if len(parts) != n:
        raise ValueError(f"{what}: expected {n} comma-separated integers")
    return tuple(int(p) for p in parts)


def _parse_weights(text: str) -> dict[str, float]:
    weights = {}
    for part in text.split(","):
        name, _, value = part.partition("=")
        if not value:
            raise ValueError(f"weights: expected name=value, got {part!r}")
        weights[name.strip()] = float(value)
    return weights


def _load_for(args) -> tuple:
    """Resolve models (flags first, then the file's own robot id) and load
    the repertoire with hash validation."""
    header = pz.read_repertoire_header(args.repertoire)
    robot = pz.resolve_robot(args.robot or header["robot_id"])
    scene = pz.resolve_scene(args.scene)
    loaded = pz.load_repertoire(args.repertoire, robot=robot, scene=scene)
    return robot, scene, loaded


def _effective_noise(args, base: NoiseSpec) -> NoiseSpec:
    samples = base.samples if args.samples is None else args.samples
    seed = base.seed if args.noise_seed is None else args.noise_seed
    return dataclasses.replace(base, samples=samples, seed=seed)


def _figure_path(out: str, suffix: str) -> str:
    return os.path.splitext(out)[0] + suffix


def _info(message: str) -> None:
    print(message, file=sys.stderr)


# -- subcommands ---------------------------------------------------------


def cmd_generate(args) -> int:
    robot = pz.resolve_robot(args.robot)
    scene = pz.resolve_scene(args.scene)
    noise = NoiseSpec(
        object_pose=ObjectPoseNoise(args.sigma_pos, args.sigma_rot),
        joints=JointNoise(args.sigma_joint),
        samples=args.samples, seed=args.noise_seed)
    config = MapElitesConfig(
        budget=args.budget, batch_size=args.batch,
        grid_dims=_parse_ints(args.grid, 3, "--grid"),
        seed=args.seed, n_steps=args.steps, n_waypoints=args.waypoints,
        noise=noise, success_gate=not args.no_gate,
        workers=_resolve_workers(args.workers))
    run_config = RunConfig(qd=config, max_step=args.max_step)

    last_printed = [0]

    def progress(stats) -> None:
        if stats.evaluations - last_printed[0] >= args.progress_every:
            last_printed[0] = stats.evaluations
            _info(f"evals={stats.evaluations} coverage={stats.coverage:.3f} "
                  f"best={stats.best_fitness:.3f} "
                  f"successes={stats.successes}")

    result = run_map_elites(robot, scene, config, on_generation=progress)
    if args.budget == 0:
        _info("warning: budget is 0; writing an empty repertoire")
    elif result.diagnostic:
        _info(f"warning: {result.diagnostic}")
    pz.save_repertoire(result, args.out, robot, scene, config=run_config)
    _info(f"wrote {args.out}: {len(result.archive)} elites from "
          f"{result.evaluations} evaluations "
          f"(config_hash={pz.config_hash(run_config)[:12]})")
    if args.log:
        result.write_log(args.log,
                         comment=f"config_hash={pz.config_hash(run_config)}")
        if not args.no_figures and result.generations:
            from . import reporting

            figure = _figure_path(args.log, "_coverage.png")
            reporting.save_coverage_figure(result.generations, figure)
            _info(f"wrote {figure}")
    return 0


def _rank(args, loaded, robot, scene):
    if len(loaded.archive) == 0:
        raise ValueError("empty repertoire: nothing to score")
    noise = _effective_noise(args, loaded.config.qd.noise)
    weights = _parse_weights(args.weights) if args.weights else None
    scored = rank_repertoire(loaded.archive, robot, scene, noise,
                             weights=weights,
                             params=loaded.config.qd.rollout)
    effective = dataclasses.replace(
        loaded.config, qd=dataclasses.replace(loaded.config.qd, noise=noise))
    return scored, weights, effective


def cmd_score(args) -> int:
    robot, scene, loaded = _load_for(args)
    scored, weights, effective = _rank(args, loaded, robot, scene)
    used = weights if weights is not None else dict(DEFAULT_WEIGHTS)
    lines = [f"#grasprep/scores v{pz.FORMAT_VERSION}",
             f"# config_hash={pz.config_hash(effective)}",
             "# weights=" + ",".join(f"{k}={v!r}"
                                     for k, v in sorted(used.items()))]
    cols = (["rank", "cell_x", "cell_y", "cell_z", "eval_index", "fitness"]
            + list(QualityVector.METRICS)
            + ["nominal_failure", "desc_x", "desc_y", "desc_z"])
    lines.append("\t".join(cols))
    for rank, s in enumerate(scored, start=1):
        row = ([str(rank), *[str(c) for c in s.cell],
                str(s.elite.eval_index), repr(s.fitness)]
               + [repr(float(getattr(s.quality, m)))
                  for m in QualityVector.METRICS]
               + [str(int(s.quality.nominal_failure))]
               + [repr(float(v)) for v in s.elite.descriptor])
        lines.append("\t".join(row))
    text = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        _info(f"wrote {args.out}: {len(scored)} elites ranked")
        if not args.no_figures:
            from . import reporting

            figure = _figure_path(args.out, "_scores.png")
            reporting.save_score_figure(scored, figure)
            _info(f"wrote {figure}")
    else:
        sys.stdout.write(text)
    return 0


def cmd_select(args) -> int:
    robot, scene, loaded = _load_for(args)
    scored, weights, effective = _rank(args, loaded, robot, scene)
    region = None
    if args.region:
        values = _parse_floats(args.region, (6,), "--region")
        region = (np.array(values[:3]), np.array(values[3:]))
    picked = select_grasps(scored, top_k=args.top_k,
                           descriptor_region=region,
                           min_robustness=args.min_robustness)
    sub = Archive(lower=loaded.archive.lower, upper=loaded.archive.upper,
                  dims=loaded.archive.dims)
    for s in picked:
        sub.offer(dataclasses.replace(s.elite, quality=s.quality,
                                      fitness=s.fitness))
    pz.save_repertoire(sub, args.out, robot, scene, config=effective)
    _info(f"wrote {args.out}: kept {len(picked)} of {len(scored)} elites")
    if not picked:
        _info("warning: selection is empty")
    return 0


def cmd_adapt(args) -> int:
    robot, scene, loaded = _load_for(args)
    frames = AdaptationFrames(
        world_from_camera=(_parse_transform(args.world_camera,
                                            "--world-camera")
                           if args.world_camera
                           else RigidTransform.identity()),
        camera_from_object=_parse_transform(args.camera_object,
                                            "--camera-object"),
        world_from_object_sim=(_parse_transform(args.sim_pose, "--sim-pose")
                               if args.sim_pose
                               else scene.object_sim_pose))
    if len(loaded.archive) == 0:
        raise ValueError("empty repertoire: nothing to adapt")
    local = scene.with_target_pose(frames.world_from_object())
    max_step = args.max_step
    counts = {cause: 0 for cause in FILTER_CAUSES}
    accepted = Archive(lower=loaded.archive.lower,
                       upper=loaded.archive.upper,
                       dims=loaded.archive.dims)
    report_records = []
    for cell, elite in loaded.archive.items():
        adapted = adapt_trajectory(elite.trajectory, frames)
        report = filter_trajectory(adapted, robot, local, max_step=max_step)
        counts[report.cause] += 1
        report_records.append({"cell": list(cell),
                               "accepted": report.accepted,
                               "cause": report.cause,
                               "first_fail_step": report.first_fail_step})
        if report.accepted:
            accepted.offer(dataclasses.replace(elite, trajectory=adapted))
    n = len(loaded.archive)
    summary = {
        "accepted": len(accepted),
        "rejected": n - counts["none"],
        "causes": {c: counts[c] for c in FILTER_CAUSES if c != "none"},
        "frames": {
            "world_from_camera": frames.world_from_camera.to_flat(),
            "camera_from_object": frames.camera_from_object.to_flat(),
            "world_from_object_sim": frames.world_from_object_sim.to_flat(),
        },
        "max_step": max_step,
    }
    # the saved header's object_sim_pose is the pose the adapted
    # trajectories were filtered against
    view = dataclasses.replace(local, object_sim_pose=local.target.pose)
    pz.save_repertoire(accepted, args.out, robot, view,
                       config=dataclasses.replace(loaded.config,
                                                  max_step=max_step),
                       extra_header={"adaptation": summary})
    causes = ", ".join(f"{c}={counts[c]}" for c in FILTER_CAUSES if c != "none")
    _info(f"wrote {args.out}: {len(accepted)}/{n} trajectories adapted "
          f"({causes})")
    if len(accepted) == 0:
        _info("warning: no trajectory survived the feasibility filter")
    if args.report:
        pz.write_report(args.report, summary, report_records)
        _info(f"wrote {args.report}")
    return 0


_ORIENT_SETS = {
    "default": default_orientations,
    "identity": lambda: (np.eye(3),),
}


def cmd_grid_eval(args) -> int:
    robot, scene, loaded = _load_for(args)
    box = _parse_floats(args.box, (6,), "--box")
    if args.orient_set not in _ORIENT_SETS:
        raise ValueError(f"--orient-set: unknown set {args.orient_set!r} "
                         f"(choose from {sorted(_ORIENT_SETS)})")
    spec = GridSpec(box_min=np.array(box[:3]), box_max=np.array(box[3:]),
                    divisions=_parse_ints(args.div, 3, "--div"),
                    orientations=tuple(_ORIENT_SETS[args.orient_set]()),
                    trajectories_per_pose=args.k, seed=args.seed)
    result = evaluate_grid(loaded.archive, robot, scene, spec,
                           max_step=args.max_step,
                           workers=_resolve_workers(args.workers))
    export_heatmap(result, args.out)
    effective = dataclasses.replace(loaded.config, max_step=args.max_step)
    totals = result.totals()
    _info(f"wrote {args.out}: {totals['feasible']} feasible of "
          f"{totals['poses']} poses x {result.n_sampled} trajectories "
          f"(config_hash={pz.config_hash(effective)[:12]})")
    if not args.no_figures:
        from . import reporting

        figure = _figure_path(args.out, "_heatmap.png")
        reporting.save_heatmap_figure(
            result, figure,
            metadata={"Description":
                      f"config_hash={pz.config_hash(effective)}"})
        _info(f"wrote {figure}")
    return 0


def cmd_export(args) -> int:
    robot, scene, loaded = _load_for(args)
    if len(loaded.archive) == 0:
        raise ValueError("empty repertoire: nothing to export")
    os.makedirs(args.out_dir, exist_ok=True)
    items = loaded.archive.items()
    if args.limit is not None:
        items = items[:args.limit]
    for cell, elite in items:
        outcome = rollout(robot, scene, elite.trajectory,
                          params=loaded.config.qd.rollout)
        name = "trace_{}_{}_{}.csv".format(*cell)
        export_trace(robot, outcome, os.path.join(args.out_dir, name))
    _info(f"wrote {len(items)} trace files to {args.out_dir}")
    return 0


# -- parser ---------------------------------------------------------------


def _add_repertoire_flags(sub, scoring: bool) -> None:
    sub.add_argument("--repertoire", required=True,
                     help="repertoire file to read")
    sub.add_argument("--robot", default=None,
                     help="robot file or bundled name "
                          "(default: the repertoire's own robot id)")
    sub.add_argument("--scene", default="pinch_box",
                     help="scene file or bundled name")
    if scoring:
        sub.add_argument("--samples", type=int, default=None,
                         help="noise samples per elite "
                              "(default: from the stored run config)")
        sub.add_argument("--noise-seed", type=int, default=None,
                         help="noise seed (default: from the stored config)")
        sub.add_argument("--weights", default=None,
                         help="fitness weights, e.g. robustness=0.7,"
                              "robustness_noise_joint=0.3")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="grasprep",
        description="Grasp repertoire pipeline: generate diverse grasps in "
                    "simulation, score and select them, adapt them to "
                    "observed object poses, and map workspace feasibility.")
    commands = parser.add_subparsers(dest="command", required=True)

    gen = commands.add_parser("generate",
                              help="run the archive search and save a "
                                   "repertoire")
    gen.add_argument("--robot", default="desk4")
    gen.add_argument("--scene", default="pinch_box")
    gen.add_argument("--budget", type=int, default=2000,
                     help="total rollout evaluations")
    gen.add_argument("--batch", type=int, default=32)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--grid", default="10,10,10",
                     help="archive divisions nx,ny,nz")
    gen.add_argument("--steps", type=int, default=12,
                     help="trajectory length")
    gen.add_argument("--waypoints", type=int, default=4)
    gen.add_argument("--samples", type=int, default=8,
                     help="noise samples per evaluation")
    gen.add_argument("--noise-seed", type=int, default=0)
    gen.add_argument("--sigma-pos", type=float, default=DEFAULT_SIGMA_POS)
    gen.add_argument("--sigma-rot", type=float, default=DEFAULT_SIGMA_ROT)
    gen.add_argument("--sigma-joint", type=float, default=DEFAULT_SIGMA_JOINT)
    gen.add_argument("--no-gate", action="store_true",
                     help="archive contacting failures too")
    gen.add_argument("--max-step", type=float, default=DEFAULT_MAX_JOINT_JUMP,
                     help="recorded deployment joint-jump limit")
    gen.add_argument("--workers", type=int, default=None,
                     help="worker threads (default: GRASPREP_WORKERS or "
                          "core count)")
    gen.add_argument("--progress-every", type=int, default=PROGRESS_EVERY,
                     help="progress line interval in evaluations")
    gen.add_argument("--out", required=True, help="repertoire output path")
    gen.add_argument("--log", default=None,
                     help="per-generation TSV log path")
    gen.add_argument("--no-figures", action="store_true")
    gen.set_defaults(func=cmd_generate)

    score = commands.add_parser("score",
                                help="re-rank a repertoire under noise")
    _add_repertoire_flags(score, scoring=True)
    score.add_argument("--out", default=None,
                       help="table output path (default: stdout)")
    score.add_argument("--no-figures", action="store_true")
    score.set_defaults(func=cmd_score)

    sel = commands.add_parser("select",
                              help="keep the elites matching a deployment "
                                   "scenario")
    _add_repertoire_flags(sel, scoring=True)
    sel.add_argument("--top-k", type=int, default=None)
    sel.add_argument("--region", default=None,
                     help="descriptor box lo_x,lo_y,lo_z,hi_x,hi_y,hi_z")
    sel.add_argument("--min-robustness", type=float, default=None)
    sel.add_argument("--out", required=True,
                     help="sub-repertoire output path")
    sel.set_defaults(func=cmd_select)

    adapt = commands.add_parser("adapt",
                                help="retarget a repertoire to an observed "
                                     "object pose and filter for "
                                     "feasibility")
    _add_repertoire_flags(adapt, scoring=False)
    adapt.add_argument("--camera-object", required=True,
                       help="camera_from_object transform: 16 row-major "
                            "entries or x,y,z,roll,pitch,yaw")
    adapt.add_argument("--world-camera", default=None,
                       help="world_from_camera transform (default identity)")
    adapt.add_argument("--sim-pose", default=None,
                       help="world_from_object_sim transform "
                            "(default: the scene's object pose)")
    adapt.add_argument("--max-step", type=float,
                       default=DEFAULT_MAX_JOINT_JUMP)
    adapt.add_argument("--out", required=True,
                       help="adapted repertoire output path")
    adapt.add_argument("--report", default=None,
                       help="optional per-elite filter report path")
    adapt.set_defaults(func=cmd_adapt)

    grid = commands.add_parser("grid-eval",
                               help="map adapted-grasp feasibility over a "
                                    "pose grid")
    _add_repertoire_flags(grid, scoring=False)
    grid.add_argument("--box", required=True,
                      help="grid box lo_x,lo_y,lo_z,hi_x,hi_y,hi_z")
    grid.add_argument("--div", required=True, help="divisions nx,ny,nz")
    grid.add_argument("--orient-set", default="default",
                      choices=sorted(_ORIENT_SETS),
                      help="orientation set applied at every position")
    grid.add_argument("--k", type=int, default=5,
                      help="trajectories sampled per pose")
    grid.add_argument("--seed", type=int, default=0)
    grid.add_argument("--max-step", type=float,
                      default=DEFAULT_MAX_JOINT_JUMP)
    grid.add_argument("--workers", type=int, default=None)
    grid.add_argument("--out", required=True, help="heatmap CSV path")
    grid.add_argument("--no-figures", action="store_true")
    grid.set_defaults(func=cmd_grid_eval)

    exp = commands.add_parser("export",
                              help="export per-step rollout traces")
    _add_repertoire_flags(exp, scoring=False)
    exp.add_argument("--out-dir", required=True)
    exp.add_argument("--limit", type=int, default=None,
                     help="export at most this many elites")
    exp.set_defaults(func=cmd_export)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (FileFormatError, FileNotFoundError, OSError, ValueError,
            TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
