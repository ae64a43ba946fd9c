"""End-to-end command-line pipeline: chaining, determinism, exit codes."""

import os

import numpy as np
import pytest

from grasprep import persistence as pz
from grasprep.cli import _parse_transform, _resolve_workers, main
from grasprep.se3 import euler_to_matrix


def _run(*argv) -> int:
    return main(list(argv))


def _generate(out, log=None, budget=192, seed=0, workers=1,
              figures=False) -> int:
    argv = ["generate", "--budget", str(budget), "--batch", "32",
            "--seed", str(seed), "--samples", "2", "--workers", str(workers),
            "--out", out]
    if log:
        argv += ["--log", log]
    if not figures:
        argv += ["--no-figures"]
    return main(argv)


def test_full_pipeline_chains(tmp_path):
    rep = str(tmp_path / "rep.txt")
    log = str(tmp_path / "gen.tsv")
    assert _generate(rep, log=log, figures=True) == 0
    assert os.path.exists(str(tmp_path / "gen_coverage.png"))

    loaded = pz.load_repertoire(rep)
    assert len(loaded.archive) > 0

    scores = str(tmp_path / "scores.tsv")
    assert _run("score", "--repertoire", rep, "--out", scores) == 0
    lines = open(scores).read().splitlines()
    assert lines[0] == "#grasprep/scores v1"
    assert lines[1].startswith("# config_hash=")
    assert len(lines) == 4 + len(loaded.archive)
    assert os.path.exists(str(tmp_path / "scores_scores.png"))

    best = str(tmp_path / "best.txt")
    assert _run("select", "--repertoire", rep, "--top-k", "5",
                "--out", best) == 0
    sub = pz.load_repertoire(best)
    assert 0 < len(sub.archive) <= 5

    adapted = str(tmp_path / "adapted.txt")
    report = str(tmp_path / "filter.txt")
    assert _run("adapt", "--repertoire", best,
                "--camera-object", "0.32,-0.01,0.02,0,0,0.2",
                "--out", adapted, "--report", report) == 0
    out = pz.load_repertoire(adapted)
    assert out.header["adaptation"]["accepted"] == len(out.archive)
    header, records = pz.load_report(report)
    assert len(records) == len(sub.archive)
    assert header["accepted"] + header["rejected"] == len(sub.archive)

    heat = str(tmp_path / "heat.csv")
    assert _run("grid-eval", "--repertoire", best,
                "--box", "0.2,-0.1,0.015,0.4,0.1,0.025", "--div", "2,2,1",
                "--orient-set", "identity", "--k", "3", "--seed", "0",
                "--out", heat) == 0
    rows = open(heat).read().splitlines()
    assert rows[0] == "x,y,z,orientation,feasible,position_total"
    assert len(rows) == 1 + 2 * 2
    assert os.path.exists(str(tmp_path / "heat_heatmap.png"))

    traces = str(tmp_path / "traces")
    assert _run("export", "--repertoire", best, "--out-dir", traces,
                "--limit", "2") == 0
    files = sorted(os.listdir(traces))
    assert len(files) == 2
    first = open(os.path.join(traces, files[0])).read().splitlines()
    assert first[0].startswith("step,q0")


def test_reruns_are_byte_identical(tmp_path):
    # same flags, different worker counts: every output byte matches,
    # figures included
    outputs = {}
    for tag, workers in (("a", 1), ("b", 3)):
        d = tmp_path / tag
        d.mkdir()
        rep = str(d / "rep.txt")
        assert _generate(rep, log=str(d / "gen.tsv"), workers=workers,
                         figures=True) == 0
        assert _run("score", "--repertoire", rep,
                    "--out", str(d / "scores.tsv")) == 0
        assert _run("grid-eval", "--repertoire", rep,
                    "--box", "0.25,-0.05,0.015,0.35,0.05,0.025",
                    "--div", "2,1,1", "--orient-set", "identity",
                    "--k", "2", "--workers", str(workers),
                    "--out", str(d / "heat.csv")) == 0
        outputs[tag] = {
            name: open(d / name, "rb").read()
            for name in ("rep.txt", "gen.tsv", "gen_coverage.png",
                         "scores.tsv", "scores_scores.png", "heat.csv",
                         "heat_heatmap.png")}
    for name, blob in outputs["a"].items():
        assert outputs["b"][name] == blob, f"{name} differs across runs"


def test_budget_zero_writes_empty_repertoire(tmp_path, capsys):
    rep = str(tmp_path / "rep.txt")
    assert _run("generate", "--budget", "0", "--out", rep,
                "--no-figures") == 0
    assert "warning" in capsys.readouterr().err
    loaded = pz.load_repertoire(rep)
    assert len(loaded.archive) == 0
    assert loaded.header["eval_count"] == 0


def test_usage_errors_exit_2(capsys):
    assert _run("generate", "--bogus-flag") == 2
    assert "usage" in capsys.readouterr().err
    assert _run() == 2
    assert _run("no-such-command") == 2


def test_domain_failures_exit_1(tmp_path, capsys):
    rep = str(tmp_path / "rep.txt")
    assert _run("generate", "--budget", "0", "--out", rep,
                "--no-figures") == 0
    capsys.readouterr()
    assert _run("score", "--repertoire", rep) == 1
    assert "empty repertoire" in capsys.readouterr().err
    assert _run("score", "--repertoire", str(tmp_path / "missing.txt")) == 1
    assert "error" in capsys.readouterr().err
    # malformed transform text is a domain failure, not a crash
    assert _run("adapt", "--repertoire", rep, "--camera-object", "1,2",
                "--out", str(tmp_path / "x.txt")) == 1
    assert "--camera-object" in capsys.readouterr().err


def test_score_to_stdout(tmp_path, capsys):
    rep = str(tmp_path / "rep.txt")
    assert _generate(rep) == 0
    capsys.readouterr()
    assert _run("score", "--repertoire", rep) == 0
    out = capsys.readouterr().out
    assert out.startswith("#grasprep/scores v1\n")
    assert "rank\t" in out


def test_adapt_identity_keeps_trajectories(tmp_path):
    rep = str(tmp_path / "rep.txt")
    assert _generate(rep) == 0
    loaded = pz.load_repertoire(rep)
    pose = loaded.header["object_sim_pose"]
    adapted = str(tmp_path / "same.txt")
    assert _run("adapt", "--repertoire", rep,
                "--camera-object", ",".join(repr(v) for v in pose),
                "--out", adapted) == 0
    out = pz.load_repertoire(adapted)
    assert len(out.archive) == len(loaded.archive)
    for (c1, e1), (c2, e2) in zip(loaded.archive.items(),
                                  out.archive.items()):
        assert c1 == c2
        assert np.allclose(e1.trajectory.states, e2.trajectory.states,
                           atol=1e-9)


def test_adapt_out_of_reach_rejects_everything(tmp_path, capsys):
    rep = str(tmp_path / "rep.txt")
    assert _generate(rep) == 0
    adapted = str(tmp_path / "far.txt")
    assert _run("adapt", "--repertoire", rep,
                "--camera-object", "4.0,0,0.02,0,0,0",
                "--out", adapted) == 0
    err = capsys.readouterr().err
    assert "0/" in err and "warning" in err
    assert len(pz.load_repertoire(adapted).archive) == 0


def test_transform_parsing_forms():
    six = _parse_transform("0.1,-0.2,0.3,0.0,0.5,1.0", "t")
    flat = six.to_flat()
    sixteen = _parse_transform(",".join(repr(v) for v in flat), "t")
    assert np.array_equal(six.rotation, sixteen.rotation)
    assert np.array_equal(six.translation, sixteen.translation)
    assert np.allclose(six.rotation, euler_to_matrix(0.0, 0.5, 1.0))
    with pytest.raises(ValueError):
        _parse_transform("1,2,3", "t")
    with pytest.raises(ValueError):
        _parse_transform("a,b,c,d,e,f", "t")


def test_worker_resolution(monkeypatch):
    assert _resolve_workers(7) == 7
    assert _resolve_workers(0) == 1
    monkeypatch.setenv("GRASPREP_WORKERS", "3")
    assert _resolve_workers(None) == 3
    monkeypatch.delenv("GRASPREP_WORKERS")
    assert _resolve_workers(None) == (os.cpu_count() or 1)
