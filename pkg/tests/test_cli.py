import os
import subprocess
import sys

import numpy as np
import pytest

from dpace import io
from dpace.cli import _apply_thread_cap, main
from dpace.config import parse_config

CONFIG = """\
[radio]
n_subcarriers = 16

[trace]
subcarriers = 4, 12

[classifier]
cv_folds = 2
gamma = auto
C = 10

[io]
windows = 0, 300

[pipeline]
scenario = scenario.ini
seed = 5
"""

CONSTANT = "[scenario]\nduration_s = 2.0\n[target.1]\nactivity = constant\nv_mps = 1.0\na_mps2 = 1.5\n"
FALL = "[target.1]\nactivity = fall\nv_mps = 1.1\nn_steps = 4\nrest_s = 1.0\n"


def _setup(tmp_path, scenario=CONSTANT, extra=""):
    (tmp_path / "scenario.ini").write_text(scenario)
    cfg = tmp_path / "config.ini"
    cfg.write_text(CONFIG + extra)
    return str(cfg)


def _run(cmd, cfg, out, *more):
    return main([cmd, "--config", cfg, "--out", str(out), *more])


def test_synth_packet_count_and_determinism(tmp_path, capsys):
    cfg = _setup(tmp_path)
    assert _run("synth", cfg, tmp_path / "a") == 0
    assert "1200 packets" in capsys.readouterr().out
    assert _run("synth", cfg, tmp_path / "b") == 0
    for name in ("stream.dpac", "truth.csv", "events.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    assert len(io.read_stream(tmp_path / "a" / "stream.dpac")) == 1200
    # another seed changes the noise
    assert _run("synth", cfg, tmp_path / "c", "--seed", "6") == 0
    assert (tmp_path / "c" / "stream.dpac").read_bytes() != (tmp_path / "a" / "stream.dpac").read_bytes()


def test_malformed_scenario(tmp_path, capsys):
    cfg = _setup(tmp_path, "[target.1]\nactivity = hop\n")
    assert _run("synth", cfg, tmp_path / "r") == 2
    assert "unknown activity" in capsys.readouterr().err


def test_estimate_peaks_and_planes(tmp_path):
    cfg = _setup(tmp_path)
    run = tmp_path / "r"
    assert _run("synth", cfg, run) == 0
    assert _run("estimate", cfg, run) == 0
    peaks = io.read_peaks(run / "peaks.csv")
    assert [p[0] for p in peaks] == [0, 300]
    t_mid = 119 / 2 / 600
    for w, t, rank, v, a, mag in peaks:
        # truth: v = 1 + 1.5 t, a = 1.5
        assert t == pytest.approx(w / 600 + t_mid)
        assert abs(a - 1.5) <= 0.646 and abs(v - (1.0 + 1.5 * t)) <= 0.0646
    from dpace.estimator import read_plane_csv
    plane = read_plane_csv(run / "plane_300.csv")
    assert np.all(np.diff(plane.v_axis) > 0) and np.all(np.diff(plane.a_axis) > 0)


def test_truncated_and_empty_stream(tmp_path, capsys):
    cfg = _setup(tmp_path)
    run = tmp_path / "r"
    assert _run("synth", cfg, run) == 0
    data = (run / "stream.dpac").read_bytes()
    (run / "stream.dpac").write_bytes(data[:-10])
    assert _run("estimate", cfg, run) == 2
    assert "byte offset" in capsys.readouterr().err
    (run / "stream.dpac").write_bytes(data[:io._HEADER.size])
    assert _run("estimate", cfg, run) == 2
    assert "empty stream" in capsys.readouterr().err


def test_missing_inputs(tmp_path, capsys):
    cfg = _setup(tmp_path)
    assert _run("trace", cfg, tmp_path / "nothing") == 2
    assert "missing input" in capsys.readouterr().err


def test_usage_errors(tmp_path, capsys):
    assert main(["fly", "--config", "x"]) == 1
    assert main(["synth"]) == 1
    assert main(["synth", "--config", "x", "--seed", "one"]) == 1
    assert "usage error" in capsys.readouterr().err
    assert main(["synth", "--config", str(tmp_path / "missing.ini")]) == 2


def test_thread_cap():
    env = {"DPACE_THREADS": "3"}
    assert _apply_thread_cap(env) == 3
    assert env["OMP_NUM_THREADS"] == env["OPENBLAS_NUM_THREADS"] == env["MKL_NUM_THREADS"] == "3"
    assert _apply_thread_cap({}) is None
    for bad in ("0", "-2", "four"):
        with pytest.raises(Exception, match="positive integer"):
            _apply_thread_cap({"DPACE_THREADS": bad})


def test_thread_cap_subprocess(tmp_path):
    env = dict(os.environ, DPACE_THREADS="zero")
    out = subprocess.run([sys.executable, "-m", "dpace.cli", "synth", "--config", "x"], env=env,
                         capture_output=True, text=True)
    assert out.returncode == 1 and "DPACE_THREADS" in out.stderr
    cfg = _setup(tmp_path)
    env["DPACE_THREADS"] = "1"
    out = subprocess.run([sys.executable, "-m", "dpace.cli", "synth", "--config", cfg, "--out", str(tmp_path / "r")],
                         env=env, capture_output=True, text=True)
    assert out.returncode == 0, out.stderr


def test_detect_without_model(tmp_path, capsys):
    cfg = _setup(tmp_path)
    run = tmp_path / "r"
    io.write_features(run.mkdir() or run / "features.csv", [], trace_id="")
    assert _run("detect", cfg, run) == 2
    assert "model file" in capsys.readouterr().err


@pytest.mark.slow
def test_full_pipeline(tmp_path, capsys):
    cfg = _setup(tmp_path, FALL)
    run = tmp_path / "fall"
    for cmd in ("synth", "trace", "features", "train", "detect", "eval"):
        assert _run(cmd, cfg, run) == 0, capsys.readouterr().err
    summary = (run / "summary.txt").read_text()
    values = dict(ln.split(" = ") for ln in summary.splitlines())
    for key in ("tpr", "accel_median_error", "distance_median_error"):
        assert values[key] not in ("n/a", "nan")
    # a lone fall trace has no negatives to raise false alarms on
    assert values["fpr"] == "n/a" and values["n_nonfall_traces"] == "0"
    feats = io.read_features(run / "features.csv")
    assert sum(f.label == 1 for _, f in feats) == 1
    # every stage is rerunnable with identical output
    before = {p.name: p.read_bytes() for p in run.iterdir()}
    for cmd in ("trace", "features", "train", "detect", "eval"):
        assert _run(cmd, cfg, run) == 0
    assert {p.name: p.read_bytes() for p in run.iterdir()} == before


def test_eval_without_falls_reports_na(tmp_path, capsys):
    cfg = _setup(tmp_path, extra="\n[impairments]\nsnr_db = auto\n")
    run = tmp_path / "walk"
    assert _run("synth", cfg, run) == 0
    assert _run("trace", cfg, run) == 0
    traces = io.read_traces(run / "traces.csv")
    io.write_detections(run / "detections.csv", io.DetectionReport([]))
    assert _run("eval", cfg, run) == 0
    out = capsys.readouterr().out
    assert "tpr = n/a" in out and "fpr = 0.0" in out
    assert len(traces) == 1


def test_config_sample_parses():
    cfg = parse_config(CONFIG)
    assert cfg.trace.subcarriers == (4, 12) and cfg.io.windows == (0, 300)
