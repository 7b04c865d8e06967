"""Implementations of the ``dpace`` subcommands."""

from __future__ import annotations

import sys
from pathlib import Path

import numpy as np

from . import io
from .config import ConfigError, PipelineConfig, load_config, load_scenario, with_seed
from .estimator import VaPlane, estimate_eliminate_array, geometry, plane_array, plane_axes, write_plane_csv
from .pipeline import (EvalReport, ScenarioResult, acceleration_errors, build_traces, distance_error, fall_labeler,
                       match_targets, score_detections, trace_features)
from .svm import DetectionReport, SvmError, detect, select_hyperparameters, train
from .synth import synthesize
from .trace import NumericalError, window_stack

EXIT_OK, EXIT_DATA, EXIT_NUMERIC = 0, 2, 3


class DataError(Exception):
    """Missing or inconsistent stage inputs."""


class Run:
    """A run directory plus the config that names its files."""

    def __init__(self, cfg: PipelineConfig, out):
        self.cfg = cfg
        self.dir = Path(out)

    def path(self, name: str, base=None) -> Path:
        p = Path(name)
        return p if p.is_absolute() else Path(base or self.dir) / p

    def file(self, key: str, base=None) -> Path:
        return self.path(getattr(self.cfg.io, key), base)

    def require(self, key: str, base=None) -> Path:
        p = self.file(key, base)
        if not p.exists():
            raise DataError(f"missing input {p} ({key})")
        return p

    @property
    def trace_id(self) -> str:
        return self.cfg.pipeline.trace_id or self.dir.resolve().name


def _stream(run: Run, base=None):
    stream = io.read_stream(run.require("stream", base))
    if len(stream) == 0:
        raise DataError("empty stream")
    return stream


def _truth(run: Run, stream, base=None):
    p = run.file("truth", base)
    return io.read_truth(p, stream.timestamps) if p.exists() else None


def _events(run: Run, base=None):
    p = run.file("events", base)
    return io.read_events(p) if p.exists() else None


# ---------------------------------------------------------------- stages

def cmd_synth(run: Run):
    cfg = run.cfg
    sc, events = load_scenario(cfg.scenario_path, cfg.radio, cfg.impairments, cfg.pipeline.seed)
    stream, truth = synthesize(sc)
    run.dir.mkdir(parents=True, exist_ok=True)
    io.write_stream(run.file("stream"), stream)
    io.write_truth(run.file("truth"), truth)
    io.write_events(run.file("events"), events)
    print(f"{len(stream)} packets written to {run.file('stream')}")


def cmd_estimate(run: Run):
    cfg = run.cfg
    tc = cfg.trace
    stream = _stream(run)
    rows = []
    for start in cfg.io.windows:
        J, freqs, dt = window_stack(stream, start, tc.W, tc.subcarriers, tc.antennas)
        geom = geometry(cfg.estimator, tc.W, dt)
        v_axis, a_axis = plane_axes(geom, cfg.estimator.f_ref_hz, cfg.estimator.c)
        plane = VaPlane(plane_array(J, geom, cfg.estimator).mean(axis=0), v_axis, a_axis)
        write_plane_csv(run.path(f"{cfg.io.plane_prefix}{start}.csv"), plane)
        res = estimate_eliminate_array(J, freqs, dt, cfg.estimator, tc.n_targets)
        center = float(stream.timestamps[start] + 0.5 * (tc.W - 1) * dt)
        rows += [(start, center, r, p) for r, p in enumerate(res.peaks)]
    io.write_peaks(run.file("peaks"), rows)
    print(f"{len(cfg.io.windows)} planes, {len(rows)} peaks")


def cmd_trace(run: Run):
    stream = _stream(run)
    traces = build_traces(stream, run.cfg.estimator, run.cfg.trace)
    io.write_traces(run.file("traces"), traces)
    print(f"{len(traces)} traces of {len(traces[0])} windows")


def _labelers(run: Run, traces):
    """Per-target segment labelers from the run's events and ground truth, if both exist."""
    events = _events(run)
    if events is None or not run.file("truth").exists() or not run.file("stream").exists():
        return {}
    truth = _truth(run, _stream(run))
    mapping = match_targets(traces, truth)
    labelers = {}
    for tr in traces:
        row = mapping.get(tr.target_id)
        labelers[tr.target_id] = fall_labeler([(a, b) for r, kind, a, b in events if r == row and kind == "fall"])
    return labelers


def cmd_features(run: Run):
    traces = io.read_traces(run.require("traces"))
    labelers = _labelers(run, traces)
    rows = []
    for tr in traces:
        rows += [(run.trace_id, f) for f in trace_features(tr, labelers.get(tr.target_id))]
    io.write_features(run.file("features"), rows, trace_id=None)
    print(f"{len(rows)} feature vectors")


def cmd_train(run: Run):
    cfg = run.cfg.classifier
    dirs = [run.path(d) for d in run.cfg.io.train_runs] or [run.dir]
    X, y, groups = [], [], []
    for d in dirs:
        for tid, f in io.read_features(run.require("features", d)):
            if f.label is None:
                raise DataError(f"{run.file('features', d)}: unlabelled feature row (column 'label')")
            X.append(f.as_array())
            y.append(f.label)
            groups.append(f"{d}/{tid}")
    if len(set(y)) < 2:
        raise DataError("training needs labelled segments of both classes")
    gamma, C = cfg.gamma, cfg.C
    if gamma is None or C is None:
        gammas = cfg.gamma_grid if gamma is None else (gamma,)
        Cs = cfg.C_grid if C is None else (C,)
        gamma, C, _ = select_hyperparameters(X, y, gammas, Cs, cfg.cv_folds, groups)
    model = train(X, y, gamma, C, cfg.tol)
    io.write_model(run.file("model"), model)
    print(f"gamma = {float(gamma)!r}, C = {float(C)!r}, {len(model.coef)} support vectors from {len(y)} segments")


def cmd_detect(run: Run):
    model = io.read_model(run.file("model"))
    rows = io.read_features(run.require("features"))
    by_trace = {}
    for tid, f in rows:
        by_trace.setdefault(tid, []).append(f)
    dets = []
    for tid, feats in by_trace.items():
        dets += detect(model, feats, tid).detections
    io.write_detections(run.file("detections"), DetectionReport(dets))
    print(f"{sum(d.label == 'fall' for d in dets)} fall detections in {len(dets)} segments")


def _evaluate_run(run: Run, base) -> ScenarioResult:
    cfg = run.cfg
    stream = _stream(run, base)
    truth = _truth(run, stream, base)
    events = _events(run, base)
    if truth is None or events is None:
        raise DataError(f"{base}: evaluation needs ground truth and events")
    traces = io.read_traces(run.require("traces", base))
    report = io.read_detections(run.require("detections", base))
    mapping = match_targets(traces, truth)
    falls = [(r, a, b) for r, kind, a, b in events if kind == "fall"]
    detected, false_alarm = score_detections(report.detections, falls, mapping)
    errs, dists = [], []
    for tr in traces:
        row = mapping.get(tr.target_id)
        if row is None:
            continue
        errs.append(acceleration_errors(tr, truth, cfg.trace.W, stream.radio.dt, row))
        try:
            dists.append(distance_error(tr, truth, row))
        except (ValueError, ZeroDivisionError, FloatingPointError):
            pass
    errs = np.concatenate(errs) if errs else np.zeros(0)
    dists = [d for d in dists if np.isfinite(d)]
    tid = cfg.pipeline.trace_id or Path(base).resolve().name
    return ScenarioResult(tid, bool(falls), detected, false_alarm,
                          float(np.median(errs)) if len(errs) else float("nan"),
                          float(np.median(dists)) if dists else float("nan"))


def cmd_eval(run: Run):
    dirs = [run.path(d) for d in run.cfg.io.eval_runs] or [run.dir]
    report = EvalReport([_evaluate_run(run, d) for d in dirs])
    run.dir.mkdir(parents=True, exist_ok=True)
    io.write_eval(run.file("eval"), report)
    io.write_eval_summary(run.file("summary"), report)
    sys.stdout.write(run.file("summary").read_text())


STAGES = {
    "synth": cmd_synth,
    "estimate": cmd_estimate,
    "trace": cmd_trace,
    "features": cmd_features,
    "train": cmd_train,
    "detect": cmd_detect,
    "eval": cmd_eval,
}


def run(command: str, config: str, seed=None, out=".") -> int:
    try:
        cfg = with_seed(load_config(config), seed)
        STAGES[command](Run(cfg, out))
    except (NumericalError, SvmError, FloatingPointError) as exc:
        print(f"dpace {command}: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ConfigError, io.FormatError, DataError, ValueError, OSError) as exc:
        print(f"dpace {command}: {exc}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK

