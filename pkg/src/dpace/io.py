"""
File formats.

* CSI streams: little-endian binary, magic ``DPAC``.
* Ground truth, fall events, traces, features, detections, evaluation
  results: CSV with a header row, ``,`` separators, LF line endings and
  ``repr`` floats so every value round-trips exactly.
* Classifier model: ``key = value`` header lines followed by one CSV row per
  support vector.
"""

from __future__ import annotations

import csv
import math
import struct
from pathlib import Path

import numpy as np

from .features import FEATURE_NAMES, FeatureVector
from .svm import ClassifierModel, Detection, DetectionReport
from .synth import CsiStream, GroundTruth, RadioConfig
from .trace import AccelTrace

MAGIC = b"DPAC"
VERSION = 1
_HEADER = struct.Struct("<4sIIIddd")


class FormatError(ValueError):
    """A file does not follow its declared format."""


# ---------------------------------------------------------------- CSI stream

def write_stream(path, stream: CsiStream):
    r = stream.radio
    M, K = r.n_antennas, r.n_subcarriers
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, M, K, r.packet_rate_hz, r.carrier_hz, r.bandwidth_hz))
        body = np.empty((len(stream), 1 + 2 * M * K), dtype="<f8")
        body[:, 0] = stream.timestamps
        body[:, 1::2] = stream.h.reshape(len(stream), -1).real
        body[:, 2::2] = stream.h.reshape(len(stream), -1).imag
        fh.write(body.tobytes())


def read_stream(path) -> CsiStream:
    data = Path(path).read_bytes()
    if len(data) < _HEADER.size:
        raise FormatError(f"truncated stream header at byte offset {len(data)}")
    magic, version, M, K, rate, carrier, bw = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise FormatError("bad magic (not a DPAC stream)")
    if version != VERSION:
        raise FormatError(f"unsupported stream version {version}")
    try:
        radio = RadioConfig(carrier_hz=carrier, bandwidth_hz=bw, n_subcarriers=K, n_antennas=M, packet_rate_hz=rate)
    except ValueError as exc:
        raise FormatError(f"invalid stream header: {exc}") from None
    rec = 8 * (1 + 2 * M * K)
    payload = len(data) - _HEADER.size
    n, rem = divmod(payload, rec)
    if rem:
        raise FormatError(f"truncated stream at byte offset {_HEADER.size + n * rec} (packet {n} incomplete)")
    body = np.frombuffer(data, dtype="<f8", offset=_HEADER.size).reshape(n, 1 + 2 * M * K)
    h = (body[:, 1::2] + 1j * body[:, 2::2]).reshape(n, M, K)
    try:
        return CsiStream(radio, body[:, 0].copy(), h)
    except ValueError as exc:
        raise FormatError(str(exc)) from None


# ---------------------------------------------------------------- CSV helpers

def _f(x) -> str:
    return repr(float(x))


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _read_csv(path, header):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            got = next(reader)
        except StopIteration:
            raise FormatError(f"{path}: empty file") from None
        for col in header:
            if col not in got:
                raise FormatError(f"{path}: missing column '{col}'")
        for col in got:
            if col not in header:
                raise FormatError(f"{path}: unexpected column '{col}'")
        idx = [got.index(c) for c in header]
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(got):
                raise FormatError(f"{path}: line {lineno} has {len(row)} fields, expected {len(got)}")
            rows.append([row[i] for i in idx])
    return rows


def _parse(path, col, value, kind=float):
    try:
        return kind(value)
    except ValueError:
        raise FormatError(f"{path}: bad value {value!r} in column '{col}'") from None


# ---------------------------------------------------------------- ground truth and events

TRUTH_COLUMNS = ("packet_index", "path_id", "dplc_m", "v_mps", "a_mps2")


def write_truth(path, truth: GroundTruth):
    rows = []
    for r, pid in enumerate(truth.path_ids):
        for n in range(truth.dplc.shape[1]):
            rows.append((n, pid, _f(truth.dplc[r, n]), _f(truth.velocity[r, n]), _f(truth.acceleration[r, n])))
    _write_csv(path, TRUTH_COLUMNS, rows)


def read_truth(path, timestamps) -> GroundTruth:
    rows = _read_csv(path, TRUTH_COLUMNS)
    timestamps = np.asarray(timestamps, dtype=float)
    n = len(timestamps)
    ids = []
    for row in rows:
        pid = _parse(path, "path_id", row[1], int)
        if pid not in ids:
            ids.append(pid)
    arr = np.full((3, len(ids), n), np.nan)
    for row in rows:
        k = _parse(path, "packet_index", row[0], int)
        if not 0 <= k < n:
            raise FormatError(f"{path}: packet_index {k} outside the stream")
        r = ids.index(int(row[1]))
        for j, col in enumerate(TRUTH_COLUMNS[2:]):
            arr[j, r, k] = _parse(path, col, row[2 + j])
    if np.isnan(arr).any():
        raise FormatError(f"{path}: ground truth does not cover every packet")
    return GroundTruth(timestamps, ids, arr[0], arr[1], arr[2])


EVENT_COLUMNS = ("path_id", "kind", "t_start_s", "t_end_s")


def write_events(path, events):
    """``events``: iterable of (path_id, kind, t_start, t_end)."""
    _write_csv(path, EVENT_COLUMNS, [(int(p), k, _f(a), _f(b)) for p, k, a, b in events])


def read_events(path):
    return [(_parse(path, "path_id", r[0], int), r[1], _parse(path, "t_start_s", r[2]), _parse(path, "t_end_s", r[3]))
            for r in _read_csv(path, EVENT_COLUMNS)]


# ---------------------------------------------------------------- peaks

PEAK_COLUMNS = ("window_start", "time_s", "rank", "v_mps", "a_mps2", "magnitude")


def write_peaks(path, rows):
    """``rows``: (window_start, time_s, rank, VaPeak) tuples."""
    _write_csv(path, PEAK_COLUMNS, [(int(w), _f(t), int(r), _f(p.v_mps), _f(p.a_mps2), _f(p.magnitude))
                                    for w, t, r, p in rows])


def read_peaks(path):
    """(window_start, time_s, rank, v_mps, a_mps2, magnitude) tuples."""
    kinds = (int, float, int, float, float, float)
    return [tuple(_parse(path, c, x, k) for c, x, k in zip(PEAK_COLUMNS, r, kinds))
            for r in _read_csv(path, PEAK_COLUMNS)]


# ---------------------------------------------------------------- traces

TRACE_COLUMNS = ("time_s", "a_raw", "a_smooth", "target_id", "is_peak", "v_raw", "detected")


def write_traces(path, traces):
    rows = []
    for tr in traces:
        peak = np.zeros(len(tr), dtype=int)
        peak[tr.peaks] = 1
        for i in range(len(tr)):
            rows.append((_f(tr.times_s[i]), _f(tr.a_raw[i]), _f(tr.a_smooth[i]), int(tr.target_id), int(peak[i]),
                         _f(tr.v_raw[i]), int(tr.detected[i])))
    _write_csv(path, TRACE_COLUMNS, rows)


def read_traces(path) -> list:
    rows = _read_csv(path, TRACE_COLUMNS)
    by_target = {}
    for row in rows:
        tid = _parse(path, "target_id", row[3], int)
        by_target.setdefault(tid, []).append(row)
    out = []
    for tid, rs in by_target.items():
        cols = list(zip(*rs))
        vals = {c: np.array([_parse(path, c, x) for x in cols[i]]) for i, c in enumerate(TRACE_COLUMNS)}
        out.append(AccelTrace(vals["time_s"], vals["a_raw"], vals["a_smooth"], tid, vals["v_raw"],
                              vals["detected"].astype(bool), np.flatnonzero(vals["is_peak"])))
    return out


# ---------------------------------------------------------------- features

FEATURE_COLUMNS = (("trace_id", "target_id", "start", "end", "t_start_s", "t_end_s")
                   + FEATURE_NAMES + tuple("flag_" + n for n in FEATURE_NAMES) + ("label",))


def write_features(path, features, trace_id: str = ""):
    """Features of one trace, or (trace_id, FeatureVector) pairs when ``trace_id`` is None."""
    rows = []
    for item in features:
        tid, f = item if trace_id is None else (trace_id, item)
        rows.append([tid, f.target_id, f.start, f.end, _f(f.t_start), _f(f.t_end)]
                    + [_f(v) for v in f.values] + [int(b) for b in f.flags]
                    + ["" if f.label is None else int(f.label)])
    _write_csv(path, FEATURE_COLUMNS, rows)


def read_features(path) -> list:
    """Returns (trace_id, FeatureVector) pairs."""
    out = []
    nf = len(FEATURE_NAMES)
    for row in _read_csv(path, FEATURE_COLUMNS):
        vals = [_parse(path, FEATURE_COLUMNS[6 + i], row[6 + i]) for i in range(nf)]
        flags = [_parse(path, FEATURE_COLUMNS[6 + nf + i], row[6 + nf + i], int) for i in range(nf)]
        label = None if row[-1] == "" else _parse(path, "label", row[-1], int)
        f = FeatureVector(np.array(vals), np.array(flags, dtype=bool), _parse(path, "start", row[2], int),
                          _parse(path, "end", row[3], int), _parse(path, "t_start_s", row[4]),
                          _parse(path, "t_end_s", row[5]), _parse(path, "target_id", row[1], int), label)
        out.append((row[0], f))
    return out


# ---------------------------------------------------------------- detections

DETECTION_COLUMNS = ("trace_id", "target_id", "t_start_s", "t_end_s", "decision", "label")


def write_detections(path, report: DetectionReport):
    _write_csv(path, DETECTION_COLUMNS, [(d.trace_id, d.target_id, _f(d.t_start), _f(d.t_end), _f(d.decision), d.label)
                                         for d in report])


def read_detections(path) -> DetectionReport:
    dets = []
    for r in _read_csv(path, DETECTION_COLUMNS):
        if r[5] not in ("fall", "no-fall"):
            raise FormatError(f"{path}: bad value {r[5]!r} in column 'label'")
        dets.append(Detection(r[5], _parse(path, "decision", r[4]), _parse(path, "t_start_s", r[2]),
                              _parse(path, "t_end_s", r[3]), _parse(path, "target_id", r[1], int), r[0]))
    return DetectionReport(dets)


# ---------------------------------------------------------------- model

def _vec(x) -> str:
    return ",".join(_f(v) for v in x)


def write_model(path, model: ClassifierModel):
    lines = [
        "# dpace rbf svm model",
        f"gamma = {_f(model.gamma)}",
        f"C = {_f(model.C)}",
        f"bias = {_f(model.bias)}",
        f"n_features = {model.n_features}",
        f"mean = {_vec(model.mean)}",
        f"scale = {_vec(model.scale)}",
        f"n_support = {len(model.coef)}",
        "coef," + ",".join(f"x{i}" for i in range(model.n_features)),
    ]
    for c, sv in zip(model.coef, model.support_vectors):
        lines.append(_f(c) + "," + _vec(sv))
    Path(path).write_text("\n".join(lines) + "\n")


def read_model(path) -> ClassifierModel:
    try:
        lines = Path(path).read_text().splitlines()
    except FileNotFoundError:
        raise FormatError(f"model file {path} not found") from None
    head = {}
    i = 0
    while i < len(lines) and not lines[i].startswith("coef"):
        line = lines[i].strip()
        i += 1
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise FormatError(f"{path}: bad header line {line!r}")
        k, v = (s.strip() for s in line.split("=", 1))
        head[k] = v
    for k in ("gamma", "C", "bias", "n_features", "mean", "scale", "n_support"):
        if k not in head:
            raise FormatError(f"{path}: missing header '{k}'")
    d = int(head["n_features"])
    mean = np.array([float(x) for x in head["mean"].split(",")])
    scale = np.array([float(x) for x in head["scale"].split(",")])
    rows = [[float(x) for x in ln.split(",")] for ln in lines[i + 1:] if ln.strip()]
    if len(rows) != int(head["n_support"]) or any(len(r) != d + 1 for r in rows):
        raise FormatError(f"{path}: support vector block does not match the header")
    rows = np.array(rows).reshape(-1, d + 1)
    if mean.shape != (d,) or scale.shape != (d,):
        raise FormatError(f"{path}: normalization vectors do not have {d} entries")
    return ClassifierModel(float(head["gamma"]), float(head["C"]), rows[:, 1:], rows[:, 0], float(head["bias"]),
                           mean, scale)


# ---------------------------------------------------------------- evaluation

EVAL_COLUMNS = ("trace_id", "has_fall", "detected_fall", "false_alarm", "accel_median_error", "distance_error")


def write_eval(path, report):
    _write_csv(path, EVAL_COLUMNS, [(r.trace_id, int(r.has_fall), int(r.detected_fall), int(r.false_alarm),
                                     _f(r.accel_median_error), _f(r.distance_error)) for r in report.results])


def format_rate(x) -> str:
    return "n/a" if x is None else repr(float(x))


def write_eval_summary(path, report):
    lines = [
        f"tpr = {format_rate(report.tpr)}",
        f"fpr = {format_rate(report.fpr)}",
        f"accel_median_error = {_f(report.accel_median_error)}",
        f"distance_median_error = {_f(report.distance_error)}",
        f"n_fall_traces = {report.n_positive}",
        f"n_nonfall_traces = {report.n_negative}",
    ]
    Path(path).write_text("\n".join(lines) + "\n")


def is_finite(x) -> bool:
    return x is not None and math.isfinite(x)
