"""
End-to-end helpers: stream -> smoothed traces -> features, and the
evaluation metrics (fall TPR / FPR, acceleration error, walking distance).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.integrate import cumulative_trapezoid, trapezoid

from .estimator import EstimatorConfig
from .features import extract_features
from .preprocess import DEFAULT_WINDOW
from .synth import GroundTruth
from .trace import DEFAULT_CUTOFF_HZ, AccelTrace, segment, sliding_estimate, smooth_trace


@dataclass(frozen=True)
class TraceConfig:
    W: int = DEFAULT_WINDOW
    stride: Optional[int] = None  # default W // 4
    cutoff_hz: float = DEFAULT_CUTOFF_HZ
    xi: Optional[float] = None  # default from the raw trace
    n_targets: int = 1
    subcarriers: Optional[tuple] = None
    antennas: Optional[tuple] = None


def build_traces(stream, est: EstimatorConfig = EstimatorConfig(), tc: TraceConfig = TraceConfig()) -> list:
    """Sliding estimation followed by smoothing and peak picking for every target."""
    traces = sliding_estimate(stream, est, tc.W, tc.stride, tc.n_targets, tc.subcarriers, tc.antennas)
    return [smooth_trace(t, tc.cutoff_hz, tc.xi) for t in traces]


def trace_features(trace: AccelTrace, labels_from=None) -> list:
    return extract_features(segment(trace, trace.peaks), trace, labels_from)


def fall_labeler(intervals: Sequence):
    """Label a segment +1 when it contains the midpoint of any fall interval."""
    mids = [0.5 * (a + b) for a, b in intervals]

    def label(t0, t1):
        return 1 if any(t0 <= m < t1 for m in mids) else -1
    return label


# ---------------------------------------------------------------- ground-truth alignment

def truth_at(truth: GroundTruth, times, row: int = 0):
    """Ground-truth (l, v, a) of dynamic path ``row`` interpolated at ``times``."""
    t = truth.timestamps
    return (np.interp(times, t, truth.dplc[row]), np.interp(times, t, truth.velocity[row]),
            np.interp(times, t, truth.acceleration[row]))


def match_targets(traces: Sequence[AccelTrace], truth: GroundTruth) -> dict:
    """Map trace target ids to ground-truth rows by median velocity mismatch (greedy)."""
    costs = []
    for tr in traces:
        for row in range(truth.velocity.shape[0]):
            ok = tr.detected & np.isfinite(tr.v_raw)
            if not ok.any():
                cost = np.inf
            else:
                _, v, _ = truth_at(truth, tr.times_s[ok], row)
                cost = float(np.median(np.abs(tr.v_raw[ok] - v)))
            costs.append((cost, tr.target_id, row))
    costs.sort()
    mapping, used = {}, set()
    for cost, tid, row in costs:
        if tid not in mapping and row not in used:
            mapping[tid] = row
            used.add(row)
    return mapping


def constant_windows(truth: GroundTruth, times, W: int, dt: float, row: int = 0) -> np.ndarray:
    """True where the ground-truth acceleration is constant over the whole window."""
    half = 0.5 * (W - 1) * dt
    out = np.zeros(len(times), dtype=bool)
    t = truth.timestamps
    acc = truth.acceleration[row]
    for i, c in enumerate(times):
        sel = (t >= c - half - 1e-9) & (t <= c + half + 1e-9)
        if sel.any():
            seg = acc[sel]
            out[i] = np.ptp(seg) == 0
    return out


def acceleration_errors(trace: AccelTrace, truth: GroundTruth, W: int, dt: float, row: int = 0,
                        min_abs: float = 0.5) -> np.ndarray:
    """|a_raw - a| / |a| on detected windows of constant, non-small ground-truth acceleration."""
    _, _, a = truth_at(truth, trace.times_s, row)
    sel = trace.detected & constant_windows(truth, trace.times_s, W, dt, row) & (np.abs(a) >= min_abs)
    return np.abs(trace.a_raw[sel] - a[sel]) / np.abs(a[sel])


def integrated_distance(trace: AccelTrace) -> tuple:
    """Distance from the first detected window on: v(t0) T + double integral of a_smooth.

    Returns (distance, t_first, t_last).
    """
    idx = np.flatnonzero(trace.detected & np.isfinite(trace.v_raw))
    if len(idx) == 0:
        raise ValueError("no detected window to seed the velocity")
    i0 = int(idx[0])
    t = trace.times_s[i0:]
    v = trace.v_raw[i0] + cumulative_trapezoid(trace.a_smooth[i0:], t, initial=0.0)
    return float(trapezoid(v, t)), float(t[0]), float(t[-1])


def distance_error(trace: AccelTrace, truth: GroundTruth, row: int = 0) -> float:
    est, t0, t1 = integrated_distance(trace)
    l0, l1 = np.interp([t0, t1], truth.timestamps, truth.dplc[row])
    actual = l1 - l0
    return abs(est - actual) / abs(actual)


# ---------------------------------------------------------------- detection metrics

NOT_APPLICABLE = "n/a"


@dataclass
class ScenarioResult:
    trace_id: str
    has_fall: bool
    detected_fall: bool  # a fall detection overlapped a fall interval with the right target
    false_alarm: bool  # any fall detection outside a true event (or on a non-fall trace)
    accel_median_error: float = float("nan")
    distance_error: float = float("nan")


@dataclass
class EvalReport:
    results: list = field(default_factory=list)

    @property
    def n_positive(self):
        return sum(r.has_fall for r in self.results)

    @property
    def n_negative(self):
        return sum(not r.has_fall for r in self.results)

    @property
    def tpr(self):
        """Share of fall traces whose fall was detected and attributed correctly; None without falls."""
        if self.n_positive == 0:
            return None
        return sum(r.detected_fall for r in self.results if r.has_fall) / self.n_positive

    @property
    def fpr(self):
        """Share of fall-free traces with at least one fall detection; None without such traces."""
        if self.n_negative == 0:
            return None
        return sum(r.false_alarm for r in self.results if not r.has_fall) / self.n_negative

    @property
    def accel_median_error(self):
        vals = [r.accel_median_error for r in self.results if np.isfinite(r.accel_median_error)]
        return float(np.median(vals)) if vals else float("nan")

    @property
    def distance_error(self):
        vals = [r.distance_error for r in self.results if np.isfinite(r.distance_error)]
        return float(np.median(vals)) if vals else float("nan")


def score_detections(detections, events, mapping: dict) -> tuple:
    """(detected_fall, false_alarm) for one trace.

    ``events`` holds (truth_row, t_start, t_end); a detection is a true
    positive iff it is labelled fall, its span overlaps an event and its
    target maps to that event's row.
    """
    detected = False
    false_alarm = False
    for d in detections:
        if d.label != "fall":
            continue
        row = mapping.get(d.target_id)
        hit = any(row == r and d.t_start < t1 and d.t_end > t0 for r, t0, t1 in events)
        detected |= hit
        false_alarm |= not hit
    return detected, false_alarm
