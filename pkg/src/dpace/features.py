"""
Relative statistical features over peak-delimited trace segments.

Each interior segment w is described by statistics of its own samples
relative to the same statistics of segments w - 1 and w + 1, plus its
skewness and kurtosis.  Ratios use the combinator

    r(prev, cur, next) = (cur / prev + cur / next) / 2

and a vanishing neighbour statistic sets the feature to 0 and raises the
matching flag bit instead of producing an infinite value.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

FEATURE_NAMES = ("rTM", "rMedian", "rMode", "rExtremeDev", "rStd", "rIQR", "Sk", "Kt")
MODE_BINS = 32
TRIM_FRACTION = 0.05


class DegenerateSegment(ValueError):
    """Raised when a moment estimator sees a zero-variance sample."""


def truncated_mean(x, fraction: float = TRIM_FRACTION) -> float:
    """Mean after dropping the floor(fraction * n) smallest and largest values."""
    x = np.sort(np.asarray(x, dtype=float))
    n = len(x)
    if n < 3:
        raise ValueError("truncated mean needs at least 3 samples")
    k = int(np.floor(fraction * n))
    return float(np.mean(x[k:n - k]))


def histogram_mode(x, bins: int = MODE_BINS) -> float:
    """Center of the fullest of ``bins`` equal-width bins over [min, max]; ties go to the lower bin."""
    x = np.asarray(x, dtype=float)
    lo, hi = float(x.min()), float(x.max())
    if lo == hi:
        return lo
    counts, edges = np.histogram(x, bins=bins, range=(lo, hi))
    i = int(np.argmax(counts))
    return 0.5 * (edges[i] + edges[i + 1])


def iqr(x) -> float:
    q1, q3 = np.quantile(np.asarray(x, dtype=float), [0.25, 0.75])
    return float(q3 - q1)


def relative_feature(stat_prev: float, stat_cur: float, stat_next: float, with_flag: bool = False):
    """(cur / prev + cur / next) / 2; 0 (flagged) when either neighbour is 0."""
    if stat_prev == 0 or stat_next == 0:
        return (0.0, True) if with_flag else 0.0
    val = 0.5 * (stat_cur / stat_prev + stat_cur / stat_next)
    return (float(val), False) if with_flag else float(val)


def relative_iqr(seg_prev, seg_cur, seg_next, with_flag: bool = False):
    for s in (seg_prev, seg_cur, seg_next):
        if len(s) < 4:
            raise ValueError("relative IQR needs segments of at least 4 samples")
    return relative_feature(iqr(seg_prev), iqr(seg_cur), iqr(seg_next), with_flag)


def _centered_moments(x):
    x = np.asarray(x, dtype=float)
    n = len(x)
    if n < 3:
        raise ValueError("moment estimators need at least 3 samples")
    d = x - x.mean()
    var = np.sum(d * d) / (n - 1)
    scale = np.max(np.abs(x))
    if var <= (1e-12 * scale) ** 2:
        raise DegenerateSegment("degenerate segment")
    return d, n, var


def skewness(x) -> float:
    """n-based third central moment over the (n - 1)-based variance to the 3/2."""
    d, n, var = _centered_moments(x)
    return float(np.sum(d ** 3) / n / var ** 1.5)


def kurtosis(x) -> float:
    """n-based fourth central moment over the squared (n - 1)-based variance (no -3 offset)."""
    d, n, var = _centered_moments(x)
    return float(np.sum(d ** 4) / n / var ** 2)


@dataclass
class FeatureVector:
    values: np.ndarray  # the 8 features in FEATURE_NAMES order
    flags: np.ndarray  # one degenerate bit per feature
    start: int = 0
    end: int = 0
    t_start: float = 0.0
    t_end: float = 0.0
    target_id: int = 0
    label: Optional[int] = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        self.flags = np.asarray(self.flags, dtype=bool)
        if self.values.shape != (len(FEATURE_NAMES),) or self.flags.shape != (len(FEATURE_NAMES),):
            raise ValueError("feature vector must hold 8 values and 8 flags")

    def __getattr__(self, name):
        if name in FEATURE_NAMES:
            return float(self.values[FEATURE_NAMES.index(name)])
        raise AttributeError(name)

    def as_array(self, include_flags: bool = True) -> np.ndarray:
        if include_flags:
            return np.concatenate([self.values, self.flags.astype(float)])
        return self.values.copy()


def _segment_stats(x):
    x = np.asarray(x, dtype=float)
    tm = truncated_mean(x) if len(x) >= 3 else float(np.mean(x))
    std = float(np.std(x, ddof=1)) if len(x) > 1 else 0.0
    return {
        "rTM": tm,
        "rMedian": float(np.median(x)),
        "rMode": histogram_mode(x),
        "rExtremeDev": float(x.max() - x.min()),
        "rStd": std,
        "rIQR": iqr(x),
    }


def extract_features(segments: Sequence, trace, labels_from=None) -> list:
    """Feature vectors for every segment that has both neighbours.

    ``trace`` is an AccelTrace (its ``a_smooth`` is used) or a plain array.
    ``labels_from`` optionally maps a (t_start, t_end) span to a label.
    """
    segments = list(segments)
    if len(segments) < 3:
        return []
    if hasattr(trace, "a_smooth"):
        x = np.asarray(trace.a_smooth, dtype=float)
        times = np.asarray(trace.times_s, dtype=float)
        target = int(getattr(trace, "target_id", 0))
    else:
        x = np.asarray(trace, dtype=float)
        times = np.arange(len(x), dtype=float)
        target = 0
    stats = [_segment_stats(x[s.start:s.end]) for s in segments]
    out = []
    for w in range(1, len(segments) - 1):
        seg = segments[w]
        vals, flags = [], []
        for name in FEATURE_NAMES[:6]:
            v, f = relative_feature(stats[w - 1][name], stats[w][name], stats[w + 1][name], with_flag=True)
            vals.append(v)
            flags.append(f)
        samples = x[seg.start:seg.end]
        for fn in (skewness, kurtosis):
            try:
                vals.append(fn(samples))
                flags.append(False)
            except ValueError:
                vals.append(0.0)
                flags.append(True)
        t0 = float(times[seg.start])
        t1 = float(times[min(seg.end, len(times) - 1)])
        label = labels_from(t0, t1) if labels_from is not None else None
        out.append(FeatureVector(np.array(vals), np.array(flags), seg.start, seg.end, t0, t1, target, label))
    return out
