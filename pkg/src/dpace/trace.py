"""
Acceleration traces: sliding-window estimation, smoothing and segmentation.

A trace holds one (v, a) estimate per window position.  Smoothing is a
zero-phase Butterworth low-pass followed by an l1 trend filter, and the
smoothed trace is cut into segments between the peaks found by a
deterministic variant of automatic multiscale peak detection (AMPD).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np
from scipy import signal
from scipy.linalg import solveh_banded

from .estimator import EstimatorConfig, estimate_eliminate_array
from .preprocess import DEFAULT_WINDOW, SanitizedStream, sanitize_stream
from .synth import CsiStream


class NumericalError(RuntimeError):
    """An iterative solver failed to reach its tolerance."""


DEFAULT_CUTOFF_HZ = 5.0
DEFAULT_FUSED_SUBCARRIERS = 8


@dataclass
class AccelTrace:
    """Per-window estimates for one target.

    ``detected`` is False for windows where the target was not found; those
    windows carry ``a_raw = 0`` and ``v_raw = nan``.
    """

    times_s: np.ndarray
    a_raw: np.ndarray
    a_smooth: np.ndarray
    target_id: int = 0
    v_raw: Optional[np.ndarray] = None
    detected: Optional[np.ndarray] = None
    peaks: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))

    def __post_init__(self):
        self.times_s = np.asarray(self.times_s, dtype=float)
        self.a_raw = np.asarray(self.a_raw, dtype=float)
        self.a_smooth = np.asarray(self.a_smooth, dtype=float)
        n = len(self.times_s)
        if self.v_raw is None:
            self.v_raw = np.full(n, np.nan)
        if self.detected is None:
            self.detected = np.ones(n, dtype=bool)
        self.v_raw = np.asarray(self.v_raw, dtype=float)
        self.detected = np.asarray(self.detected, dtype=bool)
        self.peaks = np.asarray(self.peaks, dtype=int)
        if not (len(self.a_raw) == len(self.a_smooth) == len(self.v_raw) == len(self.detected) == n):
            raise ValueError("trace arrays must have equal lengths")

    def __len__(self):
        return len(self.times_s)

    @property
    def rate_hz(self) -> float:
        if len(self.times_s) < 2:
            raise ValueError("trace rate needs at least two samples")
        return 1.0 / float(self.times_s[1] - self.times_s[0])


@dataclass(frozen=True)
class Segment:
    start: int
    end: int  # exclusive

    def __post_init__(self):
        if not self.start < self.end:
            raise ValueError("segment start must precede end")

    @property
    def peaks(self):
        return (self.start, self.end)

    def __len__(self):
        return self.end - self.start


# ---------------------------------------------------------------- sliding estimation

def default_subcarriers(n_subcarriers: int, count: int = DEFAULT_FUSED_SUBCARRIERS) -> np.ndarray:
    """``count`` evenly spread subcarrier indices (all of them if fewer exist)."""
    if n_subcarriers <= count:
        return np.arange(n_subcarriers)
    return np.unique(np.round(np.linspace(0, n_subcarriers - 1, count)).astype(int))


def _associate(tracks, estimates, v_span, a_span):
    """Greedy nearest-neighbour matching of estimates to tracks.

    Tracks that have never been seen accept leftovers in strongest-first
    order.  Returns a list mapping track -> estimate index (or None).
    """
    pairs = []
    for j, last in enumerate(tracks):
        for e, (v, a) in enumerate(estimates):
            if last is None:
                d = np.inf
            else:
                d = np.hypot((v - last[0]) / v_span, (a - last[1]) / a_span)
            pairs.append((d, last is None, j, e))
    pairs.sort(key=lambda p: (p[1], p[0], p[3], p[2]))
    owner = [None] * len(tracks)
    used = set()
    for _, _, j, e in pairs:
        if owner[j] is None and e not in used:
            owner[j] = e
            used.add(e)
    return owner


def fused_channels(stream, subcarriers: Optional[Sequence[int]] = None,
                   antennas: Optional[Sequence[int]] = None):
    """Sanitize if needed and pick the fused channels.

    Returns (sanitized stream, data[n, A * S], freq per channel).  Antennas
    are 1-based surveillance indices, subcarriers 0-based.
    """
    if isinstance(stream, CsiStream):
        stream = sanitize_stream(stream)
    if not isinstance(stream, SanitizedStream):
        raise TypeError("expected a CsiStream or SanitizedStream")
    radio = stream.radio
    subs = default_subcarriers(radio.n_subcarriers) if subcarriers is None else np.asarray(subcarriers, int)
    ants = np.arange(1, radio.n_antennas) if antennas is None else np.asarray(antennas, int)
    if subs.size == 0 or subs.min() < 0 or subs.max() >= radio.n_subcarriers:
        raise ValueError("subcarrier index out of range")
    if ants.size == 0 or ants.min() < 1 or ants.max() >= radio.n_antennas:
        raise ValueError("antenna index out of range")
    freqs = np.tile(radio.subcarrier_freqs()[subs], len(ants))
    data = stream.g[:, ants - 1][:, :, subs].reshape(len(stream), -1)
    return stream, data, freqs


def _window(data, start, W):
    J = data[start:start + W].T
    return J - J.mean(axis=1, keepdims=True)


def window_stack(stream, start: int, W: int = DEFAULT_WINDOW, subcarriers=None, antennas=None):
    """Zero-frequency-nulled fused windows [B, W] starting at packet ``start``, with their frequencies."""
    stream, data, freqs = fused_channels(stream, subcarriers, antennas)
    if not 0 <= start <= len(stream) - W:
        raise ValueError(f"window start {start} outside the stream")
    return _window(data, start, W), freqs, stream.radio.dt


def window_positions(n_packets: int, W: int, stride: int) -> np.ndarray:
    if stride < 1:
        raise ValueError("stride must be >= 1")
    if n_packets < W:
        raise ValueError("stream shorter than window")
    return np.arange(0, n_packets - W + 1, stride)


def sliding_estimate(stream, cfg: EstimatorConfig = EstimatorConfig(), W: int = DEFAULT_WINDOW,
                     stride: Optional[int] = None, n_targets: int = 1,
                     subcarriers: Optional[Sequence[int]] = None,
                     antennas: Optional[Sequence[int]] = None) -> list:
    """One estimation-elimination per window position, associated into traces.

    ``stream`` may be raw (:class:`CsiStream`) or already sanitized.  The
    fused windows are every chosen surveillance antenna (1-based) times every
    chosen subcarrier.  Returns ``n_targets`` :class:`AccelTrace` objects in
    the order targets were first seen.
    """
    stream, data, freqs = fused_channels(stream, subcarriers, antennas)
    stride = W // 4 if stride is None else int(stride)
    starts = window_positions(len(stream), W, stride)
    radio = stream.radio
    n_pos = len(starts)
    v = np.full((n_targets, n_pos), np.nan)
    a = np.zeros((n_targets, n_pos))
    seen = np.zeros((n_targets, n_pos), dtype=bool)
    tracks = [None] * n_targets
    v_span, a_span = 2 * cfg.v_band_mps, 2 * cfg.a_limit_mps2
    for i, s0 in enumerate(starts):
        J = _window(data, s0, W)
        res = estimate_eliminate_array(J, freqs, radio.dt, cfg, n_targets)
        est = res.estimates
        for j, e in enumerate(_associate(tracks, est, v_span, a_span)):
            if e is None:
                continue
            v[j, i], a[j, i] = est[e]
            seen[j, i] = True
            tracks[j] = est[e]
    centers = stream.timestamps[starts] + 0.5 * (W - 1) * radio.dt
    return [AccelTrace(centers.copy(), a[j], a[j].copy(), j, v[j], seen[j]) for j in range(n_targets)]


# ---------------------------------------------------------------- smoothing

def lowpass(a_raw, cutoff_hz: float, rate_hz: float, order: int = 4) -> np.ndarray:
    """Zero-phase Butterworth low-pass (forward-backward second-order sections)."""
    x = np.asarray(a_raw, dtype=float)
    nyq = 0.5 * rate_hz
    if not 0 < cutoff_hz < nyq:
        raise ValueError(f"cutoff must lie in (0, {nyq}) Hz")
    if len(x) < 2:
        return x.copy()
    sos = signal.butter(order, cutoff_hz / nyq, output="sos")
    padlen = min(3 * (2 * len(sos) + 1), len(x) - 1)
    return signal.sosfiltfilt(sos, x, padlen=padlen)


def second_difference(n: int):
    """Dense (n - 2) x n second-difference operator."""
    D = np.zeros((n - 2, n))
    i = np.arange(n - 2)
    D[i, i] = 1.0
    D[i, i + 1] = -2.0
    D[i, i + 2] = 1.0
    return D


def _d_apply(x):
    return x[:-2] - 2.0 * x[1:-1] + x[2:]


def _dt_apply(z):
    out = np.zeros(len(z) + 2)
    out[:-2] += z
    out[1:-1] -= 2.0 * z
    out[2:] += z
    return out


def _ddt_banded(m, diag_extra=None):
    """Upper banded storage of D D^T (+ diag) for solveh_banded."""
    ab = np.zeros((3, m))
    ab[2] = 6.0
    ab[1, 1:] = -4.0
    ab[0, 2:] = 1.0
    if diag_extra is not None:
        ab[2] = ab[2] + diag_extra
    return ab


def _ddt_apply(z):
    return _d_apply(_dt_apply(z))


def l1_trend_objective(y, x, xi: float) -> float:
    y = np.asarray(y, dtype=float)
    x = np.asarray(x, dtype=float)
    return float(np.sum((x - y) ** 2) + xi * np.sum(np.abs(_d_apply(x))))


def l1_trend(a, xi: float, rel_tol: float = 1e-8, max_iter: int = 200) -> np.ndarray:
    """Minimize sum (x - a)^2 + xi * sum |x[u-1] - 2 x[u] + x[u+1]|.

    Primal-dual interior-point on the box-constrained dual

        min 1/2 z' D D' z - a' D' z   s.t. |z| <= xi / 2,   x = a - D' z

    with banded Newton solves.  Iterates until the duality gap is at most
    ``rel_tol`` times the primal objective.
    """
    y = np.asarray(a, dtype=float)
    if xi < 0:
        raise ValueError("xi must be non-negative")
    n = len(y)
    if n < 3:
        raise ValueError("l1 trend filter needs at least 3 samples")
    if xi == 0:
        return y.copy()
    # z0 = xi/2 sign(D a) certifies x = a with duality gap |D' z0|^2; that
    # settles tiny xi, where the barrier would have to resolve z to rounding level
    Dy = _d_apply(y)
    gap0 = float(np.sum(_dt_apply(0.5 * xi * np.sign(Dy)) ** 2))
    if gap0 <= rel_tol * xi * np.sum(np.abs(Dy)):
        return y.copy()
    # the problem is homogeneous in (a, xi); rescale so the smaller of the
    # data and the dual box has unit size, which keeps the barrier well scaled
    scale = min(0.5 * xi, float(np.max(np.abs(y))))
    y = y / scale
    lam = 0.5 * xi / scale
    m = n - 2
    alpha, beta, mu_step = 0.01, 0.5, 2.0
    Dy = Dy / scale
    ddt = _ddt_banded(m)
    z = np.zeros(m)
    mu1 = np.ones(m)
    mu2 = np.ones(m)
    f1 = z - lam
    f2 = -z - lam
    t = 1e-10
    step = np.inf
    for _ in range(max_iter):
        DTz = _dt_apply(z)
        DDTz = _d_apply(DTz)
        w = Dy - (mu1 - mu2)
        pobj1 = 0.5 * w @ solveh_banded(ddt, w) + lam * np.sum(mu1 + mu2)
        pobj2 = 0.5 * DTz @ DTz + lam * np.sum(np.abs(Dy - DDTz))
        pobj = min(pobj1, pobj2)
        dobj = -0.5 * DTz @ DTz + Dy @ z
        gap = pobj - dobj
        # the solver works on half the objective; stop on the relative gap
        if gap <= rel_tol * max(pobj2, np.finfo(float).tiny):
            return (y - DTz) * scale
        if step >= 0.2:
            t = max(2 * m * mu_step / gap, 1.2 * t)
        rz = DDTz - w
        S = _ddt_banded(m, -(mu1 / f1 + mu2 / f2))
        r = -DDTz + Dy + (1 / t) / f1 - (1 / t) / f2
        dz = solveh_banded(S, r)
        dmu1 = -(mu1 + ((1 / t) + dz * mu1) / f1)
        dmu2 = -(mu2 + ((1 / t) - dz * mu2) / f2)
        residual = np.concatenate([rz, -mu1 * f1 - 1 / t, -mu2 * f2 - 1 / t])
        step = 1.0
        neg1, neg2 = dmu1 < 0, dmu2 < 0
        if neg1.any():
            step = min(step, 0.99 * np.min(-mu1[neg1] / dmu1[neg1]))
        if neg2.any():
            step = min(step, 0.99 * np.min(-mu2[neg2] / dmu2[neg2]))
        norm_r = np.linalg.norm(residual)
        for _ in range(40):
            nz = z + step * dz
            nmu1 = mu1 + step * dmu1
            nmu2 = mu2 + step * dmu2
            nf1 = nz - lam
            nf2 = -nz - lam
            if max(nf1.max(), nf2.max()) < 0:
                new_res = np.concatenate([_ddt_apply(nz) - Dy + nmu1 - nmu2,
                                          -nmu1 * nf1 - 1 / t, -nmu2 * nf2 - 1 / t])
                if np.linalg.norm(new_res) <= (1 - alpha * step) * norm_r:
                    break
            step *= beta
        z, mu1, mu2, f1, f2 = nz, nmu1, nmu2, nf1, nf2
    raise NumericalError("l1 trend filter did not converge")


def l1_trend_gap(y, x, xi: float) -> float:
    """Certified optimality gap of ``x``: objective(x) minus a dual lower bound.

    Every z in the box |z| <= xi / 2 gives a lower bound; the best of the
    clipped least-squares solution of D' z = y - x and the sign patterns of
    D x and D y is used, so the bound is valid for any ``x``.
    """
    y = np.asarray(y, dtype=float)
    x = np.asarray(x, dtype=float)
    n = len(y)
    D = second_difference(n)
    lam = 0.5 * xi
    cands = [np.clip(np.linalg.lstsq(D.T, y - x, rcond=None)[0], -lam, lam),
             lam * np.sign(D @ x), lam * np.sign(D @ y)]
    Dy = D @ y
    dual = max(2.0 * (Dy @ z) - np.sum((D.T @ z) ** 2) for z in cands)
    return l1_trend_objective(y, x, xi) - dual


def default_xi(a_raw) -> float:
    """10 x the median absolute successive difference."""
    a_raw = np.asarray(a_raw, dtype=float)
    if len(a_raw) < 2:
        return 0.0
    return 10.0 * float(np.median(np.abs(np.diff(a_raw))))


# ---------------------------------------------------------------- segmentation

def ampd(x) -> np.ndarray:
    """Deterministic automatic multiscale peak detection.

    ``m[q, u]`` is 0 when x[u] strictly exceeds both x[u - q] and x[u + q]
    and 1 otherwise, with comparisons reaching past either end counting as
    1.  Rows up to the scale ``gamma`` with the fewest ones are kept.  A
    sample other than the two end points is a peak when it beats every
    in-range neighbour x[u +- q] for q <= gamma, so near an edge only the
    inward comparisons apply.
    """
    x = np.asarray(x, dtype=float)
    U = len(x)
    if U < 4:
        raise ValueError("AMPD needs at least 4 samples")
    Q = int(np.ceil(U / 2)) - 1
    u = np.arange(U)
    q = np.arange(1, Q + 1)[:, None]
    inside = (u - q >= 0) & (u + q < U)
    left = x[np.clip(u - q, 0, U - 1)]
    right = x[np.clip(u + q, 0, U - 1)]
    m = ~((x > left) & (x > right) & inside)
    gamma = int(np.argmin(m.sum(axis=1)))
    beats = ((x > left) | (u - q < 0)) & ((x > right) | (u + q >= U))
    is_peak = beats[:gamma + 1].all(axis=0)
    is_peak[[0, -1]] = False
    return np.flatnonzero(is_peak)


def segment(trace, peaks) -> list:
    """Segments between consecutive peaks; spans outside the first and last peak are dropped."""
    n = len(trace)
    peaks = [int(p) for p in peaks]
    if any(b <= a for a, b in zip(peaks, peaks[1:])):
        raise ValueError("peaks must be strictly increasing")
    if peaks and (peaks[0] < 0 or peaks[-1] >= n):
        raise ValueError("peak index outside trace")
    return [Segment(a, b) for a, b in zip(peaks, peaks[1:])]


def smooth_trace(trace: AccelTrace, cutoff_hz: float = DEFAULT_CUTOFF_HZ, xi: Optional[float] = None) -> AccelTrace:
    """Low-pass then l1 trend filter ``a_raw``; also records the AMPD peaks."""
    if len(trace) < 4:
        raise ValueError("trace too short to smooth")
    y = lowpass(trace.a_raw, cutoff_hz, trace.rate_hz)
    xi = default_xi(trace.a_raw) if xi is None else xi
    sm = l1_trend(y, xi)
    return replace(trace, a_smooth=sm, peaks=ampd(sm))
