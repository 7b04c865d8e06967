"""
Velocity-acceleration estimation from one sanitized window.

The chain is

    J  --psia-->  A(t, u) = J(t + u/2) conj(J(t - u/2)),   u = tau + t_d
       --scale--> Z(t', u) = A(t' / (s u / t_d), u)
       --2D DFT--> V-A plane

A target with l(t) = v t + a t^2 / 2 contributes
exp(-j 4 pi f v u / c) exp(-j 4 pi f a t_d t' / (s c)) to ``Z``, a separable
2D tone that the DFT turns into a peak at (v, a).  The lag ``u`` is measured
in seconds; the keystone stretch uses ``u / t_d`` so that the scaled time
``t'`` stays in seconds and the row at tau = 0 is untouched for s = 1.

All heavy lifting runs on stacked windows ``J[B, W]``; the dataclass wrappers
exist for the single-window API.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np
from scipy import sparse
from scipy.special import i0

from .preprocess import SanitizedWindow, remove_zero_frequency
from .synth import SPEED_OF_LIGHT


@dataclass(frozen=True)
class EstimatorConfig:
    s: float = 1.0
    t_d_s: Optional[float] = None  # default W * dt / 4
    lag_count: Optional[int] = None  # default W // 2
    pad_t: Optional[int] = None  # default 4x the scaled-time axis length
    pad_tau: Optional[int] = None  # default 4x lag_count
    f_ref_hz: float = 5.805e9
    c: float = SPEED_OF_LIGHT
    taps: int = 8
    kaiser_beta: float = 8.0
    # peak search and elimination
    min_separation: int = 3
    a_limit_mps2: float = 15.0
    v_band_mps: float = 4.0
    noise_margin: float = 1.5
    residual_fraction: float = 0.05

    def __post_init__(self):
        if not self.s > 0:
            raise ValueError("scaling factor s must be positive")
        if self.t_d_s is not None and not self.t_d_s > 0:
            raise ValueError("t_d_s must be positive")
        if self.taps < 2 or self.taps % 2:
            raise ValueError("taps must be an even number >= 2")


@dataclass(frozen=True)
class Geometry:
    """Grids implied by an EstimatorConfig for a window of ``W`` samples."""

    W: int
    dt: float
    s: float
    t_d: float
    lags: np.ndarray  # tau values (s), length n_lag
    t_grid: np.ndarray  # PSIA time grid, length W, centered
    ts_grid: np.ndarray  # scaled time grid, centered
    pad_t: int
    pad_tau: int

    @property
    def u(self) -> np.ndarray:
        return self.lags + self.t_d

    @property
    def stretch(self) -> np.ndarray:
        """Per-row scaling denominator s * (tau + t_d) / t_d."""
        return self.s * self.u / self.t_d

    def support(self) -> np.ndarray:
        """Half-width (s) of each PSIA row where both lag samples lie in the window."""
        return 0.5 * ((self.W - 1) * self.dt - self.u)


def geometry(cfg: EstimatorConfig, W: int, dt: float) -> Geometry:
    if W < 8:
        raise ValueError("insufficient window")
    lag_count = W // 2 if cfg.lag_count is None else int(cfg.lag_count)
    t_d = W * dt / 4 if cfg.t_d_s is None else float(cfg.t_d_s)
    if lag_count < 2 or lag_count > W // 2:
        raise ValueError("insufficient window")
    lags = np.arange(lag_count) * dt
    if t_d + lags[-1] >= (W - 1) * dt:
        raise ValueError("insufficient window")
    if np.any(cfg.s * (lags + t_d) <= 0):
        raise ValueError("invalid scaling geometry")
    t_grid = (np.arange(W) - (W - 1) / 2) * dt
    half = cfg.s * (lags + t_d) / t_d * 0.5 * ((W - 1) * dt - (lags + t_d))
    n_half = int(np.ceil(np.max(half) / dt - 1e-9))
    n_ts = max(W, 2 * n_half + 1)
    if (n_ts - W) % 2:
        n_ts += 1
    ts_grid = (np.arange(n_ts) - (n_ts - 1) / 2) * dt
    pad_t = 4 * n_ts if cfg.pad_t is None else int(cfg.pad_t)
    pad_tau = 4 * lag_count if cfg.pad_tau is None else int(cfg.pad_tau)
    if pad_t < n_ts or pad_tau < lag_count:
        raise ValueError("zero-padding lengths must be >= axis lengths")
    return Geometry(W, dt, cfg.s, t_d, lags, t_grid, ts_grid, pad_t, pad_tau)


@dataclass
class PsiaSurface:
    values: np.ndarray  # [n_time, n_lag]
    t_grid: np.ndarray
    lags: np.ndarray
    t_d: float
    dt: float
    freq_hz: float = 5.805e9
    scaled: bool = False


@dataclass
class VaPlane:
    magnitudes: np.ndarray  # [n_v, n_a]
    v_axis: np.ndarray
    a_axis: np.ndarray

    @property
    def shape(self):
        return self.magnitudes.shape


@dataclass(frozen=True)
class VaPeak:
    v_mps: float
    a_mps2: float
    magnitude: float
    v_bin: float
    a_bin: float

    @property
    def bins(self):
        return (self.v_bin, self.a_bin)


@dataclass
class EliminationResult:
    peaks: list
    status: str  # "ok" or "underpopulated"
    residual_energy: list = field(default_factory=list)
    threshold: list = field(default_factory=list)
    amplitudes: list = field(default_factory=list)

    @property
    def estimates(self):
        return [(p.v_mps, p.a_mps2) for p in self.peaks]


# ---------------------------------------------------------------- interpolation

def kaiser_sinc_weights(offsets, taps=8, beta=8.0, bandwidth=1.0):
    """Windowed-sinc weights for fractional sample offsets (in input samples).

    ``bandwidth`` < 1 widens the kernel by 1 / bandwidth and lowers its cutoff
    for decimating resamplers.  Weights are normalized to unit DC gain.
    """
    offsets = np.asarray(offsets, dtype=float)
    half = 0.5 * taps / bandwidth
    x = np.clip(offsets / half, -1.0, 1.0)
    win = i0(beta * np.sqrt(1.0 - x * x)) / i0(beta)
    w = bandwidth * np.sinc(bandwidth * offsets) * win
    w = np.where(np.abs(offsets) <= half, w, 0.0)
    total = w.sum(axis=-1, keepdims=True)
    return w / np.where(total == 0, 1.0, total)


def _interp_matrix(positions, n_in, taps, beta, bandwidth=1.0):
    """Dense [len(positions), n_in] interpolation matrix; positions in input-sample units.

    Positions exactly on the grid map to unit rows.  Entries outside
    [0, n_in - 1] get zero rows.
    """
    positions = np.asarray(positions, dtype=float)
    out = np.zeros((len(positions), n_in))
    half = int(np.ceil(0.5 * taps / bandwidth))
    base = np.floor(positions).astype(int)
    idx = base[:, None] + np.arange(-half + 1, half + 1)[None, :]
    offs = positions[:, None] - idx
    w = kaiser_sinc_weights(offs, taps, beta, bandwidth)
    exact = np.abs(positions - np.round(positions)) < 1e-12
    valid = (idx >= 0) & (idx < n_in)
    rows = np.repeat(np.arange(len(positions)), idx.shape[1])
    keep = valid.ravel()
    np.add.at(out, (rows[keep], idx.ravel()[keep]), w.ravel()[keep])
    ex_rows = np.nonzero(exact)[0]
    out[ex_rows] = 0.0
    ex_idx = np.round(positions[ex_rows]).astype(int)
    ok = (ex_idx >= 0) & (ex_idx < n_in)
    out[ex_rows[ok], ex_idx[ok]] = 1.0
    inside = (positions >= -1e-9) & (positions <= n_in - 1 + 1e-9)
    out[~inside] = 0.0
    return out


@lru_cache(maxsize=32)
def _psia_operators(W, dt, t_d, n_lag, taps, beta):
    """Interpolation matrices producing J(t + u/2) and J(t - u/2) for every lag row."""
    t_grid = (np.arange(W) - (W - 1) / 2) * dt
    u = t_d + np.arange(n_lag) * dt
    center = (W - 1) / 2
    plus, minus, mask = [], [], []
    for ul in u:
        pos_p = center + (t_grid + ul / 2) / dt
        pos_m = center + (t_grid - ul / 2) / dt
        ok = (pos_m >= -1e-9) & (pos_p <= W - 1 + 1e-9)
        plus.append(_interp_matrix(pos_p, W, taps, beta))
        minus.append(_interp_matrix(pos_m, W, taps, beta))
        mask.append(ok)
    # rows carry only ``taps`` nonzeros, so sparse products are much cheaper
    return (sparse.csr_matrix(np.concatenate(plus)), sparse.csr_matrix(np.concatenate(minus)),
            np.stack(mask))


@lru_cache(maxsize=32)
def _scale_operator(W, dt, s, t_d, n_lag, n_ts, taps, beta):
    """[n_lag, n_ts, W] resampling matrices for the keystone stretch."""
    t_grid = (np.arange(W) - (W - 1) / 2) * dt
    ts_grid = (np.arange(n_ts) - (n_ts - 1) / 2) * dt
    u = t_d + np.arange(n_lag) * dt
    ops = np.zeros((n_lag, n_ts, W))
    center = (W - 1) / 2
    for L, ul in enumerate(u):
        g = s * ul / t_d
        src = ts_grid / g
        half_support = 0.5 * ((W - 1) * dt - ul)
        pos = center + src / dt
        op = _interp_matrix(pos, W, taps, beta, bandwidth=min(1.0, g))
        op[np.abs(src) > half_support + 1e-12] = 0.0
        ops[L] = op
    stacked = sparse.block_diag([sparse.csr_matrix(op) for op in ops], format="csr")
    return stacked, ops.shape


# ---------------------------------------------------------------- array core

def psia_array(J, geom: Geometry, taps=8, beta=8.0):
    """PSIA of stacked windows ``J[..., W]`` -> ``A[..., W, n_lag]``."""
    J = np.asarray(J, dtype=complex)
    plus, minus, mask = _psia_operators(geom.W, geom.dt, geom.t_d, len(geom.lags), taps, beta)
    n_lag, n_t = mask.shape
    W = geom.W
    flat = J.reshape(-1, W).T
    jp = (plus @ flat).reshape(n_lag, n_t, -1)
    jm = (minus @ flat).reshape(n_lag, n_t, -1)
    out = (jp * np.conj(jm) * mask[:, :, None]).transpose(2, 1, 0)
    return out.reshape(J.shape[:-1] + (n_t, n_lag))


def scale_array(A, geom: Geometry, taps=8, beta=8.0):
    """Keystone stretch of ``A[..., W, n_lag]`` -> ``Z[..., n_ts, n_lag]``."""
    ops, (n_lag, n_ts, W) = _scale_operator(geom.W, geom.dt, geom.s, geom.t_d, len(geom.lags),
                                            len(geom.ts_grid), taps, beta)
    A = np.asarray(A, dtype=complex)
    lead = A.shape[:-2]
    rows = A.reshape((-1, W, n_lag)).transpose(2, 1, 0).reshape(n_lag * W, -1)  # [n_lag * W, B]
    Z = (ops @ rows).reshape(n_lag, n_ts, -1)
    return Z.transpose(2, 1, 0).reshape(lead + (n_ts, n_lag))


def va_spectrum(Z, geom: Geometry):
    """Complex V-A spectrum of ``Z[..., n_ts, n_lag]``, shifted, shape [..., pad_tau, pad_t].

    The transform uses the +j kernel so that a component exp(-j 2 pi F x)
    peaks at +F; it is scaled to be unitary over the padded grid.
    """
    Z = np.asarray(Z)
    spec = np.fft.ifft2(Z, s=(geom.pad_t, geom.pad_tau), axes=(-2, -1))
    spec *= np.sqrt(geom.pad_t * geom.pad_tau)
    spec = np.fft.fftshift(spec, axes=(-2, -1))
    return np.swapaxes(spec, -1, -2)


def plane_axes(geom: Geometry, f_ref: float, c: float = SPEED_OF_LIGHT):
    f_tau = np.fft.fftshift(np.fft.fftfreq(geom.pad_tau, geom.dt))
    f_t = np.fft.fftshift(np.fft.fftfreq(geom.pad_t, geom.dt))
    v_axis = c * f_tau / (2 * f_ref)
    a_axis = geom.s * c * f_t / (2 * f_ref * geom.t_d)
    return v_axis, a_axis


@lru_cache(maxsize=32)
def _zoom_dft(n_in, pad, dt, lo, hi):
    """Rows of the unitary +j DFT (padded to ``pad``) for shifted bins with frequency in [lo, hi]."""
    f = np.fft.fftshift(np.fft.fftfreq(pad, dt))
    keep = np.nonzero((f >= lo) & (f <= hi))[0]
    k = (keep - pad // 2) % pad
    mat = np.exp(2j * np.pi * np.outer(k, np.arange(n_in)) / pad) / np.sqrt(pad)
    return keep, mat


def zoom_spectrum(Z, geom: Geometry, v_max: float, a_max: float, f_ref: float, c: float = SPEED_OF_LIGHT):
    """Sub-block of ``va_spectrum`` restricted to |v| <= v_max, |a| <= a_max.

    Returns (spectrum[..., n_v, n_a], v_index, a_index) where the index
    arrays locate the block inside the full shifted plane.
    """
    f_tau_max = 2 * f_ref * v_max / c
    f_t_max = 2 * f_ref * geom.t_d * a_max / (geom.s * c)
    n_ts, n_lag = Z.shape[-2:]
    iv, fv = _zoom_dft(n_lag, geom.pad_tau, geom.dt, -f_tau_max, f_tau_max)
    ia, fa = _zoom_dft(n_ts, geom.pad_t, geom.dt, -f_t_max, f_t_max)
    lead = Z.shape[:-2]
    # two plain GEMMs on flattened operands; batched matmul is much slower here
    rows = np.moveaxis(Z.reshape((-1, n_ts, n_lag)), 1, 0).reshape(n_ts, -1)
    G = (fa @ rows).reshape(len(ia), -1, n_lag)  # [n_a, B, n_lag]
    G = (G.reshape(-1, n_lag) @ fv.T).reshape(len(ia), -1, len(iv))  # [n_a, B, n_v]
    G = np.transpose(G, (1, 2, 0))
    return G.reshape(lead + (len(iv), len(ia))), iv, ia


def plane_array(J, geom: Geometry, cfg: EstimatorConfig, v_max=None, a_max=None):
    """Magnitude planes of stacked windows.

    Without limits the full padded plane [B, pad_tau, pad_t] is returned;
    with limits only the matching block, plus its index arrays.
    """
    A = psia_array(J, geom, cfg.taps, cfg.kaiser_beta)
    Z = scale_array(A, geom, cfg.taps, cfg.kaiser_beta)
    if v_max is None and a_max is None:
        return np.abs(va_spectrum(Z, geom))
    v_max = np.inf if v_max is None else v_max
    a_max = np.inf if a_max is None else a_max
    G, iv, ia = zoom_spectrum(Z, geom, v_max, a_max, cfg.f_ref_hz, cfg.c)
    return np.abs(G), iv, ia


# ---------------------------------------------------------------- public API

def _window_geometry(w: SanitizedWindow, cfg: EstimatorConfig) -> Geometry:
    return geometry(cfg, w.length, w.dt)


def psia(j: SanitizedWindow, cfg: EstimatorConfig = EstimatorConfig()) -> PsiaSurface:
    geom = _window_geometry(j, cfg)
    values = psia_array(j.samples, geom, cfg.taps, cfg.kaiser_beta)
    return PsiaSurface(values, geom.t_grid, geom.lags, geom.t_d, geom.dt, j.freq_hz)


def scale(surface: PsiaSurface, cfg: EstimatorConfig = EstimatorConfig()) -> PsiaSurface:
    if np.any(cfg.s * (surface.lags + surface.t_d) <= 0):
        raise ValueError("invalid scaling geometry")
    W = len(surface.t_grid)
    c2 = replace(cfg, t_d_s=surface.t_d, lag_count=len(surface.lags))
    geom = geometry(c2, W, surface.dt)
    Z = scale_array(surface.values, geom, cfg.taps, cfg.kaiser_beta)
    return PsiaSurface(Z, geom.ts_grid, surface.lags, surface.t_d, surface.dt, surface.freq_hz, scaled=True)


def _surface_geometry(surface: PsiaSurface, cfg: EstimatorConfig) -> Geometry:
    W = len(surface.t_grid) if not surface.scaled else None
    if W is None:
        # scaled surfaces carry the stretched grid; rebuild geometry from its length
        n_ts = len(surface.t_grid)
        pad_t = 4 * n_ts if cfg.pad_t is None else cfg.pad_t
        pad_tau = 4 * len(surface.lags) if cfg.pad_tau is None else cfg.pad_tau
        return Geometry(n_ts, surface.dt, cfg.s, surface.t_d, surface.lags, surface.t_grid,
                        surface.t_grid, pad_t, pad_tau)
    c2 = replace(cfg, t_d_s=surface.t_d, lag_count=len(surface.lags))
    return geometry(c2, W, surface.dt)


def va_transform(surface: PsiaSurface, cfg: EstimatorConfig = EstimatorConfig()) -> VaPlane:
    geom = _surface_geometry(surface, cfg)
    if geom.pad_t < surface.values.shape[0] or geom.pad_tau < surface.values.shape[1]:
        raise ValueError("zero-padding lengths must be >= axis lengths")
    mags = np.abs(va_spectrum(surface.values, geom))
    v_axis, a_axis = plane_axes(geom, cfg.f_ref_hz, cfg.c)
    return VaPlane(mags, v_axis, a_axis)


def _parabolic(y_m, y_0, y_p):
    den = y_m - 2.0 * y_0 + y_p
    if den >= 0:
        return 0.0
    return float(np.clip(0.5 * (y_m - y_p) / den, -0.5, 0.5))


def find_peaks(plane: VaPlane, max_targets: int = 1, min_separation: int = 3,
               v_limit=None, a_limit=None) -> list:
    """Strongest local maxima of a V-A plane with parabolic sub-bin refinement.

    Ties are broken by the lowest flat (v_bin, a_bin) index.  Peaks closer
    than ``min_separation`` bins (Chebyshev distance) to an accepted peak are
    skipped.
    """
    if max_targets < 1:
        raise ValueError("max_targets must be >= 1")
    mag = np.asarray(plane.magnitudes, dtype=float)
    if mag.size == 0 or not np.any(mag > 0):
        return []
    nv, na = mag.shape
    padded = np.pad(mag, 1, mode="constant", constant_values=-np.inf)
    is_max = mag > 0
    for dv in (-1, 0, 1):
        for da in (-1, 0, 1):
            if dv == 0 and da == 0:
                continue
            is_max &= mag >= padded[1 + dv:1 + dv + nv, 1 + da:1 + da + na]
    if v_limit is not None:
        is_max &= (np.abs(plane.v_axis) <= v_limit)[:, None]
    if a_limit is not None:
        is_max &= (np.abs(plane.a_axis) <= a_limit)[None, :]
    cand = np.flatnonzero(is_max)
    order = np.lexsort((cand, -mag.ravel()[cand]))
    accepted = []
    for flat in cand[order]:
        iv, ia = divmod(int(flat), na)
        if any(max(abs(iv - pv), abs(ia - pa)) < min_separation for pv, pa in accepted):
            continue
        accepted.append((iv, ia))
        if len(accepted) == max_targets:
            break
    dv_bin = plane.v_axis[1] - plane.v_axis[0] if nv > 1 else 0.0
    da_bin = plane.a_axis[1] - plane.a_axis[0] if na > 1 else 0.0
    peaks = []
    for iv, ia in accepted:
        y0 = mag[iv, ia]
        ov = _parabolic(mag[iv - 1, ia], y0, mag[iv + 1, ia]) if 0 < iv < nv - 1 else 0.0
        oa = _parabolic(mag[iv, ia - 1], y0, mag[iv, ia + 1]) if 0 < ia < na - 1 else 0.0
        peaks.append(VaPeak(
            v_mps=float(plane.v_axis[iv] + ov * dv_bin),
            a_mps2=float(plane.a_axis[ia] + oa * da_bin),
            magnitude=float(y0),
            v_bin=iv + ov,
            a_bin=ia + oa,
        ))
    return peaks


def refined_bin_size(cfg: EstimatorConfig, W: int, dt: float, f_ref: Optional[float] = None):
    """(v, a) spacing of the padded plane grid."""
    geom = geometry(cfg, W, dt)
    v_axis, a_axis = plane_axes(geom, cfg.f_ref_hz if f_ref is None else f_ref, cfg.c)
    return float(v_axis[1] - v_axis[0]), float(a_axis[1] - a_axis[0])


def component_model(freqs, v, a, W, dt, c=SPEED_OF_LIGHT):
    """Unit-modulus target model per window, DC removed: shape [B, W]."""
    t = (np.arange(W) - (W - 1) / 2) * dt
    length = v * t + 0.5 * a * t * t
    x = np.exp(-4j * np.pi * np.asarray(freqs, dtype=float)[:, None] * length[None, :] / c)
    return remove_zero_frequency(x)


def _band_energies(J, dt, freqs, v_band, c):
    """In-band energy and its expected noise share, per window."""
    B, W = J.shape
    spec = np.fft.fft(J, axis=-1)
    f = np.fft.fftfreq(W, dt)
    band = np.abs(f)[None, :] <= 2 * np.asarray(freqs)[:, None] * v_band / c
    power = np.abs(spec) ** 2 / W
    oob = ~band
    n_oob = oob.sum(axis=1)
    noise_per_bin = np.where(n_oob > 0, (power * oob).sum(axis=1) / np.maximum(n_oob, 1), 0.0)
    in_band = (power * band).sum(axis=1)
    noise_in = noise_per_bin * band.sum(axis=1)
    return in_band, noise_in, band


def estimate_eliminate(windows: Sequence[SanitizedWindow], cfg: EstimatorConfig = EstimatorConfig(),
                       n_targets: int = 1) -> EliminationResult:
    """Step-wise estimation-elimination over a set of (antenna, subcarrier) windows.

    Each round averages the plane magnitudes over all windows, reads the
    strongest peak, fits a complex amplitude per window for the
    corresponding phase model by least squares and subtracts it.  Rounds
    stop early, with status ``"underpopulated"``, once the residual in-band
    energy drops to the noise floor (estimated from out-of-band DFT bins)
    plus ``residual_fraction`` of the initial in-band energy.
    """
    if n_targets < 1:
        raise ValueError("n_targets must be >= 1")
    if not windows:
        raise ValueError("no windows")
    W = windows[0].length
    dt = windows[0].dt
    J = np.stack([w.samples for w in windows]).astype(complex)
    freqs = np.array([w.freq_hz for w in windows])
    return estimate_eliminate_array(J, freqs, dt, cfg, n_targets)


def estimate_eliminate_array(J, freqs, dt, cfg: EstimatorConfig, n_targets: int = 1):
    J = np.array(J, dtype=complex)
    B, W = J.shape
    geom = geometry(cfg, W, dt)
    v_axis, a_axis = plane_axes(geom, cfg.f_ref_hz, cfg.c)
    in0, noise_in, band = _band_energies(J, dt, freqs, cfg.v_band_mps, cfg.c)
    e0 = float(in0.sum())
    noise = float(noise_in.sum())
    peaks, resid, thresh, amps = [], [], [], []
    status = "ok"
    for i in range(n_targets):
        spec = np.fft.fft(J, axis=-1)
        e_in = float((np.abs(spec) ** 2 / W * band).sum())
        th = cfg.noise_margin * noise + (cfg.residual_fraction * e0 if i > 0 else 0.0)
        resid.append(e_in)
        thresh.append(th)
        if e_in <= th:
            status = "underpopulated"
            break
        # one extra bin on each side keeps the refinement neighbors of edge peaks
        dv, da = v_axis[1] - v_axis[0], a_axis[1] - a_axis[0]
        mags, iv, ia = plane_array(J, geom, cfg, cfg.v_band_mps + dv, cfg.a_limit_mps2 + da)
        found = find_peaks(VaPlane(mags.mean(axis=0), v_axis[iv], a_axis[ia]), 1, cfg.min_separation,
                           v_limit=cfg.v_band_mps, a_limit=cfg.a_limit_mps2)
        if not found:
            status = "underpopulated"
            break
        pk = found[0]
        model = component_model(freqs, pk.v_mps, pk.a_mps2, W, dt, cfg.c)
        den = np.sum(np.abs(model) ** 2, axis=1)
        coef = np.sum(np.conj(model) * J, axis=1) / np.where(den > 0, den, 1.0)
        J = J - coef[:, None] * model
        peaks.append(pk)
        amps.append(coef)
    return EliminationResult(peaks, status, resid, thresh, amps)


def write_plane_csv(path, plane: VaPlane):
    """First row: a-axis values; first column: v-axis values."""
    with open(path, "w", newline="\n") as fh:
        fh.write("v\\a," + ",".join(repr(float(a)) for a in plane.a_axis) + "\n")
        for v, row in zip(plane.v_axis, plane.magnitudes):
            fh.write(repr(float(v)) + "," + ",".join(repr(float(x)) for x in row) + "\n")


def read_plane_csv(path) -> VaPlane:
    with open(path) as fh:
        header = fh.readline().rstrip("\n").split(",")
        a_axis = np.array([float(x) for x in header[1:]])
        v_vals, rows = [], []
        for line in fh:
            parts = line.rstrip("\n").split(",")
            v_vals.append(float(parts[0]))
            rows.append([float(x) for x in parts[1:]])
    return VaPlane(np.array(rows), np.array(v_vals), a_axis)


def write_peaks_csv(path, peaks):
    with open(path, "w", newline="\n") as fh:
        fh.write("v_mps,a_mps2,magnitude\n")
        for p in peaks:
            fh.write(f"{float(p.v_mps)!r},{float(p.a_mps2)!r},{float(p.magnitude)!r}\n")
