"""
Multipath CSI synthesizer with known kinematics and hardware impairments.

Every packet is built from the closed-form channel model

    H[m, k](t) = sum_paths amp[m, k] * exp(-j 2 pi f_k tau_path(t)) * exp(-j 2 pi eps(t, k)) + noise

where dynamic paths evolve as tau(t) = tau(0) + 2 l(t) / c and l(t) is the
path length change integrated from a piecewise-constant-acceleration profile.
The generator also returns the per-packet ground truth (l, v, a) of every
dynamic path.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

SPEED_OF_LIGHT = 3e8

PATH_KINDS = ("direct", "static_reflection", "dynamic")


@dataclass(frozen=True)
class RadioConfig:
    carrier_hz: float = 5.805e9
    bandwidth_hz: float = 80e6
    n_subcarriers: int = 256
    n_antennas: int = 4
    packet_rate_hz: float = 600.0
    c: float = SPEED_OF_LIGHT

    def __post_init__(self):
        if self.n_antennas < 2:
            raise ValueError("n_antennas must be >= 2 (antenna 1 is the reference channel)")
        if self.n_subcarriers < 1:
            raise ValueError("n_subcarriers must be >= 1")
        if not self.packet_rate_hz > 0:
            raise ValueError("packet_rate_hz must be positive")
        if not (self.carrier_hz > 0 and self.bandwidth_hz >= 0 and self.c > 0):
            raise ValueError("carrier, bandwidth and propagation speed must be positive")

    @property
    def dt(self) -> float:
        return 1.0 / self.packet_rate_hz

    @property
    def wavelength(self) -> float:
        return self.c / self.carrier_hz

    def subcarrier_freqs(self) -> np.ndarray:
        """Centered uniform subcarrier grid, strictly increasing in k."""
        k = np.arange(self.n_subcarriers)
        return self.carrier_hz + (k - self.n_subcarriers / 2) * self.bandwidth_hz / self.n_subcarriers


@dataclass(frozen=True)
class KinematicProfile:
    """Piecewise-constant acceleration; ``pieces`` holds (duration_s, v0_mps, a_mps2)."""

    pieces: tuple

    def __post_init__(self):
        pieces = tuple(tuple(float(x) for x in p) for p in self.pieces)
        if not pieces:
            raise ValueError("kinematic profile needs at least one piece")
        for i, (dur, v0, a) in enumerate(pieces):
            if not dur > 0:
                raise ValueError(f"piece {i}: duration must be positive")
            if i > 0:
                pd, pv, pa = pieces[i - 1]
                v_end = pv + pa * pd
                if abs(v_end - v0) > 1e-9 * max(1.0, abs(v0)):
                    raise ValueError(f"piece {i}: velocity discontinuity ({v_end} -> {v0})")
        object.__setattr__(self, "pieces", pieces)

    @classmethod
    def constant(cls, v0: float, a: float, duration_s: float) -> "KinematicProfile":
        return cls(((duration_s, v0, a),))

    @classmethod
    def from_accelerations(cls, v0: float, segments: Sequence[tuple]) -> "KinematicProfile":
        """Build a continuous profile from (duration_s, a_mps2) pairs."""
        pieces = []
        v = float(v0)
        for dur, a in segments:
            pieces.append((float(dur), v, float(a)))
            v = v + a * dur
        return cls(tuple(pieces))

    @property
    def duration(self) -> float:
        return float(sum(p[0] for p in self.pieces))

    def state(self, t):
        """Return (l, v, a) at times ``t``; the last piece extends past the end."""
        t = np.asarray(t, dtype=float)
        starts = np.cumsum([0.0] + [p[0] for p in self.pieces[:-1]])
        l0 = [0.0]
        for dur, v0, a in self.pieces[:-1]:
            l0.append(l0[-1] + v0 * dur + 0.5 * a * dur * dur)
        idx = np.clip(np.searchsorted(starts, t, side="right") - 1, 0, len(self.pieces) - 1)
        v0 = np.array([p[1] for p in self.pieces])[idx]
        acc = np.array([p[2] for p in self.pieces])[idx]
        tau = t - starts[idx]
        length = np.asarray(l0)[idx] + dplc(v0, acc, tau)
        return length, v0 + acc * tau, acc


@dataclass(frozen=True)
class PathSpec:
    kind: str
    amplitude: object = 1.0
    tof_s: object = 0.0
    kinematics: Optional[KinematicProfile] = None

    def __post_init__(self):
        if self.kind not in PATH_KINDS:
            raise ValueError(f"unknown path kind {self.kind!r}")
        if np.any(np.asarray(self.tof_s) < 0):
            raise ValueError("tof_s must be non-negative")
        if self.kind == "dynamic" and self.kinematics is None:
            raise ValueError("dynamic path needs a kinematic profile")


@dataclass(frozen=True)
class ImpairmentSpec:
    pdd_s: float = 0.0
    sfo_s: float = 0.0
    cfo_cycles: float = 0.0
    noise_power: float = 0.0

    def __post_init__(self):
        for name in ("pdd_s", "sfo_s", "cfo_cycles", "noise_power"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")

    @property
    def is_ideal(self) -> bool:
        return self.pdd_s == 0 and self.sfo_s == 0 and self.cfo_cycles == 0 and self.noise_power == 0


@dataclass(frozen=True)
class Scenario:
    radio: RadioConfig
    paths: tuple
    impairments: ImpairmentSpec = field(default_factory=ImpairmentSpec)
    duration_s: float = 1.0
    seed: int = 0

    @property
    def n_packets(self) -> int:
        return int(round(self.duration_s * self.radio.packet_rate_hz))


@dataclass(frozen=True)
class CsiFrame:
    timestamp_s: float
    h: np.ndarray


@dataclass
class CsiStream:
    """Packets stacked as ``h[n, m, k]`` with one timestamp per packet."""

    radio: RadioConfig
    timestamps: np.ndarray
    h: np.ndarray

    def __post_init__(self):
        self.timestamps = np.asarray(self.timestamps, dtype=float)
        self.h = np.asarray(self.h, dtype=complex)
        if self.h.ndim != 3 or self.h.shape[0] != self.timestamps.shape[0]:
            raise ValueError("h must be [n_packets, n_antennas, n_subcarriers]")
        if self.h.shape[1:] != (self.radio.n_antennas, self.radio.n_subcarriers):
            raise ValueError("h shape does not match the radio config")
        if len(self.timestamps) > 1 and np.any(np.diff(self.timestamps) <= 0):
            raise ValueError("timestamps must be strictly increasing")

    def __len__(self):
        return self.h.shape[0]

    def frame(self, i: int) -> CsiFrame:
        return CsiFrame(float(self.timestamps[i]), self.h[i])

    def __iter__(self):
        for i in range(len(self)):
            yield self.frame(i)


@dataclass
class GroundTruth:
    """Per-packet kinematics of each dynamic path, arrays shaped [n_dynamic, n_packets]."""

    timestamps: np.ndarray
    path_ids: list
    dplc: np.ndarray
    velocity: np.ndarray
    acceleration: np.ndarray


def dplc(v, a, dt):
    """Path length change after ``dt`` seconds at velocity ``v`` and acceleration ``a``."""
    return v * dt + 0.5 * a * dt * dt


def dynamic_phase(f_k, length, c=SPEED_OF_LIGHT):
    """Round-trip phase factor exp(-j 4 pi f_k l / c) for a path length change ``l``."""
    return np.exp(-1j * 4.0 * np.pi * np.asarray(f_k) * np.asarray(length) / c)


def _path_tof(path: PathSpec, m: int) -> np.ndarray:
    tof = np.broadcast_to(np.asarray(path.tof_s, dtype=float), (m,))
    return tof


def ideal_channel(scenario: Scenario, times=None):
    """Noiseless, error-free H[n, m, k] and the dynamic ground truth at ``times``."""
    radio = scenario.radio
    if not scenario.paths:
        raise ValueError("empty channel")
    if times is None:
        times = np.arange(scenario.n_packets) * radio.dt
    times = np.asarray(times, dtype=float)
    f = radio.subcarrier_freqs()
    m, k = radio.n_antennas, radio.n_subcarriers
    h = np.zeros((len(times), m, k), dtype=complex)
    lengths, vels, accs, ids = [], [], [], []
    for pid, path in enumerate(scenario.paths):
        amp = np.broadcast_to(np.asarray(path.amplitude, dtype=complex), (m, k))
        tof = _path_tof(path, m)
        if path.kind == "dynamic":
            length, vel, acc = path.kinematics.state(times)
            lengths.append(length)
            vels.append(vel)
            accs.append(acc)
            ids.append(pid)
            tau = tof[None, :] + 2.0 * length[:, None] / radio.c
            h += amp[None] * np.exp(-2j * np.pi * f[None, None, :] * tau[:, :, None])
        else:
            h += (amp * np.exp(-2j * np.pi * f[None, :] * tof[:, None]))[None]
    n = len(times)
    truth = GroundTruth(
        timestamps=times,
        path_ids=ids,
        dplc=np.array(lengths).reshape(len(ids), n),
        velocity=np.array(vels).reshape(len(ids), n),
        acceleration=np.array(accs).reshape(len(ids), n),
    )
    return h, truth


def phase_error(radio: RadioConfig, impairments: ImpairmentSpec, n_packets: int, rng) -> np.ndarray:
    """eps[n, k] in cycles: f_k (PDD + SFO) + CFO."""
    f = radio.subcarrier_freqs()
    pdd = rng.uniform(0.0, 1.0, n_packets) * impairments.pdd_s
    sfo = np.arange(n_packets) * impairments.sfo_s
    cfo = rng.standard_normal(n_packets) * impairments.cfo_cycles
    return f[None, :] * (pdd + sfo)[:, None] + cfo[:, None]


def synthesize(scenario: Scenario):
    """Generate ``(CsiStream, GroundTruth)`` for a scenario.

    All randomness is drawn from ``np.random.default_rng(scenario.seed)`` in a
    fixed order, so a (scenario, seed) pair always gives a bit-identical
    stream.
    """
    radio = scenario.radio
    h, truth = ideal_channel(scenario)
    imp = scenario.impairments
    rng = np.random.default_rng(scenario.seed)
    n = h.shape[0]
    if imp.pdd_s or imp.sfo_s or imp.cfo_cycles:
        eps = phase_error(radio, imp, n, rng)
        h = h * np.exp(-2j * np.pi * eps)[:, None, :]
    if imp.noise_power:
        scale = np.sqrt(imp.noise_power / 2.0)
        h = h + scale * (rng.standard_normal(h.shape) + 1j * rng.standard_normal(h.shape))
    return CsiStream(radio, truth.timestamps.copy(), h), truth
