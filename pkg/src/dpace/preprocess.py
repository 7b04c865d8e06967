"""
Phase-error removal and static-path nulling.

Antenna 0 is the reference channel.  Conjugate multiplication against it
removes the packet-common phase error; nulling the zero-frequency DFT bin of
a window removes everything whose phase does not change over time (direct
and static reflection paths).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .synth import CsiFrame, CsiStream, RadioConfig

DEFAULT_WINDOW = 120
MIN_WINDOW = 8


@dataclass(frozen=True)
class SanitizedFrame:
    timestamp_s: float
    g: np.ndarray  # [n_antennas - 1, n_subcarriers]


@dataclass
class SanitizedStream:
    """Sanitized packets stacked as ``g[n, m - 1, k]`` (row 0 is antenna 1)."""

    radio: RadioConfig
    timestamps: np.ndarray
    g: np.ndarray

    def __len__(self):
        return self.g.shape[0]


@dataclass(frozen=True)
class SanitizedWindow:
    antenna: int
    subcarrier: int
    start_index: int
    samples: np.ndarray
    dt: float
    freq_hz: float = 5.805e9

    def __post_init__(self):
        if len(self.samples) < MIN_WINDOW:
            raise ValueError(f"window length must be >= {MIN_WINDOW}")

    @property
    def length(self) -> int:
        return len(self.samples)

    def replace_samples(self, samples) -> "SanitizedWindow":
        return SanitizedWindow(self.antenna, self.subcarrier, self.start_index,
                               np.asarray(samples, dtype=complex), self.dt, self.freq_hz)


def conjugate_sanitize(frame: CsiFrame) -> SanitizedFrame:
    """g[m - 1, k] = H[m, k] * conj(H[0, k]) for every surveillance antenna m."""
    h = np.asarray(frame.h)
    if h.ndim != 2 or h.shape[0] < 2:
        raise ValueError("no reference channel")
    return SanitizedFrame(frame.timestamp_s, h[1:] * np.conj(h[:1]))


def sanitize_stream(stream: CsiStream) -> SanitizedStream:
    h = stream.h
    if h.shape[1] < 2:
        raise ValueError("no reference channel")
    return SanitizedStream(stream.radio, stream.timestamps, h[:, 1:, :] * np.conj(h[:, :1, :]))


def window(stream: SanitizedStream, m: int, k: int, start: int, length: int = DEFAULT_WINDOW) -> SanitizedWindow:
    """The ``length`` consecutive samples of antenna ``m`` (1-based surveillance), subcarrier ``k``."""
    if start < 0 or start + length > len(stream):
        raise IndexError("window exceeds stream")
    if not 1 <= m < stream.g.shape[1] + 1:
        raise IndexError(f"antenna {m} is not a surveillance antenna")
    if not 0 <= k < stream.g.shape[2]:
        raise IndexError(f"subcarrier {k} out of range")
    return SanitizedWindow(m, k, start, stream.g[start:start + length, m - 1, k].copy(), stream.radio.dt,
                           float(stream.radio.subcarrier_freqs()[k]))


def remove_zero_frequency(x, guard_bins: int = 0, axis: int = -1) -> np.ndarray:
    """IDFT(DFT(x) with bins |q| <= guard_bins zeroed) along ``axis``."""
    x = np.asarray(x, dtype=complex)
    if guard_bins == 0:
        # bin 0 of the DFT is the sum, so nulling it is exact mean removal
        return x - x.mean(axis=axis, keepdims=True)
    spec = np.fft.fft(x, axis=axis)
    n = x.shape[axis]
    q = np.fft.fftfreq(n) * n
    mask = np.abs(q) <= guard_bins
    shape = [1] * x.ndim
    shape[axis] = n
    spec = np.where(mask.reshape(shape), 0.0, spec)
    return np.fft.ifft(spec, axis=axis)


def null_zero_frequency(w: SanitizedWindow, guard_bins: int = 0) -> SanitizedWindow:
    return w.replace_samples(remove_zero_frequency(w.samples, guard_bins))


def write_window_csv(path, w: SanitizedWindow):
    with open(path, "w", newline="\n") as fh:
        fh.write("index,re,im\n")
        for i, z in enumerate(w.samples):
            fh.write(f"{i},{float(z.real)!r},{float(z.imag)!r}\n")
