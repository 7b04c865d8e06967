import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from dpace.preprocess import (SanitizedWindow, conjugate_sanitize, null_zero_frequency, remove_zero_frequency,
                              sanitize_stream, window, write_window_csv)
from dpace.scenarios import single_target
from dpace.synth import CsiFrame, ImpairmentSpec, PathSpec, RadioConfig, Scenario, synthesize

RADIO = RadioConfig(n_subcarriers=8)
complex_vec = arrays(np.complex128, st.integers(8, 64),
                     elements=st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False))


def _window(samples):
    return SanitizedWindow(1, 0, 0, np.asarray(samples, complex), 1 / 600)


def test_single_antenna_frame_rejected():
    with pytest.raises(ValueError, match="no reference channel"):
        conjugate_sanitize(CsiFrame(0.0, np.ones((1, 4), complex)))


def test_zero_frame_gives_zero():
    assert np.all(conjugate_sanitize(CsiFrame(0.0, np.zeros((4, 8), complex))).g == 0)


def test_direct_path_value():
    tof = np.array([1.0e-9, 1.3e-9, 1.1e-9, 1.6e-9])
    stream, _ = synthesize(Scenario(RADIO, (PathSpec("direct", 1.0, tof),), duration_s=0.01))
    g = conjugate_sanitize(stream.frame(0)).g
    f = RADIO.subcarrier_freqs()
    expected = np.exp(-2j * np.pi * f[None, :] * (tof[1:, None] - tof[0]))
    assert np.allclose(g, expected, atol=1e-12)


def test_phase_error_cancels():
    base = single_target(1.0, 1.0, radio=RADIO, snr_db=None, impairments=False, seed=3)
    imp = Scenario(base.radio, base.paths, ImpairmentSpec(50e-9, 1e-12, 0.3), base.duration_s, seed=3)
    g0 = sanitize_stream(synthesize(base)[0]).g
    g1 = sanitize_stream(synthesize(imp)[0]).g
    assert np.max(np.abs(g1 - g0)) <= 1e-12 * np.max(np.abs(g0))


def _stream():
    sc = single_target(1.0, 0.5, radio=RADIO, seed=1)
    return sanitize_stream(synthesize(sc)[0])


def test_window_full_and_overlap():
    s = _stream()
    n = len(s)
    full = window(s, 1, 3, 0, n)
    assert np.array_equal(full.samples, s.g[:, 0, 3])
    a, b = window(s, 2, 5, 0, 60), window(s, 2, 5, 30, 60)
    assert np.array_equal(a.samples[30:], b.samples[:30])


@pytest.mark.parametrize("args", [(1, 0, 200, 120), (1, 0, -1, 120), (0, 0, 0, 120), (1, 8, 0, 120)])
def test_window_out_of_range(args):
    with pytest.raises(IndexError):
        window(_stream(), *args)


def test_window_error_message():
    with pytest.raises(IndexError, match="window exceeds stream"):
        window(_stream(), 1, 0, 100, 120)


def test_short_window_rejected():
    with pytest.raises(ValueError):
        _window(np.ones(7))


def test_null_constant_tone_and_sum():
    W = 120
    n = np.arange(W)
    tone = np.exp(2j * np.pi * 7 * n / W)
    assert np.allclose(null_zero_frequency(_window(np.full(W, 2 - 1j))).samples, 0, atol=1e-15)
    assert np.allclose(null_zero_frequency(_window(tone)).samples, tone, atol=1e-12)
    mixed = null_zero_frequency(_window(3.0 + tone)).samples
    assert np.allclose(mixed, (3.0 + tone) - 3.0, atol=1e-12)


def test_guard_band_matches_dft_oracle():
    x = np.random.default_rng(0).standard_normal(64) + 0j
    spec = np.fft.fft(x)
    spec[[0, 1, 2, -1, -2]] = 0
    assert np.allclose(remove_zero_frequency(x, guard_bins=2), np.fft.ifft(spec), atol=1e-12)


@settings(max_examples=50, deadline=None)
@given(complex_vec)
def test_null_idempotent(x):
    once = remove_zero_frequency(x)
    assert np.allclose(remove_zero_frequency(once), once, atol=1e-9)


@settings(max_examples=50, deadline=None)
@given(complex_vec, st.complex_numbers(max_magnitude=5), st.complex_numbers(max_magnitude=5))
def test_null_linear(x, alpha, beta):
    y = np.roll(x, 1)[::-1]
    lhs = remove_zero_frequency(alpha * x + beta * y)
    rhs = alpha * remove_zero_frequency(x) + beta * remove_zero_frequency(y)
    assert np.allclose(lhs, rhs, atol=1e-8)


def test_static_only_window_energy_vanishes():
    paths = (PathSpec("direct", 1.0, 2e-9), PathSpec("static_reflection", 0.3, 20e-9))
    s = sanitize_stream(synthesize(Scenario(RADIO, paths, duration_s=0.2))[0])
    w = window(s, 1, 2, 0)
    e_in = np.sum(np.abs(w.samples) ** 2)
    assert np.sum(np.abs(null_zero_frequency(w).samples) ** 2) <= 1e-20 * e_in


def test_window_csv(tmp_path):
    w = _window(np.arange(8) + 1j)
    write_window_csv(tmp_path / "w.csv", w)
    lines = (tmp_path / "w.csv").read_text().splitlines()
    assert lines[0] == "index,re,im" and lines[1] == "0,0.0,1.0" and len(lines) == 9
