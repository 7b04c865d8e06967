import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from dpace.features import (FEATURE_NAMES, DegenerateSegment, FeatureVector, extract_features, histogram_mode, iqr,
                            kurtosis, relative_feature, relative_iqr, skewness, truncated_mean)
from dpace.pipeline import fall_labeler
from dpace.scenarios import activity_profile
from dpace.trace import AccelTrace, Segment, segment, smooth_trace
from oracles import moments_oracle

samples = arrays(np.float64, st.integers(3, 40), elements=st.floats(-100, 100, allow_subnormal=False))


def test_truncated_mean_examples():
    assert truncated_mean([1, 2, 3]) == 2.0
    assert truncated_mean([1.0] * 20 + [100.0]) == 1.0
    assert truncated_mean(np.full(9, 4.5)) == 4.5
    with pytest.raises(ValueError):
        truncated_mean([1.0, 2.0])


def test_relative_feature_examples():
    assert relative_feature(2, 2, 2) == 1.0
    assert relative_feature(1, 2, 4) == 1.25
    assert relative_feature(0, 1, 1, with_flag=True) == (0.0, True)
    assert relative_feature(1, 1, 0) == 0.0


def test_relative_iqr_examples():
    base = np.linspace(-1, 1, 21)
    assert relative_iqr(base, base, base) == 1.0
    assert relative_iqr(base, 2 * base + 3, base) == pytest.approx(2.0, abs=1e-12)
    assert relative_iqr(np.ones(6), base, base, with_flag=True) == (0.0, True)
    with pytest.raises(ValueError):
        relative_iqr(base[:3], base, base)


def test_iqr_linear_interpolation():
    # quartiles of 1..8 at positions 1.75 and 5.25 of the sorted sample
    assert iqr(np.arange(1.0, 9.0)) == pytest.approx(6.25 - 2.75)


def test_moments_examples():
    assert skewness([-1.0, 0.0, 1.0]) == 0.0
    assert skewness([-1.0, 1.0, -1.0, 1.0]) == 0.0
    assert kurtosis([-1.0, 1.0, -1.0, 1.0]) == pytest.approx(0.5625, abs=1e-15)
    # deviations (-0.75, -0.75, -0.75, 2.25), variance 2.25
    assert skewness([0.0, 0.0, 0.0, 3.0]) == pytest.approx(0.75, abs=1e-15)
    assert kurtosis([0.0, 0.0, 0.0, 3.0]) == pytest.approx(1.3125, abs=1e-15)


def test_moments_degenerate():
    with pytest.raises(DegenerateSegment, match="degenerate segment"):
        skewness([2.0, 2.0, 2.0])
    with pytest.raises(ValueError):
        kurtosis([1.0, 2.0])


@settings(max_examples=100, deadline=None)
@given(samples)
def test_moments_match_oracle(x):
    assume(np.ptp(x) > 1e-6)
    assert skewness(x) == pytest.approx(moments_oracle.skewness(list(x)), rel=1e-9, abs=1e-12)
    assert kurtosis(x) == pytest.approx(moments_oracle.kurtosis(list(x)), rel=1e-9, abs=1e-12)


def test_right_tail_skew_positive():
    assert skewness([-2.0, -1.0, 0.0, 1.0, 2.0, 12.0]) > 0


def test_histogram_mode():
    x = np.array([0.0, 0.1, 0.1, 0.1, 0.9, 1.0])
    counts, edges = np.histogram(x, 32, (0.0, 1.0))
    assert histogram_mode(x) == pytest.approx(0.5 * (edges[3] + edges[4]))
    # two equally full bins: the lower one wins
    assert histogram_mode(np.array([0.0, 1.0])) == pytest.approx(0.5 / 32)
    assert histogram_mode(np.full(4, 2.0)) == 2.0


def _trace(x):
    return AccelTrace(np.arange(len(x)) * 0.05, x, x)


def test_extract_identical_segments():
    seg = np.array([0.0, 1.0, 3.0, 1.5, -0.5, 2.0, 0.5, 1.0, -1.0, 0.2])
    x = np.tile(seg, 3)
    segs = [Segment(0, 10), Segment(10, 20), Segment(20, 30)]
    (f,) = extract_features(segs, _trace(x))
    assert np.allclose(f.values[:6], 1.0)
    assert f.Sk == pytest.approx(skewness(seg)) and f.Kt == pytest.approx(kurtosis(seg))
    assert not f.flags.any() and f.start == 10 and f.end == 20


def test_extract_needs_three_segments():
    assert extract_features([Segment(0, 5), Segment(5, 10)], _trace(np.arange(10.0))) == []


def test_extract_flags_degenerate_neighbour():
    x = np.concatenate([np.ones(8), np.linspace(0, 1, 8), np.linspace(1, 3, 8)])
    (f,) = extract_features([Segment(0, 8), Segment(8, 16), Segment(16, 24)], _trace(x))
    i = FEATURE_NAMES.index("rStd")
    assert f.flags[i] and f.values[i] == 0.0
    assert np.all(np.isfinite(f.values))


@settings(max_examples=40, deadline=None)
@given(arrays(np.float64, 40, elements=st.floats(-10, 10, allow_subnormal=False)), st.floats(0.01, 100))
def test_relative_features_scale_invariant(x, lam):
    segs = [Segment(0, 10), Segment(10, 20), Segment(20, 30), Segment(30, 40)]
    assume(all(np.ptp(x[s.start:s.end]) > 1e-3 for s in segs))
    a = extract_features(segs, _trace(x))
    b = extract_features(segs, _trace(lam * x))
    for fa, fb in zip(a, b):
        for name in ("rTM", "rMedian", "rStd", "rIQR", "rExtremeDev", "Sk", "Kt"):
            assert getattr(fb, name) == pytest.approx(getattr(fa, name), rel=1e-6, abs=1e-9)


def test_extract_order_independent():
    x = np.sin(np.arange(60) * 0.7) + 0.1 * np.arange(60)
    segs = [Segment(0, 12), Segment(12, 30), Segment(30, 41), Segment(41, 60)]
    a = extract_features(segs, _trace(x))
    b = extract_features(segs, _trace(x))
    assert all(np.array_equal(p.values, q.values) for p, q in zip(a, b))


def _ideal_trace(kind, seed, rate=20.0):
    rng = np.random.default_rng(seed)
    prof, ev = activity_profile(kind, v_mean=1.1, n_steps=5, rest_s=1.2, rng=rng, accel_amp=1.5, jitter=0.1)
    t = np.arange(int(prof.duration * rate)) / rate
    _, _, a = prof.state(t)
    a = a + 0.05 * rng.standard_normal(len(t))
    return smooth_trace(AccelTrace(t, a, a.copy())), ev


def test_fall_segment_extreme_deviation():
    tr, ev = _ideal_trace("fall", 0)
    feats = extract_features(segment(tr, tr.peaks), tr, fall_labeler([ev]))
    fall = [f for f in feats if f.label == 1]
    assert len(fall) == 1 and fall[0].rExtremeDev > 2


def test_feature_vector_shape():
    with pytest.raises(ValueError):
        FeatureVector(np.zeros(7), np.zeros(7, bool))
    f = FeatureVector(np.arange(8.0), np.zeros(8, bool))
    assert f.as_array().shape == (16,) and f.rMode == 2.0
