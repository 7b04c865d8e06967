"""
Scenario builders: default multipath geometry, SNR handling and the
kinematic profiles (walking gait, falls, sit/stand) used by the demos and
the acceptance experiments.
"""

from __future__ import annotations

from typing import Optional, Sequence

import numpy as np

from .synth import ImpairmentSpec, KinematicProfile, PathSpec, RadioConfig, Scenario

DIRECT_AMPLITUDE = 1.0
STATIC_AMPLITUDE = 0.3
DYNAMIC_AMPLITUDE = 0.1
# the reference antenna is directional; it sees dynamic paths only as weak leakage
REFERENCE_LEAKAGE = 0.1

DEFAULT_IMPAIRMENTS = dict(pdd_s=50e-9, sfo_s=1e-12, cfo_cycles=0.1)


def noise_power_for_snr(snr_db: Optional[float], amplitude: float = DYNAMIC_AMPLITUDE) -> float:
    """Per-antenna noise variance giving ``snr_db`` against a dynamic path of ``amplitude``."""
    if snr_db is None:
        return 0.0
    return amplitude ** 2 / 10 ** (snr_db / 10)


def standard_paths(radio: RadioConfig, profiles: Sequence[KinematicProfile],
                   amplitudes: Optional[Sequence[float]] = None, n_static: int = 2,
                   layout_seed: int = 0, reference_leakage: float = REFERENCE_LEAKAGE,
                   include_static: bool = True, include_dynamic: bool = True):
    """Direct path, ``n_static`` static reflections and one dynamic path per profile.

    Antenna geometry (per-antenna ToF offsets, reflection phases) is drawn
    from ``layout_seed`` so it is reproducible and independent of the noise
    seed.
    """
    rng = np.random.default_rng(layout_seed)
    m = radio.n_antennas
    paths = [PathSpec("direct", DIRECT_AMPLITUDE, 1.33e-9 + rng.uniform(0, 0.2e-9, m))]
    if include_static:
        for _ in range(n_static):
            amp = STATIC_AMPLITUDE * np.exp(2j * np.pi * rng.uniform(size=m))[:, None]
            paths.append(PathSpec("static_reflection", amp, rng.uniform(10e-9, 40e-9) + rng.uniform(0, 0.2e-9, m)))
    if amplitudes is None:
        amplitudes = [DYNAMIC_AMPLITUDE] * len(profiles)
    for prof, amp in zip(profiles, amplitudes):
        gain = np.full(m, amp, dtype=complex) * np.exp(2j * np.pi * rng.uniform(size=m))
        gain[0] *= reference_leakage
        tof = rng.uniform(15e-9, 30e-9) + rng.uniform(0, 0.2e-9, m)
        if include_dynamic:
            paths.append(PathSpec("dynamic", gain[:, None], tof, prof))
    return tuple(paths)


def make_scenario(profiles: Sequence[KinematicProfile], duration_s: float, *, radio: Optional[RadioConfig] = None,
                  snr_db: Optional[float] = 20.0, amplitudes=None, seed: int = 0, impairments: bool = True,
                  layout_seed: Optional[int] = None, **path_kw) -> Scenario:
    radio = radio or RadioConfig()
    amps = list(amplitudes) if amplitudes is not None else [DYNAMIC_AMPLITUDE] * len(profiles)
    ref_amp = max(amps) if amps else DYNAMIC_AMPLITUDE
    imp = ImpairmentSpec(noise_power=noise_power_for_snr(snr_db, ref_amp),
                         **(DEFAULT_IMPAIRMENTS if impairments else {}))
    paths = standard_paths(radio, profiles, amps, layout_seed=seed if layout_seed is None else layout_seed,
                           **path_kw)
    return Scenario(radio, paths, imp, duration_s, seed)


def single_target(v: float, a: float, duration_s: float = 0.2, **kw) -> Scenario:
    return make_scenario([KinematicProfile.constant(v, a, duration_s)], duration_s, **kw)


# ---------------------------------------------------------------- kinematics

def gait_segments(n_steps: int, step_s: float = 0.55, accel_amp: float = 1.5, rng=None,
                  jitter: float = 0.0):
    """(duration, a) pieces: each step is a deceleration half then an acceleration half.

    The mean acceleration over a step is zero, so velocity oscillates around
    its starting value.
    """
    segs = []
    for _ in range(n_steps):
        amp = accel_amp
        dur = step_s
        if rng is not None and jitter:
            amp *= 1 + jitter * rng.uniform(-1, 1)
            dur *= 1 + 0.5 * jitter * rng.uniform(-1, 1)
        segs.append((dur / 2, -amp))
        segs.append((dur / 2, amp))
    return segs


def gait_walk(v_mean: float, n_steps: int, step_s: float = 0.55, accel_amp: float = 1.5,
              rng=None, jitter: float = 0.0) -> KinematicProfile:
    """Walking profile whose mean velocity is ``v_mean``."""
    segs = gait_segments(n_steps, step_s, accel_amp, rng, jitter)
    # first half-step decelerates; start half a swing high so the mean is v_mean
    v0 = v_mean + accel_amp * step_s / 4
    return KinematicProfile.from_accelerations(v0, segs)


def walk_distance(profile: KinematicProfile) -> float:
    return float(profile.state(profile.duration)[0])


def fall_segments(v_now: float, peak_a: float = 8.0, duration_s: float = 0.4):
    """A 0.4 s burst: sharp acceleration then a harder stop to zero velocity."""
    up = duration_s * 0.4
    down = duration_s - up
    v_peak = v_now + peak_a * up
    return [(up, peak_a), (down, -v_peak / down)]


def _final_velocity(segs, v0):
    v = v0
    for dur, a in segs:
        v += dur * a
    return v


ACTIVITIES = ("fall", "sit", "stand", "walk")


def activity_profile(kind: str, v_mean: float = 1.0, n_steps: int = 4, rest_s: float = 1.0, rng=None,
                     step_s: float = 0.55, accel_amp: float = 1.5, jitter: float = 0.0,
                     fall_peak: float = 8.0, transition_s: float = 0.8, resume_steps: int = 3,
                     direction: float = 1.0):
    """Walking combined with one event.

    * ``fall``: walk, a 0.4 s burst ending at rest, ``rest_s`` of quiescence.
    * ``sit``: walk, a gentle constant deceleration to rest over ``transition_s``, quiescence.
    * ``stand``: quiescence, then the gentle start described below and
      ``n_steps + resume_steps`` steps.
    * ``walk``: walking only.

    After the rest, ``fall`` and ``sit`` (and ``stand`` from the outset)
    restart over ``transition_s`` and walk ``resume_steps`` more steps, so the
    event is followed by further motion.  ``direction = -1`` mirrors the
    profile (path length shrinking instead of growing).  Returns (profile,
    event_interval); the interval is the fall burst or None.
    """
    prof, event = _activity(kind, v_mean, n_steps, rest_s, rng, step_s, accel_amp, jitter, fall_peak,
                            transition_s, resume_steps)
    if direction < 0:
        prof = KinematicProfile(tuple((d, -v0, -a) for d, v0, a in prof.pieces))
    return prof, event


def _activity(kind, v_mean, n_steps, rest_s, rng, step_s, accel_amp, jitter, fall_peak, transition_s,
              resume_steps):
    if kind not in ACTIVITIES:
        raise ValueError(f"unknown activity {kind!r}")
    swing = accel_amp * step_s / 4
    v_top = v_mean + swing
    restart = [(transition_s, v_top / transition_s)] + gait_segments(resume_steps, step_s, accel_amp, rng, jitter)
    if kind == "stand":
        restart += gait_segments(n_steps, step_s, accel_amp, rng, jitter)
        return KinematicProfile.from_accelerations(0.0, [(rest_s, 0.0)] + restart), None
    segs = gait_segments(n_steps, step_s, accel_amp, rng, jitter)
    v_end = _final_velocity(segs, v_top)
    walked = sum(d for d, _ in segs)
    event = None
    if kind == "fall":
        burst = fall_segments(v_end, fall_peak)
        segs += burst + [(rest_s, 0.0)] + restart
        event = (walked, walked + sum(d for d, _ in burst))
    elif kind == "sit":
        segs += [(transition_s, -v_end / transition_s), (rest_s, 0.0)] + restart
    return KinematicProfile.from_accelerations(v_top, segs), event
