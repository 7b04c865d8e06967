"""
Seeded synthetic corpora for distance and fall-detection experiments.

Corpus traces use a reduced 16-subcarrier radio (same 80 MHz band) because
only a few subcarriers are fused per window; this keeps synthesis cheap
without changing any per-subcarrier value the estimator sees.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .scenarios import DYNAMIC_AMPLITUDE, activity_profile, gait_walk, make_scenario
from .synth import KinematicProfile, RadioConfig, Scenario

CORPUS_RADIO = RadioConfig(n_subcarriers=16)
CORPUS_SUBCARRIERS = (4, 12)
NEGATIVE_KINDS = ("sit", "stand", "walk")


@dataclass
class CorpusEntry:
    trace_id: str
    scenario: Scenario
    kinds: tuple  # activity per dynamic path
    events: tuple  # (path_index, t_start, t_end) for every fall

    @property
    def has_fall(self) -> bool:
        return bool(self.events)


def _draw_activity(kind, rng, direction=1.0, v_range=(0.8, 1.4)):
    return activity_profile(
        kind,
        v_mean=rng.uniform(*v_range),
        n_steps=int(rng.integers(4, 7)),
        rest_s=rng.uniform(0.8, 1.5),
        rng=rng,
        accel_amp=rng.uniform(1.0, 2.0),
        jitter=0.15,
        fall_peak=rng.uniform(6.0, 10.0),
        transition_s=rng.uniform(0.6, 1.0),
        direction=direction,
    )


def fall_corpus(n_traces: int = 200, seed: int = 0, radio: RadioConfig = CORPUS_RADIO,
                snr_db: float = 20.0) -> list:
    """Single-target traces; even indices fall, odd ones cycle through sit, stand, walk.

    The walking direction alternates every two traces so both classes see
    approaching and receding motion.
    """
    out = []
    for i in range(n_traces):
        rng = np.random.default_rng([seed, i])
        kind = "fall" if i % 2 == 0 else NEGATIVE_KINDS[(i // 2) % 3]
        prof, ev = _draw_activity(kind, rng, direction=1.0 if (i // 2) % 2 == 0 else -1.0)
        sc = make_scenario([prof], prof.duration, radio=radio, snr_db=snr_db,
                           seed=int(rng.integers(2 ** 31)))
        events = ((0,) + tuple(ev),) if ev else ()
        out.append(CorpusEntry(f"single-{i:03d}", sc, (kind,), events))
    return out


def two_target_corpus(n_traces: int = 40, seed: int = 1, radio: RadioConfig = CORPUS_RADIO,
                      snr_db: float = 20.0, amplitude_ratio: float = 0.7) -> list:
    """Two people moving in opposite directions; in every trace one of them falls.

    The other keeps walking for the whole trace, so the pair stays apart in
    velocity.  Even indices make the stronger reflector fall, odd indices
    the weaker one (``amplitude_ratio`` times the stronger amplitude).
    """
    out = []
    for i in range(n_traces):
        rng = np.random.default_rng([seed, i])
        faller = i % 2
        fall_prof, ev = _draw_activity("fall", rng, direction=1.0 if faller == 0 else -1.0)
        step_s = 0.55
        n_steps = int(np.ceil(fall_prof.duration / step_s)) + 1
        walk_prof = gait_walk(rng.uniform(0.8, 1.4), n_steps, step_s, rng.uniform(1.0, 2.0), rng=rng, jitter=0.15)
        if faller == 0:
            walk_prof = _mirror(walk_prof)
        profs = [fall_prof, walk_prof] if faller == 0 else [walk_prof, fall_prof]
        kinds = ("fall", "walk") if faller == 0 else ("walk", "fall")
        amps = [DYNAMIC_AMPLITUDE, DYNAMIC_AMPLITUDE * amplitude_ratio]
        sc = make_scenario(profs, fall_prof.duration, radio=radio, snr_db=snr_db, amplitudes=amps,
                           seed=int(rng.integers(2 ** 31)))
        out.append(CorpusEntry(f"pair-{i:03d}", sc, kinds, ((faller,) + tuple(ev),)))
    return out


def _mirror(prof: KinematicProfile) -> KinematicProfile:
    return KinematicProfile(tuple((d, -v0, -a) for d, v0, a in prof.pieces))


def distance_walk(seed: int, distance_m: float = 9.6, v_mean: float = 1.2, step_s: float = 0.55,
                  accel_amp: float = 1.5, radio: RadioConfig = CORPUS_RADIO, snr_db: float = 20.0,
                  jitter: float = 0.1) -> Scenario:
    """Gait walk covering about ``distance_m`` of path length change."""
    rng = np.random.default_rng(seed)
    n_steps = int(round(distance_m / (v_mean * step_s)))
    prof = gait_walk(v_mean, n_steps, step_s, accel_amp, rng=rng, jitter=jitter)
    return make_scenario([prof], prof.duration, radio=radio, snr_db=snr_db, seed=seed)

