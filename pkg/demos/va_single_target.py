"""Estimate (v, a) of one reflector from a 0.2 s window and compare with the truth.

    python demos/va_single_target.py [v a]
"""

import sys

import numpy as np

from dpace.estimator import EstimatorConfig, estimate_eliminate_array, geometry, plane_array, plane_axes, refined_bin_size
from dpace.preprocess import DEFAULT_WINDOW
from dpace.scenarios import single_target
from dpace.synth import synthesize
from dpace.trace import window_stack


def main(v=1.2, a=2.5):
    cfg = EstimatorConfig()
    # velocity is reported at the window centre, so start the profile earlier
    t_mid = 0.5 * (DEFAULT_WINDOW - 1) / 600.0
    stream, _ = synthesize(single_target(v - a * t_mid, a, snr_db=20.0, seed=1))
    J, freqs, dt = window_stack(stream, 0, DEFAULT_WINDOW)
    res = estimate_eliminate_array(J, freqs, dt, cfg)
    dv, da = refined_bin_size(cfg, DEFAULT_WINDOW, dt)
    p = res.peaks[0]
    print(f"truth      v = {v:+.4f} m/s   a = {a:+.4f} m/s^2")
    print(f"estimate   v = {p.v_mps:+.4f} m/s   a = {p.a_mps2:+.4f} m/s^2")
    print(f"bin size  dv = {dv:.4f} m/s  da = {da:.4f} m/s^2")

    geom = geometry(cfg, DEFAULT_WINDOW, dt)
    v_axis, a_axis = plane_axes(geom, cfg.f_ref_hz, cfg.c)
    mag = np.abs(plane_array(J, geom, cfg)).mean(axis=0)
    iv, ia = np.unravel_index(np.argmax(mag), mag.shape)
    print(f"plane      {mag.shape[0]} x {mag.shape[1]} bins, raw peak at ({v_axis[iv]:+.3f}, {a_axis[ia]:+.3f})")


if __name__ == "__main__":
    main(*map(float, sys.argv[1:3]))
