#!/usr/bin/env python3
"""Benchmark the compiled RK4 kernel against the pure-Python fallback.

Runs the reference startup simulation (2% margin, tanh saturation, 1000
steps per period) on both backends, checks the waveforms agree bit for bit,
and reports wall time and speedup.

Usage: python3 benchmarks/bench_transient.py [--periods N]
"""

import argparse
import time

import numpy as np

from dvccosc import (DvccParams, SimConfig, canonical_quadrature_netlist,
                     derive_state_space, fo_ideal, simulate)
from dvccosc.theory import OscParams
from dvccosc.transient import _compiled


def best_of(fn, repeats=3):
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        result = fn()
        times.append(time.perf_counter() - t0)
    return result, min(times)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--periods", type=int, default=200)
    args = parser.parse_args()

    r1, r2, c1, c2 = 2.04e3, 1e3, 10e-12, 20e-12
    f0 = fo_ideal(OscParams(r1, r2, c1, c2))
    netlist = canonical_quadrature_netlist(r1, r2, c1, c2, DvccParams())
    ss = derive_state_space(netlist)
    cfg = SimConfig(t_end=args.periods / f0, dt=1.0 / (1000.0 * f0),
                    initial_state=(0.0, 1e-3))
    n_steps = round(cfg.t_end / cfg.dt)
    print(f"canonical startup run: {n_steps} RK4 steps, "
          f"{ss.n_states} states, tanh saturation")

    wave_py, t_py = best_of(lambda: simulate(ss, cfg, backend="python"))
    print(f"python kernel:   {t_py:8.3f} s   "
          f"({n_steps / t_py / 1e6:6.2f} Msteps/s)")

    if _compiled is None:
        print("compiled kernel: not built (pip install -e . rebuilds it)")
        return

    wave_c, t_c = best_of(lambda: simulate(ss, cfg, backend="compiled"))
    print(f"compiled kernel: {t_c:8.3f} s   "
          f"({n_steps / t_c / 1e6:6.2f} Msteps/s)")
    print(f"speedup: {t_py / t_c:.1f}x")

    for (label, a), (_, b) in zip(wave_py.channels, wave_c.channels):
        if not np.array_equal(a, b):
            raise SystemExit(f"channel {label}: backends disagree")
    print("waveforms bit-identical across backends")


if __name__ == "__main__":
    main()
