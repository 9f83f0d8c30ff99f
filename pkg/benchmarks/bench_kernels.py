#!/usr/bin/env python3
"""Benchmark the compiled kernels against the pure-Python fallback.

Times one composite-load simulation (the inner loop of every fitness
evaluation) and one discrete-Fréchet dynamic program, then prints both
backends side by side.

    python benchmarks/bench_kernels.py [--repeats 200]
"""

import argparse
import time

import numpy as np

from loadid import _purekernels, scenarios
from loadid.loadmodel import derive_im_constants, init_steady_state

try:
    from loadid import _native
except ImportError:
    _native = None


def simulate_args():
    spec = scenarios.builtin_scenario("S1")
    series = scenarios.synthesize_measurements(spec)
    init = init_steady_state(spec.truth, 1.0, 1.0, 0.5)
    im = spec.truth.im
    zp = spec.truth.zip
    d = derive_im_constants(im)
    return (
        np.ascontiguousarray(series.v), series.dt, 1, 1.0,
        init.p_zip0, init.q_zip0,
        zp.a_p, zp.b_p, zp.c_p, zp.a_q, zp.b_q, zp.c_q,
        im.r_s, d.x_prime, d.x_open - d.x_prime, d.t_prime,
        2.0 * im.h, im.a, im.b, im.c, init.t_0,
        init.state0.e_d, init.state0.e_q, init.state0.omega,
    )


def time_call(fn, args, repeats):
    fn(*args)  # warm up
    start = time.perf_counter()
    for _ in range(repeats):
        fn(*args)
    return (time.perf_counter() - start) / repeats


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=200)
    args = parser.parse_args()

    sim_args = simulate_args()
    rng = np.random.default_rng(0)
    a = rng.normal(size=(300, 2))
    b = rng.normal(size=(300, 2))
    diff = a[:, None, :] - b[None, :, :]
    dist = np.ascontiguousarray(np.sqrt(np.sum(diff * diff, axis=2)))

    rows = []
    for label, kernel, kargs in (
        ("simulate_pq (500 samples)", "simulate_pq", sim_args),
        ("frechet_dp (300x300)", "frechet_dp", (dist,)),
    ):
        pure = time_call(getattr(_purekernels, kernel), kargs, args.repeats)
        if _native is not None:
            native = time_call(getattr(_native, kernel), kargs, args.repeats)
            rows.append((label, pure, native, pure / native))
        else:
            rows.append((label, pure, None, None))

    print(f"{'kernel':<28} {'pure (ms)':>10} {'native (ms)':>12} {'speedup':>8}")
    for label, pure, native, speedup in rows:
        if native is None:
            print(f"{label:<28} {pure * 1e3:>10.3f} {'n/a':>12} {'n/a':>8}")
        else:
            print(f"{label:<28} {pure * 1e3:>10.3f} {native * 1e3:>12.3f} {speedup:>7.1f}x")
    if _native is None:
        print("\ncompiled extension not built; run `python setup.py build_ext --inplace`")


if __name__ == "__main__":
    main()
