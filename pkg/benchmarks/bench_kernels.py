#!/usr/bin/env python3
"""Benchmark the compiled trajectory kernel against the pure-Python
fallback on a representative driven workload, and verify they produce
bitwise-identical results.

Usage: python benchmarks/bench_kernels.py [n_steps] [n_traj]
"""

import sys
import time

import numpy as np

from calojump import EnergyGrid, ModelConfig, build_rate_table
from calojump.kernels import run_steps_cython, run_steps_python


def run_backend(fn, table, cfg, n_steps, n_traj):
    out = []
    t0 = time.perf_counter()
    for j in range(n_traj):
        uniforms = np.random.Generator(np.random.Philox(key=[1234, j])).random(n_steps)
        samp_cg = np.zeros(2, dtype=complex)
        samp_ce = np.zeros(2, dtype=complex)
        samp_e = np.zeros(2, dtype=np.int64)
        ev_s = np.zeros(4096, dtype=np.int64)
        ev_k = np.zeros(4096, dtype=np.int8)
        ev_e = np.zeros(4096, dtype=np.int64)
        res = fn(1.0, 0.0, 0.0, 0.0, table.grid.offset(0),
                 table.gamma_up, table.gamma_down, table.expected_e,
                 cfg.lambda_drive, cfg.gamma_loss, 0.03, n_steps, n_steps, 0,
                 uniforms, samp_cg, samp_ce, samp_e, ev_s, ev_k, ev_e)
        out.append((res, ev_s[:res[2]].copy(), ev_k[:res[2]].copy()))
    elapsed = time.perf_counter() - t0
    return out, elapsed


def main():
    n_steps = int(sys.argv[1]) if len(sys.argv) > 1 else 10_472
    n_traj = int(sys.argv[2]) if len(sys.argv) > 2 else 50

    cfg = ModelConfig(kappa=0.001, lambda_drive=0.05, n_osc=10, k_noise=4.0,
                      n_cutoff=100, gamma_loss=0.0005)
    grid = EnergyGrid(-100, 120)
    table = build_rate_table(cfg, grid)
    total = n_steps * n_traj

    print(f"workload: {n_traj} trajectories x {n_steps} steps = {total:.3g} steps\n")
    results = {}
    for name, fn in (("python", run_steps_python), ("cython", run_steps_cython)):
        if fn is None:
            print(f"{name:>8}: unavailable")
            continue
        out, elapsed = run_backend(fn, table, cfg, n_steps, n_traj)
        results[name] = out
        print(f"{name:>8}: {elapsed:8.3f} s  ({total / elapsed / 1e6:7.2f} M steps/s)")

    if len(results) == 2:
        identical = all(
            a[0] == b[0] and np.array_equal(a[1], b[1]) and np.array_equal(a[2], b[2])
            for a, b in zip(results["python"], results["cython"])
        )
        print(f"\nbitwise identical results: {identical}")
        if not identical:
            sys.exit(1)


if __name__ == "__main__":
    main()
