"""Benchmark the compiled LSTM kernels against the pure-numpy fallback.

Runs matched forward+backward passes through both implementations and
reports per-call wall time and the compiled speedup.

Usage: python benchmarks/bench_kernels.py [--repeats N]
"""

import argparse
import time

import numpy as np

from adscreen.nn import _kernels_py, backend

SHAPES = (
    # (batch, steps, input, hidden) - the shipped interventions model and
    # two larger stress shapes
    (8, 32, 3, 16),
    (32, 32, 3, 16),
    (16, 64, 8, 64),
)


def run_pass(mod, x, wx, wh, b):
    B, T, _ = x.shape
    H = wh.shape[1]
    gates = np.empty((B, T, 4 * H))
    c = np.empty((B, T, H))
    h = np.empty((B, T, H))
    mod.lstm_forward_kernel(x, wx, wh, b, gates, c, h)
    dh = np.ones((B, H))
    dwx = np.zeros_like(wx)
    dwh = np.zeros_like(wh)
    db = np.zeros_like(b)
    dx = np.empty_like(x)
    mod.lstm_backward_kernel(x, wx, wh, gates, c, h, dh, dwx, dwh, db, dx)
    return h


def bench(mod, x, wx, wh, b, repeats):
    run_pass(mod, x, wx, wh, b)  # warm up
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        run_pass(mod, x, wx, wh, b)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=20)
    args = parser.parse_args()

    if not backend.COMPILED:
        print("compiled kernels unavailable; benchmarking the fallback only")

    print(f"{'shape (B,T,I,H)':<20} {'pure numpy':>12} {'compiled':>12} {'speedup':>9}")
    rng = np.random.default_rng(0)
    for shape in SHAPES:
        B, T, I, H = shape
        x = rng.normal(size=(B, T, I))
        wx = rng.normal(size=(4 * H, I)) * 0.2
        wh = rng.normal(size=(4 * H, H)) * 0.2
        b = np.zeros(4 * H)

        t_pure = bench(_kernels_py, x, wx, wh, b, args.repeats)
        row = f"{str(shape):<20} {t_pure * 1e3:>10.3f}ms"
        if backend.COMPILED:
            h_pure = run_pass(_kernels_py, x, wx, wh, b)
            h_comp = run_pass(backend._impl, x, wx, wh, b)
            assert np.allclose(h_pure, h_comp, atol=1e-12), "kernel outputs diverge"
            t_comp = bench(backend._impl, x, wx, wh, b, args.repeats)
            row += f" {t_comp * 1e3:>10.3f}ms {t_pure / t_comp:>8.1f}x"
        print(row)


if __name__ == "__main__":
    main()
