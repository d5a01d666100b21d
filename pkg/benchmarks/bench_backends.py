#!/usr/bin/env python3
"""Compare the compiled and pure-Python likelihood backends.

Times the two hot kernels (neighbor-set construction and conditional
factor evaluation) on a synthetic dataset and verifies that both backends
return identical neighbor sets and matching log-likelihoods.

Usage: python benchmarks/bench_backends.py [--signals 8] [--k 10] [--reps 5]
"""
import argparse
import time

import numpy as np

from warpgp import (
    Dataset,
    FrequencyGrid,
    GlobalParams,
    ModelParams,
    NngpConfig,
    Permutation,
    Spectrogram,
    TimeGrid,
    validate_dataset,
)
from warpgp._core import Kernels, KernelTables, MODE_FULL, PointLayout
from warpgp.nngp import warped_times
from warpgp.params import signal_params_from_tilde


def make_dataset(n_signals: int, seed: int) -> Dataset:
    rng = np.random.default_rng(seed)
    freq = FrequencyGrid.default()
    sigs = []
    for i, T in enumerate(rng.integers(10, 26, size=n_signals)):
        sigs.append(Spectrogram(id=i + 1, time=TimeGrid(int(T)), freq=freq,
                                values=rng.normal(0.0, 3.0, (int(T), 26))))
    return validate_dataset(Dataset(signals=tuple(sigs)))


def bench(backend: str, layout, tables, k: int, mu, tau2, reps: int):
    kern = Kernels(layout, k, backend=backend)
    nbr = np.full((layout.n, 4 * k), -1, dtype=np.int32)
    cnt = np.zeros((layout.n, 4), dtype=np.int32)
    pts = np.arange(layout.n, dtype=np.int64)
    out = np.empty(layout.n)
    kern.rebuild_sets(tables, pts, MODE_FULL, nbr, cnt)
    t0 = time.perf_counter()
    for _ in range(reps):
        kern.rebuild_sets(tables, pts, MODE_FULL, nbr, cnt)
    t_sets = (time.perf_counter() - t0) / reps
    kern.eval_factors(tables, 10.0, 0.5, mu, tau2, nbr, cnt, pts, out)
    t0 = time.perf_counter()
    for _ in range(reps):
        kern.eval_factors(tables, 10.0, 0.5, mu, tau2, nbr, cnt, pts, out)
    t_eval = (time.perf_counter() - t0) / reps
    return t_sets, t_eval, nbr.copy(), cnt.copy(), float(out.sum())


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--signals", type=int, default=8)
    ap.add_argument("--k", type=int, default=10)
    ap.add_argument("--reps", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    ds = make_dataset(args.signals, args.seed)
    layout = PointLayout.from_dataset(ds)
    g = GlobalParams(sigma2=10.0, lam=0.5, phi_d=206.0, phi_c=766.0,
                     phi_h=0.69, rho=0.85, gamma=0.06)
    params = ModelParams(globals_=g, signals=tuple(
        signal_params_from_tilde(0.05, 0.9, 0.3, -0.2, 0.0, 1.2, s.length)
        for s in ds.signals))
    perm = Permutation.identity(ds.n_signals)
    tables = KernelTables.build(layout, warped_times(layout, params),
                                perm.prev_signal_array(), g)
    mu = np.zeros(ds.n_signals)
    tau2 = np.full(ds.n_signals, 1.2)

    print(f"n = {layout.n} points, {ds.n_signals} signals, k = {args.k}")
    rows = {}
    for backend in ("compiled", "python"):
        try:
            rows[backend] = bench(backend, layout, tables, args.k, mu, tau2,
                                  args.reps)
        except ImportError:
            print(f"{backend:>9}: not available")
    print(f"{'backend':>9} {'neighbor sets':>15} {'factor eval':>13}")
    for name, (t_sets, t_eval, *_rest) in rows.items():
        print(f"{name:>9} {t_sets * 1e3:>12.2f} ms {t_eval * 1e3:>10.2f} ms")
    if len(rows) == 2:
        c, p = rows["compiled"], rows["python"]
        same = np.array_equal(c[2], p[2]) and np.array_equal(c[3], p[3])
        print(f"speedup: sets x{p[0] / c[0]:.1f}, eval x{p[1] / c[1]:.1f}; "
              f"identical sets: {same}; "
              f"loglik diff: {abs(c[4] - p[4]):.2e}")


if __name__ == "__main__":
    main()
