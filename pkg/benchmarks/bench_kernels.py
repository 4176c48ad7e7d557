"""Compiled vs numpy kernel timing on the shipped scenarios.

    python3 benchmarks/bench_kernels.py [--repeat 3] [--n 200]

Reports the best wall time per backend for one n x n frame and the max
absolute difference between the two results.
"""
import argparse
import timeit

import numpy as np

from kpc import kernel
from kpc.config import load_scenario, scenario_names
from kpc.model import GridSpec


def run(name, n, repeat):
    cfg = load_scenario(name)
    g = cfg.grid
    grid = GridSpec(g.x_min, g.x_max, g.y_min, g.y_max, n, n)
    X, Y = grid.mesh()
    t = float(cfg.time_values()[0])
    row = [name]
    res = {}
    for be in ("python", "cython"):
        call = lambda: kernel.evaluate(cfg.spec, X, Y, t, want_fx=True, threads=1, backend=be)
        res[be] = call()
        row.append(min(timeit.repeat(call, number=1, repeat=repeat)))
    a, b = res["python"], res["cython"]
    ok = ~a.singular & ~b.singular
    diff = float(np.max(np.abs(a.f[ok] - b.f[ok]) / np.maximum(1, np.abs(a.f[ok])))) if ok.any() else 0.0
    row += [row[1] / row[2], diff]
    return row


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--n", type=int, default=200)
    args = ap.parse_args()
    if kernel.BACKEND != "cython":
        raise SystemExit("compiled kernel not built; run: python3 setup.py build_ext --inplace")
    print(f"{'scenario':10s} {'numpy s':>9s} {'cython s':>9s} {'speedup':>8s} {'max rel diff':>13s}")
    for name in scenario_names():
        r = run(name, args.n, args.repeat)
        print(f"{r[0]:10s} {r[1]:9.4f} {r[2]:9.4f} {r[3]:8.1f} {r[4]:13.2e}")


if __name__ == "__main__":
    main()
