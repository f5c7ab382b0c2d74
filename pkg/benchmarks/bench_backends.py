"""Compare the compiled and pure-Python kernels on the AdaVol pass and the batch objective.

Run with ``python3 benchmarks/bench_backends.py [--n 20000] [--repeats 3]``.
"""

import argparse
import time

import numpy as np

from adavol import _pykernels
from adavol._backend import BACKEND, kernels
from adavol.garch import GarchParams, simulate


def _state(d, p, q):
    return dict(theta=np.full(d, 0.4), accum=np.full(d, 1e-8), scal=np.zeros(5),
                lag_x2=np.zeros(p), lag_v=np.zeros(q), lag_dv=np.zeros((q, d)),
                pred_dv=np.zeros(d), batch_g=np.zeros(d))


def time_pass(mod, x, p=1, q=1, repeats=3):
    d, n = p + q, len(x)
    best = float("inf")
    for _ in range(repeats):
        s = _state(d, p, q)
        t0 = time.perf_counter()
        mod.adavol_pass(x, s["theta"], s["accum"], s["scal"], s["lag_x2"], s["lag_v"], s["lag_dv"],
                        s["pred_dv"], s["batch_g"], 0.1, 1e-6, False, 1, 0.0, 100,
                        np.empty((n, d)), np.empty(n), np.empty(n))
        best = min(best, time.perf_counter() - t0)
    return best


def time_objective(mod, x, repeats=3):
    a, b = np.array([0.2]), np.array([0.7])
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        mod.qml_objective(x, 1e-8, a, b, False, 0.0, 0.0, np.empty(3), None)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=20000)
    ap.add_argument("--repeats", type=int, default=3)
    args = ap.parse_args()
    x = np.ascontiguousarray(simulate(GarchParams(1e-8, [0.2], [0.7]), args.n, seed=0).returns)
    if BACKEND != "cython":
        print("compiled kernels unavailable; only the Python backend can be timed")
    print(f"{'kernel':<16}{'python [s]':>12}{BACKEND + ' [s]':>14}{'speed-up':>10}")
    for name, fn in (("adavol_pass", time_pass), ("qml_objective", time_objective)):
        t_py = fn(_pykernels, x, repeats=args.repeats)
        t_c = fn(kernels, x, repeats=args.repeats)
        print(f"{name:<16}{t_py:>12.4f}{t_c:>14.5f}{t_py / t_c:>10.1f}")


if __name__ == "__main__":
    main()
