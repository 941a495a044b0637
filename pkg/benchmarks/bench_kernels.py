"""Compare the compiled and pure-Python kernels on the two hot loops.

    python benchmarks/bench_kernels.py [--n 4] [--repeat 3]

Path tracking runs every total-degree path of the FULL system; the flow
benchmark integrates a batch of perturbed starts.  Both backends must
return the same step counts and agree on the endpoints.
"""

import argparse
import importlib
import time

import numpy as np

from ulampoly.homotopy import gamma_constant, start_constants, start_system
from ulampoly.ulam_map import ResidualSystem


def load(name):
    try:
        return importlib.import_module(f"ulampoly.{name}")
    except ImportError:
        return None


def bench_track(k, n, seed=0):
    degrees = np.asarray(ResidualSystem.FULL.degrees(n), dtype=np.int_)
    consts = start_constants(n, seed)
    gamma = gamma_constant(seed)
    t0 = time.perf_counter()
    out = [k.track_path(s, k.FULL, degrees, consts, gamma) for s in start_system(degrees, seed)]
    return time.perf_counter() - t0, out


def bench_flow(k, batch=20, nsteps=5000, seed=0):
    g = np.array([1.0, -2.0], dtype=np.complex128)
    rng = np.random.default_rng(seed)
    starts = g + 0.05 * (rng.uniform(-1, 1, (batch, 2)) + 1j * rng.uniform(-1, 1, (batch, 2)))
    t0 = time.perf_counter()
    states, _ = k.rk4_flow(starts, g, 1e-3, nsteps, nsteps, 1e-10)
    return time.perf_counter() - t0, states


def best_of(fn, repeat):
    runs = [fn() for _ in range(repeat)]
    return min(r[0] for r in runs), runs[0][1]


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=4)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    py = load("_kernels_py")
    cy = load("_kernels")
    if cy is None:
        print("compiled kernels not built; only the Python timings are shown")

    rows = []
    for label, fn in [(f"track_path N={args.n}", lambda k: bench_track(k, args.n)),
                      ("rk4_flow 20x5000", bench_flow)]:
        t_py, r_py = best_of(lambda: fn(py), args.repeat)
        if cy is None:
            rows.append((label, t_py, None, None))
            continue
        t_cy, r_cy = best_of(lambda: fn(cy), args.repeat)
        if label.startswith("track"):
            same = all(a[2] == b[2] and np.allclose(a[0], b[0], atol=1e-8) for a, b in zip(r_py, r_cy))
        else:
            same = np.allclose(r_py, r_cy, atol=1e-12)
        rows.append((label, t_py, t_cy, same))

    print(f"{'kernel':<22}{'python [s]':>12}{'cython [s]':>12}{'speedup':>10}  agree")
    for label, t_py, t_cy, same in rows:
        if t_cy is None:
            print(f"{label:<22}{t_py:>12.3f}{'-':>12}{'-':>10}  -")
        else:
            print(f"{label:<22}{t_py:>12.3f}{t_cy:>12.4f}{t_py / t_cy:>10.1f}  {same}")


if __name__ == "__main__":
    main()
