"""Time the compiled geometry kernels against the pure-Python fallback.

    python benchmarks/bench_kernels.py [--repeat N]

Prints one line per kernel with the median time of each backend and the
speed-up.  Both backends are checked to agree before timing.
"""

import argparse
import statistics
import sys
import time

import numpy as np

from nearopt import _pykernels

try:
    from nearopt import _ckernels
except ImportError:
    _ckernels = None


def _cases(rng):
    # 2-D and 3-D boxes cut by random halfspaces, as in the vertex metric
    def region(n, k):
        G = np.vstack([np.eye(n), -np.eye(n), rng.normal(size=(k, n))])
        h = np.concatenate([np.ones(n), np.zeros(n), rng.uniform(0.5, 1.0, size=k)])
        G[2 * n:] /= np.abs(G[2 * n:]).max(axis=1, keepdims=True)
        return np.ascontiguousarray(G), np.ascontiguousarray(h)

    G2, h2 = region(2, 60)
    G3, h3 = region(3, 30)
    P3 = rng.random((40, 3))
    P = rng.random((2000, 3))
    dirs = rng.normal(size=(20000, 2))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    us = rng.random(20000)
    x0 = np.array([0.3, 0.3])
    Gb = np.vstack([np.eye(2), -np.eye(2)])
    hb = np.array([1.0, 1.0, 0.0, 0.0])
    D = np.round(rng.random((3000, 3)), 2)
    return {
        "enumerate_vertices 2d (64 rows)": lambda m: m.enumerate_vertices(G2, h2, 1e-9),
        "enumerate_vertices 3d (36 rows)": lambda m: m.enumerate_vertices(G3, h3, 1e-9),
        "hull_facets_3d (40 points)": lambda m: m.hull_facets_3d(P3, 1e-9),
        "points_in_halfspaces (2000 x 36)": lambda m: m.points_in_halfspaces(G3, h3, P, 1e-9),
        "hit_and_run_chain (20000 steps)": lambda m: m.hit_and_run_chain(Gb, hb, x0, dirs, us),
        "dedupe_mask (3000 points)": lambda m: m.dedupe_mask(D, 1e-9),
    }


def _time(fn, repeat):
    out = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        out.append(time.perf_counter() - t)
    return statistics.median(out)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)
    if _ckernels is None:
        print("compiled kernels are not built; run `pip install -e . --no-build-isolation`")
        return 1
    cases = _cases(np.random.default_rng(args.seed))
    print(f"{'kernel':36s} {'python':>10s} {'cython':>10s} {'speed-up':>9s}")
    for name, call in cases.items():
        a, b = np.asarray(call(_pykernels)), np.asarray(call(_ckernels))
        if a.shape != b.shape or not np.allclose(a, b, atol=1e-9):
            print(f"{name}: backends disagree", file=sys.stderr)
            return 2
        tp, tc = _time(lambda: call(_pykernels), args.repeat), _time(lambda: call(_ckernels), args.repeat)
        print(f"{name:36s} {tp * 1e3:8.2f}ms {tc * 1e3:8.3f}ms {tp / tc:8.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
