"""Time the compiled kernels against the uncompiled fallback.

Each backend runs in its own interpreter because the choice is made at
import time from ``SGMORPH_NUMBA``. The compiled timings exclude the first
(compiling) call.

    python3 benchmarks/bench_kernels.py [--repeat 5]
"""
import argparse
import json
import os
import subprocess
import sys
import time

import numpy as np


def _cases():
    from sgmorph.core import from_polylines
    from sgmorph.kernels import paths, raster, trees, tsne
    from sgmorph.synth import synth_graph

    rng = np.random.default_rng(0)
    g = synth_graph("organic", 0, 0)
    big = from_polylines([[[i, j], [i + 1, j]] for i in range(30) for j in range(30)]
                         + [[[i, j], [i, j + 1]] for i in range(30) for j in range(30)])
    ip, ix, w = paths.to_csr(big.num_nodes, big.edges, big.edge_lengths)
    pts = rng.random((4000, 2)) * 1000
    ok = np.ones(len(pts) - 1, dtype=bool)
    P = rng.random((300, 300))
    P = (P + P.T) / (2 * P.sum())
    np.fill_diagonal(P, 0)
    Y = rng.standard_normal((300, 2))
    X = rng.random((400, 19))
    y = (X[:, 0] > 0.5).astype(float)
    wts = np.ones(400)
    feats = np.arange(19, dtype=np.int64)
    return {
        "brandes (961-node lattice)": lambda: paths.brandes(ip, ix, w),
        "distance_matrix (961 nodes)": lambda: paths.distance_matrix(ip, ix, w),
        "supercover (4000 points)": lambda: raster.supercover(pts, ok, 1024),
        "kl_gradient (n=300)": lambda: tsne.kl_gradient(P, Y),
        "best_split (400x19)": lambda: trees.best_split(X, y, wts, feats),
        "graph extract (organic)": lambda: __import__("sgmorph").extract_features(g),
    }


def worker(repeat):
    from sgmorph._jit import backend

    out = {}
    for name, fn in _cases().items():
        fn()  # warm-up (compiles under numba)
        times = []
        for _ in range(repeat):
            t0 = time.perf_counter()
            fn()
            times.append(time.perf_counter() - t0)
        out[name] = min(times)
    print(json.dumps({"backend": backend(), "times": out}))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--worker", action="store_true", help=argparse.SUPPRESS)
    args = ap.parse_args()
    if args.worker:
        worker(args.repeat)
        return
    res = {}
    for flag in ("1", "0"):
        env = dict(os.environ, SGMORPH_NUMBA=flag)
        proc = subprocess.run([sys.executable, __file__, "--worker", "--repeat", str(args.repeat)],
                              env=env, capture_output=True, text=True, check=True)
        r = json.loads(proc.stdout.strip().splitlines()[-1])
        res[r["backend"]] = r["times"]
    nb, py = res.get("numba", {}), res.get("numpy", {})
    print(f"{'kernel':32s} {'numba [ms]':>12s} {'fallback [ms]':>14s} {'speed-up':>9s}")
    for name in py:
        a, b = nb.get(name, float("nan")), py[name]
        print(f"{name:32s} {1e3 * a:12.2f} {1e3 * b:14.2f} {b / a:9.1f}x")


if __name__ == "__main__":
    main()
