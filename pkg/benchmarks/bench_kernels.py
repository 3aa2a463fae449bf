"""Compare the compiled and numpy kernel backends on the hot loops.

    python3 benchmarks/bench_kernels.py --sizes 8 16 32 --repeat 5

Each line reports the best-of-``repeat`` wall time per backend, the speedup
and the max abs difference between the two results.
"""
import argparse
import time

import numpy as np

from tsgalerkin import kernels
from tsgalerkin.coupling import build_operators
from tsgalerkin.fem import P1Space
from tsgalerkin.mesh import gamma_classifier, make_rect_mesh, tag_boundary


def best_of(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def cases(n, rng):
    mesh = tag_boundary(make_rect_mesh((0, 0), (1, 1), n, n), gamma_classifier("top_edge", (0, 0), (1, 1)))
    ops = build_operators(P1Space(make_rect_mesh((0, 0), (1, 1), n, n)), P1Space(mesh))
    nx, ny = ops.shape
    U = rng.uniform(0, 2, nx)
    u = rng.uniform(0, 2, (nx, ny))
    op = (ops.My + ops.Ay * 1e-3).csr
    dinv = 1.0 / op.diagonal()
    B = rng.standard_normal((nx, ny))
    verts, tris = mesh.vertices, mesh.triangles.astype(np.int64)

    def pcg(k):
        X = np.zeros_like(B)
        iters, _ = k.pcg_rows(op.indptr, op.indices, op.data, dinv, B, X, 1e-12, 500, 1)
        return X, iters

    return {
        "p1_triplets": lambda k: k.p1_triplets(verts, tris),
        "exchange": lambda k: k.exchange(U, u, ops.gamma_p, ops.gamma_q, ops.gamma_half, kernels.B_SATURATING, 1.0, 0.9),
        "pcg_rows": pcg,
    }


def flatten(out):
    if isinstance(out, tuple):
        return np.concatenate([np.ravel(np.asarray(o, dtype=float)) for o in out])
    return np.ravel(np.asarray(out, dtype=float))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[8, 16, 32])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    names = kernels.available_backends()
    if "cython" not in names:
        print("compiled backend not built; timing the numpy fallback only")
    rng = np.random.default_rng(0)
    print(f"{'kernel':<12} {'n':>4} " + " ".join(f"{b + ' [ms]':>14}" for b in names) + f" {'speedup':>8} {'max diff':>10}")
    for n in args.sizes:
        for name, fn in cases(n, rng).items():
            times, outs = [], []
            for b in names:
                t, out = best_of(lambda: fn(kernels.backend(b)), args.repeat)
                times.append(t)
                outs.append(flatten(out))
            speed = f"{times[0] / times[1]:8.1f}" if len(times) == 2 else f"{'-':>8}"
            diff = f"{np.max(np.abs(outs[0] - outs[1])):10.2e}" if len(outs) == 2 else f"{'-':>10}"
            print(f"{name:<12} {n:>4} " + " ".join(f"{1e3 * t:14.3f}" for t in times) + f" {speed} {diff}")


if __name__ == "__main__":
    main()
