"""Empirical constant of the interpolation-trace inequality

    ||phi||^2_{L2(Omega; L2(Gamma_R))} <= eps ||grad_y phi||^2 + C(eps) ||phi||^2

on discrete two-scale fields.
"""
from dataclasses import dataclass

import numpy as np

from ..twoscale import gamma_r_vertices, ts_inner


@dataclass
class TraceReport:
    eps: list
    constants: list  # smallest C(eps) valid for all samples (clipped at 0)
    n_samples: int

    @property
    def finite(self):
        return all(np.isfinite(c) for c in self.constants)

    @property
    def monotone(self):
        """C does not increase with eps."""
        order = np.argsort(self.eps)
        c = np.asarray(self.constants)[order]
        return bool(np.all(np.diff(c) <= 1e-12 * max(1.0, np.max(np.abs(c)))))

    def write_csv(self, fh):
        fh.write("eps,constant,n_samples\n")
        for e, c in zip(self.eps, self.constants):
            fh.write(f"{e:.17g},{c:.17g},{self.n_samples}\n")


def trace_terms(beta, ops):
    """(boundary term, gradient term, bulk term) of one field."""
    beta = np.asarray(getattr(beta, "coeffs", beta), dtype=float)
    return (ts_inner(beta, beta, ops.Mx, ops.Bg), ts_inner(beta, beta, ops.Mx, ops.Ay),
            ts_inner(beta, beta, ops.Mx, ops.My))


def trace_inequality_check(samples, ops, eps_grid=(1.0, 0.1, 0.01)):
    terms = [trace_terms(b, ops) for b in samples]
    terms = [t for t in terms if t[2] > 0]
    consts = []
    for eps in eps_grid:
        c = max(((lhs - eps * grad) / bulk for lhs, grad, bulk in terms), default=0.0)
        consts.append(max(float(c), 0.0))
    return TraceReport(list(eps_grid), consts, len(terms))


def random_fields(ops, n, rng, noise=0.01):
    """Random fields mixing a constant, an oscillation, a layer of random
    steepness at Gamma_R and nodal noise, with random amplitudes per macro node."""
    nx, ny = ops.shape
    y = ops.micro_space.mesh.vertices
    g = y[gamma_r_vertices(ops.micro_space)]
    dist = np.min(np.linalg.norm(y[:, None] - g[None], axis=-1), axis=1) if len(g) else np.ones(ny)
    out = []
    for _ in range(n):
        k = rng.integers(1, 4, size=2)
        modes = np.stack([np.ones(ny),
                          np.cos(np.pi * k[0] * y[:, 0]) * np.cos(np.pi * k[1] * y[:, 1]),
                          np.exp(-rng.uniform(1.0, 30.0) * dist)])
        beta = rng.standard_normal((nx, 3)) @ modes + noise * rng.standard_normal((nx, ny))
        out.append(beta)
    return out
