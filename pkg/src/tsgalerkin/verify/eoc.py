"""Convergence studies: error tables and observed orders under refinement."""
import math
import time
import warnings
from dataclasses import dataclass, field

import numpy as np

from ..coupling import build_operators
from ..errors import PreconditionError
from ..fem import P1Space
from ..mesh import gamma_classifier, make_rect_mesh, mesh_size, refine_uniform, tag_boundary
from ..solver import SolverConfig, run
from .mms import MmsForcing
from .norms import ErrorAccumulator

ERROR_KEYS = ("e_U_H1", "e_u_L2H1y", "e_v_L2H1y", "e_U_L2", "e_u_L2", "e_v_L2")
SATURATED = 1e-11  # errors below this are at solver/quadrature level


class TemporalPollutionWarning(UserWarning):
    """dt is not O(h^2); the time error may dominate the observed rates."""


def observed_rate(e_prev, e_curr):
    """``log2(e_prev / e_curr)``; nan when either error is saturated."""
    if e_prev < SATURATED or e_curr < SATURATED:
        return float("nan")
    return math.log2(e_prev / e_curr)


def fit_rate(hs, errs):
    """Least-squares slope of log(err) against log(h)."""
    hs, errs = np.asarray(hs, float), np.asarray(errs, float)
    ok = errs > SATURATED
    if ok.sum() < 2:
        return float("nan")
    return float(np.polyfit(np.log(hs[ok]), np.log(errs[ok]), 1)[0])


def fit_constant(hs, errs, power, norm=1.0):
    """``gamma`` in ``err ~ gamma h^power norm`` by least squares in log space."""
    hs, errs = np.asarray(hs, float), np.asarray(errs, float)
    if norm <= 0 or np.any(errs <= 0):
        return float("nan")
    return float(np.exp(np.mean(np.log(errs / (hs**power * norm)))))


@dataclass
class EocTable:
    rows: list = field(default_factory=list)  # dicts with h, dt, n_steps, seconds and ERROR_KEYS
    keys: tuple = ERROR_KEYS

    def add(self, h, dt, errors, **extra):
        if self.rows and not h < self.rows[-1]["h"]:
            raise PreconditionError("h must decrease from row to row")
        self.rows.append({"h": h, "dt": dt, **extra, **{k: errors[k] for k in self.keys}})

    def rates(self, key):
        errs = [r[key] for r in self.rows]
        return [float("nan")] + [observed_rate(a, b) for a, b in zip(errs, errs[1:])]

    def column(self, key):
        return [r[key] for r in self.rows]

    def worst_rate(self, keys=None):
        vals = [r for k in (keys or self.keys) for r in self.rates(k)[1:] if not math.isnan(r)]
        return min(vals) if vals else float("nan")

    def write_csv(self, fh):
        extra = [k for k in self.rows[0] if k not in ("h", "dt") + self.keys] if self.rows else []
        cols = ["level", "h", "dt", *extra, *self.keys, *(f"rate_{k}" for k in self.keys)]
        fh.write(",".join(cols) + "\n")
        rates = {k: self.rates(k) for k in self.keys}
        for i, r in enumerate(self.rows):
            vals = [i, r["h"], r["dt"], *(r[k] for k in extra), *(r[k] for k in self.keys),
                    *(rates[k][i] for k in self.keys)]
            fh.write(",".join(_fmt(v) for v in vals) + "\n")

    def write_h_error(self, directory, prefix=""):
        """One two-column ``h error`` file per norm."""
        for k in self.keys:
            with open(directory / f"{prefix}{k}.dat", "w") as fh:
                fh.write("# h error\n")
                for r in self.rows:
                    fh.write(f"{r['h']:.17g} {r[k]:.17g}\n")


def _fmt(v):
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def level_spaces(omega, cell, nx, ny, levels, gamma="top_edge", cell_nx=None, cell_ny=None):
    """Yield ``(macro_space, micro_space)`` for ``levels`` uniform refinements."""
    mx = make_rect_mesh(omega[0], omega[1], nx, ny)
    my = make_rect_mesh(cell[0], cell[1], cell_nx or nx, cell_ny or ny)
    my = tag_boundary(my, gamma_classifier(gamma, *cell))
    for level in range(levels):
        if level:
            mx, my = refine_uniform(mx), refine_uniform(my)
        yield P1Space(mx), P1Space(my)


def run_eoc(exact, params, levels, omega=((0.0, 0.0), (1.0, 1.0)), cell=((0.0, 0.0), (1.0, 1.0)),
            nx=4, ny=None, T=0.1, dt_const=0.1, dt_power=2, gamma="top_edge", scheme="semi_implicit",
            cg_tol=1e-12, threads=1, gammas=None, log=None):
    """Run the manufactured problem on ``levels`` meshes and tabulate errors.

    ``dt = dt_const * h**dt_power``. When ``gammas = (g1, g3)`` is given, each
    row records whether ``h^2 max(g1, g3) < 1`` holds.
    """
    if levels < 3:
        raise PreconditionError("an EOC study needs at least 3 levels")
    if dt_power < 2:
        warnings.warn(f"dt ~ h^{dt_power}: temporal error may pollute the spatial rates",
                      TemporalPollutionWarning, stacklevel=2)
    p = exact.params(params)
    table = EocTable()
    for ms, ys in level_spaces(omega, cell, nx, ny or nx, levels, gamma):
        t0 = time.perf_counter()
        h = max(mesh_size(ms.mesh), mesh_size(ys.mesh))
        ops = build_operators(ms, ys)
        cfg = SolverConfig(dt=min(dt_const * h**dt_power, T), T=T, scheme=scheme,
                           forcing=MmsForcing(exact, p, ms, ys), cg_tol=cg_tol, threads=threads)
        acc = ErrorAccumulator(exact, ms, ys, cfg.dt_effective)
        run(p, ops, cfg, [acc])
        extra = {"n_steps": cfg.n_steps}
        if gammas is not None:
            extra["a6_ok"] = int(h * h * max(gammas) < 1.0)
        table.add(h, cfg.dt_effective, acc.result(), **extra)
        if log is not None:
            log(f"h={h:.5f} steps={cfg.n_steps} {time.perf_counter() - t0:.1f}s")
    return table
