"""Projection-error rates of the macro and micro-macro Riesz projections."""
from dataclasses import dataclass

import numpy as np

from ..expr import as_expression
from ..fem import error_norms, h1_riesz_projection
from ..mesh import mesh_size
from ..quadrature import gauss_rectangle
from ..twoscale import micro_macro_riesz
from .eoc import fit_constant, fit_rate, level_spaces, observed_rate
from .exact import _derivs
from .norms import SeparableErrorEvaluator

MACRO_TEST = "sin(pi*x1)*sin(pi*x2)"
TWO_SCALE_TEST = "sin(pi*x1)*sin(pi*x2)*cos(pi*y1)*cos(pi*y2)"

# estimate -> (nominal power of h, norm used in the bound)
ESTIMATES = {"i1": (2, "macro"), "i2": (1, "macro"), "i3": (2, "two_scale"), "i4": (1, "two_scale")}


def macro_h2_norm(expr, omega, n=12):
    pts, w = gauss_rectangle(n, *omega)
    return float(np.sqrt(sum(w @ d(x=pts) ** 2 for d in _derivs(expr, "x"))))


def two_scale_h2_norm(expr, omega, cell, n=10):
    """max of the L2(Omega;H2(Y)) and L2(Y;H2(Omega)) norms."""
    px, wx = gauss_rectangle(n, *omega)
    py, wy = gauss_rectangle(n, *cell)
    out = []
    for group in ("y", "x"):
        out.append(sum(float(wx @ d(x=px[:, None], y=py[None]) ** 2 @ wy) for d in _derivs(expr, group)))
    return float(np.sqrt(max(out)))


@dataclass
class RateReport:
    hs: list
    errors: dict  # estimate -> list of errors per level
    norms: dict  # "macro"/"two_scale" -> H2-type norm of the test function

    def rates(self, key):
        e = self.errors[key]
        return [observed_rate(a, b) for a, b in zip(e, e[1:])]

    def fitted_rate(self, key):
        return fit_rate(self.hs, self.errors[key])

    def gamma(self, key):
        power, norm = ESTIMATES[key]
        return fit_constant(self.hs, self.errors[key], power, self.norms[norm])

    def saturated(self, key):
        return all(np.isnan(r) for r in self.rates(key))

    def write_csv(self, fh):
        fh.write("estimate,level,h,error,rate,fitted_rate,gamma_hat\n")
        for key in ESTIMATES:
            rates = [float("nan")] + self.rates(key)
            for i, (h, e) in enumerate(zip(self.hs, self.errors[key])):
                fh.write(f"{key},{i},{h:.17g},{e:.17g},{rates[i]:.17g},{self.fitted_rate(key):.17g},{self.gamma(key):.17g}\n")


def interpolation_rate_test(levels=4, nx=4, macro_fn=MACRO_TEST, two_scale_fn=TWO_SCALE_TEST,
                            omega=((0.0, 0.0), (1.0, 1.0)), cell=((0.0, 0.0), (1.0, 1.0)), gamma="top_edge"):
    """Errors of the macro Riesz projection (Dirichlet data from interpolation)
    and of the micro-macro projection over ``levels`` refinements.

    The macro function should vanish on the boundary of Omega.
    """
    phi = as_expression(macro_fn)
    w = as_expression(two_scale_fn)
    g0, g1 = phi.grad("x")
    f = lambda p: phi(x=p)  # noqa: E731
    grad = lambda p: np.stack([g0(x=p), g1(x=p)], -1)  # noqa: E731
    hs, errs = [], {k: [] for k in ESTIMATES}
    for ms, ys in level_spaces(omega, cell, nx, nx, levels, gamma):
        hs.append(max(mesh_size(ms.mesh), mesh_size(ys.mesh)))
        c = h1_riesz_projection(ms, f, grad, "dirichlet_zero")
        l2, semi = error_norms(ms, c, f, grad)
        errs["i1"].append(l2)
        errs["i2"].append(float(np.hypot(l2, semi)))
        beta = micro_macro_riesz(w, ms, ys)
        l2y, h1y = SeparableErrorEvaluator(w, ms, ys).errors(beta, 0.0)
        errs["i3"].append(l2y)
        errs["i4"].append(float(np.hypot(l2y, h1y)))
    norms = {"macro": macro_h2_norm(phi, omega), "two_scale": two_scale_h2_norm(w, omega, cell)}
    return RateReport(hs, errs, norms)
