"""Manufactured exact solutions and their separated forms."""
from dataclasses import dataclass, field, replace

import numpy as np

from ..errors import PreconditionError
from ..expr import Expression, as_expression
from ..quadrature import gauss_interval, gauss_rectangle


class SeparatedField:
    """``w(t, x, y) = sum_i a_i(t) f_i(x) g_i(y)`` with cached derivatives."""

    def __init__(self, expr):
        self.expr = as_expression(expr)
        terms = self.expr.separate()
        self.coef = [t.coef for t in terms]
        self.dcoef = [t.coef.diff("t") for t in terms]
        self.fx = [t.fx for t in terms]
        self.fy = [t.fy for t in terms]

    def __len__(self):
        return len(self.coef)

    def coefs(self, t):
        return np.array([float(c(t=t)) for c in self.coef])

    def dcoefs(self, t):
        return np.array([float(c(t=t)) for c in self.dcoef])

    def values(self, t, fx_vals, fy_vals):
        """Combine pre-evaluated factors: ``sum_i a_i(t) fx[i] (x) fy[i]``."""
        a = self.coefs(t)
        return (a[:, None] * fx_vals).T @ fy_vals


@dataclass(frozen=True, eq=False)
class ExactSolution:
    """Smooth (U, u, v) with the extension ``U_ext`` used for the lift.

    ``U`` depends on (t, x), ``u`` and ``v`` on (t, x, y); ``U_ext`` must
    agree with ``U`` on the macro boundary. ``u`` and ``v`` must be
    separable in x and y.
    """

    U: Expression
    u: Expression
    v: Expression
    U_ext: Expression
    omega: tuple = ((0.0, 0.0), (1.0, 1.0))
    cell: tuple = ((0.0, 0.0), (1.0, 1.0))
    su: SeparatedField = field(init=False, repr=False)
    sv: SeparatedField = field(init=False, repr=False)

    def __post_init__(self):
        for name in ("U", "u", "v", "U_ext"):
            object.__setattr__(self, name, as_expression(getattr(self, name)))
        object.__setattr__(self, "su", SeparatedField(self.u))
        object.__setattr__(self, "sv", SeparatedField(self.v))

    @property
    def U0(self):
        return Expression(self.U.sym - self.U_ext.sym)

    def initial_data(self):
        return {"U_I": self.U.at(0.0), "u_I": self.u.at(0.0), "v_I": self.v.at(0.0),
                "U_ext": self.U_ext}

    def params(self, base):
        """``base`` ModelParams with data replaced by this solution's."""
        return replace(base, **self.initial_data())

    def boundary_mismatch(self, points, times):
        t = np.asarray(times)[:, None]
        return float(np.max(np.abs(self.U(t=t, x=points[None]) - self.U_ext(t=t, x=points[None]))))

    # H2 profiles ----------------------------------------------------------
    def h2_profiles(self, T, n_time=6, n_space=10):
        """Squared space-time norms entering the constant K.

        Returns a dict with ``U0`` (L2(S;H2(Omega)) of U - U_ext) and ``u``,
        ``v`` (the X norm: max of L2(S;L2(Omega;H2(Y))) and
        L2(S;L2(Y;H2(Omega)))).
        """
        tq, tw = gauss_interval(n_time, 0.0, T)
        px, wx = gauss_rectangle(n_space, *self.omega)
        py, wy = gauss_rectangle(n_space, *self.cell)
        return {
            "U0": _macro_h2_sq(self.U0, tq, tw, px, wx),
            "u": _two_scale_h2_sq(self.u, tq, tw, px, wx, py, wy),
            "v": _two_scale_h2_sq(self.v, tq, tw, px, wx, py, wy),
        }


def _derivs(expr, group):
    a, b = f"{group}1", f"{group}2"
    return [expr, expr.diff(a), expr.diff(b), expr.diff(a, a), expr.diff(a, b), expr.diff(b, b)]


def _macro_h2_sq(expr, tq, tw, px, wx):
    total = 0.0
    for d in _derivs(expr, "x"):
        vals = d(t=tq[:, None], x=px[None])
        total += float(np.einsum("t,p,tp->", tw, wx, vals**2))
    return total


def _two_scale_h2_sq(expr, tq, tw, px, wx, py, wy):
    out = []
    for group in ("y", "x"):
        total = 0.0
        for d in _derivs(expr, group):
            for t, w in zip(tq, tw):
                vals = d(t=t, x=px[:, None], y=py[None])
                total += w * float(wx @ vals**2 @ wy)
        out.append(total)
    return max(out)


def coupled_mms():
    """Default manufactured solution for the coupled system.

    Positive u and v keep the reaction factors smooth; with c_hat = 1 and
    z_sat = 0.9 the transfer saturates on part of Gamma_R.
    """
    return ExactSolution(
        U="1 + 0.5*exp(-t)*sin(pi*x1)*sin(pi*x2)",
        u="exp(-t/2)*(0.5 + 0.25*cos(pi*x1)*cos(pi*x2))*(0.6 + 0.2*cos(pi*y1) + 0.2*y2^2)",
        v="exp(-t)*(1 + 0.5*sin(pi*x1)*sin(pi*x2))*(0.8 + 0.2*cos(pi*y1)*cos(pi*y2))",
        U_ext="1",
    )


def heat_mms():
    """Macro-only solution for the decoupled case (b = 0, k = 0)."""
    return ExactSolution(
        U="exp(-t)*sin(pi*x1)*sin(pi*x2) + x1*x2",
        u="0",
        v="0",
        U_ext="x1*x2",
    )


def require_profiles(profiles):
    missing = {"U0", "u", "v"} - set(profiles or {})
    if missing:
        raise PreconditionError(f"missing H2 norm profiles {sorted(missing)}")
