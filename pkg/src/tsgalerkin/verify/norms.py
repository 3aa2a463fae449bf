"""Discrete-minus-exact error norms and their space-time accumulation.

A two-scale error ``beta - w`` with ``w = sum_i a_i(t) f_i(x) g_i(y)`` is
split as ``d + rho``: ``d = beta - N`` against the nodal tensor interpolant
``N`` of ``w``, and ``rho = sum_i a_i (df_i (x) I g_i + f_i (x) dg_i)``
with ``df = I f - f``. Every pairing involving ``rho`` is a time-independent
Gram matrix of order-6 quadratures, so the squared error is assembled
without subtracting two nearly equal numbers.
"""
import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import DimensionError
from ..fem import ERROR_ORDER, error_norms, gradient_load_vector, load_vector
from ..twoscale import ts_inner
from .exact import SeparatedField


class _FactorData:
    """Pairings of the x- or y-factors needed by the error identity."""

    def __init__(self, space, funcs, group, order):
        n, m = len(funcs), space.n_dof
        pts, w, _ = space.quadrature(order)
        flat = pts.reshape(-1, 2)
        self.nodal = np.array([f(**{group: space.mesh.vertices}) for f in funcs]).reshape(n, m)
        fv = np.array([f(**{group: flat}) for f in funcs]).reshape((n,) + w.shape)
        delta = space.evaluate(self.nodal, order) - fv
        self.load = np.array([load_vector(space, lambda p, f=f: f(**{group: p}), order)
                              for f in funcs]).reshape(n, m)
        # L2 pairings
        self.l2 = {
            "dd": np.einsum("itq,jtq,tq->ij", delta, delta, w),
            "df": np.einsum("itq,jtq,tq->ij", delta, fv, w),
            "ff": np.einsum("itq,jtq,tq->ij", fv, fv, w),
        }
        M = space.mass
        # (I g_i, I g_l) and (I g_i, I g_l - g_l)
        self.l2_II = self.nodal @ (M @ self.nodal.T)
        self.l2_Id = self.l2_II - self.nodal @ self.load.T
        # vectors for the cross terms with d
        self.delta_load = (M @ self.nodal.T).T - self.load  # int xi_j (I f - f)
        if group == "y":
            gq = np.array([np.stack([ga(y=flat), gb(y=flat)], -1) for ga, gb in
                           (f.grad("y") for f in funcs)]).reshape((n,) + w.shape + (2,))
            gh = space.element_gradient(self.nodal)
            dgrad = gh[:, :, None, :] - gq
            A = space.stiffness
            gload = np.array([gradient_load_vector(space, f.grad_on("y"), order)
                              for f in funcs]).reshape(n, m)
            self.h1 = {"dd": np.einsum("itqd,jtqd,tq->ij", dgrad, dgrad, w)}
            self.h1_II = self.nodal @ (A @ self.nodal.T)
            self.h1_Id = self.h1_II - self.nodal @ gload.T
            self.h1_delta = (A @ self.nodal.T).T - gload


class SeparableErrorEvaluator:
    """``(L2, L2(H1_y seminorm))`` of ``beta - w(t)`` over Omega x Y."""

    def __init__(self, expr, macro_space, micro_space, order=ERROR_ORDER):
        self.sep = expr if isinstance(expr, SeparatedField) else SeparatedField(expr)
        self.macro, self.micro = macro_space, micro_space
        self.X = _FactorData(macro_space, self.sep.fx, "x", order)
        self.Y = _FactorData(micro_space, self.sep.fy, "y", order)

    def nodal(self, t):
        if not len(self.sep):
            return np.zeros((self.macro.n_dof, self.micro.n_dof))
        return (self.sep.coefs(t)[:, None] * self.X.nodal).T @ self.Y.nodal

    def _squared(self, d, a, Ky, y_II, y_Id, y_dd, y_delta):
        X = self.X
        dd = ts_inner(d, d, self.macro.mass, Ky)
        if not len(a):
            return dd
        # <d, rho>
        cross = (np.sum(((a[:, None] * X.delta_load) @ d) * (Ky @ self.Y.nodal.T).T)
                 + np.sum(((a[:, None] * X.load) @ d) * y_delta))
        # <rho, rho>
        A = np.outer(a, a)
        rr = (X.l2["dd"] * y_II + X.l2["df"] * y_Id + X.l2["df"].T * y_Id.T + X.l2["ff"] * y_dd)
        return dd + 2.0 * cross + float(np.sum(A * rr))

    def squared(self, beta, t):
        """Squared (L2(Omega x Y), L2(Omega; H1(Y)-seminorm)) errors."""
        beta = np.asarray(getattr(beta, "coeffs", beta), dtype=float)
        if beta.shape != (self.macro.n_dof, self.micro.n_dof):
            raise DimensionError(f"coefficients {beta.shape} do not match the spaces")
        a = self.sep.coefs(t) if len(self.sep) else np.zeros(0)
        d = beta - self.nodal(t)
        Y = self.Y
        l2 = self._squared(d, a, self.micro.mass, Y.l2_II, Y.l2_Id, Y.l2["dd"], Y.delta_load)
        h1 = self._squared(d, a, self.micro.stiffness, Y.h1_II, Y.h1_Id, Y.h1["dd"], Y.h1_delta)
        return max(l2, 0.0), max(h1, 0.0)

    def errors(self, beta, t):
        l2, h1 = self.squared(beta, t)
        return math.sqrt(l2), math.sqrt(h1)


class MacroErrorEvaluator:
    """``(L2, H1 seminorm)`` of ``(U^h - I U_ext) - (U - U_ext)``."""

    def __init__(self, exact, macro_space, order=ERROR_ORDER):
        self.exact, self.space, self.order = exact, macro_space, order
        self.U0 = exact.U0
        self.g0, self.g1 = self.U0.grad("x")

    def errors(self, U, t):
        sp = self.space
        lift = self.exact.U_ext(t=t, x=sp.mesh.vertices)
        f = lambda p: self.U0(t=t, x=p)  # noqa: E731
        g = lambda p: np.stack([self.g0(t=t, x=p), self.g1(t=t, x=p)], -1)  # noqa: E731
        return error_norms(sp, np.asarray(U) - lift, f, g, self.order)


@dataclass
class ErrorAccumulator:
    """Observer summing ``dt * ||e(t_n)||^2`` over steps n >= 1."""

    exact: object
    macro_space: object
    micro_space: object
    dt: float
    sums: dict = field(default_factory=lambda: dict.fromkeys(
        ("U_L2", "U_H1", "u_L2", "u_H1y", "v_L2", "v_H1y"), 0.0))
    times: list = field(default_factory=list)

    def __post_init__(self):
        self._U = MacroErrorEvaluator(self.exact, self.macro_space)
        self._u = SeparableErrorEvaluator(self.exact.su, self.macro_space, self.micro_space)
        self._v = SeparableErrorEvaluator(self.exact.sv, self.macro_space, self.micro_space)

    def __call__(self, n, state):
        if n == 0:
            return
        self.times.append(state.t)
        uL, uH = self._U.errors(state.U, state.t)
        s = self.sums
        s["U_L2"] += self.dt * uL**2
        s["U_H1"] += self.dt * uH**2
        for name, ev, field_ in (("u", self._u, state.u), ("v", self._v, state.v)):
            l2, h1 = ev.squared(field_, state.t)
            s[f"{name}_L2"] += self.dt * l2
            s[f"{name}_H1y"] += self.dt * h1

    def result(self):
        """Space-time norms: H1 ones are full norms (L2 part included)."""
        s = self.sums
        return {
            "e_U_H1": math.sqrt(s["U_L2"] + s["U_H1"]),
            "e_u_L2H1y": math.sqrt(s["u_L2"] + s["u_H1y"]),
            "e_v_L2H1y": math.sqrt(s["v_L2"] + s["v_H1y"]),
            "e_U_L2": math.sqrt(s["U_L2"]),
            "e_u_L2": math.sqrt(s["u_L2"]),
            "e_v_L2": math.sqrt(s["v_L2"]),
        }


def space_time_error(accumulator, which, expected_times=None, tol=1e-9):
    """One entry of ``accumulator.result()``; checks the time grid if given."""
    if expected_times is not None:
        got = np.asarray(accumulator.times)
        exp = np.asarray(expected_times)
        if got.shape != exp.shape or np.max(np.abs(got - exp), initial=0.0) > tol:
            raise DimensionError("trajectory times do not match the expected grid")
    return accumulator.result()[which]
