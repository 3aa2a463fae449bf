"""Forcing terms that turn an exact solution into a discrete test problem.

The micro forcing is evaluated at macro nodes, matching the macro-nodal
lumping of the scheme. Every linear piece is separable, so its load vectors
are assembled once and rescaled by the time coefficients at each step. The
nonlinear pieces (transfer on Gamma_R, reaction) are evaluated per step from
pre-tabulated spatial factors.
"""
import numpy as np

from ..fem import LOAD_ORDER, edge_quadrature, gradient_load_vector, load_vector
from ..mesh import Tag
from .exact import SeparatedField


def _edge_load(n_dof, p, q, s, vals):
    """Scatter ``sum_g vals[..., e, g] * hat`` onto micro nodes.

    ``vals`` is (..., ne, g) and already includes the quadrature weights.
    """
    lead = vals.shape[:-2]
    out = np.zeros(lead + (n_dof,))
    to_p = vals @ (1.0 - s)
    to_q = vals @ s
    for k in range(len(p)):
        out[..., p[k]] += to_p[..., k]
        out[..., q[k]] += to_q[..., k]
    return out


class MmsForcing:
    """Callable ``forcing(t) -> (F_U, f_u, f_v)`` for :class:`SolverConfig`.

    ``f_U = theta U_t - D lap U + int_GammaR b(U - u)``; the micro residuals
    ``u_t - d1 lap_y u + k eta`` and the flux mismatch on Gamma (``d1 du/dn -
    b(U - u)`` on Gamma_R, ``d1 du/dn`` on Gamma_N) enter as loads, likewise
    for v with ``alpha k eta`` and ``d2 dv/dn``.
    """

    def __init__(self, exact, params, macro_space, micro_space, n_gauss=4):
        self.exact, self.params = exact, params
        self.macro, self.micro = macro_space, micro_space
        p = params
        xn = macro_space.mesh.vertices
        yn = micro_space.mesh.vertices
        # macro: separable linear part
        self.sU = SeparatedField(exact.U)
        self.U_loads = np.array([load_vector(macro_space, f.on_x()) for f in self.sU.fx])
        self.U_lap_loads = np.array(
            [load_vector(macro_space, f.laplacian("x").on_x()) for f in self.sU.fx])
        # macro: transfer integral at x quadrature points
        xq, self.xw, bary = macro_space.quadrature(LOAD_ORDER)
        self.bary = bary
        xq = xq.reshape(-1, 2)
        gpts, gw, s, gp, gq = edge_quadrature(micro_space, Tag.GammaR, n_gauss)
        self.gw, self.gs, self.gp, self.gq = gw, s, gp, gq
        gpts = gpts.reshape(-1, 2)
        su, sv = exact.su, exact.sv
        self.su, self.sv = su, sv
        self.U_fx_q = np.array([f(x=xq) for f in self.sU.fx])
        self.u_fx_q = np.array([f(x=xq) for f in su.fx])
        self.u_fy_g = np.array([g(y=gpts) for g in su.fy])
        self.U_fx_n = np.array([f(x=xn) for f in self.sU.fx])
        self.u_fx_n = np.array([f(x=xn) for f in su.fx])
        self.v_fx_n = np.array([f(x=xn) for f in sv.fx])
        self.u_fy_n = np.array([g(y=yn) for g in su.fy])
        self.v_fy_n = np.array([g(y=yn) for g in sv.fy])
        # micro linear loads per separated term
        self.u_lin = self._micro_linear(su, p.d1)
        self.v_lin = self._micro_linear(sv, p.d2)

    def _micro_linear(self, sep, d):
        """Per-term loads ``(int g eta_k, d int grad g . grad eta_k)``.

        The second equals ``int (-d lap g) eta_k + int_Gamma d dg/dn eta_k``,
        so the Neumann mismatch on Gamma needs no separate term.
        """
        ys = self.micro
        mass = [load_vector(ys, g.on_y()) for g in sep.fy]
        stiff = [gradient_load_vector(ys, g.grad_on("y")) * d for g in sep.fy]
        n = ys.n_dof
        return np.array(mass).reshape(len(sep), n), np.array(stiff).reshape(len(sep), n)

    def macro_load(self, t):
        p = self.params
        a, da = self.sU.coefs(t), self.sU.dcoefs(t)
        F = np.zeros(self.macro.n_dof)
        if len(a):
            F += p.theta * (da @ self.U_loads) - p.D * (a @ self.U_lap_loads)
        if not p.b.is_zero:
            Uq = a @ self.U_fx_q if len(a) else np.zeros(self.U_fx_q.shape[1])
            uq = self.su.values(t, self.u_fx_q, self.u_fy_g) if len(self.su) else 0.0
            z = Uq[:, None] - uq
            flux = (p.b(z).reshape(len(Uq), *self.gw.shape) * self.gw).sum(axis=(1, 2))
            nt, q = self.xw.shape
            local = np.einsum("tq,qa->ta", (flux.reshape(nt, q) * self.xw), self.bary)
            F += np.bincount(self.macro.mesh.triangles.ravel(), weights=local.ravel(),
                             minlength=self.macro.n_dof)
        return F

    def micro_loads(self, t):
        p = self.params
        ny = self.micro.n_dof
        nx = self.macro.n_dof
        fu = np.zeros((nx, ny))
        fv = np.zeros((nx, ny))
        for sep, fxn, lin, out in ((self.su, self.u_fx_n, self.u_lin, fu),
                                   (self.sv, self.v_fx_n, self.v_lin, fv)):
            if len(sep):
                a, da = sep.coefs(t), sep.dcoefs(t)
                out += (da[:, None] * fxn).T @ lin[0] + (a[:, None] * fxn).T @ lin[1]
        if p.k != 0:
            un = self.su.values(t, self.u_fx_n, self.u_fy_n) if len(self.su) else np.zeros((nx, ny))
            vn = self.sv.values(t, self.v_fx_n, self.v_fy_n) if len(self.sv) else np.zeros((nx, ny))
            eta = p.k * p.R(un) * p.Q(vn)
            eload = (self.micro.mass @ eta.T).T
            fu += eload
            fv += p.alpha * eload
        if not p.b.is_zero:
            a = self.sU.coefs(t)
            Un = a @ self.U_fx_n if len(a) else np.zeros(nx)
            ug = self.su.values(t, self.u_fx_n, self.u_fy_g) if len(self.su) else 0.0
            bz = p.b(Un[:, None] - ug).reshape(nx, *self.gw.shape) * self.gw
            fu -= _edge_load(ny, self.gp, self.gq, self.gs, bz)
        return fu, fv

    def __call__(self, t):
        fu, fv = self.micro_loads(t)
        return self.macro_load(t), fu, fv


def mms_forcing(exact, params, macro_space, micro_space):
    return MmsForcing(exact, params, macro_space, micro_space)
