"""Nonlinear coupling terms of the semi-discrete system.

The x-integral of every nonlinear term is lumped at macro nodes, which makes
the micro problems of different macro nodes independent. In y, the Gamma_R
integrals use the trapezoidal rule on edges and the reaction uses the lumped
micro mass.
"""
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import DimensionError
from .fem import assemble_boundary_mass, boundary_edge_data
from .mesh import Tag


@dataclass(frozen=True, eq=False)
class CoupledOperators:
    macro_space: object
    micro_space: object
    Mx: object
    Ax: object
    My: object
    Ay: object
    Bg: object
    wx: np.ndarray
    wy: np.ndarray
    gamma_p: np.ndarray
    gamma_q: np.ndarray
    gamma_half: np.ndarray

    @property
    def dirichlet_mask(self):
        return self.macro_space.dirichlet_mask

    @property
    def gamma_length(self):
        return float(2.0 * self.gamma_half.sum())

    @property
    def shape(self):
        return (len(self.wx), len(self.wy))


def build_operators(macro_space, micro_space):
    p, q, length = boundary_edge_data(micro_space, Tag.GammaR)
    return CoupledOperators(
        macro_space=macro_space,
        micro_space=micro_space,
        Mx=macro_space.mass,
        Ax=macro_space.stiffness,
        My=micro_space.mass,
        Ay=micro_space.stiffness,
        Bg=assemble_boundary_mass(micro_space, Tag.GammaR),
        wx=macro_space.lumped,
        wy=micro_space.lumped,
        gamma_p=np.ascontiguousarray(p, dtype=np.int64),
        gamma_q=np.ascontiguousarray(q, dtype=np.int64),
        gamma_half=np.ascontiguousarray(0.5 * length),
    )


def _check(U, u, ops):
    U = np.ascontiguousarray(U, dtype=float)
    u = np.ascontiguousarray(getattr(u, "coeffs", u), dtype=float)
    if U.shape != (ops.shape[0],) or u.shape != ops.shape:
        raise DimensionError(f"U {U.shape}, u {u.shape} vs operators {ops.shape}")
    return U, u


def exchange_terms(U, u, b, ops):
    """Per-unit-macro-weight exchange terms ``(macro, micro)``.

    ``macro[j] = -int_GammaR b(U_j - u_j)`` and ``micro[j]`` is its edge load
    vector on micro nodes; multiply both by ``wx`` for the assembled terms.
    """
    U, u = _check(U, u, ops)
    if b.is_zero:
        return np.zeros(len(U)), np.zeros(u.shape)
    return kernels.exchange(U, u, ops.gamma_p, ops.gamma_q, ops.gamma_half,
                            b.code, float(b.c_hat), float(min(b.z_sat, 1e300)))


def macro_exchange_rhs(U, u, b, ops):
    macro, _ = exchange_terms(U, u, b, ops)
    return ops.wx * macro


def micro_exchange_rhs(U, u, b, ops):
    _, micro = exchange_terms(U, u, b, ops)
    return ops.wx[:, None] * micro


def lumped_reaction(u, v, R, Q, ops):
    """``wy * eta(u, v)`` row by row (no macro weight, no rate constant)."""
    u = np.asarray(getattr(u, "coeffs", u), dtype=float)
    v = np.asarray(getattr(v, "coeffs", v), dtype=float)
    if u.shape != ops.shape or v.shape != ops.shape:
        raise DimensionError(f"u {u.shape}, v {v.shape} vs operators {ops.shape}")
    return ops.wy[None, :] * (R(u) * Q(v))


def reaction_rhs(u, v, R, Q, k, alpha, ops):
    """Reaction loads ``(-k wx eta, -alpha k wx eta)`` with lumped quadrature."""
    ru = -k * ops.wx[:, None] * lumped_reaction(u, v, R, Q, ops)
    return ru, alpha * ru
