"""Tensor-product space W_h = V_h (x) B_h over Omega x Y.

Coefficients are stored as a dense (N_x, N_y) matrix; Kronecker operators
``Kx (x) Ky`` are never formed, they act as ``Kx @ beta @ Ky``.
"""
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError
from .expr import Expression, NonSeparableError
from .fem import LOAD_ORDER, DEFAULT_TOL, cg_solve
from .mesh import Tag


@dataclass(eq=False)
class TwoScaleField:
    """``w(x, y) = sum_jk coeffs[j, k] xi_j(x) eta_k(y)``."""

    coeffs: np.ndarray
    macro_space: object
    micro_space: object

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=float)
        expect = (self.macro_space.n_dof, self.micro_space.n_dof)
        if self.coeffs.shape != expect:
            raise DimensionError(f"coefficients {self.coeffs.shape} do not match spaces {expect}")

    def __array__(self, dtype=None, copy=None):
        return self.coeffs if dtype is None else self.coeffs.astype(dtype)

    @classmethod
    def zeros(cls, macro_space, micro_space):
        return cls(np.zeros((macro_space.n_dof, micro_space.n_dof)), macro_space, micro_space)

    @classmethod
    def interpolate(cls, f, macro_space, micro_space, t=0.0):
        """Nodal tensor interpolation of ``f(x, y)`` (an Expression or callable)."""
        xs = macro_space.mesh.vertices[:, None, :]
        ys = micro_space.mesh.vertices[None, :, :]
        if isinstance(f, Expression):
            vals = f(t=t, x=xs, y=ys)
        else:
            vals = np.broadcast_to(f(xs, ys), (macro_space.n_dof, micro_space.n_dof))
        return cls(np.array(vals, dtype=float), macro_space, micro_space)


def _coeffs(w):
    return w.coeffs if isinstance(w, TwoScaleField) else np.asarray(w, dtype=float)


def kron_apply(Kx, Ky, beta):
    """``Kx @ beta @ Ky`` for symmetric sparse operators."""
    tmp = Kx @ beta
    return (Ky @ tmp.T).T


def ts_inner(a, b, Kx, Ky):
    """``vec(a)^T (Kx (x) Ky) vec(b)``."""
    a, b = _coeffs(a), _coeffs(b)
    if a.shape != b.shape or a.shape != (Kx.shape[0], Ky.shape[0]):
        raise DimensionError(f"fields {a.shape}, {b.shape} vs operators {Kx.shape}, {Ky.shape}")
    return float(np.sum(a * kron_apply(Kx, Ky, b)))


def ts_l2_norm(w, Mx, My):
    return float(np.sqrt(max(ts_inner(w, w, Mx, My), 0.0)))


def ts_h1y_seminorm(w, Mx, Ay):
    return float(np.sqrt(max(ts_inner(w, w, Mx, Ay), 0.0)))


def kron_solve(Kx, Ky, load, tol=DEFAULT_TOL):
    """Solve ``(Kx (x) Ky) vec(beta) = vec(load)`` as ``Kx beta Ky = load``.

    First ``N_y`` solves against ``Kx``, then ``N_x`` solves against ``Ky``.
    """
    load = np.asarray(load, dtype=float)
    if load.shape != (Kx.shape[0], Ky.shape[0]):
        raise DimensionError(f"load {load.shape} vs operators {Kx.shape}, {Ky.shape}")
    half = cg_solve(Kx, np.ascontiguousarray(load.T), tol=tol)  # rows: (Kx^-1 load)[:, k]
    return cg_solve(Ky, np.ascontiguousarray(half.T), tol=tol)


def _micro_grad_basis(space, order):
    """Sparse matrices of d(eta_k)/dy1 and d(eta_k)/dy2 at quad points."""
    import scipy.sparse as sp

    _, w, _ = space.quadrature(order)
    nt, q = w.shape
    rows = np.repeat(np.arange(nt * q), 3)
    cols = np.repeat(space.mesh.triangles, q, axis=0).ravel()
    g = np.repeat(space.gradients, q, axis=0)  # (nt*q, 3, 2)
    shape = (nt * q, space.n_dof)
    return (sp.csr_matrix((g[:, :, 0].ravel(), (rows, cols)), shape=shape),
            sp.csr_matrix((g[:, :, 1].ravel(), (rows, cols)), shape=shape))


def tensor_load(w, macro_space, micro_space, grad_y_w=None, order=LOAD_ORDER, chunk=2048):
    """``L[j, k] = int int (w xi_j eta_k + grad_y w . grad eta_k xi_j)``.

    ``w`` is an :class:`Expression` in (x, y) or a broadcasting callable
    ``w(x, y)``; for a callable, ``grad_y_w(x, y)`` returns the y-gradient in
    a trailing axis of length 2. Separable expressions take a fast path.
    """
    if isinstance(w, Expression):
        try:
            terms = w.separate()
        except NonSeparableError:
            terms = None
        if terms is not None:
            return _separable_load(terms, macro_space, micro_space, order)
        g1, g2 = w.grad("y")
        fn = lambda x, y: w(x=x, y=y)  # noqa: E731
        gfn = lambda x, y: np.stack([g1(x=x, y=y), g2(x=x, y=y)], axis=-1)  # noqa: E731
    else:
        fn, gfn = w, grad_y_w
    px, wx, _ = macro_space.quadrature(order)
    py, wy, _ = micro_space.quadrature(order)
    px, wx, py, wy = px.reshape(-1, 2), wx.ravel(), py.reshape(-1, 2), wy.ravel()
    phix = macro_space.basis_matrix(order)
    phiy = micro_space.basis_matrix(order)
    dy1, dy2 = _micro_grad_basis(micro_space, order)
    L = np.zeros((macro_space.n_dof, micro_space.n_dof))
    for s in range(0, len(px), chunk):
        xc = px[s:s + chunk]
        wxc = wx[s:s + chunk][:, None] * wy[None, :]
        vals = fn(xc[:, None, :], py[None, :, :]) * wxc
        grads = gfn(xc[:, None, :], py[None, :, :]) * wxc[..., None]
        inner = (phiy.T @ vals.T).T + (dy1.T @ grads[..., 0].T).T + (dy2.T @ grads[..., 1].T).T
        L += phix[s:s + chunk].T @ inner
    return L


def _separable_load(terms, macro_space, micro_space, order):
    from .fem import gradient_load_vector, load_vector

    L = np.zeros((macro_space.n_dof, micro_space.n_dof))
    for term in terms:
        c = float(term.coef())
        lx = load_vector(macro_space, term.fx.on_x(), order)
        ly = load_vector(micro_space, term.fy.on_y(), order) + gradient_load_vector(
            micro_space, term.fy.grad_on("y"), order
        )
        L += c * np.outer(lx, ly)
    return L


def micro_macro_riesz(w, macro_space, micro_space, grad_y_w=None, tol=DEFAULT_TOL):
    """L2 projection in x tensored with the full-H1 projection in y."""
    load = tensor_load(w, macro_space, micro_space, grad_y_w)
    Ky = micro_space.stiffness + micro_space.mass
    beta = kron_solve(macro_space.mass, Ky, load, tol=tol)
    return TwoScaleField(beta, macro_space, micro_space)


def gamma_r_vertices(micro_space):
    return micro_space.mesh.boundary_vertices(Tag.GammaR)


def trace_values_on_gamma_r(w, macro_node):
    """Micro coefficients of macro row ``macro_node`` at the Gamma_R vertices."""
    n = w.coeffs.shape[0]
    if not 0 <= macro_node < n:
        raise IndexError(f"macro node {macro_node} out of range [0, {n})")
    return w.coeffs[macro_node, gamma_r_vertices(w.micro_space)]


def dump_csv(w, fh):
    """Field snapshot as ``macro_node,micro_node,value`` rows."""
    fh.write("macro_node,micro_node,value\n")
    c = _coeffs(w)
    for j in range(c.shape[0]):
        fh.writelines(f"{j},{k},{c[j, k]:.17g}\n" for k in range(c.shape[1]))
