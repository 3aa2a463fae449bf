"""P1 finite elements on a :class:`~tsgalerkin.mesh.Mesh2D`.

Operators are assembled with exact element integrals. Load vectors use the
degree-4 triangle rule and error norms against analytic fields use the
degree-6 rule.
"""
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from . import kernels
from .errors import DimensionError, InvalidTagError, IterativeSolverError, PreconditionError
from .mesh import Tag
from .quadrature import gauss_interval, triangle_rule

LOAD_ORDER = 4
ERROR_ORDER = 6
DEFAULT_TOL = 1e-10


class SparseOperator:
    """CSR matrix plus the symmetry flag the CG solver relies on."""

    def __init__(self, matrix, symmetric=True):
        csr = sp.csr_matrix(matrix, dtype=float)
        csr.sum_duplicates()
        csr.sort_indices()
        self.csr = csr
        self.symmetric = bool(symmetric)

    @property
    def shape(self):
        return self.csr.shape

    def diagonal(self):
        return self.csr.diagonal()

    def __matmul__(self, x):
        return self.csr @ x

    def __add__(self, other):
        return SparseOperator(self.csr + other.csr, self.symmetric and other.symmetric)

    def __mul__(self, scalar):
        return SparseOperator(self.csr * float(scalar), self.symmetric)

    __rmul__ = __mul__

    def restrict(self, rows, cols=None):
        cols = rows if cols is None else cols
        sub = self.csr[rows][:, cols]
        return SparseOperator(sub, self.symmetric and cols is rows)

    def toarray(self):
        return self.csr.toarray()

    def dump_coo(self, fh):
        coo = self.csr.tocoo()
        for i, j, v in zip(coo.row, coo.col, coo.data):
            fh.write(f"{i} {j} {v:.17g}\n")


@dataclass(frozen=True, eq=False)
class P1Space:
    """Nodal P1 space; Dirichlet dofs are vertices on MacroDirichlet edges."""

    mesh: object
    dirichlet_mask: np.ndarray = field(init=False)

    def __post_init__(self):
        mask = np.zeros(self.mesh.n_vertices, dtype=bool)
        mask[self.mesh.boundary_vertices(Tag.MacroDirichlet)] = True
        mask.setflags(write=False)
        object.__setattr__(self, "dirichlet_mask", mask)

    @property
    def n_dof(self):
        return self.mesh.n_vertices

    @property
    def free(self):
        return np.flatnonzero(~self.dirichlet_mask)

    @property
    def fixed(self):
        return np.flatnonzero(self.dirichlet_mask)

    @cached_property
    def _triplets(self):
        return kernels.p1_triplets(
            np.ascontiguousarray(self.mesh.vertices, dtype=float),
            np.ascontiguousarray(self.mesh.triangles, dtype=np.int64),
        )

    @cached_property
    def mass(self):
        return assemble_mass(self)

    @cached_property
    def stiffness(self):
        return assemble_stiffness(self)

    @cached_property
    def lumped(self):
        return np.asarray(self.mass.csr.sum(axis=1)).ravel()

    @cached_property
    def gradients(self):
        """Barycentric gradients per triangle, shape (nt, 3, 2)."""
        p = self.mesh.vertices[self.mesh.triangles]
        det = 2.0 * self.mesh.areas()
        g = np.empty((len(p), 3, 2))
        g[:, 0] = np.column_stack([p[:, 1, 1] - p[:, 2, 1], p[:, 2, 0] - p[:, 1, 0]])
        g[:, 1] = np.column_stack([p[:, 2, 1] - p[:, 0, 1], p[:, 0, 0] - p[:, 2, 0]])
        g[:, 2] = np.column_stack([p[:, 0, 1] - p[:, 1, 1], p[:, 1, 0] - p[:, 0, 0]])
        return g / det[:, None, None]

    def quadrature(self, order):
        """Quadrature data for the whole mesh.

        Returns ``(points, weights, bary)``: points (nt, q, 2), weights
        (nt, q) including the element area, bary (q, 3).
        """
        bary, w = triangle_rule(order)
        p = self.mesh.vertices[self.mesh.triangles]
        pts = np.einsum("qa,tad->tqd", bary, p)
        return pts, self.mesh.areas()[:, None] * w[None, :], bary

    def basis_matrix(self, order):
        """Sparse (nt*q, n_dof) matrix of hat-function values at quad points."""
        bary, _ = triangle_rule(order)
        nt, q = self.mesh.n_triangles, len(bary)
        rows = np.repeat(np.arange(nt * q), 3)
        cols = np.repeat(self.mesh.triangles, q, axis=0).ravel()
        vals = np.tile(bary, (nt, 1)).ravel()
        return sp.csr_matrix((vals, (rows, cols)), shape=(nt * q, self.n_dof))

    def evaluate(self, coeffs, order):
        """Values of a P1 function (or stack of them, last axis dofs) at quad points."""
        bary, _ = triangle_rule(order)
        c = np.asarray(coeffs)[..., self.mesh.triangles]  # (..., nt, 3)
        return np.einsum("...ta,qa->...tq", c, bary)

    def element_gradient(self, coeffs):
        c = np.asarray(coeffs)[..., self.mesh.triangles]
        return np.einsum("...ta,tad->...td", c, self.gradients)


def assemble_mass(space):
    rows, cols, mass, _ = space._triplets
    n = space.n_dof
    return SparseOperator(sp.coo_matrix((mass, (rows, cols)), shape=(n, n)))


def assemble_stiffness(space):
    rows, cols, _, stiff = space._triplets
    n = space.n_dof
    return SparseOperator(sp.coo_matrix((stiff, (rows, cols)), shape=(n, n)))


def boundary_edge_data(space, tag):
    """(p, q, length) arrays of the edges carrying ``tag``."""
    edges = space.mesh.tagged_edges(tag)
    if len(edges) == 0:
        raise InvalidTagError(f"mesh has no boundary edge tagged {Tag(int(tag)).name}")
    v = space.mesh.vertices
    length = np.linalg.norm(v[edges[:, 1]] - v[edges[:, 0]], axis=1)
    return edges[:, 0].copy(), edges[:, 1].copy(), length


def assemble_boundary_mass(space, tag):
    """Edge mass matrix of the boundary part carrying ``tag``."""
    p, q, length = boundary_edge_data(space, tag)
    n = space.n_dof
    rows = np.concatenate([p, p, q, q])
    cols = np.concatenate([p, q, p, q])
    vals = np.concatenate([2 * length, length, length, 2 * length]) / 6.0
    return SparseOperator(sp.coo_matrix((vals, (rows, cols)), shape=(n, n)))


def interpolate_nodal(space, f):
    return np.asarray(f(space.mesh.vertices), dtype=float) * np.ones(space.n_dof)


def load_vector(space, f, order=LOAD_ORDER):
    """Entries ``int f * xi_j`` by the triangle rule of the given order."""
    pts, w, bary = space.quadrature(order)
    vals = np.asarray(f(pts.reshape(-1, 2)), dtype=float).reshape(w.shape)
    local = np.einsum("tq,qa->ta", vals * w, bary)
    return np.bincount(space.mesh.triangles.ravel(), weights=local.ravel(), minlength=space.n_dof)


def gradient_load_vector(space, grad_f, order=LOAD_ORDER):
    """Entries ``int grad_f . grad xi_j``."""
    pts, w, _ = space.quadrature(order)
    g = np.asarray(grad_f(pts.reshape(-1, 2)), dtype=float).reshape(w.shape + (2,))
    gi = np.einsum("tq,tqd->td", w, g)
    local = np.einsum("td,tad->ta", gi, space.gradients)
    return np.bincount(space.mesh.triangles.ravel(), weights=local.ravel(), minlength=space.n_dof)


def cg_solve(op, rhs, tol=DEFAULT_TOL, max_iter=None, x0=None):
    """Jacobi-preconditioned conjugate gradients.

    ``rhs`` may be a vector or a 2D array whose rows are independent
    right-hand sides. Raises :class:`IterativeSolverError` when any system
    misses ``||A x - b|| <= tol ||b||`` within ``max_iter`` iterations.
    """
    if not op.symmetric:
        raise PreconditionError("cg_solve needs a symmetric positive definite operator")
    if tol <= 0:
        raise PreconditionError("tolerance must be positive")
    n = op.shape[0]
    rhs = np.asarray(rhs, dtype=float)
    single = rhs.ndim == 1
    B = np.ascontiguousarray(rhs.reshape(1, -1) if single else rhs)
    if B.shape[1] != n or op.shape[1] != n:
        raise DimensionError(f"operator {op.shape} vs right-hand side {rhs.shape}")
    diag = op.diagonal()
    if np.any(diag <= 0.0):
        raise PreconditionError("operator diagonal is not positive; not SPD")
    if max_iter is None:
        max_iter = max(10 * n, 100)
    if x0 is None:
        X = np.zeros_like(B)
    else:
        X = np.array(np.broadcast_to(x0, B.shape), dtype=float, order="C")
    csr = op.csr
    iters, res = kernels.pcg_rows(
        csr.indptr.astype(np.int32),
        csr.indices.astype(np.int32),
        np.ascontiguousarray(csr.data, dtype=float),
        1.0 / diag,
        B,
        X,
        float(tol),
        int(max_iter),
    )
    if np.any(iters < 0):
        raise PreconditionError("non-positive curvature in CG; operator is not positive definite")
    if np.any(res > tol):
        worst = int(np.argmax(res))
        raise IterativeSolverError("CG did not converge", int(iters[worst]), float(res[worst]))
    return X[0] if single else X


def solve_dirichlet(op, rhs, mask, values, tol=DEFAULT_TOL, x0=None):
    """Solve with rows/columns of ``mask`` dofs eliminated symmetrically.

    ``rhs`` and ``values`` may be 1D or stacks of rows.
    """
    rhs = np.asarray(rhs, dtype=float)
    free = np.flatnonzero(~mask)
    fixed = np.flatnonzero(mask)
    x = np.zeros_like(rhs)
    x[..., fixed] = np.asarray(values, dtype=float)[..., fixed]
    if len(free) == 0:
        return x
    a_ff = op.restrict(free)
    b = rhs[..., free]
    if len(fixed):
        a_fb = op.csr[free][:, fixed]
        b = b - (a_fb @ x[..., fixed].T).T
    guess = None if x0 is None else np.asarray(x0)[..., free]
    x[..., free] = cg_solve(a_ff, b, tol=tol, x0=guess)
    return x


def l2_projection(space, f, tol=DEFAULT_TOL):
    return cg_solve(space.mass, load_vector(space, f), tol=tol)


def h1_riesz_projection(space, f, grad_f, variant="dirichlet_zero", tol=DEFAULT_TOL):
    """Elliptic projection onto the space.

    ``dirichlet_zero`` solves the stiffness system with Dirichlet dofs pinned
    to the nodal interpolant of ``f``; ``full_h1`` uses the H1 inner product
    and needs no boundary data.
    """
    ell = gradient_load_vector(space, grad_f)
    if variant == "dirichlet_zero":
        if not space.dirichlet_mask.any():
            raise PreconditionError("dirichlet_zero projection needs Dirichlet dofs")
        g = interpolate_nodal(space, f)
        return solve_dirichlet(space.stiffness, ell, space.dirichlet_mask, g, tol=tol)
    if variant == "full_h1":
        op = space.stiffness + space.mass
        return cg_solve(op, ell + load_vector(space, f), tol=tol)
    raise ValueError(f"unknown projection variant {variant!r}")


def norms(space, coeffs):
    """(L2 norm, H1 seminorm) of a P1 function."""
    c = np.asarray(coeffs, dtype=float)
    l2 = float(np.sqrt(max(c @ (space.mass @ c), 0.0)))
    h1 = float(np.sqrt(max(c @ (space.stiffness @ c), 0.0)))
    return l2, h1


def error_norms(space, coeffs, f, grad_f=None, order=ERROR_ORDER):
    """(L2, H1-seminorm) of ``P1 function - f`` by triangle quadrature.

    The seminorm is ``nan`` when ``grad_f`` is not given.
    """
    pts, w, _ = space.quadrature(order)
    flat = pts.reshape(-1, 2)
    uh = space.evaluate(coeffs, order)
    fv = np.asarray(f(flat), dtype=float).reshape(w.shape)
    l2 = float(np.sqrt(np.sum(w * (uh - fv) ** 2)))
    if grad_f is None:
        return l2, float("nan")
    gh = space.element_gradient(coeffs)  # (nt, 2)
    gv = np.asarray(grad_f(flat), dtype=float).reshape(w.shape + (2,))
    h1 = float(np.sqrt(np.sum(w[..., None] * (gh[:, None, :] - gv) ** 2)))
    return l2, h1


def edge_quadrature(space, tag, n_gauss=4):
    """Gauss points on the tagged boundary edges.

    Returns ``(points (ne, g, 2), weights (ne, g), s (g,), p, q)`` where the
    hat functions of endpoints p and q are ``1 - s`` and ``s``.
    """
    p, q, length = boundary_edge_data(space, tag)
    s, w = gauss_interval(n_gauss)
    v = space.mesh.vertices
    pts = v[p][:, None, :] * (1.0 - s)[None, :, None] + v[q][:, None, :] * s[None, :, None]
    return pts, length[:, None] * w[None, :], s, p, q
