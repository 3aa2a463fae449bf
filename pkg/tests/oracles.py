"""Brute-force reference computations, written independently of the package.

Everything here uses dense arrays, explicit loops and its own quadrature so
that agreement with the package is evidence rather than a tautology.
"""
import numpy as np


def tri_rule(n=4):
    """Collapsed (Duffy) Gauss rule on the reference triangle (0,0),(1,0),(0,1).

    Exact for polynomials of degree <= 2n - 2 in each direction.
    """
    x, w = np.polynomial.legendre.leggauss(n)
    x, w = 0.5 * (x + 1.0), 0.5 * w
    pts, wts = [], []
    for a, wa in zip(x, w):
        for b, wb in zip(x, w):
            pts.append((a * (1.0 - b), b))
            wts.append(wa * wb * (1.0 - b))
    return np.array(pts), np.array(wts)


def hat_coefficients(verts):
    """Rows (c0, c1, c2) with hat_i(p) = c0 + c1 x + c2 y on a triangle."""
    V = np.column_stack([np.ones(3), verts])
    return np.linalg.inv(V).T


def element_points(verts, ref):
    v0, v1, v2 = verts
    J = np.column_stack([v1 - v0, v2 - v0])
    return v0 + ref @ J.T, abs(np.linalg.det(J))


def dense_mass_stiffness(mesh):
    """Dense P1 mass and stiffness from hat-function quadrature."""
    n = len(mesh.vertices)
    M, A = np.zeros((n, n)), np.zeros((n, n))
    ref, w = tri_rule(3)
    for tri in mesh.triangles:
        verts = mesh.vertices[tri]
        C = hat_coefficients(verts)
        pts, det = element_points(verts, ref)
        vals = C[:, :1] + C[:, 1:] @ pts.T  # (3, q)
        for a in range(3):
            for b in range(3):
                M[tri[a], tri[b]] += det * np.sum(w * vals[a] * vals[b])
                A[tri[a], tri[b]] += 0.5 * det * (C[a, 1:] @ C[b, 1:])
    return M, A


def basis_at(mesh, ref):
    """For every triangle: (vertex ids, hat values (3, q), hat gradients (3, 2), weights*det)."""
    out = []
    for tri in mesh.triangles:
        verts = mesh.vertices[tri]
        C = hat_coefficients(verts)
        pts, det = element_points(verts, ref)
        out.append((tri, C[:, :1] + C[:, 1:] @ pts.T, C[:, 1:], det))
    return out


def tensor_quadrature_norms(beta, macro_mesh, micro_mesh, n=4):
    """(int w^2, int |grad_y w|^2) over Omega x Y by a 4D product rule."""
    ref, w = tri_rule(n)
    X = basis_at(macro_mesh, ref)
    Y = basis_at(micro_mesh, ref)
    l2 = h1 = 0.0
    for tx, vx, _, dx in X:
        for ty, vy, gy, dy in Y:
            local = beta[np.ix_(tx, ty)]  # (3, 3)
            vals = vx.T @ local @ vy  # (qx, qy)
            l2 += dx * dy * float(w @ vals**2 @ w)
            grad = np.einsum("aq,ab,bd->qd", vx, local, gy)  # constant in y on the triangle
            h1 += dx * dy * 0.5 * float(w @ np.sum(grad**2, axis=1))
    return l2, h1


def dense_heat_steps(mesh, theta, D, dt, n_steps, U0, boundary_values):
    """Backward Euler for theta U_t = D lap U with nodal Dirichlet data.

    ``boundary_values(t)`` returns the nodal Dirichlet vector; yields U^n.
    """
    M, A = dense_mass_stiffness(mesh)
    lhs = theta * M + dt * D * A
    bnd = np.zeros(len(mesh.vertices), dtype=bool)
    for i, j in mesh.boundary_edges:
        bnd[i] = bnd[j] = True
    free = ~bnd
    U = np.array(U0, dtype=float)
    for n in range(1, n_steps + 1):
        rhs = theta * M @ U
        g = boundary_values(n * dt)
        new = np.where(bnd, g, 0.0)
        new[free] = np.linalg.solve(lhs[np.ix_(free, free)], rhs[free] - lhs[np.ix_(free, bnd)] @ g[bnd])
        U = new
        yield U


def gamma_r_edges(micro_mesh, tag):
    return [(i, j) for (i, j), t in zip(micro_mesh.boundary_edges, micro_mesh.tags) if t == tag]


def loop_exchange(U, u, wx, micro_mesh, tag, b):
    """Literal double loop of the lumped-trapezoid exchange terms."""
    nx, ny = u.shape
    macro = np.zeros(nx)
    micro = np.zeros((nx, ny))
    for j in range(nx):
        for p, q in gamma_r_edges(micro_mesh, tag):
            half = 0.5 * np.linalg.norm(micro_mesh.vertices[p] - micro_mesh.vertices[q])
            bp, bq = b(U[j] - u[j, p]), b(U[j] - u[j, q])
            macro[j] -= wx[j] * half * (bp + bq)
            micro[j, p] += wx[j] * half * bp
            micro[j, q] += wx[j] * half * bq
    return macro, micro


def tensor_error_norms(beta, f, grad_y_f, macro_mesh, micro_mesh, n=6):
    """(int (w_h - f)^2, int |grad_y (w_h - f)|^2) by a 4D product rule.

    ``f(x, y)`` and ``grad_y_f(x, y)`` take point arrays (qx, 1, 2), (1, qy, 2).
    """
    ref, w = tri_rule(n)
    X = basis_at(macro_mesh, ref)
    Y = basis_at(micro_mesh, ref)
    l2 = h1 = 0.0
    for tx, vx, _, dx in X:
        px, _ = element_points(macro_mesh.vertices[tx], ref)
        for ty, vy, gy, dy in Y:
            py, _ = element_points(micro_mesh.vertices[ty], ref)
            local = beta[np.ix_(tx, ty)]
            diff = vx.T @ local @ vy - f(px[:, None], py[None])
            gh = np.einsum("aq,ab,bd->qd", vx, local, gy)[:, None, :]
            gd = gh - grad_y_f(px[:, None], py[None])
            wts = np.outer(w, w) * dx * dy
            l2 += float(np.sum(wts * diff**2))
            h1 += float(np.sum(wts * np.sum(gd**2, axis=-1)))
    return l2, h1
