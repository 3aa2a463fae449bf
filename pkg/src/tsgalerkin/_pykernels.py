"""Pure numpy implementations of the hot kernels.

Used when the compiled extension is unavailable, and as the reference the
compiled kernels are tested against.
"""
import numpy as np
import scipy.sparse as sp

# transfer-function kind codes shared with the compiled kernels
B_LINEAR = 0
B_SATURATING = 1


def p1_triplets(vertices, triangles):
    """COO triplets of the P1 mass and unit-coefficient stiffness matrices.

    Returns ``rows, cols, mass, stiff`` each of length ``9 * n_triangles``.
    """
    tri = np.asarray(triangles, dtype=np.int64)
    p = np.asarray(vertices, dtype=float)[tri]  # (nt, 3, 2)
    d1 = p[:, 1] - p[:, 0]
    d2 = p[:, 2] - p[:, 0]
    det = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]
    area = 0.5 * det
    # barycentric gradients, one row per local vertex
    g = np.empty((len(tri), 3, 2))
    g[:, 0, 0] = p[:, 1, 1] - p[:, 2, 1]
    g[:, 0, 1] = p[:, 2, 0] - p[:, 1, 0]
    g[:, 1, 0] = p[:, 2, 1] - p[:, 0, 1]
    g[:, 1, 1] = p[:, 0, 0] - p[:, 2, 0]
    g[:, 2, 0] = p[:, 0, 1] - p[:, 1, 1]
    g[:, 2, 1] = p[:, 1, 0] - p[:, 0, 0]
    g /= det[:, None, None]
    stiff = area[:, None, None] * np.einsum("eik,ejk->eij", g, g)
    ref = np.array([[2.0, 1.0, 1.0], [1.0, 2.0, 1.0], [1.0, 1.0, 2.0]]) / 12.0
    mass = area[:, None, None] * ref[None]
    rows = np.repeat(tri, 3, axis=1).ravel()
    cols = np.tile(tri, (1, 3)).ravel()
    return rows, cols, mass.ravel(), stiff.ravel()


def transfer(z, kind, c_hat, z_sat):
    b = c_hat * np.maximum(z, 0.0)
    if kind == B_SATURATING:
        b = np.minimum(b, z_sat)
    return b


def exchange(U, u, edge_p, edge_q, half_len, kind, c_hat, z_sat):
    """Trapezoidal Gamma_R exchange integrals per macro node (no macro weight).

    Returns ``(macro, micro)`` where ``macro[j] = -sum_e half_e (b_p + b_q)``
    and ``micro[j]`` is the edge load of ``b(U_j - u_j)`` on micro nodes.
    """
    U = np.asarray(U, dtype=float)
    u = np.asarray(u, dtype=float)
    bp = transfer(U[:, None] - u[:, edge_p], kind, c_hat, z_sat) * half_len
    bq = transfer(U[:, None] - u[:, edge_q], kind, c_hat, z_sat) * half_len
    macro = -(bp.sum(axis=1) + bq.sum(axis=1))
    n = u.shape[1]
    # scatter through a sparse incidence matrix keeps the sum order fixed
    ne = len(edge_p)
    scat = sp.csr_matrix(
        (np.ones(2 * ne), (np.concatenate([edge_p, edge_q]), np.arange(2 * ne))),
        shape=(n, 2 * ne),
    )
    micro = (scat @ np.hstack([bp, bq]).T).T
    return macro, np.ascontiguousarray(micro)


def pcg_rows(indptr, indices, data, dinv, B, X, tol, maxiter, nthreads=1):
    """Jacobi-preconditioned CG for ``A x_r = b_r`` on every row ``r`` of B.

    ``X`` holds the initial guesses and is overwritten with the solutions.
    Returns ``(iterations, relative_residuals)``; an iteration count of -1
    flags a non-positive curvature breakdown.
    """
    m, n = B.shape
    A = sp.csr_matrix((data, indices, indptr), shape=(n, n))
    iters = np.zeros(m, dtype=np.int64)
    bnorm = np.sqrt(np.einsum("ij,ij->i", B, B))
    zero = bnorm == 0.0
    X[zero] = 0.0
    R = B - (A @ X.T).T
    rnorm = np.sqrt(np.einsum("ij,ij->i", R, R))
    safe_b = np.where(zero, 1.0, bnorm)
    active = (~zero) & (rnorm > tol * safe_b)
    Z = R * dinv
    P = Z.copy()
    rz = np.einsum("ij,ij->i", R, Z)
    k = 0
    while active.any() and k < maxiter:
        idx = np.flatnonzero(active)
        Pa = P[idx]
        Q = (A @ Pa.T).T
        pq = np.einsum("ij,ij->i", Pa, Q)
        bad = pq <= 0.0
        if bad.any():
            iters[idx[bad]] = -1
            active[idx[bad]] = False
            keep = ~bad
            idx, Pa, Q, pq = idx[keep], Pa[keep], Q[keep], pq[keep]
        alpha = rz[idx] / pq
        X[idx] += alpha[:, None] * Pa
        R[idx] -= alpha[:, None] * Q
        k += 1
        iters[idx] = k
        Ra = R[idx]
        rn = np.sqrt(np.einsum("ij,ij->i", Ra, Ra))
        rnorm[idx] = rn
        done = rn <= tol * safe_b[idx]
        active[idx[done]] = False
        live = idx[~done]
        if live.size == 0:
            break
        Zl = R[live] * dinv
        rz_new = np.einsum("ij,ij->i", R[live], Zl)
        beta = rz_new / rz[live]
        rz[live] = rz_new
        P[live] = Zl + beta[:, None] * P[live]
    res = np.where(zero, 0.0, rnorm / safe_b)
    return iters, res
