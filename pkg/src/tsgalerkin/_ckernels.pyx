# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled versions of the hot kernels; same contracts as ``_pykernels``."""
import numpy as np
cimport numpy as cnp
from cython.parallel cimport prange
from libc.math cimport sqrt
from libc.stdlib cimport malloc, free

cnp.import_array()

B_LINEAR = 0
B_SATURATING = 1


def p1_triplets(const double[:, ::1] vertices, const cnp.int64_t[:, ::1] triangles):
    cdef Py_ssize_t nt = triangles.shape[0]
    cdef Py_ssize_t e, a, b, k
    cdef double x0, y0, x1, y1, x2, y2, det, area
    cdef double g[3][2]
    rows_a = np.empty(9 * nt, dtype=np.int64)
    cols_a = np.empty(9 * nt, dtype=np.int64)
    mass_a = np.empty(9 * nt, dtype=np.float64)
    stiff_a = np.empty(9 * nt, dtype=np.float64)
    cdef cnp.int64_t[::1] rows = rows_a
    cdef cnp.int64_t[::1] cols = cols_a
    cdef double[::1] mass = mass_a
    cdef double[::1] stiff = stiff_a
    for e in range(nt):
        x0 = vertices[triangles[e, 0], 0]
        y0 = vertices[triangles[e, 0], 1]
        x1 = vertices[triangles[e, 1], 0]
        y1 = vertices[triangles[e, 1], 1]
        x2 = vertices[triangles[e, 2], 0]
        y2 = vertices[triangles[e, 2], 1]
        det = (x1 - x0) * (y2 - y0) - (y1 - y0) * (x2 - x0)
        area = 0.5 * det
        g[0][0] = (y1 - y2) / det
        g[0][1] = (x2 - x1) / det
        g[1][0] = (y2 - y0) / det
        g[1][1] = (x0 - x2) / det
        g[2][0] = (y0 - y1) / det
        g[2][1] = (x1 - x0) / det
        for a in range(3):
            for b in range(3):
                k = 9 * e + 3 * a + b
                rows[k] = triangles[e, a]
                cols[k] = triangles[e, b]
                stiff[k] = area * (g[a][0] * g[b][0] + g[a][1] * g[b][1])
                mass[k] = area * (2.0 if a == b else 1.0) / 12.0
    return rows_a, cols_a, mass_a, stiff_a


cdef inline double _transfer(double z, int kind, double c_hat, double z_sat) noexcept nogil:
    cdef double b = 0.0
    if z > 0.0:
        b = c_hat * z
    if kind == 1 and b > z_sat:
        b = z_sat
    return b


def exchange(const double[::1] U, const double[:, ::1] u, const cnp.int64_t[::1] edge_p,
             const cnp.int64_t[::1] edge_q, const double[::1] half_len, int kind,
             double c_hat, double z_sat):
    cdef Py_ssize_t m = u.shape[0], n = u.shape[1], ne = edge_p.shape[0]
    cdef Py_ssize_t j, e
    cdef double bp, bq, acc_p, acc_q
    macro_a = np.zeros(m, dtype=np.float64)
    micro_a = np.zeros((m, n), dtype=np.float64)
    cdef double[::1] macro = macro_a
    cdef double[:, ::1] micro = micro_a
    for j in range(m):
        acc_p = 0.0
        acc_q = 0.0
        for e in range(ne):
            bp = half_len[e] * _transfer(U[j] - u[j, edge_p[e]], kind, c_hat, z_sat)
            bq = half_len[e] * _transfer(U[j] - u[j, edge_q[e]], kind, c_hat, z_sat)
            acc_p += bp
            acc_q += bq
            micro[j, edge_p[e]] += bp
            micro[j, edge_q[e]] += bq
        macro[j] = -(acc_p + acc_q)
    return macro_a, micro_a


cdef inline void _matvec(Py_ssize_t n, const int* indptr, const int* indices,
                         const double* data, const double* x, double* y) noexcept nogil:
    cdef Py_ssize_t i, k
    cdef double s
    for i in range(n):
        s = 0.0
        for k in range(indptr[i], indptr[i + 1]):
            s = s + data[k] * x[indices[k]]
        y[i] = s


cdef void _pcg_one(Py_ssize_t n, const int* indptr, const int* indices,
                   const double* data, const double* dinv, const double* b,
                   double* x, double tol, long maxiter, double* work,
                   long* it_out, double* res_out) noexcept nogil:
    cdef double* r = work
    cdef double* z = work + n
    cdef double* p = work + 2 * n
    cdef double* q = work + 3 * n
    cdef Py_ssize_t i
    cdef long k
    cdef double bnorm = 0.0, rnorm = 0.0, rz = 0.0, rz_new, pq, alpha, beta
    for i in range(n):
        bnorm = bnorm + b[i] * b[i]
    bnorm = sqrt(bnorm)
    if bnorm == 0.0:
        for i in range(n):
            x[i] = 0.0
        it_out[0] = 0
        res_out[0] = 0.0
        return
    _matvec(n, indptr, indices, data, x, q)
    for i in range(n):
        r[i] = b[i] - q[i]
        rnorm = rnorm + r[i] * r[i]
    rnorm = sqrt(rnorm)
    it_out[0] = 0
    if rnorm <= tol * bnorm:
        res_out[0] = rnorm / bnorm
        return
    for i in range(n):
        z[i] = dinv[i] * r[i]
        p[i] = z[i]
        rz = rz + r[i] * z[i]
    k = 0
    while k < maxiter:
        _matvec(n, indptr, indices, data, p, q)
        pq = 0.0
        for i in range(n):
            pq = pq + p[i] * q[i]
        if pq <= 0.0:
            it_out[0] = -1
            res_out[0] = rnorm / bnorm
            return
        alpha = rz / pq
        rnorm = 0.0
        for i in range(n):
            x[i] = x[i] + alpha * p[i]
            r[i] = r[i] - alpha * q[i]
            rnorm = rnorm + r[i] * r[i]
        rnorm = sqrt(rnorm)
        k = k + 1
        it_out[0] = k
        if rnorm <= tol * bnorm:
            break
        rz_new = 0.0
        for i in range(n):
            z[i] = dinv[i] * r[i]
            rz_new = rz_new + r[i] * z[i]
        beta = rz_new / rz
        rz = rz_new
        for i in range(n):
            p[i] = z[i] + beta * p[i]
    res_out[0] = rnorm / bnorm


def pcg_rows(const int[::1] indptr, const int[::1] indices, const double[::1] data,
             const double[::1] dinv, const double[:, ::1] B, double[:, ::1] X,
             double tol, long maxiter, int nthreads=1):
    cdef Py_ssize_t m = B.shape[0], n = B.shape[1], r
    iters_a = np.zeros(m, dtype=np.int64)
    res_a = np.zeros(m, dtype=np.float64)
    cdef cnp.int64_t[::1] iters = iters_a
    cdef double[::1] res = res_a
    cdef double* work
    cdef long it
    cdef double rr
    if m == 0:
        return iters_a, res_a
    if nthreads < 1:
        nthreads = 1
    for r in prange(m, nogil=True, schedule="static", num_threads=nthreads):
        work = <double*> malloc(4 * n * sizeof(double))
        _pcg_one(n, &indptr[0], &indices[0], &data[0], &dinv[0], &B[r, 0],
                 &X[r, 0], tol, maxiter, work, &it, &rr)
        iters[r] = it
        res[r] = rr
        free(work)
    return iters_a, res_a
