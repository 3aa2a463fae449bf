"""Kernel backend selection.

The compiled extension ``_ckernels`` is used when it imports; otherwise the
numpy fallback in ``_pykernels``. Set ``TSGALERKIN_KERNELS=python`` to force
the fallback, or ``=cython`` to fail loudly when the extension is missing.
"""
import importlib
import os
from contextlib import contextmanager

from . import _pykernels

_choice = os.environ.get("TSGALERKIN_KERNELS", "").strip().lower()

if _choice == "python":
    _impl = _pykernels
else:
    try:
        _impl = importlib.import_module("tsgalerkin._ckernels")
    except ImportError:
        if _choice == "cython":
            raise
        _impl = _pykernels

BACKEND = "cython" if _impl is not _pykernels else "python"

B_LINEAR = _pykernels.B_LINEAR
B_SATURATING = _pykernels.B_SATURATING

_threads = 1


def set_num_threads(n):
    """Cap the worker count of the parallel row solves."""
    global _threads
    _threads = max(1, int(n))


def get_num_threads():
    return _threads


def backend(name=None):
    """Return the kernel module for ``name`` ('python' or 'cython')."""
    if name is None:
        return _impl
    if name == "python":
        return _pykernels
    if name == "cython":
        return importlib.import_module("tsgalerkin._ckernels")
    raise ValueError(f"unknown kernel backend {name!r}")


@contextmanager
def use_backend(name):
    """Temporarily route the module-level kernels to backend ``name``."""
    global _impl
    old = _impl
    _impl = backend(name)
    try:
        yield _impl
    finally:
        _impl = old


def available_backends():
    names = ["python"]
    try:
        importlib.import_module("tsgalerkin._ckernels")
        names.append("cython")
    except ImportError:
        pass
    return names


def p1_triplets(vertices, triangles):
    return _impl.p1_triplets(vertices, triangles)


def exchange(U, u, edge_p, edge_q, half_len, kind, c_hat, z_sat):
    return _impl.exchange(U, u, edge_p, edge_q, half_len, kind, c_hat, z_sat)


def pcg_rows(indptr, indices, data, dinv, B, X, tol, maxiter):
    return _impl.pcg_rows(indptr, indices, data, dinv, B, X, tol, maxiter, _threads)
