"""Quadrature rules on the reference triangle and on intervals.

Triangle rules are given in barycentric coordinates with weights that sum
to one; multiply by the element area to integrate.
"""
import numpy as np


def _orbit3(a, w):
    b = 1.0 - 2.0 * a
    return [(a, a, b), (a, b, a), (b, a, a)], [w] * 3


def _orbit6(a, b, w):
    c = 1.0 - a - b
    pts = [(a, b, c), (a, c, b), (b, a, c), (b, c, a), (c, a, b), (c, b, a)]
    return pts, [w] * 6


def _build(*orbits):
    pts, wts = [], []
    for p, w in orbits:
        pts += p
        wts += w
    return np.array(pts), np.array(wts)


_RULES = {
    1: _build(([(1 / 3, 1 / 3, 1 / 3)], [1.0])),
    2: _build(_orbit3(1 / 6, 1 / 3)),
    # 6-point degree-4 rule
    4: _build(
        _orbit3(0.44594849091596488632, 0.22338158967801146570),
        _orbit3(0.09157621350977074346, 0.10995174365532186764),
    ),
    # 12-point degree-6 rule
    6: _build(
        _orbit3(0.24928674517091042129, 0.11678627572637936603),
        _orbit3(0.06308901449150222834, 0.05084490637020681692),
        _orbit6(0.31035245103378440542, 0.63650249912139864723, 0.08285107561837357519),
    ),
}


def triangle_rule(order):
    """Return ``(bary, weights)`` exact for polynomials of degree ``order``.

    ``bary`` has shape (q, 3); weights sum to 1.
    """
    for deg in sorted(_RULES):
        if deg >= order:
            bary, w = _RULES[deg]
            return bary.copy(), w.copy()
    raise ValueError(f"no triangle rule of degree {order}")


def gauss_interval(n, a=0.0, b=1.0):
    """Gauss-Legendre nodes and weights on [a, b]."""
    x, w = np.polynomial.legendre.leggauss(n)
    half = 0.5 * (b - a)
    return a + half * (x + 1.0), half * w


def gauss_rectangle(n, lower, upper):
    """Tensor Gauss-Legendre rule on an axis-aligned rectangle.

    Returns points of shape (n*n, 2) and weights of shape (n*n,).
    """
    x, wx = gauss_interval(n, lower[0], upper[0])
    y, wy = gauss_interval(n, lower[1], upper[1])
    X, Y = np.meshgrid(x, y, indexing="ij")
    W = np.outer(wx, wy)
    return np.column_stack([X.ravel(), Y.ravel()]), W.ravel()
