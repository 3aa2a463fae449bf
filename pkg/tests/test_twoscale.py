import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import unit_spaces
from oracles import tensor_quadrature_norms
from tsgalerkin.errors import DimensionError
from tsgalerkin.expr import Expression
from tsgalerkin.twoscale import (TwoScaleField, dump_csv, kron_apply, kron_solve, micro_macro_riesz,
                                 trace_values_on_gamma_r, ts_h1y_seminorm, ts_inner, ts_l2_norm)


def test_kronecker_matches_tensor_quadrature():
    ms, ys = unit_spaces(2)
    assert ms.mesh.n_triangles <= 8 and ys.mesh.n_triangles <= 8
    rng = np.random.default_rng(1)
    for _ in range(100):
        beta = rng.standard_normal((ms.n_dof, ys.n_dof))
        l2, h1 = tensor_quadrature_norms(beta, ms.mesh, ys.mesh)
        w = TwoScaleField(beta, ms, ys)
        assert ts_l2_norm(w, ms.mass, ys.mass) ** 2 == pytest.approx(l2, rel=1e-12, abs=1e-12)
        assert ts_h1y_seminorm(w, ms.mass, ys.stiffness) ** 2 == pytest.approx(h1, rel=1e-12, abs=1e-12)


def test_kron_apply_equals_dense_kron():
    ms, ys = unit_spaces(2, 3)
    rng = np.random.default_rng(2)
    beta = rng.standard_normal((ms.n_dof, ys.n_dof))
    dense = np.kron(ms.mass.csr.toarray(), ys.stiffness.csr.toarray())
    out = kron_apply(ms.mass, ys.stiffness, beta)
    assert np.allclose(out.ravel(), dense @ beta.ravel(), atol=1e-14)


def test_kron_solve_inverts_apply():
    ms, ys = unit_spaces(3)
    rng = np.random.default_rng(3)
    beta = rng.standard_normal((ms.n_dof, ys.n_dof))
    Ky = ys.stiffness + ys.mass
    back = kron_solve(ms.mass, Ky, kron_apply(ms.mass, Ky, beta), tol=1e-14)
    assert np.max(np.abs(back - beta)) < 1e-9


def test_constant_field_norms():
    ms, ys = unit_spaces(3)
    w = TwoScaleField(np.full((ms.n_dof, ys.n_dof), 2.0), ms, ys)
    assert ts_l2_norm(w, ms.mass, ys.mass) == pytest.approx(2.0, abs=1e-13)
    assert ts_h1y_seminorm(w, ms.mass, ys.stiffness) == pytest.approx(0.0, abs=1e-7)


def test_interpolation_reproduces_bilinear_in_each_variable():
    ms, ys = unit_spaces(2)
    f = Expression.parse("(1 + x1 - x2)*(2*y1 + y2)")
    w = TwoScaleField.interpolate(f, ms, ys)
    xs, ysv = ms.mesh.vertices, ys.mesh.vertices
    expect = (1 + xs[:, 0] - xs[:, 1])[:, None] * (2 * ysv[:, 0] + ysv[:, 1])[None, :]
    assert np.allclose(w.coeffs, expect)
    # grad_y w = (1 + x1 - x2) (2, 1): |.|^2 integrated over Omega is 5 * int (1+x1-x2)^2 = 5 * 7/6
    assert ts_h1y_seminorm(w, ms.mass, ys.stiffness) ** 2 == pytest.approx(5 * 7 / 6, rel=1e-12)


def test_riesz_projection_exact_on_tensor_space():
    ms, ys = unit_spaces(2)
    f = Expression.parse("(1 + x1)*(y1 - 2*y2)")
    w = micro_macro_riesz(f, ms, ys)
    assert np.max(np.abs(w.coeffs - TwoScaleField.interpolate(f, ms, ys).coeffs)) < 1e-9


def test_riesz_callable_matches_expression():
    ms, ys = unit_spaces(3)
    f = Expression.parse("sin(x1*y1) + x2*y2")
    a = micro_macro_riesz(f, ms, ys).coeffs

    def fn(x, y):
        return np.sin(x[..., 0] * y[..., 0]) + x[..., 1] * y[..., 1]

    def grad(x, y):
        return np.stack(np.broadcast_arrays(x[..., 0] * np.cos(x[..., 0] * y[..., 0]), x[..., 1]), axis=-1)

    b = micro_macro_riesz(fn, ms, ys, grad_y_w=grad).coeffs
    assert np.max(np.abs(a - b)) < 1e-12


def test_trace_values_and_range():
    ms, ys = unit_spaces(2)
    w = TwoScaleField.interpolate(Expression.parse("x1 + y2"), ms, ys)
    vals = trace_values_on_gamma_r(w, 0)
    assert np.allclose(vals, ms.mesh.vertices[0, 0] + 1.0)  # top edge y2 = 1
    with pytest.raises(IndexError):
        trace_values_on_gamma_r(w, ms.n_dof)


def test_shape_errors():
    ms, ys = unit_spaces(2)
    with pytest.raises(DimensionError):
        TwoScaleField(np.zeros((2, 2)), ms, ys)
    with pytest.raises(DimensionError):
        ts_inner(np.zeros((ms.n_dof, ys.n_dof)), np.zeros((ms.n_dof, 1)), ms.mass, ys.mass)


def test_dump_csv(tmp_path):
    ms, ys = unit_spaces(1)
    w = TwoScaleField(np.arange(16.0).reshape(4, 4) / 3, ms, ys)
    p = tmp_path / "w.csv"
    with open(p, "w") as fh:
        dump_csv(w, fh)
    rows = np.loadtxt(p, delimiter=",", skiprows=1)
    assert rows.shape == (16, 3)
    assert np.array_equal(rows[:, 2].reshape(4, 4), w.coeffs)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(-3, 3), st.floats(-3, 3))
def test_inner_product_properties(seed, s, t):
    ms, ys = unit_spaces(2)
    rng = np.random.default_rng(seed)
    a, b, c = (rng.standard_normal((ms.n_dof, ys.n_dof)) for _ in range(3))
    M, My = ms.mass, ys.mass
    assert ts_inner(a, b, M, My) == pytest.approx(ts_inner(b, a, M, My), rel=1e-12, abs=1e-13)
    lhs = ts_inner(s * a + t * b, c, M, My)
    assert lhs == pytest.approx(s * ts_inner(a, c, M, My) + t * ts_inner(b, c, M, My), rel=1e-10, abs=1e-12)
    assert abs(ts_inner(a, b, M, My)) <= ts_l2_norm(a, M, My) * ts_l2_norm(b, M, My) * (1 + 1e-12)
    assert ts_inner(a, a, M, My) > 0
