import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tsgalerkin.errors import PreconditionError, ValidationError
from tsgalerkin.expr import Expression, NonSeparableError, as_expression
from tsgalerkin.model import (ModelParams, ReactionFactorFn, TransferFn, data_suprema, eval_b, eval_eta,
                              linf_bounds, reaction_max_factors)


def test_expression_evaluation_and_derivatives():
    e = Expression.parse("exp(-t)*sin(pi*x1)*x2^2 + y1*y2")
    x = np.array([[0.5, 2.0]])
    y = np.array([[3.0, 4.0]])
    assert e(t=0.0, x=x, y=y)[0] == pytest.approx(4.0 + 12.0)
    assert e.diff("t")(t=0.0, x=x)[0] == pytest.approx(-4.0)
    assert e.laplacian("y")(x=x, y=y)[0] == 0.0
    assert e.laplacian("x")(t=0, x=x)[0] == pytest.approx(-np.pi**2 * 4.0 + 2.0)
    g = e.grad_on("y")(y)
    assert np.allclose(g, [[4.0, 3.0]])


@pytest.mark.parametrize("bad", ["foo(x1)", "x1 +", "z", "import os", "x1.real", "[x1]"])
def test_expression_rejects(bad):
    with pytest.raises(ValidationError):
        Expression.parse(bad)


def test_separation():
    terms = Expression.parse("exp(-t)*(1 + x1)*cos(pi*y1) + 2*x2").separate()
    assert len(terms) == 3
    with pytest.raises(NonSeparableError):
        Expression.parse("sin(x1*y1)").separate()
    assert Expression.parse("0").separate() == []


def test_transfer_examples():
    assert eval_b(TransferFn("linear_positive_part", 1.0), -1.0) == 0.0
    assert eval_b(TransferFn("linear_positive_part", 2.0), 3.0) == 6.0
    assert eval_b(TransferFn("saturating", 1.0, 0.5), 3.0) == 0.5
    assert TransferFn("linear_positive_part", 0.0).is_zero


@pytest.mark.parametrize("args", [("saturating", 1.0, float("inf")), ("saturating", 0.0, 1.0),
                                  ("linear_positive_part", -1.0), ("cubic", 1.0)])
def test_transfer_invalid(args):
    with pytest.raises(ValidationError):
        TransferFn(*args)


def test_eta_examples():
    pp = ReactionFactorFn()
    cl = ReactionFactorFn("clipped_positive_part", 1.0)
    assert eval_eta(pp, pp, -1.0, 5.0) == 0.0
    assert eval_eta(pp, pp, 2.0, 3.0) == 6.0
    assert eval_eta(cl, cl, 2.0, 3.0) == 1.0


def test_linf_bounds_examples():
    assert linf_bounds(1.0, 0.5, 0.1, 2.0) == (2.5, 2.5, 2.0)
    assert linf_bounds(0, 0, 0, 0) == (0, 0, 0)
    assert linf_bounds(1.0, 0.5, 10.0, 2.0)[1] == 10.0
    with pytest.raises(PreconditionError):
        linf_bounds(-1, 0, 0, 0)


def test_reaction_max_factors():
    pp, cl = ReactionFactorFn(), ReactionFactorFn("clipped_positive_part", 1.0)
    assert reaction_max_factors(pp, pp, 2.5, 1.0) == (2.5, 1.0)
    assert reaction_max_factors(cl, pp, 2.5, 1.0)[0] == 1.0
    assert reaction_max_factors(pp, pp, 0.0, 0.0) == (0.0, 0.0)


def test_params_validation_collects_all():
    with pytest.raises(ValidationError) as exc:
        ModelParams(D=-1.0, d1=0.0, theta=0.0, U_I="y1")
    assert len(exc.value.problems) == 4


def test_data_suprema():
    p = ModelParams(U_ext="1 + t", U_I="0.5", u_I="x1*y1", v_I="2")
    xs = np.array([[0.0, 0.0], [1.0, 1.0]])
    assert data_suprema(p, xs, xs, 1.0) == (2.0, 0.5, 1.0, 2.0)


zs = st.floats(-50, 50, allow_nan=False)


@settings(max_examples=200, deadline=None)
@given(zs, zs, st.floats(0.0, 10.0), st.floats(0.01, 5.0), st.sampled_from(["linear_positive_part", "saturating"]))
def test_transfer_properties(z1, z2, c, zsat, kind):
    if kind == "saturating" and c == 0:
        c = 1.0
    b = TransferFn(kind, c, zsat if kind == "saturating" else float("inf"))
    assert abs(b(z1) - b(z2)) <= c * abs(z1 - z2) + 1e-12
    assert b(z1) >= 0
    if z1 <= 0:
        assert b(z1) == 0
    else:
        assert b(z1) <= c * z1 + 1e-12


@settings(max_examples=200, deadline=None)
@given(zs, zs, zs, zs, st.floats(0.1, 5.0))
def test_reaction_properties(r1, r2, s1, s2, cap):
    for R in (ReactionFactorFn(), ReactionFactorFn("clipped_positive_part", cap)):
        assert abs(R(r1) - R(r2)) <= R.lipschitz * abs(r1 - r2) + 1e-12
        assert (R(r1) > 0) == (r1 > 0)
        if min(r1, s1) <= 0:
            assert eval_eta(R, R, r1, s1) == 0


def test_as_expression():
    assert as_expression(2).is_zero is False
    assert as_expression("0").is_zero
    e = as_expression("x1")
    assert as_expression(e) is e
