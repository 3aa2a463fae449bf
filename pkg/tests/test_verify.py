import io
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import unit_ops, unit_spaces
from oracles import tensor_error_norms
from tsgalerkin.errors import PreconditionError
from tsgalerkin.expr import Expression
from tsgalerkin.mesh import permute_vertices
from tsgalerkin.fem import P1Space
from tsgalerkin.model import ModelParams, TransferFn
from tsgalerkin.solver import State
from tsgalerkin.twoscale import TwoScaleField
from tsgalerkin.verify import kconst
from tsgalerkin.verify.bounds import BoundsMonitor, bounds_monitor
from tsgalerkin.verify.eoc import (SATURATED, EocTable, TemporalPollutionWarning, fit_constant, fit_rate,
                                   observed_rate, run_eoc)
from tsgalerkin.verify.exact import ExactSolution, coupled_mms, heat_mms
from tsgalerkin.verify.interp import interpolation_rate_test
from tsgalerkin.verify.norms import SeparableErrorEvaluator
from tsgalerkin.verify.trace import random_fields, trace_inequality_check, trace_terms

W = "exp(-t)*(1 + sin(pi*x1)*x2)*cos(pi*y1)*(1 + y2^2) + x1*y2"


def _w_funcs(t):
    def f(x, y):
        x1, x2, y1, y2 = x[..., 0], x[..., 1], y[..., 0], y[..., 1]
        return math.exp(-t) * (1 + np.sin(np.pi * x1) * x2) * np.cos(np.pi * y1) * (1 + y2**2) + x1 * y2

    def g(x, y):
        x1, x2, y1, y2 = x[..., 0], x[..., 1], y[..., 0], y[..., 1]
        a = math.exp(-t) * (1 + np.sin(np.pi * x1) * x2)
        return np.stack(np.broadcast_arrays(-np.pi * a * np.sin(np.pi * y1) * (1 + y2**2),
                                            a * np.cos(np.pi * y1) * 2 * y2 + x1), axis=-1)
    return f, g


@pytest.mark.parametrize("t", [0.0, 0.3])
@pytest.mark.parametrize("n, rel", [(2, 5e-6), (4, 2e-7)])  # order-6 quadrature error shrinks with h
def test_error_identity_matches_tensor_quadrature(t, n, rel):
    ms, ys = unit_spaces(n)
    ev = SeparableErrorEvaluator(Expression.parse(W), ms, ys)
    f, g = _w_funcs(t)
    rng = np.random.default_rng(7)
    for beta in (ev.nodal(t), ev.nodal(t) + 0.1 * rng.standard_normal(ev.nodal(t).shape)):
        l2, h1 = ev.squared(beta, t)
        ref = tensor_error_norms(beta, f, g, ms.mesh, ys.mesh, n=8)
        assert l2 == pytest.approx(ref[0], rel=rel)
        assert h1 == pytest.approx(ref[1], rel=rel)


def test_error_of_exact_member_is_zero():
    ms, ys = unit_spaces(2)
    ev = SeparableErrorEvaluator(Expression.parse("(1 + x1)*(y1 - y2)*exp(-t)"), ms, ys)
    l2, h1 = ev.squared(ev.nodal(0.2), 0.2)
    assert abs(l2) < 1e-13 and abs(h1) < 1e-13


def test_rates_and_saturation():
    assert observed_rate(4e-2, 1e-2) == pytest.approx(2.0)
    assert math.isnan(observed_rate(1e-3, SATURATED / 2))
    assert fit_rate([1, 0.5, 0.25], [1, 0.25, 0.0625]) == pytest.approx(2.0)
    assert math.isnan(fit_rate([1, 0.5], [1e-15, 1e-16]))
    assert fit_constant([1, 0.5], [3, 0.75], 2, norm=1.5) == pytest.approx(2.0)


def _table(errs):
    t = EocTable()
    for h, e in zip([0.4, 0.2, 0.1], errs):
        t.add(h, h * h, dict.fromkeys(t.keys, e))
    return t


def test_eoc_table_and_csv(tmp_path):
    t = _table([1.0, 0.25, 0.0625])
    assert math.isnan(t.rates("e_U_H1")[0])
    assert t.rates("e_u_L2")[1:] == pytest.approx([2.0, 2.0])
    assert t.worst_rate() == pytest.approx(2.0)
    fh = io.StringIO()
    t.write_csv(fh)
    lines = fh.getvalue().splitlines()
    assert lines[0].startswith("level,h,dt,e_U_H1") and len(lines) == 4
    t.write_h_error(tmp_path)
    data = np.loadtxt(tmp_path / "e_v_L2.dat")
    assert data.shape == (3, 2)
    with pytest.raises(PreconditionError):
        t.add(0.5, 0.1, dict.fromkeys(t.keys, 1.0))


def test_saturated_table_rates_are_nan():
    t = _table([1e-13, 1e-14, 1e-15])
    assert all(math.isnan(r) for r in t.rates("e_U_H1"))
    assert math.isnan(t.worst_rate())


def test_eoc_preconditions():
    ex, p = heat_mms(), ModelParams(k=0.0, b=TransferFn("linear_positive_part", 0.0))
    with pytest.raises(PreconditionError):
        run_eoc(ex, p, 2)
    with pytest.warns(TemporalPollutionWarning):
        run_eoc(ex, p, 3, nx=2, T=0.01, dt_const=0.05, dt_power=1)


def test_heat_eoc_rates():
    p = ModelParams(theta=0.5, k=0.0, b=TransferFn("linear_positive_part", 0.0))
    t = run_eoc(heat_mms(), p, 3, nx=4, T=0.05, dt_const=0.1)
    assert min(t.rates("e_U_H1")[1:]) > 0.85
    assert min(t.rates("e_U_L2")[1:]) > 1.7
    assert max(t.column("e_u_L2")) < SATURATED  # zero fields are reproduced exactly


def test_interpolation_saturates_on_tensor_space():
    r = interpolation_rate_test(3, 2, two_scale_fn="(1 + x1)*(2 - y1 + 3*y2)")
    assert max(r.errors["i3"]) < 1e-9
    assert r.fitted_rate("i1") == pytest.approx(2.0, abs=0.3)


def test_interpolation_invariant_under_vertex_permutation():
    from tsgalerkin.fem import error_norms, h1_riesz_projection

    ms, _ = unit_spaces(4)
    phi = Expression.parse("sin(pi*x1)*sin(pi*x2)")
    g0, g1 = phi.grad("x")
    f = lambda p: phi(x=p)  # noqa: E731
    grad = lambda p: np.stack([g0(x=p), g1(x=p)], -1)  # noqa: E731
    ref = error_norms(ms, h1_riesz_projection(ms, f, grad, "dirichlet_zero"), f, grad)
    perm = np.random.default_rng(0).permutation(ms.n_dof)
    ps = P1Space(permute_vertices(ms.mesh, perm))
    got = error_norms(ps, h1_riesz_projection(ps, f, grad, "dirichlet_zero"), f, grad)
    assert got == pytest.approx(ref, rel=1e-10)


PROFILES = {"U0": 2.0, "u": 0.5, "v": 1.0}


def test_K_structure():
    p = ModelParams(theta=0.5, k=1.0, alpha=2.0)
    K = kconst.estimate_K(PROFILES, p, 0.1, 0.2, 2.0, 3.0)
    assert K.transport == pytest.approx(0.5 * 0.2 * 1.5)
    assert K.macro == pytest.approx(0.5 * 0.1 * 0.5 * 2.0)
    assert K.reaction == pytest.approx(3 * 0.2 * 3.0 * (3.0 + 2.0) * 1.5)
    off = kconst.estimate_K(PROFILES, ModelParams(theta=0.5, k=0.0, alpha=2.0), 0.1, 0.2, 2.0, 3.0)
    assert off.reaction == 0 and off.value < K.value
    zero = kconst.estimate_K(dict.fromkeys(PROFILES, 0.0), p, 0.1, 0.2, 2.0, 3.0)
    assert zero.value == 0.0
    with pytest.raises(PreconditionError):
        kconst.estimate_K({"U0": 1.0}, p, 0.1, 0.2, 1.0, 1.0)


@settings(max_examples=50, deadline=None)
@given(st.floats(0.0, 5.0), st.floats(0.0, 5.0), st.floats(0.0, 2.0), st.floats(0.0, 2.0))
def test_K_monotone_in_inputs(g1, g3, dg, dm):
    p = ModelParams(theta=0.5, k=1.0)
    a = kconst.estimate_K(PROFILES, p, g1, g3, 1.0, 1.0).value
    b = kconst.estimate_K(PROFILES, p, g1 + dg, g3 + dg, 1.0 + dm, 1.0 + dm).value
    assert b >= a - 1e-12


def test_bound_rows():
    t = _table([0.4, 0.2, 0.1])
    rows = kconst.bound_rows(t, 10.0)
    assert rows[0]["err2"] == pytest.approx(3 * 0.16)
    assert rows[0]["ratio"] == pytest.approx(0.48 / (10 * 0.16))
    fh = io.StringIO()
    kconst.write_csv(fh, rows)
    assert fh.getvalue().startswith("h,err2,K,bound,ratio")


def test_h2_profiles_of_heat_solution():
    prof = heat_mms().h2_profiles(0.1)
    assert prof["u"] == 0 and prof["v"] == 0
    # U0 = exp(-t) sin sin; its H2 norm squared is (1 + 2 pi^2 + 3 pi^4)/4 per unit time weight
    expect = (1 + 2 * np.pi**2 + 3 * np.pi**4) / 4 * (1 - np.exp(-0.2)) / 2
    assert prof["U0"] == pytest.approx(expect, rel=1e-8)


def _state(ops, U, u, v):
    ms, ys = ops.macro_space, ops.micro_space
    return State(0.0, np.full(ops.shape[0], U), TwoScaleField(np.full(ops.shape, u), ms, ys),
                 TwoScaleField(np.full(ops.shape, v), ms, ys))


def test_bounds_monitor_flags_excursions():
    ops = unit_ops(2)
    mon = bounds_monitor([_state(ops, 0.5, 0.5, 0.5), _state(ops, -1e-3, 0.5, 3.0)], 1.0, 1.0, 2.0)
    assert mon.count == 2
    assert {(v[0], v[1]) for v in mon.violations} == {(1, "U"), (1, "v")}
    ok = BoundsMonitor(1.0, 1.0, 1.0, tol=1e-10)
    ok(0, _state(ops, 1.0 + 1e-11, -1e-11, 0.0))
    assert ok.count == 0
    fh = io.StringIO()
    mon.write_violations(fh)
    assert len(fh.getvalue().splitlines()) == 3


def test_trace_constant_field():
    ops = unit_ops(3)
    # for a constant field the trace term is |Gamma_R| times the bulk term and grad vanishes
    beta = np.ones(ops.shape)
    lhs, grad, bulk = trace_terms(beta, ops)
    assert lhs == pytest.approx(ops.gamma_length * bulk)
    rep = trace_inequality_check([beta], ops, (1.0, 0.01))
    assert rep.constants[0] >= ops.gamma_length - 1e-6


def test_trace_sweep_properties():
    ops = unit_ops(4)
    rep = trace_inequality_check(random_fields(ops, 20, np.random.default_rng(0)), ops, (1.0, 0.1, 0.01))
    assert rep.finite and rep.monotone and rep.n_samples == 20
    assert rep.constants[-1] > 0


def test_coupled_mms_data_consistent():
    ex = coupled_mms()
    pts = np.array([[0.0, 0.3], [1.0, 0.7], [0.4, 0.0], [0.2, 1.0]])
    assert ex.boundary_mismatch(pts, [0.0, 0.05, 0.1]) < 1e-14
    custom = ExactSolution(U="x1", u="x1*y1", v="0", U_ext="x1")
    assert len(custom.su) == 1 and len(custom.sv) == 0
