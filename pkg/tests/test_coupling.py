import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import unit_ops
from oracles import loop_exchange
from tsgalerkin.coupling import (exchange_terms, lumped_reaction, macro_exchange_rhs, micro_exchange_rhs,
                                 reaction_rhs)
from tsgalerkin.errors import DimensionError
from tsgalerkin.mesh import Tag
from tsgalerkin.model import ReactionFactorFn, TransferFn

TRANSFERS = [TransferFn("linear_positive_part", 1.3), TransferFn("saturating", 2.0, 0.4)]


@pytest.mark.parametrize("gamma", ["top_edge", "full_boundary_minus_bottom"])
@pytest.mark.parametrize("b", TRANSFERS)
def test_exchange_matches_loop_oracle(gamma, b):
    ops = unit_ops(3, 4, gamma)
    rng = np.random.default_rng(4)
    U = rng.uniform(-1, 2, ops.shape[0])
    u = rng.uniform(-1, 2, ops.shape)
    macro, micro = loop_exchange(U, u, ops.wx, ops.micro_space.mesh, Tag.GammaR, b)
    assert np.allclose(macro_exchange_rhs(U, u, b, ops), macro, atol=1e-14)
    assert np.allclose(micro_exchange_rhs(U, u, b, ops), micro, atol=1e-14)


def test_exchange_matches_boundary_mass_for_linear_b():
    # with U > u everywhere, b is linear and the trapezoid load equals the lumped Bg row sums
    ops = unit_ops(2, 4)
    rng = np.random.default_rng(5)
    u = rng.uniform(0, 1, ops.shape)
    U = np.full(ops.shape[0], 3.0)
    _, micro = exchange_terms(U, u, TransferFn("linear_positive_part", 1.0), ops)
    lumped_bg = np.asarray(ops.Bg.csr.sum(axis=1)).ravel()
    assert np.allclose(micro, (U[:, None] - u) * lumped_bg[None, :])


def test_exchange_examples():
    ops = unit_ops(2)
    b = TransferFn("linear_positive_part", 1.0)
    macro, micro = exchange_terms(np.ones(ops.shape[0]), np.zeros(ops.shape), b, ops)
    assert np.allclose(macro, -ops.gamma_length)
    assert np.allclose(micro.sum(axis=1), ops.gamma_length)
    zero, _ = exchange_terms(np.zeros(ops.shape[0]), np.ones(ops.shape), b, ops)
    assert np.all(zero == 0.0)
    off = exchange_terms(np.ones(ops.shape[0]), np.zeros(ops.shape), TransferFn("linear_positive_part", 0.0), ops)
    assert not off[0].any() and not off[1].any()


def test_reaction_terms():
    ops = unit_ops(2)
    pp = ReactionFactorFn()
    u = np.full(ops.shape, 2.0)
    v = np.full(ops.shape, 3.0)
    assert np.allclose(lumped_reaction(u, v, pp, pp, ops), 6.0 * ops.wy[None, :])
    ru, rv = reaction_rhs(u, v, pp, pp, 0.5, 2.0, ops)
    assert np.sum(ru) == pytest.approx(-3.0)
    assert np.allclose(rv, 2.0 * ru)
    assert not lumped_reaction(-u, v, pp, pp, ops).any()


def test_shape_errors():
    ops = unit_ops(2)
    b = TRANSFERS[0]
    with pytest.raises(DimensionError):
        exchange_terms(np.zeros(3), np.zeros(ops.shape), b, ops)
    with pytest.raises(DimensionError):
        lumped_reaction(np.zeros((2, 2)), np.zeros((2, 2)), ReactionFactorFn(), ReactionFactorFn(), ops)


def test_gamma_length():
    assert unit_ops(2, 3).gamma_length == pytest.approx(1.0)
    assert unit_ops(2, 3, "full_boundary_minus_bottom").gamma_length == pytest.approx(3.0)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from(TRANSFERS))
def test_exchange_conserves_mass(seed, b):
    ops = unit_ops(3)
    rng = np.random.default_rng(seed)
    U = rng.uniform(-2, 2, ops.shape[0])
    u = rng.uniform(-2, 2, ops.shape)
    total = macro_exchange_rhs(U, u, b, ops).sum() + micro_exchange_rhs(U, u, b, ops).sum()
    assert abs(total) < 1e-12
    assert np.all(macro_exchange_rhs(U, u, b, ops) <= 0.0)
