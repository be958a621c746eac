import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from jacobi_scattering.circle_fn import CircleFunction, eval_in_disk
from jacobi_scattering.hankel import (
    DEFAULT_EPS_SCHEDULE,
    HankelOperator,
    hankel_from_symbol,
    metric_apply,
    reproducing_kernel,
    symbol_kernel,
    weighted_inner_product,
)


def t(k=1, c=1.0):
    return CircleFunction.monomial(k, c)


def test_analytic_symbol_gives_zero():
    H = hankel_from_symbol(CircleFunction(np.array([0.3, -1.0, 2.0])), 16)
    assert not H.entries.any()


def test_single_negative_mode():
    a = 0.7
    H = hankel_from_symbol(t(1, a) * t(-2), 8)
    expected = np.zeros((8, 8))
    expected[0, 0] = a
    assert np.array_equal(H.entries, expected)


def test_delta2_shifted_symbol():
    H = hankel_from_symbol(((1.0 + t(2)) / 2) * t(-2), 6)
    expected = np.zeros((6, 6))
    expected[0, 1] = expected[1, 0] = 0.5
    assert np.array_equal(H.entries, expected)
    assert H.active_size() == 2


@given(st.lists(st.floats(-2, 2), min_size=1, max_size=20), st.integers(-25, 2), st.integers(1, 12))
def test_hankel_structure(vals, lo, N):
    H = hankel_from_symbol(CircleFunction(np.array(vals), lo), N).entries
    assert np.array_equal(H, H.T)
    for j in range(N):
        for k in range(N):
            if j + 1 < N and k > 0:
                assert H[j + 1, k - 1] == H[j, k]


@given(st.lists(st.floats(-2, 2), min_size=1, max_size=20), st.integers(-25, 2), st.integers(1, 12))
def test_entries_are_negative_modes(vals, lo, N):
    sigma = CircleFunction(np.array(vals), lo)
    H = hankel_from_symbol(sigma, N).entries
    for j in range(N):
        for k in range(N):
            assert H[j, k] == sigma.coeff(-(j + k + 1))


def test_hankel_is_projection_of_metric_term():
    # H f = P_+ [conj(t) (sigma f)(conj t)] for f = t^k
    sigma = CircleFunction(np.array([0.2, -0.4, 0.1, 0.5, 0.3]), -3)
    N = 6
    H = hankel_from_symbol(sigma, N).entries
    for k in range(N):
        image = (metric_apply(t(k), sigma) - t(k)).riesz("plus")
        assert np.allclose(image.dense(0, N - 1), H[:, k])


def test_plain_inner_product():
    zero = CircleFunction.zero()
    assert weighted_inner_product(t(3), t(3), zero) == 1.0
    assert weighted_inner_product(t(3), t(2), zero) == 0.0


def test_unit_norm_for_analytic_symbol():
    assert weighted_inner_product(CircleFunction.constant(1.0), CircleFunction.constant(1.0), (1.0 + t(2)) / 2) == 1.0


@given(st.lists(st.floats(-3, 3), min_size=1, max_size=10), st.integers(-5, 5), st.integers(0, 2**31))
@settings(max_examples=50)
def test_metric_nonnegative_for_contractive_symbol(vals, lo, seed):
    # symbol with sup norm at most one: |sigma| <= sum |c| after scaling
    c = np.random.default_rng(seed).uniform(-1, 1, 6)
    c /= max(1.0, np.abs(c).sum())
    sigma = CircleFunction(c, -3)
    f = CircleFunction(np.array(vals), lo)
    assert weighted_inner_product(f, f, sigma) >= -1e-12 * max(1.0, f.l2_norm() ** 2)


def test_polarization_symmetric():
    sigma = CircleFunction(np.array([0.2, -0.3, 0.1, 0.25]), -2)
    f = CircleFunction(np.array([1.0, 0.5, -0.2]), -1)
    g = CircleFunction(np.array([0.3, 0.0, 0.7, -1.0]), 0)
    assert weighted_inner_product(f, g, sigma) == pytest.approx(weighted_inner_product(g, f, sigma), abs=1e-14)


def test_kernel_of_zero_operator():
    k = reproducing_kernel(hankel_from_symbol(CircleFunction.constant(0.5), 8))
    assert k.k.equals(CircleFunction.constant(1.0)) and k.K.equals(CircleFunction.constant(1.0))


@pytest.mark.parametrize("a", [0.0, 0.5, -0.3])
def test_kernel_rank_one(a):
    k = reproducing_kernel(hankel_from_symbol(t(-1, a), 8))
    assert k.k0 == pytest.approx(1 / (1 + a), abs=1e-15)
    assert k.K0 == pytest.approx(1 / math.sqrt(1 + a), abs=1e-15)


def test_kernel_two_by_two_closed_form():
    # [[1, 1/2], [1/2, 1]] x = e0  ->  x = (4/3, -2/3)
    k = reproducing_kernel(hankel_from_symbol(((1.0 + t(2)) / 2) * t(-2), 8))
    assert np.allclose(k.k.dense(0, 1), [4 / 3, -2 / 3], atol=1e-15)
    assert k.K0 == pytest.approx(2 / math.sqrt(3), abs=1e-15)
    assert k.method == "direct"


def test_kernel_invariants(rank3_S):
    k = symbol_kernel(rank3_S.s_plus.shift(-6), 256)
    assert k.k0 > 0 and k.K0 == pytest.approx(math.sqrt(k.k0))
    assert eval_in_disk(k.K, 0).real == pytest.approx(k.K0)


def test_epsilon_trace_monotone(rank3_S):
    k = symbol_kernel(rank3_S.s_plus.shift(-4), 256)
    values = [v for _, v in k.epsilon_trace]
    assert [e for e, _ in k.epsilon_trace] == list(DEFAULT_EPS_SCHEDULE)
    assert all(b >= a - 1e-15 for a, b in zip(values, values[1:]))
    assert values[-1] == pytest.approx(k.k0, rel=1e-7)


def test_singular_operator_uses_schedule():
    # I + H with H = -E00 is singular in the e0 direction; the regularized solutions grow
    H = HankelOperator(np.diag([-1.0, 0.0, 0.0]), (0, 0))
    k = reproducing_kernel(H)
    assert k.method == "regularized" and not k.converged
    assert k.gap > 0


def test_indefinite_rejected():
    with pytest.raises(ValueError):
        reproducing_kernel(HankelOperator(np.diag([-2.0, 0.0]), (0, 0)))


@pytest.mark.parametrize("shift", [0, -2, -5, -11])
def test_reproducing_property(rank3_S, rng, shift):
    sigma = rank3_S.s_plus.shift(shift)
    k = symbol_kernel(sigma, 256)
    for _ in range(5):
        f = CircleFunction(rng.normal(size=12))
        assert weighted_inner_product(f, k.k, sigma) == pytest.approx(f.coeff(0), abs=1e-10)


def test_truncation_order_is_enlarged(rank3_S):
    # rank-3 reflection coefficients reach index ~2000; a small N must not truncate them
    sigma = rank3_S.s_plus.involute()
    assert sigma.lo < -1000
    a = symbol_kernel(sigma, 64)
    b = symbol_kernel(sigma, 512)
    assert abs(a.K0 - b.K0) < 1e-12
