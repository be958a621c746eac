import math

import numpy as np
import pytest

from jacobi_scattering.circle_fn import CircleFunction
from jacobi_scattering.direct_scattering import extract_smatrix
from jacobi_scattering.hankel import weighted_inner_product
from jacobi_scattering.inverse_scattering import build_basis, reconstruct_dual, reconstruct_jacobi
from jacobi_scattering.jacobi import JacobiMatrix, decay_check, distance

M = 24


def t(k=1, c=1.0):
    return CircleFunction.monomial(k, c)


@pytest.fixture(scope="module")
def rank3_pair(rank3_S):
    return reconstruct_jacobi(rank3_S.s_plus, M), reconstruct_dual(rank3_S.s_minus, M)


@pytest.fixture(scope="module")
def delta4_pair(delta4_S):
    return reconstruct_jacobi(delta4_S.s_plus, M), reconstruct_dual(delta4_S.s_minus, M)


def test_basis_for_zero_reflection():
    basis, _, flags = build_basis(CircleFunction.zero(), 5)
    assert not flags
    for n, phi in basis.items():
        assert phi.equals(t(n))


def test_basis_monomial_on_nonnegative_side(delta4_S):
    basis, _, _ = build_basis(delta4_S.s_plus, 6)
    for n in range(0, 7):
        assert basis[n].equals(t(n))


def test_basis_closed_form_at_minus_one(delta2_S):
    basis, _, _ = build_basis(delta2_S.s_plus, 2)
    expected = t(-1) * CircleFunction(np.array([4 / 3, -2 / 3])) / math.sqrt(4 / 3)
    assert basis[-1].equals(expected, 1e-15)


def test_free_reconstruction_exact():
    res = reconstruct_jacobi(CircleFunction.zero(), M)
    assert distance(res.J, JacobiMatrix.free(), -M, M) == 0.0
    assert res.orthonormality_defect == 0.0 and res.band_defect == 0.0
    dual = reconstruct_dual(CircleFunction.zero(), M)
    assert distance(dual.J, JacobiMatrix.free(), -M, M) == 0.0


def test_rank3_recovers_input(rank3_pair, rank3_J):
    plus, minus = rank3_pair
    assert plus.J.p(0) == pytest.approx(0.9, abs=1e-6)
    assert plus.J.q(0) == pytest.approx(0.3, abs=1e-6)
    assert plus.J.q(-1) == pytest.approx(-0.2, abs=1e-6)
    assert distance(plus.J, rank3_J, -M, M) < 1e-6
    assert distance(minus.J, rank3_J, -M, M) < 1e-6
    assert plus.J.range == minus.J.range == (-M, M) and plus.J.truncated


def test_rank3_orthonormal_and_banded(rank3_pair):
    for res in rank3_pair:
        assert res.orthonormality_defect < 1e-8
        assert res.band_defect < 1e-8
        assert not res.flags


def test_gram_by_independent_inner_product(rank3_S, rank3_pair):
    # recompute a few Gram entries and a coefficient with the pairwise routine
    plus, _ = rank3_pair
    sp_ = rank3_S.s_plus
    z = t(-1) + t(1)
    for a, b in ((-3, -3), (-3, -2), (0, 2), (-1, 0)):
        g = weighted_inner_product(plus.basis[a], plus.basis[b], sp_)
        assert g == pytest.approx(float(a == b), abs=1e-10)
    assert weighted_inner_product(z * plus.basis[0], plus.basis[0], sp_) == pytest.approx(plus.J.q(0), abs=1e-12)


def test_p_equals_kernel_ratio(rank3_pair):
    # p_n = K_n(0) / K_{n-1}(0): leading coefficient of z phi_{n-1} against phi_n
    plus, _ = rank3_pair
    for n in range(-M + 1, M + 1):
        ratio = plus.kernels[n].K0 / plus.kernels[n - 1].K0
        assert plus.J.p(n) == pytest.approx(ratio, abs=1e-10)


def test_rank3_decay(rank3_pair):
    for res in rank3_pair:
        r = decay_check(res.J, 20)
        assert r.max_p_dev < 1e-6 and r.max_q_dev < 1e-6


def test_direct_of_reconstruction_reproduces_input(rank3_S, rank3_pair):
    S2 = extract_smatrix(rank3_pair[0].J.restricted(-4, 4).untruncated())
    assert S2.s.equals(rank3_S.s, 1e-6)
    assert S2.s_minus.equals(rank3_S.s_minus, 1e-6)


def test_delta4_plus_side_is_free(delta4_pair):
    plus, _ = delta4_pair
    for n in range(1, M + 1):
        assert abs(plus.J.q(n)) < 1e-12
    for n in range(2, M + 1):
        assert abs(plus.J.p(n) - 1) < 1e-12
    r = decay_check(plus.J, 5, "plus")
    assert r.max_p_dev < 1e-6 and r.max_q_dev < 1e-6


def test_delta4_minus_side_is_free(delta4_pair):
    _, minus = delta4_pair
    for n in range(-M, -1):
        assert abs(minus.J.q(n)) < 1e-12 and abs(minus.J.p(n) - 1) < 1e-12


def test_delta4_reconstructions_valid(delta4_pair):
    for res in delta4_pair:
        assert res.orthonormality_defect < 1e-8 and res.band_defect < 1e-8
        assert all(res.J.p(n) > 0 for n in range(-M, M + 1))


def test_dual_is_reflected_plus_reconstruction(rank3_S):
    # the dual run is the plus construction on s_minus read through n -> -n-1
    raw = reconstruct_jacobi(rank3_S.s_minus, M + 1)
    dual = reconstruct_dual(rank3_S.s_minus, M)
    for n in range(-M, M + 1):
        assert dual.J.q(n) == raw.J.q(-n - 1)
        assert dual.J.p(n) == raw.J.p(-n)


def test_result_json(rank3_pair):
    data = rank3_pair[1].to_json()
    assert data["side"] == "minus" and data["range"] == [-M, M]
    assert {"orthonormality_defect", "band_defect", "flags", "kernel_K0"} <= set(data)
