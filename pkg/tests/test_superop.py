import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.linalg import expm

from corrproj.config import MAX_DENSE_SUPEROP_DIM
from corrproj.operators import SIGMA_X, SIGMA_Z, Operator, hs_inner, random_density, random_hermitian
from corrproj.superop import (InteractionLiouvillian, SuperOperator, TimeDependentSuperOperator,
                              adjoint, choi_matrix, compose, expm_superop, identity_map,
                              interaction_hamiltonian, liouvillian, liouvillian_matrix,
                              operator_basis, sandwich_matrix, time_ordered_exp, unvec, vec)


def test_vec_is_column_stacking():
    x = np.array([[1, 2], [3, 4]])
    np.testing.assert_array_equal(vec(x), [1, 3, 2, 4])
    np.testing.assert_array_equal(unvec(vec(x)), x)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_sandwich_identity(seed):
    rng = np.random.default_rng(seed)
    a, b, x = (rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3)) for _ in range(3))
    np.testing.assert_allclose(sandwich_matrix(a, b) @ vec(x), vec(a @ x @ b), atol=1e-12)


def test_operator_basis_units():
    basis = operator_basis(3)
    assert basis.shape == (9, 3, 3)
    np.testing.assert_array_equal(vec(basis), np.eye(9))


def test_dense_and_functional_forms_agree(rng):
    h = random_hermitian(3, rng)
    l_func = liouvillian(h)
    l_mat = SuperOperator(3, matrix=liouvillian_matrix(h))
    np.testing.assert_allclose(l_func.to_dense(), l_mat.to_dense(), atol=1e-13)
    x = random_density(3, rng)
    np.testing.assert_allclose(l_func(x), -1j * (h @ x - x @ h), atol=1e-14)
    out = l_func(Operator(x))
    assert isinstance(out, Operator)


def test_liouvillian_rejects_non_hermitian():
    with pytest.raises(ValueError):
        liouvillian(np.array([[0, 1], [0, 0]]))


def test_algebra_and_adjoint(rng):
    a = SuperOperator(2, matrix=sandwich_matrix(SIGMA_X, SIGMA_Z))
    b = liouvillian(SIGMA_Z)
    np.testing.assert_allclose(compose(a, b).to_dense(), a.to_dense() @ b.to_dense(), atol=1e-14)
    np.testing.assert_allclose((a + b).to_dense(), a.to_dense() + b.to_dense(), atol=1e-14)
    np.testing.assert_allclose((a * 2).to_dense(), 2 * a.to_dense(), atol=1e-14)
    np.testing.assert_allclose(identity_map(2).to_dense(), np.eye(4))
    # <Y, S(X)> = <S^dag(Y), X>
    s = SuperOperator(2, matrix=rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4)))
    x, y = rng.normal(size=(2, 2, 2)) + 1j * rng.normal(size=(2, 2, 2))
    assert hs_inner(y, s(x)) == pytest.approx(hs_inner(adjoint(s)(y), x))


def test_dense_cap():
    big = MAX_DENSE_SUPEROP_DIM + 1
    with pytest.raises(ValueError):
        liouvillian(np.eye(big)).to_dense()


def test_expm_superop_is_unitary_conjugation(rng):
    h = random_hermitian(3, rng)
    x = random_density(3, rng)
    u = expm(-1j * h * 0.7)
    np.testing.assert_allclose(expm_superop(liouvillian(h), 0.7)(x), u @ x @ u.conj().T, atol=1e-12)


def test_interaction_hamiltonian_and_batch(rng):
    h0, hi = random_hermitian(4, rng), random_hermitian(4, rng)
    l = InteractionLiouvillian(hi, h0)
    t = 0.9
    u = expm(1j * h0 * t)
    np.testing.assert_allclose(l.hamiltonian(t), u @ hi @ u.conj().T, atol=1e-12)
    np.testing.assert_allclose(interaction_hamiltonian(hi, h0, t).data, u @ hi @ u.conj().T, atol=1e-12)
    times, w = np.array([0.1, 0.4, 1.3]), np.array([0.5, -1.0, 2.0])
    x = random_density(4, rng)
    generic = TimeDependentSuperOperator.weighted_sum(l, times, w)(x)
    np.testing.assert_allclose(l.weighted_sum(times, w)(x), generic, atol=1e-12)


def test_time_ordered_exp_constant_generator(rng):
    h = random_hermitian(2, rng)
    l = TimeDependentSuperOperator(lambda t: liouvillian(h), 2)
    out = time_ordered_exp(l, 0.0, 1.5, steps=3).to_dense()
    np.testing.assert_allclose(out, expm(1.5 * liouvillian_matrix(h)), atol=1e-12)


def test_time_ordered_exp_converges_to_interaction_propagator(rng):
    h0, hi = random_hermitian(2, rng), 0.3 * random_hermitian(2, rng)
    t = 1.2
    l = InteractionLiouvillian(hi, h0)
    # exact interaction-picture propagator U_I = e^{i H0 t} e^{-i (H0 + HI) t}
    u = expm(1j * h0 * t) @ expm(-1j * (h0 + hi) * t)
    exact = sandwich_matrix(u, u.conj().T)
    coarse = np.abs(time_ordered_exp(l, 0, t, 32).to_dense() - exact).max()
    fine = np.abs(time_ordered_exp(l, 0, t, 64).to_dense() - exact).max()
    assert fine < 1e-4
    assert coarse / fine == pytest.approx(4, rel=0.1)  # second order


def test_choi_of_simple_maps():
    ident = choi_matrix(identity_map(2))
    omega = np.eye(2).reshape(-1)  # sum_i |ii>
    np.testing.assert_allclose(ident, np.outer(omega, omega))
    dephase = SuperOperator(2, matrix=0.5 * (np.eye(4) + sandwich_matrix(SIGMA_Z, SIGMA_Z)))
    assert np.linalg.eigvalsh(choi_matrix(dephase)).min() >= -1e-15
    transpose = SuperOperator(2, func=lambda x: np.swapaxes(x, -1, -2))
    assert np.linalg.eigvalsh(choi_matrix(transpose)).min() == pytest.approx(-1)
