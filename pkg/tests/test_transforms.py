import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from multimatric.errors import DomainError, ShapeError
from multimatric.linalg import gram, inv_sqrt, sym_sqrt
from multimatric.transforms import (
    beta1_to_beta2,
    beta2_to_beta1,
    combination_logdet,
    combination_matrix,
    decompose_blocks,
    invert_spd,
    r_to_t,
    t_to_r,
    trimatric_decompose,
)
from multimatric.verify import check_jacobian_fd

from conftest import random_spd

blocks = st.integers(1, 4).flatmap(
    lambda m: st.integers(m, m + 3).flatmap(lambda n: arrays(float, (n, m), elements=st.floats(-4, 4)))
)


def test_scalar_t_to_r():
    R, lj = t_to_r(np.array([[1.0]]))
    assert R[0, 0] == pytest.approx(1 / math.sqrt(2))
    assert lj == pytest.approx(-1.5 * math.log(2))


def test_scalar_r_to_t():
    T, lj = r_to_t(np.array([[0.6]]))
    assert T[0, 0] == pytest.approx(0.75)
    assert lj == pytest.approx(-1.5 * math.log(0.64), abs=1e-12)


def test_r_outside_ball():
    with pytest.raises(DomainError, match="unit ball"):
        r_to_t(np.array([[1.0]]))


def test_wide_block_rejected():
    with pytest.raises(ShapeError):
        t_to_r(np.ones((1, 2)))


@settings(max_examples=100, deadline=None)
@given(blocks)
def test_t_r_round_trip(T):
    R, lj = t_to_r(T)
    T2, lj2 = r_to_t(R)
    np.testing.assert_allclose(T2, T, atol=1e-8 * (1 + np.abs(T).max() ** 3))
    assert lj + lj2 == pytest.approx(0.0, abs=1e-8)


@settings(max_examples=100, deadline=None)
@given(blocks)
def test_r_is_in_unit_ball(T):
    R, _ = t_to_r(T)
    assert np.linalg.norm(R, 2) < 1.0


@settings(max_examples=100, deadline=None)
@given(arrays(float, (5, 3), elements=st.floats(-3, 3)))
def test_beta_round_trip(X):
    F = X.T @ X + 0.1 * np.eye(3)
    U, lj = beta2_to_beta1(F, return_log_jac=True)
    F2, lj2 = beta1_to_beta2(U, return_log_jac=True)
    np.testing.assert_allclose(F2, F, rtol=1e-7, atol=1e-7 * np.abs(F).max())
    assert lj + lj2 == pytest.approx(0.0, abs=1e-8)
    assert np.all(np.linalg.eigvalsh(U) > 0) and np.all(np.linalg.eigvalsh(np.eye(3) - U) > 0)


def test_beta1_needs_unit_interval():
    with pytest.raises(DomainError):
        beta1_to_beta2(np.array([[1.5]]))


def test_invert_spd():
    W, lj = invert_spd(np.array([[0.5]]))
    assert W[0, 0] == pytest.approx(2.0)
    assert lj == pytest.approx(math.log(0.25))


@pytest.mark.parametrize("name", ["t_to_r", "r_to_t"])
@pytest.mark.parametrize("n,m", [(1, 1), (2, 1), (2, 2), (3, 2), (4, 3)])
def test_rectangular_jacobians(name, n, m):
    assert check_jacobian_fd(name, n, m, trials=25).passed


@pytest.mark.parametrize("name", ["invert_spd", "beta1_to_beta2", "beta2_to_beta1"])
@pytest.mark.parametrize("m", [1, 2, 3, 4])
def test_symmetric_jacobians(name, m):
    assert check_jacobian_fd(name, m, m, trials=25).passed


def test_decompose_chain(rng):
    X = [rng.standard_normal((n, 2)) for n in (5, 3, 4)]
    V0, Ts = decompose_blocks(X, "T")
    np.testing.assert_allclose(V0, X[0].T @ X[0])
    np.testing.assert_allclose(Ts[0], X[1] @ inv_sqrt(V0))
    _, Fs = decompose_blocks(X, "beta2")
    _, Rs = decompose_blocks(X, "pearson2")
    _, Us = decompose_blocks(X, "beta1")
    for T, F, R, U in zip(Ts, Fs, Rs, Us):
        np.testing.assert_allclose(F, T.T @ T, atol=1e-12)
        np.testing.assert_allclose(R, t_to_r(T)[0], atol=1e-12)
        # the beta I companion is the beta II companion pushed through F -> U
        np.testing.assert_allclose(U, beta2_to_beta1(F), atol=1e-12)


def test_decompose_is_invariant_to_anchor_rotation(rng):
    X = [rng.standard_normal((n, 3)) for n in (6, 4)]
    Q, _ = np.linalg.qr(rng.standard_normal((6, 6)))
    _, F1 = decompose_blocks(X, "beta2")
    _, F2 = decompose_blocks([Q @ X[0], X[1]], "beta2")
    np.testing.assert_allclose(F1[0], F2[0], atol=1e-10)


def test_decompose_rejects_bad_input(rng):
    with pytest.raises(ShapeError):
        decompose_blocks([rng.standard_normal((4, 2))], "beta2")
    with pytest.raises(ShapeError):
        decompose_blocks([rng.standard_normal((4, 2)), rng.standard_normal((4, 3))], "beta2")
    with pytest.raises(ShapeError):
        decompose_blocks([rng.standard_normal((4, 2))] * 2, "gamma")


def test_trimatric_identity(rng):
    X0, X1, X2 = (rng.standard_normal((n, 3)) for n in (5, 4, 6))
    W, T, R = trimatric_decompose(X0, X1, X2)
    W0 = X0.T @ X0
    half = sym_sqrt(W)
    np.testing.assert_allclose(half @ (np.eye(3) - R.T @ R) @ half, W0, atol=1e-10)
    np.testing.assert_allclose(W, W0 + X2.T @ X2, atol=1e-12)
    np.testing.assert_allclose(T, X1 @ inv_sqrt(W0), atol=1e-12)


def unit_spd(rng, m):
    return random_spd(rng, m, 0.02, 0.98)


def test_combination_k1(rng):
    U = unit_spd(rng, 3)
    assert np.allclose(combination_matrix([U]), np.eye(3))
    assert combination_logdet([U]) == pytest.approx(0.0, abs=1e-12)


def test_combination_k2(rng):
    for _ in range(50):
        U1, U2 = unit_spd(rng, 3), unit_spd(rng, 3)
        target = np.linalg.slogdet(np.eye(3) - U1 @ U2)[1]
        assert np.linalg.slogdet(combination_matrix([U1, U2]))[1] == pytest.approx(target, abs=1e-10)
        assert combination_logdet([U1, U2]) == pytest.approx(target, abs=1e-10)


def test_combination_commuting_k3(rng):
    Q, _ = np.linalg.qr(rng.standard_normal((3, 3)))
    Us = [(Q * rng.uniform(0.05, 0.95, 3)) @ Q.T for _ in range(3)]
    printed = np.linalg.slogdet(combination_matrix(Us))[1]
    assert combination_logdet(Us) == pytest.approx(printed, abs=1e-10)


def test_combination_scalar_closed_form():
    us = [0.2, 0.5, 0.7]
    expected = math.log(np.prod([1 - u for u in us]) * (1 + sum(u / (1 - u) for u in us)))
    Us = [np.array([[u]]) for u in us]
    assert combination_logdet(Us) == pytest.approx(expected)
    assert np.linalg.slogdet(combination_matrix(Us))[1] == pytest.approx(expected)
