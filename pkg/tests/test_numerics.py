import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from livsic import numerics as nx
from livsic.errors import NotHermitian, Singular

from conftest import rand_complex, rand_hermitian


def test_hermitian_eig_identity():
    d, U = nx.hermitian_eig(np.eye(3))
    np.testing.assert_allclose(d, [1, 1, 1])
    np.testing.assert_allclose(U.conj().T @ U, np.eye(3), atol=1e-14)


def test_hermitian_eig_pauli_y():
    d, _ = nx.hermitian_eig(np.array([[0, -1j], [1j, 0]]))
    np.testing.assert_allclose(d, [-1, 1], atol=1e-14)


def test_hermitian_eig_diagonal_sorted():
    d, U = nx.hermitian_eig(np.diag([3.0, -2.0]))
    np.testing.assert_allclose(d, [-2, 3])
    np.testing.assert_allclose(np.abs(U), [[0, 1], [1, 0]], atol=1e-14)


def test_hermitian_eig_rejects_non_hermitian():
    with pytest.raises(NotHermitian):
        nx.hermitian_eig(np.array([[0, 1], [0, 0]]))


def test_schur_upper_triangular_input():
    M = np.array([[1, 2, 3], [0, 4, 5], [0, 0, 6]], dtype=complex)
    Q, T = nx.schur(M)
    np.testing.assert_allclose(np.abs(Q), np.eye(3), atol=1e-12)
    np.testing.assert_allclose(np.abs(T), np.abs(M), atol=1e-12)


def test_schur_nilpotent():
    N = np.array([[0, 1], [0, 0]], dtype=complex)
    Q, T = nx.schur(N)
    np.testing.assert_allclose(np.diag(T), [0, 0], atol=1e-14)
    np.testing.assert_allclose(np.abs(T), np.abs(N), atol=1e-14)


def test_schur_random_reconstruction(rng):
    M = rand_complex(rng, 6, 6)
    Q, T = nx.schur(M, order="lex")
    assert nx.norm(Q @ T @ Q.conj().T - M) <= 1e-10 * nx.norm(M)
    assert np.allclose(np.tril(T, -1), 0)
    d = np.diag(T)
    keys = list(zip(d.real.round(10), d.imag.round(10)))
    assert keys == sorted(keys)


def test_expm_cases():
    np.testing.assert_allclose(nx.expm(np.zeros((2, 2))), np.eye(2))
    np.testing.assert_allclose(nx.expm(np.diag([1.0, 2.0])), np.diag([np.e, np.e**2]), rtol=1e-14)
    N = np.array([[0, 1], [0, 0]], dtype=complex)
    np.testing.assert_allclose(nx.expm(N), np.eye(2) + N, atol=1e-15)


def test_hermitian_calculus_cases():
    D = np.diag([4.0, -9.0])
    np.testing.assert_allclose(nx.hermitian_calculus(D, "abs_sqrt"), np.diag([2, 3]), atol=1e-14)
    np.testing.assert_allclose(nx.hermitian_calculus(D, "sign"), np.diag([1, -1]), atol=1e-14)
    B = np.array([[0, -1j], [1j, 0]])
    np.testing.assert_allclose(nx.hermitian_calculus(B, "sign"), B, atol=1e-14)
    np.testing.assert_allclose(nx.hermitian_calculus(B, "abs_sqrt"), np.eye(2), atol=1e-14)


def test_solve_cases():
    B = np.array([[1, 2j], [3, 4]])
    np.testing.assert_allclose(nx.solve(np.eye(2), B), B)
    np.testing.assert_allclose(nx.solve(np.diag([2.0, 4.0]), np.eye(2)), np.diag([0.5, 0.25]))


def test_solve_singular_at_eigenvalue():
    A = np.array([[1, 1], [0, 3]], dtype=complex)
    with pytest.raises(Singular):
        nx.solve(A - 3 * np.eye(2), np.eye(2))


sizes = st.integers(min_value=1, max_value=7)
seeds = st.integers(min_value=0, max_value=2**32 - 1)


@settings(max_examples=40, deadline=None)
@given(sizes, seeds)
def test_hermitian_reconstruction(n, seed):
    M = rand_hermitian(np.random.default_rng(seed), n)
    d, U = nx.hermitian_eig(M)
    assert np.all(np.diff(d) >= 0)
    assert nx.norm(U @ np.diag(d) @ U.conj().T - M) <= 1e-10 * nx.norm(M)


@settings(max_examples=40, deadline=None)
@given(sizes, seeds)
def test_schur_diagonal_is_spectrum(n, seed):
    M = rand_complex(np.random.default_rng(seed), n, n)
    _, T = nx.schur(M)
    oracle = np.linalg.eigvals(M)
    key = lambda v: np.lexsort((v.imag.round(6), v.real.round(6)))
    a, b = np.diag(T), oracle
    np.testing.assert_allclose(a[key(a)], b[key(b)], atol=1e-8)


@settings(max_examples=40, deadline=None)
@given(sizes, seeds, st.floats(0.1, 3.0))
def test_expm_inverse(n, seed, s):
    M = s * rand_complex(np.random.default_rng(seed), n, n)
    P = nx.expm(M) @ nx.expm(-M)
    assert nx.norm(P - np.eye(n)) <= 1e-9 * np.exp(2 * nx.norm(M))


@settings(max_examples=40, deadline=None)
@given(sizes, seeds)
def test_sign_times_abs(n, seed):
    M = rand_hermitian(np.random.default_rng(seed), n)
    R = nx.hermitian_calculus(M, "abs_sqrt")
    S = nx.hermitian_calculus(M, "sign")
    assert nx.norm(S @ R @ R - M) <= 1e-10 * nx.norm(M)
