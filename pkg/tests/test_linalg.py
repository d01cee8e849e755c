import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, strategies as st

from reference import random_hermitian, random_stable
from rwabath.errors import DomainError, NotHermitian, SingularLyapunov
from rwabath.linalg import (apply_scalar_function, hermitian_eig, lyapunov_solve,
                            matrix_exponential, max_abs)

seeds = st.integers(0, 2**32 - 1)
dims = st.integers(1, 6)


def test_eig_identity():
    e = hermitian_eig(np.eye(2))
    np.testing.assert_allclose(e.eigenvalues, [1, 1])
    np.testing.assert_allclose(e.unitary.conj().T @ e.unitary, np.eye(2), atol=1e-14)


def test_eig_diagonal_sorted():
    np.testing.assert_allclose(hermitian_eig(np.diag([2.0, -1.0])).eigenvalues, [-1, 2])


def test_eig_pauli_x():
    e = hermitian_eig([[0, 1], [1, 0]])
    np.testing.assert_allclose(e.eigenvalues, [-1, 1], atol=1e-15)
    v = e.unitary[:, 0] * np.sign(e.unitary[0, 0])
    np.testing.assert_allclose(v, np.array([1, -1]) / np.sqrt(2), atol=1e-14)


def test_eig_rejects_non_hermitian():
    with pytest.raises(NotHermitian):
        hermitian_eig([[0, 1], [0, 0]])


def test_scalar_function_examples():
    a = np.array([[1.0, 0.5j], [-0.5j, 2.0]])
    np.testing.assert_allclose(apply_scalar_function(a, lambda w: w), a, atol=1e-14)
    np.testing.assert_allclose(apply_scalar_function(a, lambda w: 3.0 + 0 * w), 3 * np.eye(2), atol=1e-14)
    k, g, w0 = 0.1, 1.0, 0.2
    f = lambda w: k * g / (g + 1j * (w0 - w))
    out = apply_scalar_function(np.diag([0.0, 0.4]), f)
    np.testing.assert_allclose(out, np.diag(f(np.array([0.0, 0.4]))), atol=1e-15)


def test_scalar_function_domain_error():
    with pytest.raises(DomainError):
        apply_scalar_function(np.diag([0.0, 1.0]), lambda w: 1.0 / w)


def test_expm_examples():
    assert np.array_equal(matrix_exponential(np.zeros((3, 3))), np.eye(3))
    np.testing.assert_allclose(matrix_exponential(np.diag([1.0, -2.0])), np.diag(np.exp([1.0, -2.0])))
    th = np.pi / 2
    rot = matrix_exponential([[0, th], [-th, 0]])
    np.testing.assert_allclose(rot, [[np.cos(th), np.sin(th)], [-np.sin(th), np.cos(th)]], atol=1e-14)


def test_expm_defective_falls_back():
    a = np.array([[1.0, 1.0], [0.0, 1.0]])
    np.testing.assert_allclose(matrix_exponential(a), np.e * np.array([[1, 1], [0, 1]]), rtol=1e-13)


def test_lyapunov_examples():
    np.testing.assert_allclose(lyapunov_solve(-np.eye(2), -2 * np.eye(2)), np.eye(2), atol=1e-14)
    ell = -0.3 + 2j
    assert np.isclose(lyapunov_solve([[ell]], [[1.5]])[0, 0], 1.5 / (2 * ell.real))
    y = lyapunov_solve(np.diag([-1.0, -2.0]), -np.array([[2.0, 3.0], [3.0, 8.0]]))
    np.testing.assert_allclose(y, [[1, 1], [1, 2]], atol=1e-14)


def test_lyapunov_singular():
    with pytest.raises(SingularLyapunov):
        lyapunov_solve(np.diag([1j, -1.0]), np.eye(2))


@given(seeds, dims)
def test_eig_reconstruction(seed, n):
    a = random_hermitian(np.random.default_rng(seed), n, 5.0)
    e = hermitian_eig(a)
    assert max_abs(e.unitary.conj().T @ e.unitary - np.eye(n)) <= 1e-12
    assert max_abs(e.reconstruct() - a) <= 1e-10 * max_abs(a)


@given(seeds, dims)
def test_real_function_is_hermitian_and_commutes(seed, n):
    a = random_hermitian(np.random.default_rng(seed), n, 3.0)
    f = apply_scalar_function(a, np.cos)
    assert max_abs(f - f.conj().T) <= 1e-10
    assert max_abs(f @ a - a @ f) <= 1e-9


@given(seeds, dims, st.floats(0, 1), st.floats(0, 1))
def test_expm_group_property(seed, n, s, t):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    a *= rng.uniform(0, 2) / max(np.linalg.norm(a, 2), 1e-12)
    lhs = matrix_exponential(a * (s + t))
    rhs = matrix_exponential(a * s) @ matrix_exponential(a * t)
    assert max_abs(lhs - rhs) <= 1e-8


@given(seeds, dims)
def test_expm_inverse(seed, n):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    a *= rng.uniform(0, 10) / max(np.linalg.norm(a, 2), 1e-12)
    assert max_abs(matrix_exponential(a) @ matrix_exponential(-a) - np.eye(n)) <= 1e-9


@given(seeds, dims)
def test_lyapunov_residual_and_scipy(seed, n):
    rng = np.random.default_rng(seed)
    l_mat = random_stable(rng, n)
    x = random_hermitian(rng, n, rng.uniform(0.1, 10))
    y = lyapunov_solve(l_mat, x)
    assert max_abs(l_mat @ y + y @ l_mat.conj().T - x) <= 1e-12 * (1 + max_abs(x))
    assert max_abs(y - y.conj().T) <= 1e-11
    ref = scipy.linalg.solve_continuous_lyapunov(l_mat, x)
    assert max_abs(y - ref) <= 1e-8 * (1 + max_abs(ref))
