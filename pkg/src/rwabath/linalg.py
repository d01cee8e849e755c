"""Dense complex linear algebra: Hermitian eigensystems, matrix functions,
matrix exponentials and continuous Lyapunov solves.

All routines take and return plain ``numpy`` arrays of dtype ``complex128``.
"""
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import DomainError, NotHermitian, SingularLyapunov

__all__ = [
    "HermitianEig",
    "as_matrix",
    "hermitian_eig",
    "apply_scalar_function",
    "matrix_exponential",
    "lyapunov_solve",
    "hermitize",
    "max_abs",
]

_EIG_COND_LIMIT = 1e8


def as_matrix(a):
    """Return ``a`` as a finite square complex matrix (scalars become 1x1)."""
    m = np.array(a, dtype=complex)
    if m.ndim == 0:
        m = m.reshape(1, 1)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 1:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix has non-finite entries")
    return m


def max_abs(a):
    a = np.asarray(a)
    return float(np.max(np.abs(a))) if a.size else 0.0


def hermitize(a):
    a = np.asarray(a)
    return 0.5 * (a + np.swapaxes(a, -1, -2).conj())


@dataclass(frozen=True)
class HermitianEig:
    """Eigensystem ``A = U diag(eigenvalues) U^dagger`` of a Hermitian matrix."""

    eigenvalues: np.ndarray
    unitary: np.ndarray

    @property
    def dim(self):
        return self.eigenvalues.shape[0]

    def reconstruct(self, values=None):
        w = self.eigenvalues if values is None else values
        return (self.unitary * w) @ self.unitary.conj().T

    def to_eigenbasis(self, a):
        return self.unitary.conj().T @ a @ self.unitary

    def from_eigenbasis(self, a):
        return self.unitary @ a @ self.unitary.conj().T


def hermitian_eig(a, tol=1e-10):
    """Eigendecomposition of a Hermitian matrix, eigenvalues ascending.

    Raises
    ------
    NotHermitian
        If ``max|A - A^dagger| > tol``.
    """
    a = as_matrix(a)
    skew = max_abs(a - a.conj().T)
    if skew > tol:
        raise NotHermitian(f"matrix is not Hermitian (max|A - A^H| = {skew:.3e})")
    w, u = np.linalg.eigh(hermitize(a))
    return HermitianEig(w, u)


def apply_scalar_function(a, f, eig=None):
    """Lift a scalar function to a Hermitian matrix, ``U diag(f(w)) U^dagger``.

    ``f`` is called once with the array of eigenvalues. A precomputed
    eigensystem may be passed as ``eig`` to avoid recomputing it.
    """
    if eig is None:
        eig = hermitian_eig(a)
    try:
        with np.errstate(all="raise"):
            values = np.asarray(f(eig.eigenvalues), dtype=complex)
    except (FloatingPointError, ZeroDivisionError, ValueError, ArithmeticError) as exc:
        raise DomainError(f"function undefined on the spectrum: {exc}") from exc
    values = np.broadcast_to(values, eig.eigenvalues.shape)
    if not np.all(np.isfinite(values)):
        raise DomainError("function is not finite at an eigenvalue")
    out = eig.reconstruct(values)
    if np.all(values.imag == 0):
        out = hermitize(out)
    return out


def matrix_exponential(a):
    """Matrix exponential.

    Diagonalizable inputs with a well conditioned eigenvector matrix go
    through the eigendecomposition; everything else falls back to Pade
    scaling and squaring.
    """
    a = as_matrix(a)
    n = a.shape[0]
    if not np.any(a):
        return np.eye(n, dtype=complex)
    if max_abs(a - a.conj().T) == 0.0:
        w, u = np.linalg.eigh(a)
        return (u * np.exp(w)) @ u.conj().T
    w, x = np.linalg.eig(a)
    try:
        cond = np.linalg.cond(x)
    except np.linalg.LinAlgError:
        cond = np.inf
    if np.isfinite(cond) and cond < _EIG_COND_LIMIT:
        return (x * np.exp(w)) @ np.linalg.inv(x)
    return scipy.linalg.expm(a)


def _lyap_eigen(lam, x, xinv, rhs):
    denom = lam[:, None] + lam.conj()[None, :]
    rt = xinv @ rhs @ xinv.conj().T
    return x @ (rt / denom) @ x.conj().T


def lyapunov_solve(l_mat, rhs, tol_factor=1e-12):
    """Solve ``L Y + Y L^dagger = X`` for ``Y``.

    Uses the entrywise eigenbasis formula ``Y_ij = X_ij / (mu_i + mu_j^*)``
    with one step of residual refinement, and falls back to the dense
    ``N^2 x N^2`` vectorized system when the eigenvector matrix is ill
    conditioned or the residual bound is not met.

    Raises
    ------
    SingularLyapunov
        If some ``mu_i + mu_j^*`` vanishes (the superoperator is singular).
    """
    l_mat = as_matrix(l_mat)
    rhs = as_matrix(rhs)
    if rhs.shape != l_mat.shape:
        raise ValueError("L and X must have the same shape")
    n = l_mat.shape[0]
    hermitian_rhs = max_abs(rhs - rhs.conj().T) <= 1e-14 * (1.0 + max_abs(rhs))
    bound = tol_factor * (1.0 + max_abs(rhs))
    scale = max(max_abs(l_mat), np.finfo(float).tiny)

    lam, x = np.linalg.eig(l_mat)
    gaps = np.abs(lam[:, None] + lam.conj()[None, :])
    if gaps.min() <= 1e-13 * scale:
        raise SingularLyapunov(
            f"mu_i + mu_j^* vanishes (min gap {gaps.min():.3e}); superoperator singular"
        )

    def residual(y):
        return max_abs(l_mat @ y + y @ l_mat.conj().T - rhs)

    y = None
    try:
        cond = np.linalg.cond(x)
    except np.linalg.LinAlgError:
        cond = np.inf
    if np.isfinite(cond) and cond < _EIG_COND_LIMIT:
        xinv = np.linalg.inv(x)
        y = _lyap_eigen(lam, x, xinv, rhs)
        r = rhs - (l_mat @ y + y @ l_mat.conj().T)
        y = y + _lyap_eigen(lam, x, xinv, r)
        if hermitian_rhs:
            y = hermitize(y)
        if residual(y) > bound:
            y = None
    if y is None:
        eye = np.eye(n)
        op = np.kron(eye, l_mat) + np.kron(l_mat.conj(), eye)
        try:
            vec = np.linalg.solve(op, rhs.reshape(-1, order="F"))
        except np.linalg.LinAlgError as exc:
            raise SingularLyapunov(str(exc)) from exc
        y = vec.reshape(n, n, order="F")
        if hermitian_rhs:
            y = hermitize(y)
    return y
