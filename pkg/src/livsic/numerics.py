"""Dense complex matrix kernels.

Thin, checked wrappers around LAPACK routines exposed by numpy and scipy.
All functions are pure and return fresh arrays.
"""

from __future__ import annotations

import warnings
from typing import Callable, Literal

import numpy as np
import scipy.linalg as sla
from scipy.linalg import lapack

from .errors import ConvergenceFailure, NotHermitian, ShapeMismatch, Singular

COND_MAX = 1e12
HERM_TOL = 1e-12
ZERO_EIG_TOL = 1e-12


def as_matrix(M, name: str = "matrix") -> np.ndarray:
    """Return `M` as a 2-D complex128 array, rejecting non-finite entries."""
    X = np.asarray(M, dtype=np.complex128)
    if X.ndim != 2:
        raise ShapeMismatch(f"{name} must be 2-D, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise ValueError(f"{name} has non-finite entries")
    return X


def _square(M, name: str = "matrix") -> np.ndarray:
    X = as_matrix(M, name)
    if X.shape[0] != X.shape[1]:
        raise ShapeMismatch(f"{name} must be square, got shape {X.shape}")
    return X


def norm(M) -> float:
    """Spectral norm; zero for empty matrices."""
    X = np.asarray(M)
    if X.size == 0:
        return 0.0
    if X.ndim == 1:
        return float(np.linalg.norm(X))
    return float(np.linalg.norm(X, 2))


def hermitian_part(M) -> np.ndarray:
    """(M + M*) / 2."""
    X = np.asarray(M, dtype=np.complex128)
    return 0.5 * (X + X.conj().T)


def skew_part(M) -> np.ndarray:
    """(M - M*) / (2i), the imaginary part in the operator sense."""
    X = np.asarray(M, dtype=np.complex128)
    return (X - X.conj().T) / 2j


def check_hermitian(M, tol: float = HERM_TOL) -> np.ndarray:
    """Return the symmetrized matrix or raise :class:`NotHermitian`.

    The symmetry residual ``||M - M*||`` must not exceed ``tol * ||M||``.
    """
    X = _square(M)
    scale = norm(X)
    resid = norm(X - X.conj().T)
    if resid > 0 and resid > tol * scale:
        raise NotHermitian(f"symmetry residual {resid:.3e} exceeds {tol:.1e}*||M||")
    return hermitian_part(X)


def hermitian_eig(M, tol: float = HERM_TOL) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a Hermitian matrix.

    Parameters
    ----------
    M : array_like, shape (n, n)
        Hermitian matrix.
    tol : float
        Relative symmetry tolerance.

    Returns
    -------
    d : ndarray, shape (n,)
        Real eigenvalues in ascending order.
    U : ndarray, shape (n, n)
        Unitary matrix of eigenvectors, ``M = U diag(d) U*``.

    Raises
    ------
    NotHermitian
        If ``||M - M*|| > tol * ||M||``.
    """
    X = check_hermitian(M, tol)
    if X.shape[0] == 0:
        return np.zeros(0), np.zeros((0, 0), dtype=np.complex128)
    d, U = np.linalg.eigh(X)
    return d, U


def _sort_key(lam: complex) -> tuple[float, float]:
    return (lam.real, lam.imag)


def schur(
    M,
    order: Literal["none", "lex"] | Callable[[complex], tuple] = "none",
) -> tuple[np.ndarray, np.ndarray]:
    """Complex Schur decomposition ``M = Q T Q*``.

    Parameters
    ----------
    M : array_like, shape (n, n)
    order : {"none", "lex"} or callable
        ``"none"`` keeps the LAPACK ordering.  ``"lex"`` sorts the diagonal by
        ascending real part, then imaginary part, stably.  A callable maps an
        eigenvalue to a sort key.

    Returns
    -------
    Q : ndarray
        Unitary.
    T : ndarray
        Upper triangular with the eigenvalues of `M` on the diagonal.

    Raises
    ------
    ConvergenceFailure
        If the QR iteration or the reordering fails.
    """
    X = _square(M)
    n = X.shape[0]
    if n == 0:
        return np.zeros((0, 0), complex), np.zeros((0, 0), complex)
    try:
        T, Q = sla.schur(X, output="complex")
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise ConvergenceFailure(str(exc)) from exc
    T = np.triu(T)
    if order == "none":
        return Q, T
    key = _sort_key if order == "lex" else order
    # Selection sort with adjacent swaps; stable because the first minimum
    # among the remaining positions is always taken.
    for k in range(n - 1):
        diag = np.diag(T)
        j = min(range(k, n), key=lambda i: (key(complex(diag[i])), i))
        if j != k:
            T, Q, info = lapack.ztrexc(T, Q, j + 1, k + 1)
            if info != 0:
                raise ConvergenceFailure(f"ztrexc failed with info={info}")
    return Q, np.triu(T)


def expm(M) -> np.ndarray:
    """Matrix exponential by scaling and squaring.

    Accepts a single square matrix or a stack of shape ``(..., n, n)``.
    """
    X = np.asarray(M, dtype=np.complex128)
    if X.ndim < 2 or X.shape[-1] != X.shape[-2]:
        raise ShapeMismatch(f"expm needs square matrices, got shape {X.shape}")
    if X.shape[-1] == 0:
        return X.copy()
    return sla.expm(X)


def hermitian_calculus(M, which: Literal["abs_sqrt", "sign"]) -> np.ndarray:
    """Functional calculus ``|M|^{1/2}`` or ``sign M`` for Hermitian `M`.

    Eigenvalues with ``|d| <= 1e-12 * ||M||`` are treated as zero, so
    ``sign 0 = 0``.
    """
    d, U = hermitian_eig(M)
    thr = ZERO_EIG_TOL * (np.max(np.abs(d)) if d.size else 0.0)
    d = np.where(np.abs(d) <= thr, 0.0, d)
    if which == "abs_sqrt":
        f = np.sqrt(np.abs(d))
    elif which == "sign":
        f = np.sign(d)
    else:
        raise ValueError(f"unknown function {which!r}")
    return (U * f) @ U.conj().T


def solve(M, B, cond_max: float = COND_MAX) -> np.ndarray:
    """Solve ``M X = B`` with an LU factorization and a condition guard.

    Raises
    ------
    Singular
        If the LAPACK 1-norm reciprocal condition estimate is below
        ``1 / cond_max``.
    """
    A = _square(M, "M")
    Bm = np.asarray(B, dtype=np.complex128)
    vec = Bm.ndim == 1
    if vec:
        Bm = Bm[:, None]
    if Bm.shape[0] != A.shape[0]:
        raise ShapeMismatch(f"right-hand side has {Bm.shape[0]} rows, expected {A.shape[0]}")
    n = A.shape[0]
    if n == 0:
        X = np.zeros((0, Bm.shape[1]), dtype=np.complex128)
        return X[:, 0] if vec else X
    anorm = float(np.max(np.sum(np.abs(A), axis=0)))
    if anorm == 0.0:
        raise Singular("zero matrix")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        lu, piv = sla.lu_factor(A, check_finite=False)
    if np.any(np.diag(lu) == 0):
        raise Singular("exactly singular matrix")
    rcond, info = lapack.zgecon(lu, anorm, norm="1")
    if info != 0 or not rcond >= 1.0 / cond_max:
        raise Singular(f"condition estimate {1.0 / max(rcond, 1e-300):.3e} exceeds {cond_max:.1e}")
    X = sla.lu_solve((lu, piv), Bm, check_finite=False)
    return X[:, 0] if vec else X


def orthonormalize(X, tol: float) -> np.ndarray:
    """Orthonormal basis of ran X by column-pivoted QR with rank cutoff.

    Columns whose pivoted diagonal ``|R_kk|`` is not above `tol` are dropped.
    """
    X = np.asarray(X, dtype=np.complex128)
    if X.shape[1] == 0:
        return np.zeros((X.shape[0], 0), complex)
    Qx, R, _ = sla.qr(X, mode="economic", pivoting=True)
    d = np.abs(np.diag(R))
    k = int(np.sum(d > tol))
    return Qx[:, :k]
