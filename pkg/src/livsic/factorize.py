"""Finite-dimensional Potapov factorization.

A Schur triangularization ``A = Q T Q*`` yields the nested invariant
subspaces ``span(q_1..q_k)``.  Projecting the colligation onto the k-th
Schur vector gives the elementary factor with ``lambda_k = T_kk`` and
``eta_k = Phi q_k``; the characteristic function is the right-ordered
product of ``I + (i / (z - lambda_k)) eta_k eta_k* J``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import numerics as nx
from .colligation import Colligation, SignatureOperator, _as_signature
from .errors import NotHermitian, PoleAt

__all__ = [
    "ElementaryFactor",
    "BlaschkeProduct",
    "ConstraintReport",
    "potapov_factorize",
    "eval_factor",
    "eval_product",
    "check_constraints",
    "selfadjoint_charfn",
    "AdditiveCharFn",
]

POLE_TOL = 1e-14


@dataclass(frozen=True, eq=False)
class ElementaryFactor:
    """Pole ``lam`` and direction ``eta`` of one elementary factor."""

    lam: complex
    eta: np.ndarray


@dataclass(frozen=True, eq=False)
class BlaschkeProduct:
    """Ordered list of elementary factors sharing the signature ``J``.

    ``basis`` holds the Schur vectors used to extract the factors, when the
    product came from :func:`potapov_factorize`.
    """

    J: SignatureOperator
    factors: tuple[ElementaryFactor, ...]
    basis: np.ndarray | None = field(default=None)

    @property
    def lambdas(self) -> np.ndarray:
        return np.array([f.lam for f in self.factors], dtype=np.complex128)

    @property
    def etas(self) -> np.ndarray:
        """Directions stacked as columns, shape ``(r, K)``."""
        if not self.factors:
            return np.zeros((self.J.r, 0), dtype=np.complex128)
        return np.column_stack([f.eta for f in self.factors])


def _check_pole(z: complex, lam: complex) -> None:
    if abs(z - lam) <= POLE_TOL * max(1.0, abs(lam)):
        raise PoleAt(lam)


def eval_factor(f: ElementaryFactor, J: SignatureOperator, z: complex) -> np.ndarray:
    """``I + (i / (z - lam)) eta eta* J``.

    Raises
    ------
    PoleAt
        If ``z`` equals ``lam``.
    """
    J = _as_signature(J)
    _check_pole(z, f.lam)
    eta = np.asarray(f.eta, dtype=np.complex128).reshape(J.r)
    return np.eye(J.r) + (1j / (z - f.lam)) * np.outer(eta, eta.conj() * J.vector)


def eval_product(bp: BlaschkeProduct, z: complex) -> np.ndarray:
    """Right-ordered product of the elementary factors at ``z``."""
    S = np.eye(bp.J.r, dtype=np.complex128)
    for f in bp.factors:
        S = S @ eval_factor(f, bp.J, z)
    return S


def potapov_factorize(c: Colligation, order: str = "lex") -> BlaschkeProduct:
    """Factor the characteristic function along a Schur chain.

    Parameters
    ----------
    c : Colligation
    order : {"lex", "none"}
        ``"lex"`` orders eigenvalues by ascending real part, then imaginary
        part; ``"none"`` keeps the LAPACK ordering.

    Returns
    -------
    BlaschkeProduct
        One factor per Schur vector.  Factors with ``eta = 0`` are kept.
    """
    Q, T = nx.schur(c.A, order=order)
    E = c.Phi @ Q
    factors = tuple(ElementaryFactor(complex(T[k, k]), E[:, k].copy()) for k in range(c.n))
    return BlaschkeProduct(c.J, factors, Q)


@dataclass(frozen=True)
class ConstraintReport:
    """Residuals of the factor constraints.

    Attributes
    ----------
    eta_residual : float
        ``max_k |eta_k* J eta_k - 2 Im lam_k|``.
    gram_residual : float
        ``||sum eta_k eta_k* - Phi Phi*||`` (NaN when no target is given).
    trace_slack : float
        ``tr(sum eta_k eta_k*) - 2 sum |Im lam_k|``.
    """

    eta_residual: float
    gram_residual: float
    trace_slack: float


def check_constraints(bp: BlaschkeProduct, Phi: np.ndarray | None = None) -> ConstraintReport:
    """Evaluate the constraint suite of a Blaschke-Potapov product."""
    E = bp.etas
    lam = bp.lambdas
    Jv = bp.J.vector
    if E.shape[1]:
        q = np.einsum("ik,i,ik->k", E.conj(), Jv, E).real
        eta_res = float(np.max(np.abs(q - 2 * lam.imag)))
    else:
        eta_res = 0.0
    G = E @ E.conj().T
    gram = float("nan") if Phi is None else nx.norm(G - Phi @ Phi.conj().T)
    slack = float(np.trace(G).real - 2 * np.sum(np.abs(lam.imag)))
    return ConstraintReport(eta_res, gram, slack)


class AdditiveCharFn:
    """``z -> I + i sum_k tau_k tau_k* J / (z - lam_k)`` for Hermitian ``A``."""

    def __init__(self, lambdas: np.ndarray, taus: np.ndarray, J: SignatureOperator):
        self.lambdas = np.asarray(lambdas, dtype=float)
        self.taus = np.asarray(taus, dtype=np.complex128)
        self.J = J

    def __call__(self, z: complex) -> np.ndarray:
        for lam in self.lambdas:
            _check_pole(z, lam)
        w = 1.0 / (z - self.lambdas)
        G = (self.taus * w[None, :]) @ self.taus.conj().T
        return np.eye(self.J.r) + 1j * G * self.J.vector[None, :]


def selfadjoint_charfn(c: Colligation, tol: float = 1e-10) -> AdditiveCharFn:
    """Additive form of ``S`` when the fundamental operator is Hermitian.

    Raises
    ------
    NotHermitian
        If ``||A - A*|| > tol``.
    """
    if nx.norm(c.A - c.A.conj().T) > tol:
        raise NotHermitian("fundamental operator is not Hermitian")
    d, U = nx.hermitian_eig(nx.hermitian_part(c.A))
    return AdditiveCharFn(d, c.Phi @ U, c.J)
