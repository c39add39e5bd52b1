"""Operator colligations at matrix scale.

A colligation is a triple ``(A, Phi, J)`` with ``A`` an ``n x n`` matrix
acting on the internal space, ``Phi`` an ``r x n`` matrix mapping into the
external space, and ``J`` a diagonal signature, linked by

    (A - A*) / i = Phi* J Phi.

Subspaces of the internal space are carried as explicit orthonormal column
bases (:class:`SubspaceBasis`).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.linalg as sla

from . import numerics as nx
from .errors import (
    ChannelTooSmall,
    ExternalMismatch,
    NotInvariant,
    NotSimple,
    ShapeMismatch,
)

__all__ = [
    "SignatureOperator",
    "Colligation",
    "SubspaceBasis",
    "ValidationReport",
    "validate",
    "embed",
    "adjoint",
    "product",
    "resolvent_of_product",
    "project",
    "principal_split",
    "is_simple",
    "chain_factorization",
    "unitary_equivalence",
    "equivalence_residual",
    "mobius_colligation",
]


@dataclass(frozen=True)
class SignatureOperator:
    """Diagonal involution ``J`` stored as a tuple of +1/-1 entries."""

    signs: tuple[int, ...]

    def __post_init__(self):
        s = tuple(int(v) for v in np.asarray(self.signs, dtype=float).ravel())
        if any(v not in (1, -1) for v in s):
            raise ValueError("signature entries must be +1 or -1")
        object.__setattr__(self, "signs", s)

    @classmethod
    def identity(cls, r: int) -> "SignatureOperator":
        return cls((1,) * r)

    @property
    def r(self) -> int:
        return len(self.signs)

    @property
    def p(self) -> int:
        return sum(1 for s in self.signs if s > 0)

    @property
    def q(self) -> int:
        return self.r - self.p

    @property
    def vector(self) -> np.ndarray:
        return np.array(self.signs, dtype=float)

    def matrix(self) -> np.ndarray:
        return np.diag(self.vector).astype(np.complex128)

    def negate(self) -> "SignatureOperator":
        return SignatureOperator(tuple(-s for s in self.signs))


def _as_signature(J) -> SignatureOperator:
    if isinstance(J, SignatureOperator):
        return J
    return SignatureOperator(tuple(np.asarray(J, dtype=float).ravel()))


@dataclass(frozen=True, eq=False)
class Colligation:
    """Finite colligation ``(A, Phi, J)``.

    Construction checks shapes only; use :func:`validate` for the
    colligation identity.
    """

    A: np.ndarray
    Phi: np.ndarray
    J: SignatureOperator

    def __post_init__(self):
        A = np.array(self.A, dtype=np.complex128)
        J = _as_signature(self.J)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ShapeMismatch(f"A must be square, got shape {A.shape}")
        Phi = np.array(self.Phi, dtype=np.complex128)
        if Phi.size == 0:
            Phi = Phi.reshape(J.r, A.shape[0])
        if Phi.ndim != 2 or Phi.shape != (J.r, A.shape[0]):
            raise ShapeMismatch(f"Phi must have shape {(J.r, A.shape[0])}, got {Phi.shape}")
        A.setflags(write=False)
        Phi.setflags(write=False)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "Phi", Phi)
        object.__setattr__(self, "J", J)

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def r(self) -> int:
        return self.J.r

    def scale(self) -> float:
        """``||A|| + ||Phi||^2``, the natural size of the identity residual."""
        return nx.norm(self.A) + nx.norm(self.Phi) ** 2

    def identity_residual(self) -> float:
        """``||(A - A*)/i - Phi* J Phi||``."""
        B = (self.A - self.A.conj().T) / 1j
        C = self.Phi.conj().T @ (self.J.vector[:, None] * self.Phi)
        return nx.norm(B - C)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Colligation):
            return NotImplemented
        return (
            self.J == other.J
            and self.A.shape == other.A.shape
            and np.array_equal(self.A, other.A)
            and np.array_equal(self.Phi, other.Phi)
        )

    __hash__ = None


@dataclass(frozen=True, eq=False)
class SubspaceBasis:
    """Orthonormal column basis of a subspace of ``C^n``."""

    columns: np.ndarray

    def __post_init__(self):
        V = np.array(self.columns, dtype=np.complex128)
        if V.ndim != 2:
            raise ShapeMismatch("basis columns must form a 2-D array")
        k = V.shape[1]
        if nx.norm(V.conj().T @ V - np.eye(k)) > 1e-10:
            raise ValueError("basis columns are not orthonormal")
        V.setflags(write=False)
        object.__setattr__(self, "columns", V)

    @property
    def n(self) -> int:
        return self.columns.shape[0]

    @property
    def k(self) -> int:
        return self.columns.shape[1]

    @classmethod
    def full(cls, n: int) -> "SubspaceBasis":
        return cls(np.eye(n, dtype=np.complex128))

    @classmethod
    def empty(cls, n: int) -> "SubspaceBasis":
        return cls(np.zeros((n, 0), dtype=np.complex128))

    @classmethod
    def span(cls, vectors, tol: float = 1e-12) -> "SubspaceBasis":
        """Orthonormal basis of the column span, dropping dependent columns."""
        X = np.asarray(vectors, dtype=np.complex128)
        scale = max(nx.norm(X), 1.0)
        return cls(nx.orthonormalize(X, tol * scale))

    def projector(self) -> np.ndarray:
        V = self.columns
        return V @ V.conj().T

    def complement(self) -> "SubspaceBasis":
        if self.k == 0:
            return SubspaceBasis.full(self.n)
        N = sla.null_space(self.columns.conj().T)
        return SubspaceBasis(N)


@dataclass(frozen=True)
class ValidationReport:
    """Residuals of the signature and colligation identities."""

    signature_residual: float
    colligation_residual: float
    threshold: float
    passed: bool


def validate(c: Colligation, tol: float = 1e-10) -> ValidationReport:
    """Check ``J = J* = J^-1`` and ``(A - A*)/i = Phi* J Phi``.

    Parameters
    ----------
    c : Colligation
    tol : float
        Relative tolerance; the colligation residual must not exceed
        ``tol * (||A|| + ||Phi||^2)`` (or ``tol`` when that scale is zero).
    """
    if c.Phi.shape != (c.r, c.n):
        raise ShapeMismatch("Phi shape inconsistent with A and J")
    Jm = c.J.matrix()
    sig = nx.norm(Jm - Jm.conj().T) + nx.norm(Jm @ Jm - np.eye(c.r))
    res = c.identity_residual()
    scale = c.scale()
    thr = tol * scale if scale > 0 else tol
    return ValidationReport(sig, res, thr, bool(sig == 0 and res <= thr))


def embed(A, channel: SubspaceBasis | np.ndarray | None = None, tol: float = 1e-10) -> Colligation:
    """Embed a matrix in a colligation.

    With no channel the external space is ``ran(Im A)``: writing
    ``B = (A - A*)/i = U diag(d) U*`` and keeping ``|d_k| > 1e-12 ||B||``,
    the rows of ``Phi`` are ``|d_k|^{1/2} u_k*`` and ``J_k = sign d_k``.
    A larger channel ``E`` adds the rows of ``E0*`` twice, with signs +1 and
    -1, where ``E0 = E minus ran B``.  Rows are ordered with the +1 signs
    first.

    Raises
    ------
    ChannelTooSmall
        If ``ran B`` is not contained in the channel within `tol`.
    """
    A = nx._square(A, "A")
    n = A.shape[0]
    B = nx.hermitian_part((A - A.conj().T) / 1j)
    d, U = nx.hermitian_eig(B)
    bnorm = float(np.max(np.abs(d))) if n else 0.0
    keep = np.abs(d) > nx.ZERO_EIG_TOL * bnorm if bnorm > 0 else np.zeros(n, bool)
    d_k, U_k = d[keep], U[:, keep]
    rows_p = [np.sqrt(d_k[d_k > 0])[:, None] * U_k[:, d_k > 0].conj().T]
    rows_m = [np.sqrt(-d_k[d_k < 0])[:, None] * U_k[:, d_k < 0].conj().T]
    if channel is not None:
        E = channel.columns if isinstance(channel, SubspaceBasis) else SubspaceBasis(channel).columns
        if E.shape[0] != n:
            raise ShapeMismatch(f"channel lives in C^{E.shape[0]}, expected C^{n}")
        leak = U_k - E @ (E.conj().T @ U_k)
        if nx.norm(leak) > tol:
            raise ChannelTooSmall(f"ran(Im A) leaves the channel by {nx.norm(leak):.3e}")
        E0 = E - U_k @ (U_k.conj().T @ E)
        if E0.shape[1]:
            u, s, _ = np.linalg.svd(E0, full_matrices=False)
            E0 = u[:, s > 0.5]
        rows_p.append(E0.conj().T)
        rows_m.append(E0.conj().T)
    Phi_p = np.vstack(rows_p)
    Phi_m = np.vstack(rows_m)
    Phi = np.vstack([Phi_p, Phi_m]).reshape(-1, n)
    J = SignatureOperator((1,) * Phi_p.shape[0] + (-1,) * Phi_m.shape[0])
    return Colligation(A, Phi, J)


def mobius_colligation(a: complex) -> Colligation:
    """The 1 x 1 colligation with ``A = a``, ``Phi = |2 Im a|^{1/2}``, ``J = sign Im a``."""
    a = complex(a)
    if a.imag == 0:
        raise ValueError("Im a must be nonzero")
    return Colligation(
        np.array([[a]]),
        np.array([[np.sqrt(2 * abs(a.imag))]]),
        SignatureOperator((1 if a.imag > 0 else -1,)),
    )


def adjoint(c: Colligation) -> Colligation:
    """Adjoint colligation ``(A*, Phi, -J)``."""
    return Colligation(c.A.conj().T, c.Phi, c.J.negate())


def product(c1: Colligation, c2: Colligation) -> Colligation:
    """Coupling of two colligations with a common external space.

    ``A = [[A1, i Phi1* J Phi2], [0, A2]]`` and ``Phi = [Phi1, Phi2]``.
    """
    if c1.J != c2.J:
        raise ExternalMismatch(f"signatures differ: {c1.J.signs} vs {c2.J.signs}")
    G = 1j * c1.Phi.conj().T @ (c1.J.vector[:, None] * c2.Phi)
    A = np.block([[c1.A, G], [np.zeros((c2.n, c1.n)), c2.A]])
    Phi = np.hstack([c1.Phi, c2.Phi])
    return Colligation(A, Phi, c1.J)


def resolvent_of_product(c1: Colligation, c2: Colligation, z: complex) -> np.ndarray:
    """``(A - z)^{-1}`` of ``product(c1, c2)`` assembled from the factor resolvents.

    ``R = R1 P1 + R2 P2 - i R1 Phi1* J Phi2 R2 P2`` in block form.
    """
    if c1.J != c2.J:
        raise ExternalMismatch("signatures differ")
    R1 = nx.solve(c1.A - z * np.eye(c1.n), np.eye(c1.n))
    R2 = nx.solve(c2.A - z * np.eye(c2.n), np.eye(c2.n))
    X = -1j * R1 @ c1.Phi.conj().T @ (c1.J.vector[:, None] * c2.Phi) @ R2
    return np.block([[R1, X], [np.zeros((c2.n, c1.n)), R2]])


def project(c: Colligation, sub: SubspaceBasis | np.ndarray) -> Colligation:
    """Compress a colligation onto a subspace: ``(V* A V, Phi V, J)``."""
    V = sub.columns if isinstance(sub, SubspaceBasis) else np.asarray(sub, dtype=np.complex128)
    if V.shape[0] != c.n:
        raise ShapeMismatch(f"subspace lives in C^{V.shape[0]}, expected C^{c.n}")
    return Colligation(V.conj().T @ c.A @ V, c.Phi @ V, c.J)


def _krylov(A: np.ndarray, X0: np.ndarray, tol: float) -> np.ndarray:
    """Orthonormal basis of span{A^k X0 : k < n} by block Arnoldi.

    New directions are accepted when their pivoted-QR diagonal exceeds
    ``tol`` times the norm of the block they came from.
    """
    n = A.shape[0]
    Q = np.zeros((n, 0), dtype=np.complex128)
    X = X0
    scale = nx.norm(X0)
    anorm = nx.norm(A)
    for _ in range(n + 1):
        if X.shape[1] == 0 or Q.shape[1] == n or scale == 0:
            break
        for _ in range(2):
            X = X - Q @ (Q.conj().T @ X)
        new = nx.orthonormalize(X, tol * scale)
        if new.shape[1] == 0:
            break
        new = new - Q @ (Q.conj().T @ new)
        new, _ = np.linalg.qr(new)
        Q = np.hstack([Q, new])
        X = A @ new
        scale = anorm
    return Q


def principal_split(
    c: Colligation, tol: float = 1e-10
) -> tuple[Colligation, Colligation, SubspaceBasis]:
    """Split off the maximal closed subsystem.

    Returns
    -------
    principal : Colligation
        Projection onto ``span{A^k Phi* g}``.
    redundant : Colligation
        Projection onto the orthogonal complement; its fundamental operator
        is Hermitian and its channel map vanishes.
    basis : SubspaceBasis
        Orthonormal basis of the principal subspace.
    """
    Q = _krylov(c.A, c.Phi.conj().T, tol) if c.n else np.zeros((0, 0), complex)
    basis = SubspaceBasis(Q)
    comp = basis.complement()
    return project(c, basis), project(c, comp), basis


def is_simple(c: Colligation, tol: float = 1e-10) -> bool:
    """True when the principal subspace is the whole internal space."""
    return principal_split(c, tol)[2].k == c.n


def chain_factorization(
    c: Colligation,
    chain: Sequence[SubspaceBasis],
    tol: float = 1e-8,
    return_basis: bool = False,
):
    """Factor a colligation along a nested chain of invariant subspaces.

    The k-th factor is the projection onto ``H_k minus H_{k-1}``; if the last
    subspace is proper, its complement contributes a final factor.  The
    product of the factors, in order, equals ``project(c, W)`` where ``W``
    stacks the difference bases.

    Raises
    ------
    NotInvariant
        If some ``H_k`` is not invariant (``||(I - P_k) A P_k|| > tol * max(1, ||A||)``)
        or the chain is not strictly increasing.
    """
    n = c.n
    anorm = max(1.0, nx.norm(c.A))
    pieces = []
    prev = np.zeros((n, 0), dtype=np.complex128)
    for idx, sub in enumerate(chain):
        V = sub.columns
        resid = nx.norm(c.A @ V - V @ (V.conj().T @ (c.A @ V))) if V.size else 0.0
        if resid > tol * anorm:
            raise NotInvariant(idx, resid)
        nest = nx.norm(prev - V @ (V.conj().T @ prev)) if prev.size else 0.0
        if nest > tol or sub.k <= prev.shape[1]:
            raise NotInvariant(idx, nest)
        D = V - prev @ (prev.conj().T @ V)
        u, s, _ = np.linalg.svd(D, full_matrices=False)
        D = u[:, s > 0.5]
        pieces.append(D)
        prev = np.hstack([prev, D])
    if prev.shape[1] < n:
        pieces.append(SubspaceBasis(prev).complement().columns)
    factors = [project(c, D) for D in pieces]
    if return_basis:
        return factors, np.hstack(pieces)
    return factors


def equivalence_residual(c1: Colligation, c2: Colligation, U: np.ndarray) -> float:
    """max of ``||U A1 - A2 U||``, ``||Phi1 - Phi2 U||`` and ``||U* U - I||``."""
    return max(
        nx.norm(U @ c1.A - c2.A @ U),
        nx.norm(c1.Phi - c2.Phi @ U),
        nx.norm(U.conj().T @ U - np.eye(c1.n)),
    )


def _gram(c: Colligation, depth: int, s: float) -> np.ndarray:
    K = [c.Phi.conj().T]
    for _ in range(depth - 1):
        K.append(c.A @ K[-1] / s)
    K = np.hstack(K)
    return K.conj().T @ K


def unitary_equivalence(
    c1: Colligation,
    c2: Colligation,
    depth: int | None = None,
    tol: float = 1e-9,
) -> np.ndarray | None:
    """Find a unitary ``U`` with ``U A1 = A2 U`` and ``Phi1 = Phi2 U``.

    The scaled Gram matrices of the Krylov vectors
    ``A^m Phi* e_i / s^m`` (``s = max(1, ||A1||, ||A2||)``) are compared up to
    `depth` first.  On agreement, matched orthonormal frames are built by a
    paired Arnoldi process in which the second frame reuses the
    Gram-Schmidt coefficients of the first; then ``U = Q2 Q1*``.

    Returns
    -------
    ndarray or None
        ``U`` if all residuals are at most ``10 * tol * max(1, ||A1|| + ||Phi1||^2)``,
        otherwise ``None``.

    Raises
    ------
    NotSimple
        If either colligation has a redundant part.
    """
    if c1.J != c2.J or c1.n != c2.n:
        return None
    n = c1.n
    if n == 0:
        return np.zeros((0, 0), dtype=np.complex128)
    for c in (c1, c2):
        if not is_simple(c):
            raise NotSimple("unitary equivalence requires simple colligations")
    scale = max(1.0, c1.scale())
    thr = 10 * tol * scale
    depth = depth or 2 * n
    s = max(1.0, nx.norm(c1.A), nx.norm(c2.A))
    G1 = _gram(c1, depth, s)
    G2 = _gram(c2, depth, s)
    if nx.norm(G1 - G2) > thr * max(1.0, nx.norm(G1)):
        return None

    Q1 = np.zeros((n, 0), dtype=np.complex128)
    Q2 = np.zeros((n, 0), dtype=np.complex128)
    queue = [(c1.Phi.conj().T[:, j], c2.Phi.conj().T[:, j]) for j in range(c1.r)]
    cut = 1e-10 * max(1.0, nx.norm(c1.Phi), nx.norm(c1.A))
    while queue and Q1.shape[1] < n:
        x1, x2 = queue.pop(0)
        for _ in range(2):
            h = Q1.conj().T @ x1
            x1 = x1 - Q1 @ h
            x2 = x2 - Q2 @ h
        nu = np.linalg.norm(x1)
        if nu <= cut:
            continue
        q1, q2 = x1 / nu, x2 / nu
        Q1 = np.column_stack([Q1, q1])
        Q2 = np.column_stack([Q2, q2])
        queue.append((c1.A @ q1, c2.A @ q2))
    if Q1.shape[1] < n:
        return None
    U = Q2 @ Q1.conj().T
    if equivalence_residual(c1, c2, U) > thr:
        return None
    return U
