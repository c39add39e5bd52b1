"""Triangular models and the dissipative demonstrations.

Discrete model
    Diagonal ``lambda_k``, entries ``i eta_k* J eta_l`` above the diagonal,
    channel columns ``eta_k``.
Continuous model
    ``(A h)(x) = a(x) h(x) + i int_x^ell xi(x)* J xi(t) h(t) dt`` on
    ``L^2([0, ell], C^p)`` with channel ``h -> int xi h``, discretized on
    ``N`` uniform cells.
Combined model
    The coupling of the two, with the discrete block first.
Spectral model
    Built from the spectral decomposition of ``Re A`` and reproducing
    ``V(z)`` of the input colligation.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import solve_ivp

from . import numerics as nx
from .charfn import eval_S
from .colligation import (
    Colligation,
    SignatureOperator,
    SubspaceBasis,
    _as_signature,
    principal_split,
    project,
)
from .errors import (
    ConstraintViolation,
    NoConvergence,
    NotDissipative,
    NotNondecreasing,
    PoleAt,
)

__all__ = [
    "DiscreteModelData",
    "ContinuousModelData",
    "CombinedModel",
    "build_discrete_model",
    "build_continuous_model",
    "build_combined_model",
    "model_charfn",
    "spectral_model",
    "model_redundant_part",
    "integration_operator",
    "unicellular_demo",
    "UnicellularReport",
    "completeness_criterion",
    "CompletenessReport",
    "dissipative_embed",
]


@dataclass(frozen=True, eq=False)
class DiscreteModelData:
    """Poles ``lambdas`` and directions ``etas`` (one r-vector per pole)."""

    lambdas: np.ndarray
    etas: np.ndarray

    def __post_init__(self):
        lam = np.asarray(self.lambdas, dtype=np.complex128).ravel()
        E = np.asarray(self.etas, dtype=np.complex128)
        if E.size == 0:
            E = E.reshape(0, E.shape[-1] if E.ndim == 2 else 0)
        if E.ndim == 1:
            E = E[:, None]
        if E.shape[0] != lam.size:
            raise ValueError("need one eta per lambda")
        object.__setattr__(self, "lambdas", lam)
        object.__setattr__(self, "etas", E)

    def __len__(self) -> int:
        return self.lambdas.size

    def check(self, J: SignatureOperator, tol: float = 1e-9) -> None:
        """Raise :class:`ConstraintViolation` unless ``eta* J eta = 2 Im lambda``."""
        J = _as_signature(J)
        if len(self) and self.etas.shape[1] != J.r:
            raise ConstraintViolation(f"etas have length {self.etas.shape[1]}, expected {J.r}")
        for k, (lam, eta) in enumerate(zip(self.lambdas, self.etas)):
            q = float(np.real(np.vdot(eta, J.vector * eta)))
            if abs(q - 2 * lam.imag) > tol:
                raise ConstraintViolation(f"eta_{k}: eta*J eta = {q:.6g} but 2 Im lambda = {2 * lam.imag:.6g}")

    def truncate(self, K: int) -> "DiscreteModelData":
        return DiscreteModelData(self.lambdas[:K], self.etas[:K])

    def tail_bound(self, K: int) -> float:
        """``||sum_{k >= K} eta_k eta_k*||``, the size of the discarded tail."""
        E = self.etas[K:]
        return nx.norm(E.T @ E.conj()) if E.size else 0.0


@dataclass(frozen=True, eq=False)
class ContinuousModelData:
    """Data ``a`` (non-decreasing) and ``xi`` (``r x p``) on ``[0, ell]``.

    `a` maps ``t`` to a real number and `xi` maps ``t`` to an ``r x p``
    matrix.  Samples with ``tr xi xi* = 0`` are allowed (vanishing density);
    otherwise the normalization ``tr xi xi* = 1`` is checked.
    """

    ell: float
    a: Callable[[float], float]
    xi: Callable[[float], np.ndarray]

    def __post_init__(self):
        if not self.ell > 0:
            raise ValueError("ell must be positive")

    @classmethod
    def from_samples(cls, t, a_values, xi_values) -> "ContinuousModelData":
        """Piecewise-linear interpolation of sampled ``a`` and ``xi`` on ``[0, t[-1]]``."""
        t = np.asarray(t, dtype=float)
        av = np.asarray(a_values, dtype=float)
        X = np.asarray(xi_values, dtype=np.complex128)
        if X.ndim == 2:
            X = X[:, :, None]
        if t[0] != 0 or np.any(np.diff(t) <= 0):
            raise ValueError("sample points must start at 0 and increase")
        flat = X.reshape(t.size, -1)

        def a(s):
            return float(np.interp(s, t, av))

        def xi(s):
            v = np.array([np.interp(s, t, flat[:, j].real) + 1j * np.interp(s, t, flat[:, j].imag)
                          for j in range(flat.shape[1])])
            return v.reshape(X.shape[1:])

        return cls(float(t[-1]), a, xi)

    @classmethod
    def from_density(cls, t, a_values, density_values, tol: float = 1e-10) -> "ContinuousModelData":
        """Factor sampled densities ``D(t) = xi(t) xi(t)*`` by eigendecomposition.

        The rank parameter ``p`` is the largest numerical rank of the samples
        (threshold `tol`).
        """
        D = np.asarray(density_values, dtype=np.complex128)
        facs = []
        for Dk in D:
            d, U = nx.hermitian_eig(Dk, tol=1e-8)
            facs.append((d, U))
        p = max(int(np.sum(d > tol)) for d, _ in facs)
        xis = []
        for d, U in facs:
            idx = np.argsort(d)[::-1][:p]
            xis.append(U[:, idx] * np.sqrt(np.clip(d[idx], 0, None))[None, :])
        return cls.from_samples(t, a_values, np.stack(xis))

    def sample(self, N: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Cell midpoints, ``a`` and ``xi`` there (shape ``(N, r, p)``)."""
        h = self.ell / N
        x = (np.arange(N) + 0.5) * h
        av = np.array([float(self.a(s)) for s in x])
        X = np.stack([np.atleast_2d(np.asarray(self.xi(s), dtype=np.complex128)) for s in x])
        if X.shape[1] == 1 and X.shape[2] > 1:
            # a 1-D xi of length r is a single column
            X = X.transpose(0, 2, 1)
        return x, av, X

    def check(self, N: int, tol: float = 1e-8) -> None:
        """Monotonicity of ``a`` and normalization of ``xi`` on the sample points."""
        x, av, X = self.sample(N)
        ends = [float(self.a(0.0)), *av, float(self.a(self.ell))]
        d = np.diff(ends)
        if np.any(d < -1e-12 * max(1.0, float(np.max(np.abs(ends))))):
            k = int(np.argmin(d))
            raise NotNondecreasing(f"a decreases near t = {([0.0, *x, self.ell])[k]:.6g}")
        tr = np.einsum("kij,kij->k", X.conj(), X).real
        bad = (np.abs(tr - 1) > tol) & (np.abs(tr) > tol)
        if np.any(bad):
            raise ConstraintViolation(f"tr xi xi* = {tr[bad][0]:.6g} at t = {x[bad][0]:.6g}")
        if X.shape[2] > X.shape[1]:
            raise ConstraintViolation("rank parameter p exceeds r")


@dataclass(frozen=True, eq=False)
class CombinedModel:
    """Discrete part (truncated to ``K`` terms) coupled with a continuous part on ``N`` cells."""

    discrete: DiscreteModelData | None = None
    continuous: ContinuousModelData | None = None
    N: int = 100
    K: int | None = None


def build_discrete_model(d: DiscreteModelData, J, K: int | None = None) -> Colligation:
    """Upper-triangular model with diagonal ``lambda_k`` and entries ``i eta_k* J eta_l``.

    Raises
    ------
    ConstraintViolation
        Naming the first ``eta_k`` with ``eta_k* J eta_k != 2 Im lambda_k``.
    """
    J = _as_signature(J)
    if K is not None:
        d = d.truncate(K)
    d.check(J)
    E = d.etas.T.reshape(J.r, len(d))
    G = E.conj().T @ (J.vector[:, None] * E)
    A = np.diag(d.lambdas) + 1j * np.triu(G, 1)
    return Colligation(A, E, J)


def _cells(cmd: ContinuousModelData, J: SignatureOperator, N: int):
    cmd.check(N)
    x, av, X = cmd.sample(N)
    if X.shape[1] != J.r:
        raise ConstraintViolation(f"xi has {X.shape[1]} rows, expected {J.r}")
    h = cmd.ell / N
    return x, av, X, h


def build_continuous_model(cmd: ContinuousModelData, J, N: int) -> Colligation:
    """Discretize the continuous model on ``N`` uniform cells.

    Coordinates are ``sqrt(h) u(x_j)`` at the cell midpoints ``x_j`` (``h =
    ell / N``).  Off-diagonal blocks are ``i h xi_j* J xi_k`` for ``k > j``;
    each diagonal block is ``a_j I + (i/2) h xi_j* J xi_j``, the half-cell
    share of the Volterra kernel, which keeps the colligation identity exact;
    the channel blocks are ``sqrt(h) xi_j``.

    Raises
    ------
    NotNondecreasing
        If ``a`` decreases on the sample points.
    """
    J = _as_signature(J)
    if N < 1:
        raise ValueError("N must be at least 1")
    _, av, X, h = _cells(cmd, J, N)
    p = X.shape[2]
    Xi = np.concatenate(list(X), axis=1)  # r x (N p)
    G = Xi.conj().T @ (J.vector[:, None] * Xi)
    blk = np.kron(np.arange(N), np.ones(p, dtype=int))
    upper = blk[:, None] < blk[None, :]
    same = blk[:, None] == blk[None, :]
    A = 1j * h * np.where(upper, G, 0) + 0.5j * h * np.where(same, G, 0) + np.diag(np.repeat(av, p))
    return Colligation(A, np.sqrt(h) * Xi, J)


def build_combined_model(cm: CombinedModel, J) -> Colligation:
    """Block model ``[[A_d, i Phi_d* J Phi_c], [0, A_c]]`` with channel ``[Phi_d, Phi_c]``."""
    J = _as_signature(J)
    parts = []
    if cm.discrete is not None and len(cm.discrete):
        parts.append(build_discrete_model(cm.discrete, J, cm.K))
    if cm.continuous is not None:
        parts.append(build_continuous_model(cm.continuous, J, cm.N))
    if not parts:
        return Colligation(np.zeros((0, 0)), np.zeros((J.r, 0)), J)
    if len(parts) == 1:
        return parts[0]
    d, c = parts
    G = 1j * d.Phi.conj().T @ (J.vector[:, None] * c.Phi)
    A = np.block([[d.A, G], [np.zeros((c.n, d.n)), c.A]])
    return Colligation(A, np.hstack([d.Phi, c.Phi]), J)


def model_charfn(cm: CombinedModel, J, z: complex, continuous: str = "cells", tol: float = 1e-10) -> np.ndarray:
    """Characteristic function of a model without forming its resolvent.

    The discrete part contributes the right-ordered product of
    ``I + (i / (z - lambda_k)) eta_k eta_k* J``.  The continuous part is
    either the product of the exact cell factors of the discretization
    (``continuous="cells"``, agreeing with the assembled model) or the
    solution at ``ell`` of ``dS/dx = (i / (z - a(x))) S xi xi* J``, ``S(0) = I``
    (``continuous="ode"``, the undiscretized limit).
    """
    J = _as_signature(J)
    Jv = J.vector
    S = np.eye(J.r, dtype=np.complex128)
    if cm.discrete is not None and len(cm.discrete):
        d = cm.discrete if cm.K is None else cm.discrete.truncate(cm.K)
        d.check(J)
        for lam, eta in zip(d.lambdas, d.etas):
            if abs(z - lam) <= 1e-14 * max(1.0, abs(lam)):
                raise PoleAt(lam)
            S = S @ (np.eye(J.r) + (1j / (z - lam)) * np.outer(eta, eta.conj() * Jv))
    if cm.continuous is None:
        return S
    if continuous == "cells":
        _, av, X, h = _cells(cm.continuous, J, cm.N)
        p = X.shape[2]
        for aj, xj in zip(av, X):
            D = aj * np.eye(p) + 0.5j * h * xj.conj().T @ (Jv[:, None] * xj)
            Y = nx.solve(D - z * np.eye(p), xj.conj().T * Jv[None, :])
            S = S @ (np.eye(J.r) - 1j * h * xj @ Y)
        return S
    if continuous == "ode":
        cmd = cm.continuous
        r = J.r

        def rhs(x, y):
            xi = np.atleast_2d(np.asarray(cmd.xi(x), dtype=np.complex128))
            if xi.shape[0] != r:
                xi = xi.T
            k = 1j / (z - float(cmd.a(x)))
            return (k * y.reshape(r, r) @ xi @ (xi.conj().T * Jv[None, :])).ravel()

        sol = solve_ivp(rhs, (0.0, cmd.ell), np.eye(r, dtype=np.complex128).ravel(),
                        method="DOP853", rtol=tol, atol=tol * 1e-2)
        if not sol.success:
            raise NoConvergence(0, float("nan"))
        return S @ sol.y[:, -1].reshape(r, r)
    raise ValueError(f"unknown continuous route {continuous!r}")


def spectral_model(c: Colligation, tol: float = 1e-10) -> Colligation:
    """Model colligation built from the spectral decomposition of ``Re A``.

    With ``Re A = sum_j t_j P_j`` and ``Phi P_j Phi* = L_j L_j*`` (rank
    revealing), the model is ``A_m = diag(t_j I) + (i/2) L* J L`` and
    ``Phi_m = L`` where ``L = [L_1 ... L_m]``.  It reproduces
    ``V(z) = 1/2 sum_j Phi P_j Phi* / (t_j - z)``.
    """
    R = nx.hermitian_part(c.A)
    t, U = nx.hermitian_eig(R)
    scale = max(1.0, float(np.max(np.abs(t))) if t.size else 0.0)
    groups: list[list[int]] = []
    for k in range(t.size):
        if groups and t[k] - t[groups[-1][0]] <= tol * scale:
            groups[-1].append(k)
        else:
            groups.append([k])
    gscale = max(nx.norm(c.Phi) ** 2, np.finfo(float).tiny)
    diag, cols = [], []
    for g in groups:
        B = c.Phi @ U[:, g]
        d, V = nx.hermitian_eig(B @ B.conj().T)
        keep = d > tol * gscale
        L = V[:, keep] * np.sqrt(d[keep])[None, :]
        cols.append(L)
        diag.extend([float(np.mean(t[g]))] * L.shape[1])
    L = np.hstack(cols) if cols else np.zeros((c.r, 0))
    A_m = np.diag(np.asarray(diag, dtype=float)) + 0.5j * L.conj().T @ (c.J.vector[:, None] * L)
    return Colligation(A_m, L, c.J)


def model_redundant_part(cm: CombinedModel, J, tol: float = 1e-10) -> SubspaceBasis:
    """Basis of the redundant part of the assembled combined model."""
    col = build_combined_model(cm, J)
    _, _, basis = principal_split(col, tol)
    return basis.complement()


def integration_operator(ell: float = 1.0, N: int = 200) -> Colligation:
    """Discretized ``(I f)(x) = i int_x^ell f`` with channel ``f -> int f``."""
    cmd = ContinuousModelData(ell, lambda t: 0.0, lambda t: np.ones((1, 1)))
    return build_continuous_model(cmd, SignatureOperator((1,)), N)


@dataclass(frozen=True)
class UnicellularEntry:
    sigma: float
    dim: int
    invariance_residual: float
    S: complex
    exponent: float


@dataclass(frozen=True)
class UnicellularReport:
    """Chain of cut-off subspaces with the divisor values at ``z``.

    ``exponent`` is ``Re(z log S / i)``, the length recovered from the divisor
    ``e^{i sigma / z}``.
    """

    entries: tuple[UnicellularEntry, ...]
    max_invariance_residual: float
    strictly_monotone: bool


def unicellular_demo(
    ell: float = 1.0,
    N: int = 200,
    sigmas: Sequence[float] | None = None,
    z: complex = 1j,
) -> UnicellularReport:
    """Invariant chain ``L_sigma`` of the discretized integration operator.

    ``L_sigma`` consists of the functions vanishing on ``[sigma, ell]``, that
    is, the span of the first ``round(sigma N / ell)`` cells.  Each is checked
    for invariance, and the projected characteristic function is evaluated
    at ``z``.
    """
    if N < 2:
        raise ValueError("N must be at least 2")
    c = integration_operator(ell, N)
    if sigmas is None:
        sigmas = ell * np.arange(1, 21) / 20
    A = c.A
    anorm = max(1.0, nx.norm(A))
    entries = []
    for s in sigmas:
        m = int(round(float(s) / ell * N))
        V = np.eye(N, dtype=np.complex128)[:, :m]
        res = nx.norm(A @ V - V @ (V.conj().T @ A @ V)) / anorm if m else 0.0
        Sv = complex(eval_S(project(c, V), z).S[0, 0]) if m else 1.0 + 0j
        expo = float(np.real(z * np.log(Sv) / 1j))
        entries.append(UnicellularEntry(float(s), m, res, Sv, expo))
    mods = [abs(e.S) for e in entries]
    mono = all(b > a for a, b in zip(mods, mods[1:]))
    return UnicellularReport(tuple(entries), max((e.invariance_residual for e in entries), default=0.0), mono)


@dataclass(frozen=True)
class CompletenessReport:
    """Trace comparison for a dissipative matrix.

    Attributes
    ----------
    sum_im_eigs, trace_im_A : float
    slack : float
        ``tr Im A - sum Im lambda_k``.
    complete : bool
        ``slack <= 1e-8``.
    departure_from_normality : float
        Frobenius norm of the strictly upper part of the Schur form.
    eigvec_rank : int
        Numerical rank of the eigenvector matrix.
    """

    sum_im_eigs: float
    trace_im_A: float
    slack: float
    complete: bool
    departure_from_normality: float
    eigvec_rank: int


def _im_part_checked(A: np.ndarray, tol: float) -> np.ndarray:
    ImA = nx.hermitian_part(nx.skew_part(A))
    lo = float(np.linalg.eigvalsh(ImA)[0]) if A.shape[0] else 0.0
    if lo < -tol:
        raise NotDissipative(f"smallest eigenvalue of Im A is {lo:.6g}")
    return ImA


def completeness_criterion(A, tol: float = 1e-10) -> CompletenessReport:
    """Compare ``sum Im lambda_k`` with ``tr Im A``.

    Raises
    ------
    NotDissipative
        If ``Im A`` has an eigenvalue below ``-tol``.
    """
    A = nx._square(A, "A")
    ImA = _im_part_checked(A, tol)
    lam = np.linalg.eigvals(A) if A.shape[0] else np.zeros(0, complex)
    s = float(np.sum(lam.imag))
    tr = float(np.trace(ImA).real)
    _, T = nx.schur(A)
    dep = float(np.linalg.norm(np.triu(T, 1)))
    if A.shape[0]:
        _, Vec = np.linalg.eig(A)
        rank = int(np.linalg.matrix_rank(Vec, tol=1e-8))
    else:
        rank = 0
    slack = tr - s
    return CompletenessReport(s, tr, slack, slack <= 1e-8, dep, rank)


def dissipative_embed(A, tol: float = 1e-10) -> Colligation:
    """Embed a dissipative matrix with ``J = I`` and channel ``ran(Im A)``.

    Raises
    ------
    NotDissipative
        If ``Im A`` has an eigenvalue below ``-tol``.
    """
    A = nx._square(A, "A")
    _im_part_checked(A, tol)
    n = A.shape[0]
    B = nx.hermitian_part((A - A.conj().T) / 1j)
    d, U = nx.hermitian_eig(B)
    bnorm = float(np.max(np.abs(d))) if n else 0.0
    keep = d > nx.ZERO_EIG_TOL * bnorm if bnorm > 0 else np.zeros(n, bool)
    Phi = np.sqrt(d[keep])[:, None] * U[:, keep].conj().T
    return Colligation(A, Phi.reshape(-1, n), SignatureOperator.identity(int(np.sum(keep))))
