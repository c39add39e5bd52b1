"""Characteristic functions of colligations.

Evaluation of ``S(z) = I - i Phi (A - z)^{-1} Phi* J``, the transfer function
``Q(z) = (A - z)^{-1} Phi* J`` and ``V(z) = 1/2 Phi (Re A - z)^{-1} Phi*``,
together with their Cayley link, J-form diagnostics, the Potapov-Ginzburg
transform and a time-domain simulator for the associated open system.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Literal

import numpy as np

from . import numerics as nx
from .colligation import Colligation, SignatureOperator, _as_signature
from .errors import NotJContractive, PoleAt, ShapeMismatch, Singular

__all__ = [
    "CharFnSample",
    "OpenSystemTrace",
    "eval_S",
    "eval_Q",
    "eval_V",
    "cayley",
    "j_form",
    "j_classify",
    "j_identity_residual",
    "potapov_ginzburg",
    "mobius_charfn",
    "simulate_open_system",
]


@dataclass(frozen=True, eq=False)
class CharFnSample:
    """Value of the characteristic function at one point.

    ``S`` is filled with NaN when ``regular`` is False.
    """

    z: complex
    S: np.ndarray
    regular: bool


def eval_Q(c: Colligation, z: complex) -> np.ndarray:
    """``Q(z) = (A - z I)^{-1} Phi* J``; raises :class:`Singular` on the spectrum."""
    rhs = c.Phi.conj().T * c.J.vector[None, :]
    return nx.solve(c.A - z * np.eye(c.n), rhs).reshape(c.n, c.r)


def eval_S(c: Colligation, z: complex) -> CharFnSample:
    """Evaluate ``S(z) = I - i Phi Q(z)``.

    Points numerically in the spectrum of ``A`` give ``regular=False``.
    """
    try:
        Q = eval_Q(c, z)
    except Singular:
        return CharFnSample(complex(z), np.full((c.r, c.r), np.nan + 0j), False)
    return CharFnSample(complex(z), np.eye(c.r) - 1j * c.Phi @ Q, True)


def eval_V(c: Colligation, z: complex) -> np.ndarray:
    """``V(z) = 1/2 Phi (Re A - z I)^{-1} Phi*``."""
    R = nx.hermitian_part(c.A)
    X = nx.solve(R - z * np.eye(c.n), c.Phi.conj().T).reshape(c.n, c.r)
    return 0.5 * c.Phi @ X


def cayley(
    X: np.ndarray,
    J: SignatureOperator,
    direction: Literal["S->V", "V->S"],
    form: Literal["left", "right"] = "left",
) -> np.ndarray:
    """Cayley link between ``S`` and ``V``.

    ``S -> V``: ``V = i (S - I)(S + I)^{-1} J``  (left)
    or ``i (S + I)^{-1}(S - I) J`` (right).

    ``V -> S``: ``S = (I - i V J)(I + i V J)^{-1}`` (left)
    or ``(I + i V J)^{-1}(I - i V J)`` (right).

    Raises
    ------
    Singular
        If the inverted factor is numerically singular.
    """
    J = _as_signature(J)
    X = np.asarray(X, dtype=np.complex128)
    r = J.r
    if X.shape != (r, r):
        raise ShapeMismatch(f"expected {r}x{r}, got {X.shape}")
    I = np.eye(r)
    Jm = J.matrix()
    if direction == "S->V":
        if form == "left":
            # (S - I)(S + I)^{-1} = ((S + I)^{-T} (S - I)^T)^T
            Y = nx.solve((X + I).T, (X - I).T).T
        else:
            Y = nx.solve(X + I, X - I)
        return 1j * Y @ Jm
    if direction == "V->S":
        P = I + 1j * X @ Jm
        M = I - 1j * X @ Jm
        if form == "left":
            return nx.solve(P.T, M.T).T
        return nx.solve(P, M)
    raise ValueError(f"unknown direction {direction!r}")


def j_form(S: np.ndarray, J: SignatureOperator) -> np.ndarray:
    """``S* J S - J`` (Hermitian)."""
    J = _as_signature(J)
    S = np.asarray(S, dtype=np.complex128)
    if S.shape != (J.r, J.r):
        raise ShapeMismatch(f"expected {J.r}x{J.r}, got {S.shape}")
    Jm = J.matrix()
    return nx.hermitian_part(S.conj().T @ Jm @ S - Jm)


def j_classify(S: np.ndarray, J: SignatureOperator, tol: float = 1e-9) -> str:
    """Classify ``S`` as ``J-unitary``, ``J-expansive``, ``J-contractive`` or ``indefinite``.

    Eigenvalues of ``S* J S - J`` within ``tol * (1 + ||S||^2)`` of zero
    count as zero.
    """
    F = j_form(S, J)
    if F.shape[0] == 0:
        return "J-unitary"
    ev = np.linalg.eigvalsh(F)
    thr = tol * (1 + nx.norm(S) ** 2)
    lo, hi = ev[0] >= -thr, ev[-1] <= thr
    if lo and hi:
        return "J-unitary"
    if lo:
        return "J-expansive"
    if hi:
        return "J-contractive"
    return "indefinite"


def j_identity_residual(c: Colligation, z: complex) -> float:
    """``||S* J S - J - ((z - conj z)/i) Q* Q||`` at a regular point."""
    Q = eval_Q(c, z)
    S = np.eye(c.r) - 1j * c.Phi @ Q
    Jm = c.J.matrix()
    lhs = S.conj().T @ Jm @ S - Jm
    rhs = ((z - np.conj(z)) / 1j) * (Q.conj().T @ Q)
    return nx.norm(lhs - rhs)


def potapov_ginzburg(S0: np.ndarray, J: SignatureOperator, tol: float = 1e-10) -> np.ndarray:
    """Potapov-Ginzburg transform ``W = (P - S0 Q)^{-1} (S0 P - Q)``.

    ``P`` and ``Q`` are the projections onto the +1 and -1 eigenspaces of
    ``J``.  A J-contractive ``S0`` maps to a contraction.

    Raises
    ------
    NotJContractive
        If the smallest eigenvalue of ``J - S0* J S0`` is below ``-tol``.
    """
    J = _as_signature(J)
    S0 = np.asarray(S0, dtype=np.complex128)
    if S0.shape != (J.r, J.r):
        raise ShapeMismatch(f"expected {J.r}x{J.r}, got {S0.shape}")
    if J.r == 0:
        return S0.copy()
    gap = np.linalg.eigvalsh(-j_form(S0, J))[0]
    if gap < -tol:
        raise NotJContractive(f"smallest eigenvalue of J - S0*JS0 is {gap:.3e}")
    P = np.diag((J.vector > 0).astype(float))
    Qp = np.diag((J.vector < 0).astype(float))
    return nx.solve(P - S0 @ Qp, S0 @ P - Qp)


def mobius_charfn(a: complex) -> Callable[[complex], complex]:
    """Return ``z -> (z - conj a) / (z - a)``.

    Raises
    ------
    ValueError
        If ``Im a = 0``.
    PoleAt
        When the returned evaluator is called at ``z = a``.
    """
    a = complex(a)
    if a.imag == 0:
        raise ValueError("Im a must be nonzero")

    def theta(z: complex) -> complex:
        if z == a:
            raise PoleAt(a)
        return (z - a.conjugate()) / (z - a)

    return theta


@dataclass(frozen=True, eq=False)
class OpenSystemTrace:
    """Sampled trajectory of the open system and its energy ledger.

    Attributes
    ----------
    t : ndarray, shape (K+1,)
    phi_in, h, phi_out : ndarray, shape (K+1, r), (K+1, n), (K+1, r)
    energy : ndarray, shape (K+1,)
        ``<h, h>`` along the trajectory.
    flux : ndarray, shape (K+1,)
        Cumulative integral of ``<J phi_in, phi_in> - <J phi_out, phi_out>``.
    ledger : ndarray, shape (K,)
        Per-step residual ``Delta<h,h> - integral of flux``.
    """

    t: np.ndarray
    phi_in: np.ndarray
    h: np.ndarray
    phi_out: np.ndarray
    energy: np.ndarray
    flux: np.ndarray
    ledger: np.ndarray

    @property
    def drift(self) -> float:
        """Largest cumulative mismatch ``|E(t) - E(0) - flux(t)|``."""
        return float(np.max(np.abs(self.energy - self.energy[0] - self.flux)))


def simulate_open_system(
    c: Colligation,
    phi_in: Callable[[float], np.ndarray],
    h0: np.ndarray,
    step: float,
    T: float,
) -> OpenSystemTrace:
    """Integrate ``i h' + A h = Phi* J phi_in`` with output ``phi_out = phi_in - i Phi h``.

    Classical fourth-order Runge-Kutta with fixed step.  The energy ledger
    integrates the flux on each step by Simpson's rule; the midpoint state
    comes from cubic Hermite interpolation of the computed endpoints and
    their derivatives, so the audit is fourth order like the integrator.

    Parameters
    ----------
    c : Colligation
    phi_in : callable
        Input signal ``t -> C^r``.
    h0 : array_like, shape (n,)
        Initial state.
    step, T : float
        Step size and final time.
    """
    if step <= 0:
        raise ValueError("step must be positive")
    K = max(1, int(round(T / step)))
    dt = T / K
    A, Phi = c.A, c.Phi
    Jv = c.J.vector
    PJ = Phi.conj().T * Jv[None, :]

    def u(t):
        return np.asarray(phi_in(t), dtype=np.complex128).reshape(c.r)

    def rhs(t, h):
        return 1j * (A @ h - PJ @ u(t))

    def flux(t, h):
        a = u(t)
        b = a - 1j * Phi @ h
        return float(np.real(np.vdot(a, Jv * a) - np.vdot(b, Jv * b)))

    t = np.linspace(0.0, K * dt, K + 1)
    H = np.zeros((K + 1, c.n), dtype=np.complex128)
    H[0] = np.asarray(h0, dtype=np.complex128)
    U_in = np.zeros((K + 1, c.r), dtype=np.complex128)
    U_in[0] = u(0.0)
    ledger = np.zeros(K)
    flux_cum = np.zeros(K + 1)
    f0 = rhs(t[0], H[0])
    for k in range(K):
        tk, hk = t[k], H[k]
        k1 = f0
        k2 = rhs(tk + dt / 2, hk + dt / 2 * k1)
        k3 = rhs(tk + dt / 2, hk + dt / 2 * k2)
        k4 = rhs(tk + dt, hk + dt * k3)
        h1 = hk + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        f1 = rhs(tk + dt, h1)
        hm = 0.5 * (hk + h1) + dt / 8 * (f0 - f1)
        q = dt / 6 * (flux(tk, hk) + 4 * flux(tk + dt / 2, hm) + flux(tk + dt, h1))
        flux_cum[k + 1] = flux_cum[k] + q
        ledger[k] = (np.vdot(h1, h1).real - np.vdot(hk, hk).real) - q
        H[k + 1] = h1
        U_in[k + 1] = u(tk + dt)
        f0 = f1
    out = U_in - 1j * H @ Phi.T
    energy = np.einsum("ij,ij->i", H.conj(), H).real
    return OpenSystemTrace(t, U_in, H, out, energy, flux_cum, ledger)
