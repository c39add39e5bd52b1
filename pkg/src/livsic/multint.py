"""Multiplicative (product) integrals.

The Stieltjes-type integral of a scalar function ``f`` against a matrix
weight ``H`` on ``[a, b]`` is the limit of right-ordered products

    e^{f(xi_1) dH_1} e^{f(xi_2) dH_2} ... e^{f(xi_m) dH_m}

as the partition is refined.  For a weight with density ``M`` the integral
with ``f = 1`` is the value at ``b`` of the solution of ``W' = W M``,
``W(a) = I``.

Weights come in two concrete forms: sampled grids (partitions are subsets
of the grid indices and nothing is interpolated) and refinable weights
given by a density or by piecewise-linear interpolation of the samples.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import solve_ivp

from . import numerics as nx
from .errors import HypothesisViolated, NoConvergence, ShapeMismatch

__all__ = [
    "StieltjesWeight",
    "ProductIntegralResult",
    "BoundReport",
    "HellyReport",
    "partial_product",
    "multint_stieltjes",
    "multint_lebesgue",
    "lebesgue_path",
    "bound_suite",
    "split_and_inverse_identities",
    "helly_harness",
]

# 4-point Gauss-Legendre rule on [-1, 1]
_GL_X, _GL_W = np.polynomial.legendre.leggauss(4)


def _eval_f(f, t: np.ndarray) -> np.ndarray:
    """Evaluate a scalar function on an array of points."""
    t = np.asarray(t, dtype=float)
    if f is None:
        return np.ones_like(t, dtype=np.complex128)
    if not callable(f):
        return np.full(t.shape, complex(f))
    try:
        v = np.asarray(f(t), dtype=np.complex128)
        if v.shape == t.shape:
            return v
    except (TypeError, ValueError):
        pass
    return np.array([complex(f(float(s))) for s in t.ravel()]).reshape(t.shape)


def _eval_density(M: Callable, t: np.ndarray, r: int | None = None) -> np.ndarray:
    """Evaluate a matrix density on an array of points, shape (m, r, r)."""
    t = np.asarray(t, dtype=float)
    try:
        v = np.asarray(M(t), dtype=np.complex128)
        if v.ndim == 3 and v.shape[0] == t.size and v.shape[1] == v.shape[2]:
            return v
    except (TypeError, ValueError, IndexError):
        pass
    out = [np.atleast_2d(np.asarray(M(float(s)), dtype=np.complex128)) for s in t]
    return np.stack(out) if out else np.zeros((0, r or 0, r or 0), complex)


def _ordered_product(X: np.ndarray) -> np.ndarray:
    """Right-ordered product ``X[0] X[1] ... X[m-1]`` by pairwise reduction."""
    r = X.shape[-1]
    if X.shape[0] == 0:
        return np.eye(r, dtype=np.complex128)
    while X.shape[0] > 1:
        if X.shape[0] % 2:
            X = np.concatenate([X, np.eye(r, dtype=np.complex128)[None]], axis=0)
        X = np.matmul(X[0::2], X[1::2])
    return X[0]


def _products(fv: np.ndarray, dH: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Right-ordered product of ``e^{f dH}`` and left-ordered product of ``e^{-f dH}``."""
    X = fv[:, None, None] * dH
    P = _ordered_product(nx.expm(X))
    Pinv = _ordered_product(nx.expm(-X)[::-1])
    return P, Pinv


@dataclass(frozen=True, eq=False)
class StieltjesWeight:
    """Matrix weight on ``[grid[0], grid[-1]]``.

    Parameters
    ----------
    grid : ndarray, shape (N+1,)
        Strictly increasing sample points.
    H : ndarray, shape (N+1, r, r)
        Samples of the weight.
    density : callable, optional
        ``t -> M(t)``; when given, increments are integrals of ``M``
        (vectorized callables returning shape ``(m, r, r)`` are used as such).
    interpolate : bool
        Treat ``H`` as piecewise linear between samples.
    """

    grid: np.ndarray
    H: np.ndarray
    density: Callable | None = None
    interpolate: bool = False

    def __post_init__(self):
        g = np.asarray(self.grid, dtype=float)
        H = np.asarray(self.H, dtype=np.complex128)
        if H.ndim == 1:
            H = H[:, None, None]
        if g.ndim != 1 or g.size < 2:
            raise ShapeMismatch("grid needs at least two points")
        if np.any(np.diff(g) <= 0):
            raise ValueError("grid must be strictly increasing")
        if H.shape[0] != g.size or H.shape[1] != H.shape[2]:
            raise ShapeMismatch(f"H must have shape ({g.size}, r, r), got {H.shape}")
        if not (np.all(np.isfinite(g)) and np.all(np.isfinite(H))):
            raise ValueError("weight samples must be finite")
        object.__setattr__(self, "grid", g)
        object.__setattr__(self, "H", H)

    @property
    def a(self) -> float:
        return float(self.grid[0])

    @property
    def b(self) -> float:
        return float(self.grid[-1])

    @property
    def r(self) -> int:
        return self.H.shape[1]

    @property
    def refinable(self) -> bool:
        return self.density is not None or self.interpolate

    @classmethod
    def from_density(cls, M: Callable, a: float, b: float, samples: int = 65) -> "StieltjesWeight":
        """Weight ``H(t) = int_a^t M`` sampled on a uniform grid."""
        g = np.linspace(a, b, samples)
        dH = _gauss_increments(M, g)
        H = np.concatenate([np.zeros((1,) + dH.shape[1:], complex), np.cumsum(dH, axis=0)])
        return cls(g, H, density=M)

    @classmethod
    def from_function(cls, Hf: Callable, grid: Sequence[float], interpolate: bool = False):
        """Sample ``Hf`` on `grid`."""
        g = np.asarray(grid, dtype=float)
        H = np.stack([np.atleast_2d(np.asarray(Hf(float(t)), dtype=np.complex128)) for t in g])
        return cls(g, H, interpolate=interpolate)

    def increments(self, pts: np.ndarray) -> np.ndarray:
        """``H(pts[j+1]) - H(pts[j])`` for a refinable weight."""
        pts = np.asarray(pts, dtype=float)
        if self.density is not None:
            return _gauss_increments(self.density, pts)
        if not self.interpolate:
            raise ValueError("sampled weight cannot be evaluated off the grid")
        Hp = self.at(pts)
        return Hp[1:] - Hp[:-1]

    def at(self, pts: np.ndarray) -> np.ndarray:
        """Piecewise-linear interpolation of the samples."""
        pts = np.asarray(pts, dtype=float)
        flat = self.H.reshape(self.H.shape[0], -1)
        re = np.stack([np.interp(pts, self.grid, flat[:, j].real) for j in range(flat.shape[1])], -1)
        im = np.stack([np.interp(pts, self.grid, flat[:, j].imag) for j in range(flat.shape[1])], -1)
        return (re + 1j * im).reshape(pts.size, self.r, self.r)

    def restrict(self, lo: float, hi: float) -> "StieltjesWeight":
        """The same weight on ``[lo, hi]``, inserting endpoints by interpolation."""
        if not (self.a <= lo < hi <= self.b):
            raise ValueError("restriction interval outside the weight's support")
        inner = self.grid[(self.grid > lo) & (self.grid < hi)]
        g = np.concatenate([[lo], inner, [hi]])
        if self.density is not None:
            base = _gauss_increments(self.density, np.array([self.a, lo])) if lo > self.a else None
            dH = _gauss_increments(self.density, g)
            H0 = base[0] if base is not None else np.zeros((self.r, self.r), complex)
            H = np.concatenate([H0[None], H0 + np.cumsum(dH, axis=0)])
            return StieltjesWeight(g, H, density=self.density)
        on_grid = np.isin([lo, hi], self.grid).all()
        if not (on_grid or self.interpolate):
            raise ValueError("sampled weight can only be split at grid points")
        return StieltjesWeight(g, self.at(g), interpolate=self.interpolate)

    def lipschitz(self) -> float:
        """Largest difference quotient ``||dH|| / dt`` over the grid."""
        dH = np.diff(self.H, axis=0)
        nrm = np.linalg.norm(dH, ord=2, axis=(1, 2))
        return float(np.max(nrm / np.diff(self.grid)))


def _gauss_increments(M: Callable, pts: np.ndarray) -> np.ndarray:
    """Integrals of `M` over consecutive cells by 4-point Gauss-Legendre."""
    lo, hi = pts[:-1], pts[1:]
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    nodes = (mid[:, None] + half[:, None] * _GL_X[None, :]).ravel()
    vals = _eval_density(M, nodes)
    r = vals.shape[-1]
    vals = vals.reshape(lo.size, _GL_X.size, r, r)
    return np.einsum("k,mkij->mij", _GL_W, vals) * half[:, None, None]


def _rule_points(lo: np.ndarray, hi: np.ndarray, xi: str) -> np.ndarray:
    if xi == "mid":
        return 0.5 * (lo + hi)
    if xi == "left":
        return lo
    if xi == "right":
        return hi
    raise ValueError(f"unknown intermediate-point rule {xi!r}")


def partial_product(f, w: StieltjesWeight, partition: Sequence[int] | None = None, xi: str = "mid") -> np.ndarray:
    """Integral product over a partition made of grid indices.

    Parameters
    ----------
    f : callable, scalar or None
        Scalar integrand (None means 1).
    w : StieltjesWeight
    partition : sequence of int, optional
        Increasing grid indices; defaults to the whole grid.
    xi : {"mid", "left", "right"}
        Intermediate-point rule.
    """
    idx = np.arange(w.grid.size) if partition is None else np.asarray(partition, dtype=int)
    if np.any(np.diff(idx) <= 0) or idx[0] < 0 or idx[-1] >= w.grid.size:
        raise ValueError("partition must be increasing grid indices")
    t = w.grid[idx]
    dH = w.H[idx[1:]] - w.H[idx[:-1]]
    fv = _eval_f(f, _rule_points(t[:-1], t[1:], xi))
    X = fv[:, None, None] * dH
    return _ordered_product(nx.expm(X))


@dataclass(frozen=True, eq=False)
class ProductIntegralResult:
    """Outcome of a product integration.

    Attributes
    ----------
    value : ndarray
        Right-ordered product at the accepted partition.
    inverse : ndarray or None
        Left-ordered product of ``e^{-f dH}`` on the same partition.
    levels : int
        Refinement level at which the Cauchy criterion was met.
    residual : float
        Cauchy-criterion residual at termination.
    points, f_values, increments : ndarray or None
        The accepted partition, integrand values and weight increments.
    """

    value: np.ndarray
    inverse: np.ndarray | None
    levels: int
    residual: float
    points: np.ndarray | None = None
    f_values: np.ndarray | None = None
    increments: np.ndarray | None = None


def _index_level(N: int, k: int) -> np.ndarray:
    return np.unique(np.round(np.linspace(0, N, 2**k + 1)).astype(int))


def multint_stieltjes(
    f,
    w: StieltjesWeight,
    tol: float = 1e-10,
    max_levels: int = 20,
    xi: str = "mid",
) -> ProductIntegralResult:
    """Multiplicative Stieltjes integral by dyadic refinement.

    Level ``k`` is the dyadic partition ``T_k`` into ``2^k`` cells (grid
    indices for sampled weights).  Refinement stops at the first ``k`` with

    * ``||P(T_k) - P(T_{k+1})|| <= tol`` for the product,
    * the same for the left-ordered inverse product, and
    * ``||P(T'_k) - P(T_{k+1})|| <= tol`` where the staggered partition
      ``T'_k`` keeps the endpoints and the points of ``T_{k+1}`` not in
      ``T_k``.

    The staggered comparison makes the criterion sensitive to the choice of
    partition, not only to nested refinement.  The finer product is
    returned.

    Raises
    ------
    NoConvergence
        If the criterion is not met within `max_levels` (or before a sampled
        grid runs out of points).
    """
    last = np.inf
    done = 0
    for k in range(max_levels + 1):
        if w.refinable:
            m = 2 ** (k + 1)
            pts = np.linspace(w.a, w.b, m + 1)
            dH = w.increments(pts)
        else:
            N = w.grid.size - 1
            idx = _index_level(N, k + 1)
            if idx.size == _index_level(N, k).size:
                break
            pts = w.grid[idx]
            dH = w.H[idx[1:]] - w.H[idx[:-1]]
            m = idx.size - 1
        fine_f = _eval_f(f, _rule_points(pts[:-1], pts[1:], xi))
        P, Pinv = _products(fine_f, dH)

        if w.refinable:
            c_pts = pts[0::2]
            c_dH = dH[0::2] + dH[1::2]
            s_cut = np.concatenate([[0], np.arange(1, m, 2), [m]])
        else:
            coarse = _index_level(N, k)
            c_pos = np.searchsorted(idx, coarse)
            c_pts = pts[c_pos]
            c_dH = w.H[coarse[1:]] - w.H[coarse[:-1]]
            new = np.setdiff1d(np.arange(idx.size), c_pos)
            s_cut = np.unique(np.concatenate([[0], new, [m]]))
        cum = np.concatenate([np.zeros((1,) + dH.shape[1:], complex), np.cumsum(dH, axis=0)])
        s_pts = pts[s_cut]
        s_dH = cum[s_cut[1:]] - cum[s_cut[:-1]]
        if not w.refinable:
            s_dH = w.H[idx[s_cut[1:]]] - w.H[idx[s_cut[:-1]]]

        Pc, Pc_inv = _products(_eval_f(f, _rule_points(c_pts[:-1], c_pts[1:], xi)), c_dH)
        Ps, _ = _products(_eval_f(f, _rule_points(s_pts[:-1], s_pts[1:], xi)), s_dH)
        res = max(nx.norm(Pc - P), nx.norm(Pc_inv - Pinv), nx.norm(Ps - P))
        last, done = res, k + 1
        if res <= tol:
            return ProductIntegralResult(P, Pinv, k, res, pts, fine_f, dH)
    raise NoConvergence(done, last)


def multint_lebesgue(
    M: Callable,
    a: float,
    b: float,
    method: str = "product",
    tol: float = 1e-8,
    max_levels: int = 20,
) -> ProductIntegralResult:
    """Multiplicative Lebesgue integral of a matrix density.

    ``method="product"`` refines Stieltjes products of the cumulative
    integral of `M`; ``method="ode"`` solves ``W' = W M``, ``W(a) = I`` with
    an adaptive eighth-order Runge-Kutta pair.
    """
    if method == "product":
        w = StieltjesWeight.from_density(M, a, b)
        return multint_stieltjes(None, w, tol=tol, max_levels=max_levels)
    if method == "ode":
        W, nsteps = _ode_solve(M, a, b, tol, None)
        return ProductIntegralResult(W[-1], None, nsteps, float("nan"))
    raise ValueError(f"unknown method {method!r}")


def _ode_solve(M: Callable, a: float, b: float, tol: float, t_eval):
    M0 = np.atleast_2d(np.asarray(_eval_density(M, np.array([a]))[0]))
    r = M0.shape[0]

    def rhs(t, y):
        Mt = np.atleast_2d(np.asarray(_eval_density(M, np.array([t]))[0]))
        return (y.reshape(r, r) @ Mt).ravel()

    sol = solve_ivp(
        rhs,
        (a, b),
        np.eye(r, dtype=np.complex128).ravel(),
        method="DOP853",
        rtol=tol,
        atol=tol * 1e-3,
        t_eval=t_eval,
    )
    if not sol.success:
        raise NoConvergence(0, float("nan"))
    W = sol.y.T.reshape(-1, r, r)
    # Invertibility safeguard on every returned step.
    det = np.abs(np.linalg.det(W))
    if not np.all(np.isfinite(det)) or np.any(det == 0):
        raise NoConvergence(sol.t.size, float("inf"))
    return W, sol.t.size


def lebesgue_path(M: Callable, a: float, b: float, t_eval: Sequence[float], tol: float = 1e-8) -> np.ndarray:
    """Solution ``W(t)`` of ``W' = W M``, ``W(a) = I`` at the points `t_eval`."""
    W, _ = _ode_solve(M, a, b, tol, np.asarray(t_eval, dtype=float))
    return W


@dataclass(frozen=True)
class BoundReport:
    """The three product-integral bounds and their slacks.

    ``rho`` is ``sum |f(xi_j)| ||dH_j||`` on the accepted partition, and the
    slacks are ``e^rho - ||W||``, ``rho e^rho - ||W - I||`` and
    ``rho^2 e^rho / 2 - ||W - I - sum f dH||``.
    """

    rho: float
    norm_W: float
    norm_W_minus_I: float
    second_order: float
    slack_norm: float
    slack_first: float
    slack_second: float

    @property
    def min_slack(self) -> float:
        return min(self.slack_norm, self.slack_first, self.slack_second)


def bound_suite(f, w: StieltjesWeight, tol: float = 1e-10, max_levels: int = 20) -> BoundReport:
    """Check ``||W|| <= e^rho``, ``||W - I|| <= rho e^rho`` and the second-order bound."""
    res = multint_stieltjes(f, w, tol=tol, max_levels=max_levels)
    fv, dH, W = res.f_values, res.increments, res.value
    rho = float(np.sum(np.abs(fv) * np.linalg.norm(dH, ord=2, axis=(1, 2))))
    I = np.eye(w.r)
    additive = np.einsum("m,mij->ij", fv, dH)
    e = np.exp(rho)
    nW = nx.norm(W)
    n1 = nx.norm(W - I)
    n2 = nx.norm(W - I - additive)
    return BoundReport(rho, nW, n1, n2, float(e - nW), float(rho * e - n1), float(0.5 * rho**2 * e - n2))


def split_and_inverse_identities(
    f, w: StieltjesWeight, c: float, tol: float = 1e-10, max_levels: int = 20
) -> tuple[float, float]:
    """Residuals of interval additivity and of the inverse identity.

    Returns
    -------
    split : float
        ``||int_a^b - int_a^c int_c^b||``.
    inverse : float
        ``||(int_a^b e^{f dH})^{-1} - left-ordered int_a^b e^{-f dH}||``.
    """
    if not (w.a < c < w.b):
        raise ValueError("split point must lie strictly inside the interval")
    full = multint_stieltjes(f, w, tol=tol, max_levels=max_levels)
    left = multint_stieltjes(f, w.restrict(w.a, c), tol=tol, max_levels=max_levels)
    right = multint_stieltjes(f, w.restrict(c, w.b), tol=tol, max_levels=max_levels)
    split = nx.norm(full.value - left.value @ right.value)
    inverse = nx.norm(np.linalg.inv(full.value) - full.inverse)
    return split, inverse


@dataclass(frozen=True)
class HellyReport:
    """Distances ``||int e^{f_n dH_n} - int e^{f dH}||`` along a sequence."""

    residuals: tuple[float, ...]
    monotone: bool
    final_below_tol: bool
    K: float
    L: float


def _sup_f(f, w: StieltjesWeight) -> float:
    g = w.grid
    t = np.concatenate([g, 0.5 * (g[1:] + g[:-1])])
    return float(np.max(np.abs(_eval_f(f, t))))


def helly_harness(
    f_seq: Sequence,
    w_seq: Sequence[StieltjesWeight],
    f,
    w: StieltjesWeight,
    tol: float = 1e-10,
    K: float | None = None,
    L: float | None = None,
) -> HellyReport:
    """Convergence of product integrals under uniformly bounded data.

    The hypotheses ``sup |f_n| <= K`` and ``Lip(H_n) <= L`` are checked on
    the samples; by default ``K`` and ``L`` are twice the corresponding
    quantities of the limit data (at least 2).

    Raises
    ------
    HypothesisViolated
        If some member of the sequence breaks a uniform bound.
    """
    if len(f_seq) != len(w_seq):
        raise ValueError("f_seq and w_seq must have equal length")
    K = 2 * max(1.0, _sup_f(f, w)) if K is None else K
    L = 2 * max(1.0, w.lipschitz()) if L is None else L
    ref = multint_stieltjes(f, w, tol=tol).value
    out = []
    for n, (fn, wn) in enumerate(zip(f_seq, w_seq)):
        kn = _sup_f(fn, wn)
        if kn > K:
            raise HypothesisViolated(f"sup|f_{n}| = {kn:.3e} exceeds K = {K:.3e}")
        ln = wn.lipschitz()
        if ln > L:
            raise HypothesisViolated(f"Lip(H_{n}) = {ln:.3e} exceeds L = {L:.3e}")
        out.append(nx.norm(multint_stieltjes(fn, wn, tol=tol).value - ref))
    mono = all(b <= a + 10 * tol for a, b in zip(out, out[1:]))
    final = bool(out) and out[-1] <= 10 * tol
    return HellyReport(tuple(out), mono, final, K, L)
