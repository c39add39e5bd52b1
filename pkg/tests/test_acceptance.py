"""Acceptance criteria 1-9.

Each test prints one PASS/FAIL line with its measured quantities and
runtime.  Run directly (``python tests/test_acceptance.py``) for the summary
lines alone.
"""

import contextlib
import sys
import time
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from livsic import numerics as nx
from livsic.charfn import eval_S, j_identity_residual, potapov_ginzburg, simulate_open_system
from livsic.colligation import embed, equivalence_residual, is_simple, product, unitary_equivalence, validate
from livsic.errors import NoConvergence
from livsic.factorize import check_constraints, eval_product, potapov_factorize
from livsic.models import (
    CombinedModel,
    ContinuousModelData,
    DiscreteModelData,
    build_combined_model,
    build_continuous_model,
    build_discrete_model,
    completeness_criterion,
    dissipative_embed,
    integration_operator,
    model_charfn,
    spectral_model,
    unicellular_demo,
)
from livsic.multint import (
    StieltjesWeight,
    bound_suite,
    multint_lebesgue,
    multint_stieltjes,
    split_and_inverse_identities,
)

from conftest import rand_colligation, rand_complex, rand_hermitian

SEED = 20240601


def report(name, checks, elapsed, limit, capsys=None):
    """Print one summary line and return overall status."""
    checks = dict(checks)
    checks[f"runtime {elapsed:.2f}s < {limit:g}s"] = elapsed < limit
    ok = all(checks.values())
    detail = "; ".join(k if v else f"NOT MET: {k}" for k, v in checks.items())
    line = f"{name}: {'PASS' if ok else 'FAIL'} ({detail})"
    # bypass pytest capture so the line always appears
    ctx = capsys.disabled() if capsys is not None else contextlib.nullcontext()
    with ctx:
        print(f"\n{line}" if capsys is not None else line, flush=True)
    return ok, line


def off_axis(rng, cs, k):
    """``k`` points at distance at least 0.5 beyond the imaginary spread of every colligation."""
    off = max(nx.norm(nx.skew_part(c.A)) for c in cs) + 0.5
    return rng.normal(size=k) * 3 + 1j * (off + rng.exponential(1.0, size=k)) * rng.choice([1, -1], size=k)


def test_ac1_colligation_law(capsys):
    rng = np.random.default_rng(SEED + 1)
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(100):
        n = int(rng.integers(1, 13))
        c = embed(rand_complex(rng, n, n))
        worst = max(worst, validate(c).colligation_residual / c.scale())
    dt = time.perf_counter() - t0
    ok, line = report("AC1 colligation law", {f"max residual/scale {worst:.2e} <= 1e-10": worst <= 1e-10}, dt, 5, capsys)
    assert ok, line


def test_ac2_multiplicativity(capsys):
    rng = np.random.default_rng(SEED + 2)
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(50):
        r = int(rng.integers(1, 4))
        J = tuple(int(s) for s in rng.choice([1, -1], size=r))
        c1 = rand_colligation(rng, int(rng.integers(1, 7)), r, J)
        c2 = rand_colligation(rng, int(rng.integers(1, 7)), r, J)
        p = product(c1, c2)
        for z in off_axis(rng, [c1, c2], 10):
            worst = max(worst, nx.norm(eval_S(p, z).S - eval_S(c1, z).S @ eval_S(c2, z).S))
    dt = time.perf_counter() - t0
    ok, line = report("AC2 multiplicativity", {f"max error {worst:.2e} <= 1e-9": worst <= 1e-9}, dt, 10, capsys)
    assert ok, line


def _min_eig(M):
    return float(np.min(np.linalg.eigvalsh(0.5 * (M + M.conj().T))))


def test_ac3_j_property(capsys):
    rng = np.random.default_rng(SEED + 3)
    t0 = time.perf_counter()
    sign_fail = 0
    worst_id = 0.0
    for _ in range(50):
        r = int(rng.integers(1, 4))
        c = rand_colligation(rng, int(rng.integers(1, 9)), r)
        Jm = c.J.matrix()
        for z in off_axis(rng, [c], 40):
            S = eval_S(c, z).S
            s = np.sign(z.imag)
            if s * _min_eig(S.conj().T @ Jm @ S - Jm) < -1e-9 or s * _min_eig(S @ Jm @ S.conj().T - Jm) < -1e-9:
                sign_fail += 1
            worst_id = max(worst_id, j_identity_residual(c, z))
    dt = time.perf_counter() - t0
    ok, line = report(
        "AC3 J-property",
        {f"sign violations {sign_fail} == 0": sign_fail == 0, f"max identity residual {worst_id:.2e} <= 1e-9": worst_id <= 1e-9},
        dt,
        30,
        capsys,
    )
    assert ok, line


def test_ac4_potapov(capsys):
    rng = np.random.default_rng(SEED + 4)
    t0 = time.perf_counter()
    rec = eta = gram = 0.0
    slack = np.inf
    for _ in range(50):
        n, r = int(rng.integers(1, 13)), int(rng.integers(1, 4))
        c = rand_colligation(rng, n, r)
        bp = potapov_factorize(c)
        rep = check_constraints(bp, c.Phi)
        eta, gram, slack = max(eta, rep.eta_residual), max(gram, rep.gram_residual), min(slack, rep.trace_slack)
        for z in off_axis(rng, [c], 10):
            rec = max(rec, nx.norm(eval_S(c, z).S - eval_product(bp, z)))
    dt = time.perf_counter() - t0
    ok, line = report(
        "AC4 Potapov factorization",
        {
            f"reconstruction {rec:.2e} <= 1e-8": rec <= 1e-8,
            f"eta*J eta residual {eta:.2e} <= 1e-9": eta <= 1e-9,
            f"Gram residual {gram:.2e} <= 1e-8": gram <= 1e-8,
            f"trace slack {slack:.2e} >= -1e-9": slack >= -1e-9,
        },
        dt,
        20,
        capsys,
    )
    assert ok, line


def _density(rng, r):
    C0, C1, C2 = ((rng.normal(size=(r, r)) + 1j * rng.normal(size=(r, r))) / (2 * r) for _ in range(3))
    w = rng.uniform(0.5, 3)

    def M(t):
        t = np.asarray(t, dtype=float)[..., None, None]
        return C0 + np.sin(w * t) * C1 + t**2 * C2

    return M


def test_ac5_multint(capsys):
    rng = np.random.default_rng(SEED + 5)
    tol = 1e-8
    t0 = time.perf_counter()
    agree = split = inv = 0.0
    slack = np.inf
    for _ in range(20):
        M = _density(rng, int(rng.integers(1, 4)))
        W_ode = multint_lebesgue(M, 0, 1, method="ode", tol=tol).value
        W_prod = multint_lebesgue(M, 0, 1, method="product", tol=tol).value
        agree = max(agree, nx.norm(W_ode - W_prod))
        w = StieltjesWeight.from_density(M, 0, 1)
        slack = min(slack, bound_suite(1, w, tol=tol).min_slack)
        s, i = split_and_inverse_identities(1, w, float(rng.uniform(0.2, 0.8)), tol=tol)
        split, inv = max(split, s), max(inv, i)
    g = np.linspace(0, 1, 65)
    N = np.array([[0, 1], [0, 0]])
    H = np.array([np.zeros((2, 2)) if t < 0.5 else (N if t == 0.5 else N + N.T) for t in g])
    try:
        multint_stieltjes(1, StieltjesWeight(g, H), tol=1e-10)
        jump = False
    except NoConvergence:
        jump = True
    dt = time.perf_counter() - t0
    ok, line = report(
        "AC5 multiplicative integral",
        {
            f"ODE vs product {agree:.2e} <= {10 * tol:g}": agree <= 10 * tol,
            f"min bound slack {slack:.2e} >= -1e-10": slack >= -1e-10,
            f"split {split:.2e} and inverse {inv:.2e} <= {10 * tol:g}": max(split, inv) <= 10 * tol,
            "jump weight raises NoConvergence": jump,
        },
        dt,
        60,
        capsys,
    )
    assert ok, line


def test_ac6_integration_operator(capsys):
    t0 = time.perf_counter()
    Ns = [50, 100, 200, 400]
    errs = [abs(eval_S(integration_operator(1.0, N), 1j).S[0, 0] - np.e) for N in Ns]
    ratios = [a / b for a, b in zip(errs, errs[1:])]
    dt = time.perf_counter() - t0
    ok, line = report(
        "AC6 integration operator",
        {
            f"|S(i) - e| at N=400 {errs[-1]:.2e} <= 1e-2": errs[-1] <= 1e-2,
            f"max N*error {max(n * e for n, e in zip(Ns, errs)):.2e} <= 10": max(n * e for n, e in zip(Ns, errs)) <= 10,
            "error ratios " + ", ".join(f"{q:.3f}" for q in ratios) + " in [1.7, 2.3]": all(1.7 <= q <= 2.3 for q in ratios),
        },
        dt,
        10,
        capsys,
    )
    assert ok, line


def _random_continuous(rng, r):
    knots = np.sort(rng.uniform(0, 1, 4))
    vals = np.cumsum(rng.uniform(0, 1, 4))
    V0, V1 = rand_complex(rng, r, 1), rand_complex(rng, r, 1)

    def xi(t):
        v = V0 + np.cos(3 * t) * V1
        return v / np.linalg.norm(v)

    return ContinuousModelData(1.0, lambda t: float(np.interp(t, knots, vals)), xi)


def _random_discrete(rng, J, k):
    c = rand_colligation(rng, k, J.r, J.signs)
    bp = potapov_factorize(c)
    return DiscreteModelData(bp.lambdas, bp.etas.T)


def test_ac7_models(capsys):
    rng = np.random.default_rng(SEED + 7)
    t0 = time.perf_counter()
    comb = fid = equiv = 0.0
    simple_count = 0
    for _ in range(20):
        r = int(rng.integers(1, 3))
        c0 = rand_colligation(rng, 1, r)
        J = c0.J
        d = _random_discrete(rng, J, int(rng.integers(1, 4)))
        cont = _random_continuous(rng, r)
        cm = CombinedModel(d, cont, N=int(rng.integers(10, 40)))
        m = build_combined_model(cm, J)
        p = product(build_discrete_model(d, J), build_continuous_model(cont, J, cm.N))
        comb = max(comb, float(np.max(np.abs(m.A - p.A))), float(np.max(np.abs(m.Phi - p.Phi))))
        for z in off_axis(rng, [m], 3):
            fid = max(fid, nx.norm(model_charfn(cm, J, z) - eval_S(m, z).S))
    while simple_count < 20:
        c = rand_colligation(rng, int(rng.integers(1, 9)), int(rng.integers(1, 4)))
        if not is_simple(c):
            continue
        simple_count += 1
        sm = spectral_model(c)
        U = unitary_equivalence(c, sm)
        equiv = max(equiv, np.inf if U is None else equivalence_residual(c, sm, U))
    dt = time.perf_counter() - t0
    ok, line = report(
        "AC7 model fidelity",
        {
            f"combined vs product {comb:.2e} <= 1e-10": comb <= 1e-10,
            f"model_charfn vs eval_S {fid:.2e} <= 1e-8": fid <= 1e-8,
            f"spectral model equivalence residual {equiv:.2e} <= 1e-7": equiv <= 1e-7,
        },
        dt,
        60,
        capsys,
    )
    assert ok, line


def test_ac8_dissipative(capsys):
    rng = np.random.default_rng(SEED + 8)
    t0 = time.perf_counter()
    slack = np.inf
    for _ in range(100):
        n = int(rng.integers(1, 11))
        K = rand_complex(rng, n, int(rng.integers(1, n + 1)))
        slack = min(slack, completeness_criterion(rand_hermitian(rng, n) + 0.5j * K @ K.conj().T).slack)
    pg = np.inf
    for _ in range(50):
        c = rand_colligation(rng, int(rng.integers(1, 6)), int(rng.integers(1, 4)))
        off = nx.norm(nx.skew_part(c.A)) + 0.5
        S = eval_S(c, rng.normal() - 1j * (off + rng.exponential())).S
        W = potapov_ginzburg(S, c.J)
        pg = min(pg, float(np.min(np.linalg.eigvalsh(np.eye(c.r) - W @ W.conj().T))))
    drift = 0.0
    for _ in range(10):
        G = rand_complex(rng, 4, 4)
        K = rand_complex(rng, 4, 2)
        c = dissipative_embed(0.5 * (G + G.conj().T) + 0.5j * K @ K.conj().T)
        u0 = rand_complex(rng, c.r)
        w = rng.uniform(1, 5)
        tr = simulate_open_system(c, lambda t: np.cos(w * t) * u0, rand_complex(rng, 4), 1e-3, 1.0)
        drift = max(drift, tr.drift)
    dt = time.perf_counter() - t0
    ok, line = report(
        "AC8 dissipative suite",
        {
            f"min trace slack {slack:.2e} >= -1e-9": slack >= -1e-9,
            f"min eig(I - WW*) {pg:.2e} >= -1e-10": pg >= -1e-10,
            f"max ledger drift {drift:.2e} <= 1e-8": drift <= 1e-8,
        },
        dt,
        60,
        capsys,
    )
    assert ok, line


def test_ac9_unicellular(capsys):
    t0 = time.perf_counter()
    rep = unicellular_demo(1.0, 200)
    dt = time.perf_counter() - t0
    ok, line = report(
        "AC9 unicellular demo",
        {
            f"{len(rep.entries)} sigma values": len(rep.entries) == 20,
            f"max invariance residual {rep.max_invariance_residual:.2e} <= 1e-9": rep.max_invariance_residual <= 1e-9,
            "|S_sigma(i)| strictly increasing": rep.strictly_monotone,
        },
        dt,
        10,
        capsys,
    )
    assert ok, line


if __name__ == "__main__":
    status = 0
    for name, fn in sorted(globals().items()):
        if name.startswith("test_ac"):
            try:
                fn(None)
            except AssertionError:
                status = 1
    sys.exit(status)
