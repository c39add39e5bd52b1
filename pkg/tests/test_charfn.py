import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from livsic import numerics as nx
from livsic.charfn import (
    cayley,
    eval_Q,
    eval_S,
    eval_V,
    j_classify,
    j_form,
    j_identity_residual,
    mobius_charfn,
    potapov_ginzburg,
    simulate_open_system,
)
from livsic.colligation import Colligation, SignatureOperator, mobius_colligation, product
from livsic.errors import NotJContractive, PoleAt
from livsic.models import dissipative_embed, integration_operator

from conftest import rand_colligation, rand_complex, rand_hermitian

ALPHA_I = mobius_colligation(1j)


def test_eval_S_closed_system(rng):
    c = Colligation(rand_hermitian(rng, 3), np.zeros((2, 3)), (1, -1))
    for z in (1j, 2 - 1j, 0.3 + 0.1j):
        np.testing.assert_allclose(eval_S(c, z).S, np.eye(2))
        np.testing.assert_allclose(eval_Q(c, z), 0)


def test_scalar_values_at_2i():
    np.testing.assert_allclose(eval_S(ALPHA_I, 2j).S, [[3.0]], atol=1e-14)
    np.testing.assert_allclose(eval_Q(ALPHA_I, 2j), [[1j * np.sqrt(2)]], atol=1e-14)
    np.testing.assert_allclose(eval_V(ALPHA_I, 2j), [[0.5j]], atol=1e-14)
    np.testing.assert_allclose(cayley(np.array([[3.0]]), (1,), "S->V"), [[0.5j]], atol=1e-14)


def test_eval_S_at_eigenvalue_is_flagged():
    s = eval_S(ALPHA_I, 1j)
    assert not s.regular and np.isnan(s.S).all()


def test_integration_operator_near_e():
    S = eval_S(integration_operator(1.0, 200), 1j).S[0, 0]
    assert abs(S - np.e) < 1e-3


def test_S_equals_I_minus_i_Phi_Q(rng):
    c = rand_colligation(rng, 5, 2)
    z = 0.7 + 1.3j
    np.testing.assert_allclose(eval_S(c, z).S, np.eye(2) - 1j * c.Phi @ eval_Q(c, z), atol=1e-12)


def test_V_scalar_and_real_axis(rng):
    np.testing.assert_allclose(eval_V(ALPHA_I, 1j), [[1j]], atol=1e-14)
    c = rand_colligation(rng, 4, 2)
    R = nx.hermitian_part(c.A)
    x = np.max(np.linalg.eigvalsh(R)) + 1.0
    V = eval_V(c, x)
    assert nx.norm(V - V.conj().T) <= 1e-10


def test_cayley_identity_at_trivial_values():
    J = SignatureOperator((1, -1))
    np.testing.assert_allclose(cayley(np.eye(2), J, "S->V"), 0)
    np.testing.assert_allclose(cayley(np.zeros((2, 2)), J, "V->S"), np.eye(2))


def test_j_form_values():
    np.testing.assert_allclose(j_form(np.eye(2), (1, -1)), 0)
    np.testing.assert_allclose(j_form(eval_S(ALPHA_I, 2j).S, (1,)), [[8.0]])
    assert abs(abs(eval_S(ALPHA_I, 5.0).S[0, 0]) ** 2 - 1) <= 1e-12


def test_j_identity_scalar():
    assert j_identity_residual(ALPHA_I, 2j) <= 1e-13
    assert j_identity_residual(ALPHA_I, 3.0) <= 1e-13


def test_j_identity_random(rng):
    c = rand_colligation(rng, 5, 2)
    assert j_identity_residual(c, 1 + 1j) <= 1e-9


def test_potapov_ginzburg_cases():
    S0 = np.array([[0.3, 0.1], [0.0, 0.5j]])
    np.testing.assert_allclose(potapov_ginzburg(S0, (1, 1)), S0, atol=1e-14)
    np.testing.assert_allclose(potapov_ginzburg(np.eye(2), (1, -1)), np.eye(2), atol=1e-14)
    W = potapov_ginzburg(np.diag([0.5, 2.0]), (1, -1))
    np.testing.assert_allclose(W, np.diag([0.5, 0.5]), atol=1e-14)
    assert np.min(np.linalg.eigvalsh(np.eye(2) - W @ W.conj().T)) >= -1e-12


def test_potapov_ginzburg_rejects_expansive():
    with pytest.raises(NotJContractive):
        potapov_ginzburg(np.diag([2.0, 0.5]), (1, -1))


def test_mobius():
    th = mobius_charfn(1j)
    assert th(2j) == pytest.approx(3.0)
    assert abs(th(4.0)) == pytest.approx(1.0, abs=1e-14)
    assert abs(th(1e6) - 1) <= 1e-5
    with pytest.raises(PoleAt):
        th(1j)


def test_closed_system_conserves_energy(rng):
    c = Colligation(rand_hermitian(rng, 3), np.zeros((1, 3)), (1,))
    tr = simulate_open_system(c, lambda t: np.zeros(1), rand_complex(rng, 3), 1e-3, 10.0)
    assert np.max(np.abs(tr.energy - tr.energy[0])) <= 1e-10


def test_harmonic_steady_state():
    c = dissipative_embed(np.array([[1j, 0.5], [0.5, 2j]]))
    z = 0.7
    phi0 = np.array([1.0, 0.5j])[: c.r]
    tr = simulate_open_system(c, lambda t: np.exp(1j * z * t) * phi0, np.zeros(2), 1e-2, 25.0)
    steady = np.exp(1j * z * tr.t[-1]) * eval_Q(c, z) @ phi0
    assert np.linalg.norm(tr.h[-1] - steady) <= 1e-6


def test_energy_ledger_random_dissipative(rng):
    G = rand_complex(rng, 4, 4)
    K = rand_complex(rng, 2, 4)
    c = dissipative_embed(0.5 * (G + G.conj().T) + 0.5j * K.conj().T @ K)
    u0 = rand_complex(rng, c.r)
    tr = simulate_open_system(c, lambda t: np.cos(3 * t) * u0, rand_complex(rng, 4), 1e-3, 1.0)
    assert tr.drift <= 1e-8


seeds = st.integers(0, 2**32 - 1)


def _smallest(M):
    return float(np.min(np.linalg.eigvalsh(0.5 * (M + M.conj().T))))


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 6), st.integers(1, 3), seeds)
def test_half_plane_classification(n, r, seed):
    rng = np.random.default_rng(seed)
    c = rand_colligation(rng, n, r)
    Jm = c.J.matrix()
    spread = nx.norm(nx.skew_part(c.A)) + 1.0
    for sgn in (1, -1):
        for x in rng.normal(size=4) * 3:
            z = x + 1j * sgn * (0.1 + spread * rng.random())
            s = eval_S(c, z)
            if not s.regular:
                continue
            S = s.S
            scale = 1 + nx.norm(S) ** 2
            assert sgn * _smallest(S.conj().T @ Jm @ S - Jm) >= -1e-9 * scale
            assert sgn * _smallest(S @ Jm @ S.conj().T - Jm) >= -1e-9 * scale
            assert j_identity_residual(c, z) <= 1e-9 * scale
            # Cayley round trip and the V positivity agreement
            V = cayley(S, c.J, "S->V")
            np.testing.assert_allclose(cayley(V, c.J, "V->S"), S, atol=1e-9 * scale)
            np.testing.assert_allclose(cayley(S, c.J, "S->V", form="right"), V, atol=1e-9 * scale)
            np.testing.assert_allclose(V, eval_V(c, z), atol=1e-8 * scale)
            assert sgn * _smallest((V - V.conj().T) / 2j) >= -1e-9 * scale
    for x in rng.normal(size=3) * 3:
        s = eval_S(c, x)
        if s.regular and nx.norm(s.S) < 1e4:
            assert j_classify(s.S, c.J, 1e-8) == "J-unitary"


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 5), st.integers(1, 5), st.integers(1, 3), seeds)
def test_multiplicativity(n1, n2, r, seed):
    rng = np.random.default_rng(seed)
    J = tuple(int(s) for s in rng.choice([1, -1], size=r))
    c1, c2 = rand_colligation(rng, n1, r, J), rand_colligation(rng, n2, r, J)
    p = product(c1, c2)
    off = max(nx.norm(nx.skew_part(c1.A)), nx.norm(nx.skew_part(c2.A))) + 0.5
    for z in rng.normal(size=5) * 2 + 1j * off * rng.choice([1, -1], size=5):
        np.testing.assert_allclose(eval_S(p, z).S, eval_S(c1, z).S @ eval_S(c2, z).S, atol=1e-9)


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 3), seeds)
def test_potapov_ginzburg_contraction(r, seed):
    rng = np.random.default_rng(seed)
    c = rand_colligation(rng, 3, r)
    off = nx.norm(nx.skew_part(c.A)) + 0.5
    S = eval_S(c, rng.normal() - 1j * off).S  # lower half-plane gives J-contractive
    W = potapov_ginzburg(S, c.J)
    assert np.min(np.linalg.eigvalsh(np.eye(r) - W @ W.conj().T)) >= -1e-10 * max(1, nx.norm(S) ** 2)
