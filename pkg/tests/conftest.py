import numpy as np
import pytest

from livsic import Colligation, SignatureOperator


def rand_complex(rng, *shape):
    return rng.normal(size=shape) + 1j * rng.normal(size=shape)


def rand_hermitian(rng, n):
    G = rand_complex(rng, n, n)
    return 0.5 * (G + G.conj().T)


def rand_colligation(rng, n, r, J=None):
    """Valid colligation built as A = H + (i/2) Phi* J Phi."""
    if J is None:
        J = tuple(int(s) for s in rng.choice([1, -1], size=r))
    J = SignatureOperator(tuple(J))
    Phi = rand_complex(rng, r, n)
    A = rand_hermitian(rng, n) + 0.5j * Phi.conj().T @ (J.vector[:, None] * Phi)
    return Colligation(A, Phi, J)


def rand_offaxis(rng, k=1, lo=0.3):
    """Points with |Im z| >= lo, both half-planes."""
    z = rng.normal(size=k) * 2 + 1j * (lo + rng.exponential(2.0, size=k)) * rng.choice([1, -1], size=k)
    return z


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
