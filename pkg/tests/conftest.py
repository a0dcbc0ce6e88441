import numpy as np
import pytest

from uncollapse.measurement import KrausOperator


@pytest.fixture
def rng():
    return np.random.default_rng(20260808)


def random_complex_matrix(rng, dim):
    return rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))


def random_unitary(rng, dim):
    q, r = np.linalg.qr(random_complex_matrix(rng, dim))
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_invertible_kraus(rng, dim=2, floor=0.3):
    """Random measurement operator whose element stays safely invertible."""
    g = random_complex_matrix(rng, dim)
    e = g @ g.conj().T + floor * np.eye(dim)
    e = e / (np.linalg.eigvalsh(e)[-1] * 1.02)
    vals, vecs = np.linalg.eigh(e)
    sqrt_e = (vecs * np.sqrt(np.clip(vals, 0.0, None))) @ vecs.conj().T
    return KrausOperator(random_unitary(rng, dim) @ sqrt_e)
