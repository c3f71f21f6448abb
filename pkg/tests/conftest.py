import numpy as np
import pytest

from qcrb_lab import DensityMatrix, HermitianObservable, Povm


def random_hermitian(rng, dim):
    x = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return HermitianObservable((x + x.conj().T) / 2.0)


def random_density(rng, dim, rank=None):
    rank = dim if rank is None else rank
    w = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    rho = w @ w.conj().T
    return DensityMatrix(rho / np.trace(rho).real)


def random_povm(rng, dim, n_outcomes):
    """PSD elements A_k normalized as S^-1/2 A_k S^-1/2 with S = sum A_k."""
    raw = []
    for _ in range(n_outcomes):
        w = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
        raw.append(w @ w.conj().T)
    total = sum(raw)
    vals, vecs = np.linalg.eigh(total)
    inv_sqrt = (vecs / np.sqrt(vals)) @ vecs.conj().T
    return Povm(tuple(inv_sqrt @ a @ inv_sqrt for a in raw))


@pytest.fixture
def rng():
    return np.random.default_rng(20260811)
