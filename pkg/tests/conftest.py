import numpy as np
import pytest


def philox(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(seed))


def rank_deficient(rng, m, n, rank, decay=None):
    """Random matrix with exactly `rank` nonzero singular values."""
    u, _ = np.linalg.qr(rng.standard_normal((m, rank)))
    v, _ = np.linalg.qr(rng.standard_normal((n, rank)))
    if decay is None:
        s = np.linspace(2.0, 1.0, rank)
    else:
        s = decay
    return (u * s) @ v.T


@pytest.fixture
def rng():
    return philox(20240817)
