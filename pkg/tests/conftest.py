import numpy as np
import pytest

from factorlens import SymMatrix


def rand_spd(rng: np.random.Generator, p: int, jitter: float = 0.5) -> SymMatrix:
    """Random SPD matrix A = G G^T + jitter * I."""
    g = rng.standard_normal((p, p))
    return SymMatrix(g @ g.T + jitter * np.eye(p))


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240612)
