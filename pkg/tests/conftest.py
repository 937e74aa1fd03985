import numpy as np
import pytest


def rand_density(rng, d, rank=None, real=False):
    """Random density matrix of dimension ``d`` and given rank (Wishart)."""
    k = d if rank is None else rank
    g = rng.standard_normal((d, k))
    if not real:
        g = g + 1j * rng.standard_normal((d, k))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def rand_probs(rng, d, zeros=0):
    p = rng.random(d) + 0.05
    if zeros:
        p[rng.choice(d, zeros, replace=False)] = 0.0
    return p / p.sum()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


BERN_P = np.diag([0.7, 0.3])
BERN_Q = np.diag([0.5, 0.5])
