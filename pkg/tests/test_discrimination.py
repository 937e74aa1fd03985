import itertools
import math

import numpy as np
import pytest

from conftest import rand_density, rand_probs
from renyi_lab.discrimination import (
    Channel,
    ClassicalPair,
    Povm,
    apply_channel,
    classical_divergence,
    dmax_two_outcome,
    dpi_check,
    generalized_errors,
    hoeffding_dpi_check,
    measured_lower_bound,
    measured_renyi,
    np_sweep,
    sc_exponent_estimate,
    transpose_identity_gap,
)
from renyi_lab.divergences import d_max, d_sandwiched
from renyi_lab.types import InvalidInputError

BERN_P = np.array([0.7, 0.3])
BERN_Q = np.array([0.5, 0.5])


def np_oracle(p, q, n, r):
    """Enumerate all sequences and fill the beta budget in likelihood-ratio order."""
    seqs = list(itertools.product(range(len(p)), repeat=n))
    P = np.array([np.prod([p[i] for i in s]) for s in seqs])
    Q = np.array([np.prod([q[i] for i in s]) for s in seqs])
    with np.errstate(divide="ignore"):
        llr = np.where(Q > 0, np.log(P) - np.log(Q), np.inf)
    budget = math.exp(-n * r)
    gamma = beta = 0.0
    for i in np.argsort(-llr, kind="stable"):
        if beta + Q[i] <= budget:
            gamma += P[i]
            beta += Q[i]
        else:
            gamma += P[i] * (budget - beta) / Q[i]
            break
    return gamma


# ---------------------------------------------------------------------------
# containers


def test_classical_pair_validation():
    with pytest.raises(InvalidInputError):
        ClassicalPair([0.5, 0.5], [1.0])
    with pytest.raises(InvalidInputError):
        ClassicalPair([-0.1, 1.1], [0.5, 0.5])
    pair = ClassicalPair([0.7, 0.3], [0.5, 0.5])
    assert pair.normalized
    W = np.array([[0.9, 0.1], [0.2, 0.8]])
    out = pair.post_process(W)
    np.testing.assert_allclose(out.p, [0.69, 0.31])


def test_povm_validation():
    with pytest.raises(InvalidInputError):
        Povm((np.diag([1.0, 0.0]),))
    with pytest.raises(InvalidInputError):
        Povm((np.diag([1.5, 0.0]), np.diag([-0.5, 1.0])))
    povm = Povm.from_basis(np.eye(2))
    np.testing.assert_allclose(povm.distribution(np.diag([0.7, 0.3])), [0.7, 0.3])


def test_channel_validation(rng):
    with pytest.raises(InvalidInputError):
        Channel((np.eye(2), np.eye(2)))
    ch = Channel.random(2, 3, 2, rng)
    assert ch.d_in == 2 and ch.d_out == 3
    rho = rand_density(rng, 2)
    out = apply_channel(ch, rho)
    assert np.trace(out).real == pytest.approx(1.0, abs=1e-12)
    assert np.linalg.eigvalsh(out)[0] > -1e-12
    with pytest.raises(InvalidInputError):
        apply_channel(ch, np.eye(3) / 3)


# ---------------------------------------------------------------------------
# errors and divergences


def test_generalized_errors():
    rho, sigma = np.diag([0.7, 0.3]), np.diag([0.5, 0.5])
    assert generalized_errors(np.diag([1.0, 0.0]), rho, sigma) == pytest.approx((0.7, 0.5))
    assert generalized_errors(np.eye(2), rho, sigma) == pytest.approx((1.0, 1.0))
    assert generalized_errors(np.zeros((2, 2)), rho, sigma) == pytest.approx((0.0, 0.0))
    with pytest.raises(InvalidInputError):
        generalized_errors(2 * np.eye(2), rho, sigma)


def test_classical_divergence_values():
    pair = ClassicalPair(BERN_P, BERN_Q)
    assert classical_divergence(pair, 2.0).value == pytest.approx(math.log(1.16), rel=1e-14)
    assert classical_divergence(ClassicalPair([0.5, 0.5], [1.0, 0.0]), 2.0).value == math.inf
    with pytest.raises(InvalidInputError):
        classical_divergence(pair, 1.0)


@pytest.mark.parametrize("alpha", [1.5, 2.0, 3.0])
def test_measured_commuting_is_exact(alpha):
    rho, sigma = np.diag(BERN_P), np.diag(BERN_Q)
    for n in (1, 2):
        mb = measured_lower_bound(rho, sigma, alpha, n, random_pvms=4)
        assert mb.gap == pytest.approx(0.0, abs=1e-10)


@pytest.mark.parametrize("seed", range(4))
def test_measured_below_sandwiched(seed):
    rng = np.random.default_rng(seed)
    rho, sigma = rand_density(rng, 2), rand_density(rng, 2)
    cache = {}
    gaps = []
    for n in (1, 2):
        mb = measured_lower_bound(rho, sigma, 2.0, n, random_pvms=6, seed=seed, _cache=cache)
        assert mb.value <= mb.sandwiched + 1e-10
        assert mb.value >= mb.per_copy - 1e-15
        gaps.append(mb.gap)
    assert gaps[1] <= gaps[0] + 1e-12


def test_random_povms_below_sandwiched(rng):
    for _ in range(10):
        rho, sigma = rand_density(rng, 3), rand_density(rng, 3)
        g = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
        U, _ = np.linalg.qr(g)
        for alpha in (1.5, 2.0, 3.0):
            assert measured_renyi(rho, sigma, Povm.from_basis(U), alpha) <= d_sandwiched(
                rho, sigma, alpha
            ).value + 1e-10


def test_trivial_povm_gives_zero(rng):
    rho, sigma = rand_density(rng, 3), rand_density(rng, 3)
    assert measured_renyi(rho, sigma, Povm((np.eye(3),)), 2.0) == pytest.approx(0.0, abs=1e-14)


def test_measured_n_range(rng):
    with pytest.raises(InvalidInputError):
        measured_lower_bound(rand_density(rng, 2), rand_density(rng, 2), 2.0, 4)


def test_dmax_two_outcome_matches_dmax(rng):
    for _ in range(5):
        rho, sigma = rand_density(rng, 3), rand_density(rng, 3)
        assert dmax_two_outcome(rho, sigma).value == pytest.approx(d_max(rho, sigma).value, abs=1e-10)
    assert dmax_two_outcome(np.eye(2) / 2, np.diag([1.0, 0.0])).value == math.inf


# ---------------------------------------------------------------------------
# Neyman-Pearson


@pytest.mark.parametrize("n,r", [(1, 0.1), (3, 0.05), (5, 0.2), (8, 0.3), (10, 0.5)])
def test_np_binary_matches_enumeration(n, r):
    pair = ClassicalPair(BERN_P, BERN_Q)
    res = np_sweep(pair, n, r)
    assert res.exact
    assert res.gamma == pytest.approx(np_oracle(BERN_P, BERN_Q, n, r), rel=1e-12)
    assert res.beta <= math.exp(-n * r) * (1 + 1e-12)


def test_np_single_copy_ln2():
    res = np_sweep(ClassicalPair(BERN_P, BERN_Q), 1, math.log(2))
    assert res.gamma == pytest.approx(0.7, rel=1e-14)
    assert res.beta == pytest.approx(0.5, rel=1e-14)


def test_np_r_zero_accepts_all():
    res = np_sweep(ClassicalPair(BERN_P, BERN_Q), 4, 0.0)
    assert res.gamma == 1.0


def test_np_large_r():
    n = 6
    res = np_sweep(ClassicalPair(BERN_P, BERN_Q), n, 50.0)
    assert res.gamma <= max(BERN_P) ** n


@pytest.mark.parametrize("seed", range(3))
def test_np_quantized_brackets_enumeration(seed):
    rng = np.random.default_rng(seed)
    p, q = rand_probs(rng, 3), rand_probs(rng, 3)
    pair = ClassicalPair(p, q)
    for n, r in [(3, 0.05), (4, 0.2), (5, 0.1)]:
        res = np_sweep(pair, n, r)
        exact = np_oracle(p, q, n, r)
        assert not res.exact
        assert res.beta <= math.exp(-n * r) * (1 + 1e-10)
        assert res.gamma <= exact * (1 + 1e-10)
        assert exact <= math.exp(res.log_gamma_upper) * (1 + 1e-10)


def test_np_quantized_with_free_symbol():
    p, q = np.array([0.2, 0.3, 0.5]), np.array([0.0, 0.6, 0.4])
    res = np_sweep(ClassicalPair(p, q), 3, 0.3)
    exact = np_oracle(p, q, 3, 0.3)
    assert res.gamma <= exact * (1 + 1e-10) <= math.exp(res.log_gamma_upper) * (1 + 1e-9)


def test_np_requires_normalized():
    with pytest.raises(InvalidInputError):
        np_sweep(ClassicalPair([1.0, 1.0], [0.5, 0.5]), 2, 0.1)


def test_sc_estimate_bernoulli():
    est = sc_exponent_estimate(ClassicalPair(BERN_P, BERN_Q), 0.4, n_grid=(100, 200, 400, 800))
    assert est.bound_holds
    assert est.prediction == pytest.approx(0.136382083829, abs=1e-9)
    assert est.gap < 5e-3
    assert np.all(np.array(est.exponents) > 0)


# ---------------------------------------------------------------------------
# channels


@pytest.mark.parametrize("seed", range(5))
def test_dpi_sandwiched(seed):
    rng = np.random.default_rng(seed)
    rho, sigma = rand_density(rng, 3), rand_density(rng, 3)
    ch = Channel.random(3, 2, 3, rng)
    for alpha in (1.5, 2.0, 4.0):
        assert dpi_check(ch, rho, sigma, alpha)


@pytest.mark.parametrize("seed", range(3))
def test_dpi_hoeffding(seed):
    rng = np.random.default_rng(seed)
    rho, sigma = rand_density(rng, 2), rand_density(rng, 2)
    ch = Channel.random(2, 2, 2, rng)
    for r in (0.1, 0.5, 1.0):
        assert hoeffding_dpi_check(ch, rho, sigma, r)


@pytest.mark.parametrize("seed", range(5))
def test_transpose_identity(seed):
    rng = np.random.default_rng(seed)
    ch = Channel.random(3, 2, 2, rng)
    rho = rand_density(rng, 3)
    A = rand_density(rng, 2) * 3.0
    assert transpose_identity_gap(ch, rho, A) < 1e-12
