"""Acceptance suite: each test checks one criterion and prints a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v`` (the lines print even without ``-s``).
"""

import math
import time

import numpy as np
import pytest

from conftest import rand_density, rand_probs
from renyi_lab.discrimination import (
    Channel,
    ClassicalPair,
    Povm,
    measured_lower_bound,
    measured_renyi,
    sc_exponent_estimate,
)
from renyi_lab.divergences import d_max, d_sandwiched, q_alpha_z, relative_entropy
from renyi_lab.hoeffding import bipolar_recover, default_r_grid, hoeffding_anti, psi_curve
from renyi_lab.operators import DiagonalModel
from renyi_lab.truncation import alpha_limit_to_dmax, ladder
from renyi_lab.types import AlphaZ
from renyi_lab.variational import optimizer_H, q_var_objective


@pytest.fixture
def verdict(capsys):
    """Print one line per criterion, then fail on any recorded problem or on the time limit."""

    def report(num, title, start, limit, problems):
        elapsed = time.perf_counter() - start
        if elapsed >= limit:
            problems = problems + [f"runtime {elapsed:.1f}s exceeds {limit}s"]
        status = "PASS" if not problems else "FAIL"
        detail = "" if not problems else f": {problems[0]}" + (f" (+{len(problems) - 1} more)" if len(problems) > 1 else "")
        with capsys.disabled():
            print(f"\n{status} criterion {num:2d} [{elapsed:6.1f}s < {limit}s] {title}{detail}")
        assert not problems, "\n".join(problems[:10])

    return report


def random_unitary(rng, d):
    g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    q, r = np.linalg.qr(g)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def rel_err(a, b):
    return abs(a - b) / max(abs(b), 1e-300)


# ---------------------------------------------------------------------------


def test_criterion_01_classical_oracle(verdict):
    start, problems = time.perf_counter(), []
    rng = np.random.default_rng(101)
    for trial in range(200):
        d = int(rng.integers(2, 9))
        p = rand_probs(rng, d, zeros=int(rng.integers(0, d // 2 + 1)) if trial % 3 == 0 else 0)
        q = rand_probs(rng, d)
        rho, sigma = np.diag(p), np.diag(q)
        on = p > 0
        for a in (1.2, 2.0, 3.0, 5.0):
            oracle = math.fsum(p[on] ** a * q[on] ** (1 - a))
            for z in (0.5, 1.0, a, 2 * a):
                got = q_alpha_z(rho, sigma, (a, z)).value
                if rel_err(got, oracle) > 1e-10:
                    problems.append(f"trial {trial} alpha {a} z {z}: Q {got} vs {oracle}")
        dmax = math.log(max(p[on] / q[on]))
        got = d_max(rho, sigma).value
        if rel_err(got, dmax) > 1e-10 and abs(got - dmax) > 1e-15:
            problems.append(f"trial {trial}: D_max {got} vs {dmax}")
        rel = math.fsum(p[on] * np.log(p[on] / q[on]))
        got = relative_entropy(rho, sigma).value
        if rel_err(got, rel) > 1e-10:
            problems.append(f"trial {trial}: D {got} vs {rel}")
    verdict(1, "classical oracle equivalence (200 pairs)", start, 10, problems)


def test_criterion_02_z_monotonicity(verdict):
    start, problems = time.perf_counter(), []
    rng = np.random.default_rng(202)
    for trial in range(500):
        d = int(rng.integers(2, 7))
        rho, sigma = rand_density(rng, d), rand_density(rng, d)
        for a in (1.5, 2.0, 3.0):
            zs = sorted({0.6, 1.0, a / 2, a, 2 * a, 4 * a})
            qs = [q_alpha_z(rho, sigma, (a, z)).value for z in zs]
            for z0, z1, q0, q1 in zip(zs, zs[1:], qs, qs[1:]):
                if q1 > q0 + 1e-9 * max(1.0, q0):
                    problems.append(f"trial {trial} alpha {a}: Q(z={z1}) {q1} > Q(z={z0}) {q0}")
    verdict(2, "z-monotonicity and sandwiched <= Petz (500 pairs)", start, 60, problems)


def test_criterion_03_variational_saturation(verdict):
    start, problems = time.perf_counter(), []
    rng = np.random.default_rng(303)
    params = [(1.5, 1.5), (2.0, 2.0), (3.0, 3.0), (2.0, 1.0), (3.0, 2.0)]
    pairs = []
    for _ in range(200):
        d = int(rng.integers(2, 6))
        pairs.append((rand_density(rng, d), rand_density(rng, d)))
    for p in params:
        for i, (rho, sigma) in enumerate(pairs):
            q = q_alpha_z(rho, sigma, p).value
            obj = optimizer_H(rho, sigma, p).objective_Q
            if rel_err(obj, q) > 1e-8:
                problems.append(f"pair {i} {p}: optimizer {obj} vs Q {q}")
        for k in range(1000):
            rho, sigma = pairs[k % len(pairs)]
            d = rho.shape[0]
            g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
            H = g @ g.conj().T * 10.0 ** rng.uniform(-2, 2)
            q = q_alpha_z(rho, sigma, p).value
            val = q_var_objective(H, rho, sigma, p)
            if val > q * (1 + 1e-8):
                problems.append(f"witness {k} {p}: {val} exceeds Q {q}")
    verdict(3, "variational saturation (200 pairs, 5000 witnesses)", start, 120, problems)


def test_criterion_04_finite_recoverability(verdict):
    start, problems = time.perf_counter(), []
    levels = [2**k for k in range(1, 10)]
    for r1 in (0.3, 0.5, 0.8):
        for r2 in (0.3, 0.5, 0.8):
            rho, sigma = DiagonalModel.geometric(r1), DiagonalModel.geometric(r2)
            for a in (1.5, 2.0, 4.0):
                rep = ladder(rho, sigma, AlphaZ(a, a), levels=levels)
                if not rep.monotone:
                    problems.append(f"({r1}, {r2}) alpha {a}: ladder not monotone")
                x = r1**a * r2 ** (1 - a)
                if x >= 1:
                    # the series itself diverges; the ladder must say so
                    if rep.verdict != "diverging":
                        problems.append(f"({r1}, {r2}) alpha {a}: divergent series got {rep.verdict}")
                    continue
                oracle = rho.constant**a * sigma.constant ** (1 - a) * x / (1 - x)
                if rep.verdict != "converged":
                    problems.append(f"({r1}, {r2}) alpha {a}: verdict {rep.verdict}")
                elif rel_err(rep.limit, oracle) >= 1e-4:
                    problems.append(f"({r1}, {r2}) alpha {a}: limit {rep.limit} vs {oracle}")
    verdict(4, "finite-dimensional recoverability on geometric models (N <= 512)", start, 30, problems)


def test_criterion_05_divergence_example(verdict):
    start, problems = time.perf_counter(), []
    rho, sigma = DiagonalModel.power(3.0), DiagonalModel.superpower(0.5)
    levels = [2**k for k in range(1, 13)]
    for a in (1.5, 2.0, 3.0):
        rep = ladder(rho, sigma, AlphaZ(a, a), levels=levels)
        if rep.verdict != "diverging":
            problems.append(f"alpha {a}: verdict {rep.verdict}")
        if not max(rep.floats()) > 1e6:
            problems.append(f"alpha {a}: truncated Q stays below 1e6 up to N = 4096")
    vals = [relative_entropy(rho.at(N), sigma.at(N)).value for N in (1024, 2048, 4096)]
    if not all(math.isfinite(v) for v in vals):
        problems.append(f"relative entropy not finite: {vals}")
    elif len({f"{v:.3g}" for v in vals}) != 1:
        problems.append(f"relative entropy not stable to 3 digits: {vals}")
    verdict(5, "divergence example: ladder diverges, relative entropy stable", start, 20, problems)


def test_criterion_06_alpha_limit(verdict):
    start, problems = time.perf_counter(), []
    rng = np.random.default_rng(606)
    alphas = [2.0**k for k in range(1, 13)]
    for trial in range(50):
        d = int(rng.integers(2, 6))
        rho = rand_density(rng, d) * rng.uniform(0.2, 5.0)
        sigma = rand_density(rng, d) * rng.uniform(0.2, 5.0)
        rep = alpha_limit_to_dmax(rho, sigma, alpha_grid=alphas)
        vals = rep.floats()
        if np.any(np.diff(vals) < -1e-9):
            problems.append(f"trial {trial}: not non-decreasing, min step {np.diff(vals).min():.3e}")
        dmax = d_max(rho, sigma).value
        if not abs(vals[-1] - dmax) < 1e-2:
            problems.append(f"trial {trial}: alpha 4096 value {vals[-1]} vs D_max {dmax}")
    verdict(6, "alpha -> infinity limit (50 pairs)", start, 30, problems)


P = np.array([0.7, 0.3])
Q = np.array([0.5, 0.5])


def bernoulli_psi(u):
    u = np.asarray(u, dtype=float)
    out = np.where(u >= 1, math.log(1.4), 0.0)
    inner = (u > 0) & (u < 1)
    a = 1.0 / (1.0 - u[inner])
    terms = [a * math.log(p) + (1 - a) * math.log(q) for p, q in zip(P, Q)]
    out[inner] = (1 - u[inner]) * np.logaddexp(*terms)
    return out


def test_criterion_07_hoeffding_bipolar(verdict):
    start, problems = time.perf_counter(), []
    curve = psi_curve(np.diag(P), np.diag(Q))
    grid = np.linspace(0.0, 1.0, 10_000)
    psi_grid = bernoulli_psi(grid)
    for r in (0.05, 0.1, 0.2, 0.4):
        oracle = float(np.max(grid * r - psi_grid))
        got = hoeffding_anti(curve, r).H_hat.value
        if abs(got - oracle) > 1e-4:
            problems.append(f"r {r}: H_hat {got} vs grid oracle {oracle}")
    r_grid = default_r_grid(math.log(1.4))
    h = [hoeffding_anti(curve, r).H_hat.value for r in r_grid]
    for u in (0.25, 0.5, 0.75):
        res = bipolar_recover(r_grid, h, u, h_func=lambda r: hoeffding_anti(curve, r).H_hat.value)
        target = float(bernoulli_psi([u])[0])
        if abs(res.value - target) > 1e-3:
            problems.append(f"u {u}: bipolar {res.value} vs psi {target}")
    dpq = float(np.sum(P * np.log(P / Q)))
    for r in np.linspace(-0.5, dpq, 11):
        v = hoeffding_anti(curve, r).H_hat.value
        if abs(v) > 1e-10:
            problems.append(f"r {r:.4f} <= D: H_hat {v} is not zero")
    v = hoeffding_anti(curve, dpq + 0.05).H_hat.value
    if not v > 1e-4:
        problems.append(f"r = D + 0.05: H_hat {v} not above 1e-4")
    verdict(7, "Hoeffding anti-divergence and bipolar recovery", start, 10, problems)


def test_criterion_08_strong_converse(verdict):
    start, problems = time.perf_counter(), []
    pair = ClassicalPair(P, Q)
    for r in (0.15, 0.25):
        est = sc_exponent_estimate(pair, r, n_grid=(250, 500, 1000, 2000))
        if not est.gap < 5e-2:
            problems.append(f"r {r}: extrapolated {est.extrapolated} vs H_hat {est.prediction}")
        if not est.bound_holds:
            problems.append(f"r {r}: optimality bound violated")
    verdict(8, "strong converse exponent at n = 2000", start, 120, problems)


def test_criterion_09_data_processing(verdict):
    start, problems = time.perf_counter(), []
    rng = np.random.default_rng(909)
    for trial in range(200):
        d_out = int(rng.choice([2, 3]))
        n_kraus = int(rng.integers(2 if d_out == 2 else 1, 5))
        ch = Channel.random(3, d_out, n_kraus, rng)
        rho, sigma = rand_density(rng, 3), rand_density(rng, 3)
        rho_o, sigma_o = ch.apply(rho), ch.apply(sigma)
        for a in (1.5, 2.0, 3.0):
            before = d_sandwiched(rho, sigma, a).value
            after = d_sandwiched(rho_o, sigma_o, a).value
            if after > before + 1e-8:
                problems.append(f"trial {trial} alpha {a}: {after} > {before}")
        c_in, c_out = psi_curve(rho, sigma), psi_curve(rho_o, sigma_o)
        for r in (0.1, 0.5):
            before = hoeffding_anti(c_in, r).H_hat.value
            after = hoeffding_anti(c_out, r).H_hat.value
            if after < before - 1e-8:
                problems.append(f"trial {trial} r {r}: H_hat {after} < {before}")
    verdict(9, "data processing under 200 random channels", start, 120, problems)


def test_criterion_10_measured(verdict):
    start, problems = time.perf_counter(), []
    rng = np.random.default_rng(1010)
    for trial in range(20):
        d = int(rng.integers(2, 5))
        U = random_unitary(rng, d)
        rho = U @ np.diag(rand_probs(rng, d)) @ U.conj().T
        sigma = U @ np.diag(rand_probs(rng, d)) @ U.conj().T
        for a in (1.5, 2.0, 3.0):
            got = measured_renyi(rho, sigma, Povm.from_basis(U), a)
            target = d_sandwiched(rho, sigma, a).value
            if abs(got - target) > 1e-9:
                problems.append(f"commuting {trial} alpha {a}: {got} vs {target}")
    for trial in range(30):
        rho, sigma = rand_density(rng, 2), rand_density(rng, 2)
        for a in (1.5, 2.0, 3.0):
            cache = {}
            gaps = [
                measured_lower_bound(rho, sigma, a, n, seed=trial, _cache=cache).gap for n in (1, 2, 3)
            ]
            if any(g < -1e-10 for g in gaps):
                problems.append(f"qubit {trial} alpha {a}: negative gap {gaps}")
            if any(g1 > g0 for g0, g1 in zip(gaps, gaps[1:])):
                problems.append(f"qubit {trial} alpha {a}: gaps increase {gaps}")
    verdict(10, "measured divergence: exact when commuting, gaps non-increasing", start, 180, problems)


def test_criterion_11_endpoints(verdict):
    start, problems = time.perf_counter(), []
    rng = np.random.default_rng(1111)
    for trial in range(100):
        d = int(rng.integers(2, 6))
        rho = rand_density(rng, d) * rng.uniform(0.1, 10.0)
        sigma = rand_density(rng, d) * rng.uniform(0.1, 10.0)
        curve = psi_curve(rho, sigma, [0.0, 0.5, 1.0])
        log_tr = math.log(np.trace(rho).real)
        # D_max from the top eigenvalue of sigma^{-1/2} rho sigma^{-1/2}
        w, v = np.linalg.eigh(sigma)
        s = v @ np.diag(w**-0.5) @ v.conj().T
        dmax = math.log(np.linalg.eigvalsh(s @ rho @ s)[-1])
        if abs(curve.values[0] - log_tr) > 1e-10:
            problems.append(f"trial {trial}: psi(0) {curve.values[0]} vs {log_tr}")
        if abs(curve.values[-1] - dmax) > 1e-10:
            problems.append(f"trial {trial}: psi(1) {curve.values[-1]} vs {dmax}")
    verdict(11, "endpoint conventions (100 pairs)", start, 5, problems)
