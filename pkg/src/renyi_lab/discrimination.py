"""Hypothesis testing, measured divergences and channels.

Tests are operators ``0 <= T <= I``; ``gamma = Tr T rho`` is the success
probability under the null and ``beta = Tr T sigma`` the error under the
alternative. The Neyman-Pearson sweeps work on i.i.d. classical pairs and
report logs so that exponentially small errors stay representable.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import reduce

import numpy as np
from scipy.special import gammaln, logsumexp

from .divergences import d_sandwiched
from .hoeffding import hoeffding_anti, psi_curve
from .operators import RANK_TOL, _psd_eigh, as_hermitian
from .types import ExtendedValue, InvalidInputError

KRAUS_TOL = 1e-10
POVM_TOL = 1e-10
DPI_TOL = 1e-8
NP_WIDTH = 1e-4
MAX_BINS = 4_000_000


# ---------------------------------------------------------------------------
# containers


@dataclass(frozen=True)
class Channel:
    """Completely positive trace-preserving map ``A -> sum_i V_i A V_i*``."""

    kraus: tuple

    def __post_init__(self):
        ops = tuple(np.asarray(V, dtype=complex) for V in self.kraus)
        if not ops:
            raise InvalidInputError("a channel needs at least one Kraus operator")
        shape = ops[0].shape
        if any(V.ndim != 2 or V.shape != shape for V in ops):
            raise InvalidInputError("Kraus operators must be matrices of equal shape")
        total = sum(V.conj().T @ V for V in ops)
        if np.max(np.abs(total - np.eye(shape[1]))) > KRAUS_TOL:
            raise InvalidInputError("Kraus operators do not satisfy sum V*V = I")
        object.__setattr__(self, "kraus", ops)

    @property
    def d_in(self) -> int:
        return self.kraus[0].shape[1]

    @property
    def d_out(self) -> int:
        return self.kraus[0].shape[0]

    def apply(self, A) -> np.ndarray:
        """Schrodinger picture: ``sum_i V_i A V_i*``."""
        A = np.asarray(A)
        out = sum(V @ A @ V.conj().T for V in self.kraus)
        return 0.5 * (out + out.conj().T)

    def adjoint(self, A) -> np.ndarray:
        """Heisenberg picture: ``sum_i V_i* A V_i``."""
        A = np.asarray(A)
        out = sum(V.conj().T @ A @ V for V in self.kraus)
        return 0.5 * (out + out.conj().T)

    @classmethod
    def random(cls, d_in: int, d_out: int, n_kraus: int, rng) -> "Channel":
        """Haar-random Stinespring isometry from a QR factorization of a Gaussian matrix."""
        if d_out * n_kraus < d_in:
            raise InvalidInputError("need d_out * n_kraus >= d_in for an isometry")
        g = rng.standard_normal((d_out * n_kraus, d_in)) + 1j * rng.standard_normal(
            (d_out * n_kraus, d_in)
        )
        q, r = np.linalg.qr(g)
        q = q * (np.diag(r) / np.abs(np.diag(r)))
        return cls(tuple(q[i * d_out : (i + 1) * d_out] for i in range(n_kraus)))


@dataclass(frozen=True)
class Povm:
    effects: tuple

    def __post_init__(self):
        ops = tuple(as_hermitian(E, "effect") for E in self.effects)
        if not ops:
            raise InvalidInputError("a POVM needs at least one effect")
        for E in ops:
            if np.linalg.eigvalsh(E)[0] < -POVM_TOL:
                raise InvalidInputError("POVM effects must be positive semidefinite")
        if np.max(np.abs(sum(ops) - np.eye(ops[0].shape[0]))) > POVM_TOL:
            raise InvalidInputError("POVM effects must sum to the identity")
        object.__setattr__(self, "effects", ops)

    @classmethod
    def from_basis(cls, U) -> "Povm":
        """Projective measurement onto the columns of a unitary."""
        U = np.asarray(U)
        return cls(tuple(np.outer(U[:, k], U[:, k].conj()) for k in range(U.shape[1])))

    def distribution(self, rho) -> np.ndarray:
        rho = np.asarray(rho)
        return np.array([np.real(np.trace(E @ rho)) for E in self.effects])


@dataclass(frozen=True)
class ClassicalPair:
    """Two non-negative weight vectors on a common finite alphabet."""

    p: np.ndarray
    q: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.p, dtype=float)
        q = np.asarray(self.q, dtype=float)
        if p.ndim != 1 or p.shape != q.shape or p.size == 0:
            raise InvalidInputError("p and q must be 1-d arrays of equal length")
        if np.any(p < 0) or np.any(q < 0) or not (np.all(np.isfinite(p)) and np.all(np.isfinite(q))):
            raise InvalidInputError("p and q must be finite and non-negative")
        if p.sum() <= 0 or q.sum() <= 0:
            raise InvalidInputError("p and q must be nonzero")
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "q", q)

    @property
    def normalized(self) -> bool:
        return abs(self.p.sum() - 1) < 1e-12 and abs(self.q.sum() - 1) < 1e-12

    def matrices(self) -> tuple[np.ndarray, np.ndarray]:
        return np.diag(self.p), np.diag(self.q)

    def post_process(self, W) -> "ClassicalPair":
        """Image under a row-stochastic matrix ``W`` (rows: inputs, columns: outputs)."""
        W = np.asarray(W, dtype=float)
        if W.shape[0] != self.p.size or np.any(W < 0) or np.max(np.abs(W.sum(1) - 1)) > 1e-12:
            raise InvalidInputError("W must be row-stochastic with one row per symbol")
        return ClassicalPair(self.p @ W, self.q @ W)


# ---------------------------------------------------------------------------
# errors and divergences


def generalized_errors(T, rho, sigma) -> tuple[float, float]:
    """``(Tr T^{1/2} rho T^{1/2}, Tr T^{1/2} sigma T^{1/2})`` for a test ``0 <= T <= I``."""
    T = as_hermitian(T, "T")
    w = np.linalg.eigvalsh(T)
    if w[0] < -1e-12 or w[-1] > 1 + 1e-12:
        raise InvalidInputError("a test must satisfy 0 <= T <= I")
    rho, sigma = as_hermitian(rho, "rho"), as_hermitian(sigma, "sigma")
    return float(np.real(np.trace(T @ rho))), float(np.real(np.trace(T @ sigma)))


def classical_divergence(pair: ClassicalPair, alpha: float) -> ExtendedValue:
    """``log(sum p^alpha q^(1-alpha)) / (alpha - 1)`` with ``+inf`` on support failure."""
    if not alpha > 1:
        raise InvalidInputError(f"alpha must exceed 1, got {alpha}")
    p, q = pair.p, pair.q
    on = p > 0
    if np.any(q[on] == 0):
        return ExtendedValue(math.inf, "support_violation")
    terms = alpha * np.log(p[on]) + (1 - alpha) * np.log(q[on])
    return ExtendedValue(float(logsumexp(terms)) / (alpha - 1))


def _induced_pair(rho, sigma, povm: Povm) -> ClassicalPair:
    p, q = povm.distribution(rho), povm.distribution(sigma)
    # outcome probabilities below the rank tolerance are rounding noise
    p = np.where(p > RANK_TOL * max(p.max(), 0) , p, 0.0)
    q = np.where(q > RANK_TOL * max(q.max(), 0), q, 0.0)
    return ClassicalPair(p, q)


def measured_renyi(rho, sigma, povm: Povm, alpha: float) -> float:
    """Classical Renyi divergence of the outcome distributions of ``povm``."""
    return classical_divergence(_induced_pair(rho, sigma, povm), alpha).value


@dataclass(frozen=True)
class MeasuredBound:
    """Measured lower bounds on the sandwiched divergence from up to ``n`` copies.

    ``per_copy`` is the best value found with a PVM on exactly ``n`` copies.
    ``value`` is the best over ``m <= n`` copies, the running estimate of the
    regularized measured divergence; ``gap`` is ``sandwiched - value``.
    """

    n: int
    value: float
    sandwiched: float
    gap: float
    basis: np.ndarray
    per_copy: float
    copies: int


def _pinching_basis(rho, sigma, tol=1e-9):
    """Basis diagonalizing ``sigma`` and the pinching of ``rho`` by its eigenspaces."""
    w, v = np.linalg.eigh(as_hermitian(sigma))
    cols = []
    start = 0
    while start < w.size:
        stop = start + 1
        while stop < w.size and abs(w[stop] - w[start]) <= tol * max(abs(w[-1]), 1e-300):
            stop += 1
        block = v[:, start:stop]
        _, y = np.linalg.eigh(block.conj().T @ rho @ block)
        cols.append(block @ y)
        start = stop
    return np.column_stack(cols)


def _eigbasis(A):
    return np.linalg.eigh(as_hermitian(A))[1]


def _haar_unitary(d, rng):
    g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    q, r = np.linalg.qr(g)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def _pvm_value(rho_n, sigma_n, U, alpha):
    p = np.real(np.einsum("ij,jk,ki->i", U.conj().T, rho_n, U))
    q = np.real(np.einsum("ij,jk,ki->i", U.conj().T, sigma_n, U))
    p = np.where(p > RANK_TOL * p.max(), p, 0.0)
    q = np.where(q > RANK_TOL * q.max(), q, 0.0)
    return classical_divergence(ClassicalPair(p, q), alpha).value


def _log_q_classical(p, q, alpha):
    on = p > 0
    if np.any(q[on] <= 0):
        return math.inf
    x = alpha * np.log(p[on]) + (1 - alpha) * np.log(q[on])
    m = x.max()
    return float(m + np.log(np.exp(x - m).sum()))


def _refine_basis(rho_n, sigma_n, U0, alpha, steps: int = 300, tol: float = 1e-12):
    """Gradient ascent of ``sum_k p_k^alpha q_k^(1-alpha)`` over bases ``U exp(itG)``.

    With ``A = U* rho U`` and ``B = U* sigma U`` the ascent direction is
    ``G = i (M - M*)`` where ``M_kj = c_k A_kj + e_k B_kj`` and ``c, e`` are
    the partial derivatives of the objective in ``p_k`` and ``q_k``.
    """

    def value(U):
        p = np.clip(np.real(np.einsum("ji,jk,ki->i", U.conj(), rho_n, U)), 0.0, None)
        q = np.clip(np.real(np.einsum("ji,jk,ki->i", U.conj(), sigma_n, U)), 0.0, None)
        return _log_q_classical(p, q, alpha), p, q

    U = U0
    step = None
    f, p, q = value(U)
    if not math.isfinite(f) or np.any(q <= 0):
        return U0, _pvm_value(rho_n, sigma_n, U0, alpha)
    for _ in range(steps):
        A = U.conj().T @ rho_n @ U
        B = U.conj().T @ sigma_n @ U
        ratio = (p / q) ** (alpha - 1)
        M = (alpha * ratio)[:, None] * A + ((1 - alpha) * ratio * p / q)[:, None] * B
        G = 1j * (M - M.conj().T)
        gnorm = np.linalg.norm(G)
        if gnorm < tol:
            break
        w, v = np.linalg.eigh(G)
        t = 2.0 * step if step is not None else 1.0 / gnorm
        improved = False
        while t > 1e-12:
            Un = U @ (v * np.exp(1j * t * w)) @ v.conj().T
            fn, pn, qn = value(Un)
            if math.isfinite(fn) and fn > f and np.all(qn > 0):
                U, f, p, q, step = Un, fn, pn, qn, t
                improved = True
                break
            t *= 0.5
        if not improved:
            break
    return U, _pvm_value(rho_n, sigma_n, U, alpha)


def measured_lower_bound(
    rho,
    sigma,
    alpha: float,
    n: int,
    random_pvms: int = 20,
    seed: int = 0,
    refine: int = 2,
    _cache=None,
) -> MeasuredBound:
    """Best per-copy measured divergence over a family of PVMs on ``n`` copies.

    The family contains product eigenbases of ``rho`` and ``sigma``, the
    pinching basis of ``rho^{(x)n}`` with respect to ``sigma^{(x)n}``, the
    eigenbases of the sandwiched operators, tensor products of the best bases
    found for fewer copies, and ``random_pvms`` Haar-random bases. The
    ``refine`` best candidates are then improved by local ascent over
    unitary rotations.
    """
    if not 1 <= n <= 3:
        raise InvalidInputError("measured_lower_bound supports n in {1, 2, 3}")
    rho, sigma = as_hermitian(rho, "rho"), as_hermitian(sigma, "sigma")
    cache = {} if _cache is None else _cache
    rho_n = reduce(np.kron, [rho] * n)
    sigma_n = reduce(np.kron, [sigma] * n)
    s_w, s_v, s_r = _psd_eigh(sigma_n)
    s_half = s_v[:, :s_r] * s_w[:s_r] ** ((1 - alpha) / (2 * alpha)) @ s_v[:, :s_r].conj().T
    s_inv = s_v[:, :s_r] * s_w[:s_r] ** -0.5 @ s_v[:, :s_r].conj().T
    cands = [
        reduce(np.kron, [_eigbasis(sigma)] * n),
        reduce(np.kron, [_eigbasis(rho)] * n),
        _pinching_basis(rho_n, sigma_n),
        _eigbasis(s_half @ rho_n @ s_half),
        _eigbasis(s_inv @ rho_n @ s_inv),
    ]
    for m in range(1, n):
        left = cache.get(m) or measured_lower_bound(
            rho, sigma, alpha, m, random_pvms, seed, refine, cache
        )
        right = cache.get(n - m) or measured_lower_bound(
            rho, sigma, alpha, n - m, random_pvms, seed, refine, cache
        )
        cands.append(np.kron(left.basis, right.basis))
    rng = np.random.default_rng(seed + n)
    cands += [_haar_unitary(rho_n.shape[0], rng) for _ in range(random_pvms)]
    values = [_pvm_value(rho_n, sigma_n, U, alpha) / n for U in cands]
    for i in np.argsort(values)[::-1][:refine]:
        U, v = _refine_basis(rho_n, sigma_n, cands[i], alpha)
        cands.append(U)
        values.append(v / n)
    best = int(np.argmax(values))
    per_copy = float(values[best])
    dstar = d_sandwiched(rho, sigma, alpha).value
    value, copies = per_copy, n
    for m in range(1, n):
        if cache[m].per_copy > value:
            value, copies = cache[m].per_copy, m
    out = MeasuredBound(n, value, dstar, float(dstar - value), cands[best], per_copy, copies)
    cache[n] = out
    return out


def dmax_two_outcome(rho, sigma, restarts: int = 20, seed: int = 0) -> ExtendedValue:
    """``log sup_T Tr rho T / Tr sigma T`` over rank-one tests.

    The candidate ``sigma^{-1/2} v`` with ``v`` the top eigenvector of
    ``sigma^{-1/2} rho sigma^{-1/2}`` is compared against seeded random
    tests. If ``rho`` has weight on the kernel of ``sigma`` the ratio is
    unbounded.
    """
    rho, sigma = as_hermitian(rho, "rho"), as_hermitian(sigma, "sigma")
    w, v, r = _psd_eigh(sigma, RANK_TOL, "sigma")
    ker = v[:, r:]
    if ker.shape[1] and np.linalg.eigvalsh(ker.conj().T @ rho @ ker)[-1] > RANK_TOL * max(
        np.linalg.eigvalsh(rho)[-1], 1e-300
    ):
        return ExtendedValue(math.inf, "support_violation")
    vs = v[:, :r]
    inv_half = vs * w[:r] ** -0.5 @ vs.conj().T
    M = inv_half @ rho @ inv_half
    top = np.linalg.eigh(0.5 * (M + M.conj().T))[1][:, -1]
    cands = [inv_half @ top]
    rng = np.random.default_rng(seed)
    d = rho.shape[0]
    cands += [rng.standard_normal(d) + 1j * rng.standard_normal(d) for _ in range(restarts)]
    best = -math.inf
    for psi in cands:
        num = np.real(psi.conj() @ rho @ psi)
        den = np.real(psi.conj() @ sigma @ psi)
        if den > 0 and num > 0:
            best = max(best, math.log(num / den))
    return ExtendedValue(best) if math.isfinite(best) else ExtendedValue(math.inf, "support_violation")


# ---------------------------------------------------------------------------
# Neyman-Pearson


@dataclass(frozen=True)
class NPResult:
    """Optimal randomized test at ``beta <= exp(-n r)``.

    ``gamma_upper`` bounds the optimum from above; it equals ``gamma`` when
    the sweep is exact and accounts for quantization otherwise.
    """

    n: int
    r: float
    log_gamma: float
    log_beta: float
    log_gamma_upper: float
    exact: bool

    @property
    def gamma(self) -> float:
        return math.exp(self.log_gamma)

    @property
    def beta(self) -> float:
        return math.exp(self.log_beta)


def _log_sub(a: float, b: float) -> float:
    """``log(exp(a) - exp(b))`` for ``a >= b``."""
    if b == -math.inf:
        return a
    if b >= a:
        return -math.inf
    return a + math.log1p(-math.exp(b - a))


def _greedy_np(log_p_cls, log_q_cls, log_budget):
    """Accept classes in the given order until the beta budget is spent, randomizing the last."""
    lg, lb = -math.inf, -math.inf
    for lp, lq in zip(log_p_cls, log_q_cls):
        nb = np.logaddexp(lb, lq)
        if nb <= log_budget:
            lg, lb = np.logaddexp(lg, lp), nb
            continue
        # randomize on the boundary class so that beta hits the budget exactly
        log_frac = _log_sub(log_budget, lb) - lq
        lg = np.logaddexp(lg, lp + log_frac)
        lb = log_budget
        break
    return float(lg), float(lb)


def _np_binary(pair: ClassicalPair, n: int, r: float):
    p, q = pair.p, pair.q
    k = np.arange(n + 1)
    binom = gammaln(n + 1) - gammaln(k + 1) - gammaln(n - k + 1)

    def log_mass(w):
        with np.errstate(divide="ignore"):
            l0, l1 = np.log(w[0]), np.log(w[1])
        out = binom.copy()
        out += np.where(k > 0, k * l1, 0.0) if np.isfinite(l1) else np.where(k > 0, -np.inf, 0.0)
        out += (np.where(n - k > 0, (n - k) * l0, 0.0) if np.isfinite(l0)
                else np.where(n - k > 0, -np.inf, 0.0))
        return out

    lp, lq = log_mass(p), log_mass(q)
    with np.errstate(invalid="ignore"):
        llr = lp - lq
    llr = np.where(np.isneginf(lp), -np.inf, np.where(np.isneginf(lq), np.inf, llr))
    order = np.argsort(-llr, kind="stable")
    lp, lq, llr = lp[order], lq[order], llr[order]
    # merge classes with equal likelihood ratio
    groups, start = [], 0
    for i in range(1, n + 2):
        if i == n + 1 or not np.isclose(llr[i], llr[start], rtol=0, atol=1e-12 * max(1, abs(llr[start]))
                                          if np.isfinite(llr[start]) else 0):
            groups.append((float(logsumexp(lp[start:i])), float(logsumexp(lq[start:i]))))
            start = i
    gp, gq = zip(*groups)
    return _greedy_np(gp, gq, -n * r)


def _np_quantized(pair: ClassicalPair, n: int, r: float, width: float):
    p, q = pair.p, pair.q
    regular = (p > 0) & (q > 0)
    free = (p > 0) & (q == 0)
    lr = np.log(p[regular]) - np.log(q[regular])
    kmin, kmax = np.floor(lr.min() / width), np.ceil(lr.max() / width)
    bins = n * (kmax - kmin) + 1
    if bins > MAX_BINS:
        new_width = width * bins / MAX_BINS
        warnings.warn(
            f"quantization width raised from {width:g} to {new_width:g} to bound the grid size",
            RuntimeWarning,
            stacklevel=3,
        )
        width = new_width
    k = np.rint(lr / width).astype(np.int64)
    err = float(np.max(np.abs(lr - k * width)))
    shift = k - k.min()
    size = int(n * shift.max()) + 1
    P = np.zeros(size)
    Q = np.zeros(size)
    P[0] = Q[0] = 1.0
    pr, qr = p[regular], q[regular]
    # renormalize each step to avoid underflow; keep the log of the scale
    log_sp = log_sq = 0.0
    top = 0
    for _ in range(n):
        newP = np.zeros(size)
        newQ = np.zeros(size)
        for s, a, b in zip(shift, pr, qr):
            newP[s : s + top + 1] += a * P[: top + 1]
            newQ[s : s + top + 1] += b * Q[: top + 1]
        top += int(shift.max())
        sp, sq = newP.sum(), newQ.sum()
        P, Q = newP / sp, newQ / sq
        log_sp += math.log(sp)
        log_sq += math.log(sq)
    with np.errstate(divide="ignore"):
        lP = np.log(P) + log_sp
        lQ = np.log(Q) + log_sq
    # bin index s corresponds to a total quantized LLR of (s + n k_min) * width
    order = np.arange(size)[::-1]
    lP, lQ = lP[order], lQ[order]
    # sequences containing a symbol outside supp q are accepted for free
    log_free = _log_sub(0.0, float(logsumexp(lP))) if np.any(free) else -math.inf
    budget = -n * r
    lg, lb = _greedy_np(lP, lQ, budget)
    lg = float(np.logaddexp(lg, log_free))
    # Neyman-Pearson: gamma <= e^t beta + P(LLR > t) for every t. The true LLR is
    # within n * err of the binned one, so t_i = L_i + n err leaves only the
    # bins strictly above i in the tail.
    llr_desc = (np.arange(size)[::-1] + n * k.min()) * width
    tail = np.concatenate([[-math.inf], np.logaddexp.accumulate(lP)[:-1]])
    bounds = np.logaddexp(llr_desc + n * err + budget, tail)
    upper = float(np.logaddexp(min(float(bounds.min()), 0.0), log_free))
    return lg, lb, max(min(upper, 0.0), lg)


def np_sweep(pair: ClassicalPair, n: int, r: float, width: float = NP_WIDTH) -> NPResult:
    """Largest ``gamma_n`` over randomized tests with ``beta_n <= exp(-n r)``.

    Binary alphabets are solved exactly by grouping sequences into type
    classes. Larger alphabets convolve a quantized log-likelihood ratio with
    bin ``width``; the result is then a valid test and ``gamma_upper``
    bounds the quantization loss.
    """
    if not pair.normalized:
        raise InvalidInputError("np_sweep requires normalized p and q")
    if n < 1:
        raise InvalidInputError("n must be a positive integer")
    if r <= 0:
        return NPResult(n, r, 0.0, 0.0, 0.0, True)
    if pair.p.size == 1:
        return NPResult(n, r, -n * r, -n * r, -n * r, True)
    if pair.p.size == 2:
        lg, lb = _np_binary(pair, n, r)
        return NPResult(n, r, lg, lb, lg, True)
    lg, lb, up = _np_quantized(pair, n, r, width)
    return NPResult(n, r, lg, lb, up, False)


@dataclass(frozen=True)
class ScEstimate:
    """Finite-n strong converse exponents and their extrapolation."""

    r: float
    n_grid: tuple
    exponents: tuple
    extrapolated: float
    prediction: float
    gap: float
    bound_holds: bool


def sc_exponent_estimate(
    pair: ClassicalPair, r: float, n_grid=(250, 500, 1000, 2000), u_grid=None
) -> ScEstimate:
    """Exponents ``-log(gamma_n)/n`` extrapolated in ``n`` and compared with ``H^_r``.

    The extrapolation fits ``e + a log(n)/n + b/n`` by least squares. The
    optimality bound ``-log(gamma_n)/n >= u (-log(beta_n)/n) - psi(u)`` is
    checked at every ``n`` on ``u_grid``.
    """
    ns = np.asarray(n_grid, dtype=float)
    results = [np_sweep(pair, int(n), r) for n in n_grid]
    exps = np.array([-res.log_gamma / res.n for res in results])
    if ns.size >= 3:
        A = np.column_stack([np.ones_like(ns), np.log(ns) / ns, 1.0 / ns])
        coef, *_ = np.linalg.lstsq(A, exps, rcond=None)
        extrapolated = float(coef[0])
    else:
        extrapolated = float(exps[-1])
    rho, sigma = pair.matrices()
    curve = psi_curve(rho, sigma, u_grid)
    prediction = hoeffding_anti(curve, r).H_hat.value
    finite = np.isfinite(curve.values)
    holds = True
    for res, e in zip(results, exps):
        b = -res.log_beta / res.n
        bound = np.max(curve.u[finite] * b - curve.values[finite])
        holds &= bool(e >= bound - 1e-8)
    return ScEstimate(
        float(r),
        tuple(int(n) for n in n_grid),
        tuple(float(x) for x in exps),
        extrapolated,
        prediction,
        abs(extrapolated - prediction),
        holds,
    )


# ---------------------------------------------------------------------------
# channels


def apply_channel(channel: Channel, A) -> np.ndarray:
    A = as_hermitian(A)
    if A.shape[0] != channel.d_in:
        raise InvalidInputError(f"channel acts on dimension {channel.d_in}, got {A.shape[0]}")
    return channel.apply(A)


def dpi_check(channel: Channel, rho, sigma, alpha: float, tol: float = DPI_TOL) -> bool:
    """``D*_alpha(Phi rho || Phi sigma) <= D*_alpha(rho || sigma) + tol``."""
    before = d_sandwiched(rho, sigma, alpha).value
    after = d_sandwiched(apply_channel(channel, rho), apply_channel(channel, sigma), alpha).value
    if math.isinf(before):
        return True
    return after <= before + tol


def hoeffding_dpi_check(channel: Channel, rho, sigma, r: float, tol: float = DPI_TOL) -> bool:
    """``H^_r(Phi rho || Phi sigma) >= H^_r(rho || sigma) - tol``."""
    before = hoeffding_anti(psi_curve(rho, sigma), r).H_hat.value
    after = hoeffding_anti(
        psi_curve(apply_channel(channel, rho), apply_channel(channel, sigma)), r
    ).H_hat.value
    return after >= before - tol


def transpose_identity_gap(channel: Channel, rho, A) -> float:
    """``|Tr A^{1/2} Phi(rho) A^{1/2} - Tr Phi*(A)^{1/2} rho Phi*(A)^{1/2}|``."""
    A = as_hermitian(A, "A")
    rho = as_hermitian(rho, "rho")

    def sqrt_psd(X):
        w, v, r = _psd_eigh(X)
        return v[:, :r] * np.sqrt(w[:r]) @ v[:, :r].conj().T

    a = sqrt_psd(A)
    lhs = np.trace(a @ channel.apply(rho) @ a)
    b = sqrt_psd(channel.adjoint(A))
    rhs = np.trace(b @ rho @ b)
    return float(abs(lhs - rhs))

