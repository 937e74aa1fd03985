"""Renyi (alpha, z)-quantities for positive operators.

For ``rho, sigma >= 0`` and ``(alpha, z)`` with ``alpha > 1``,

    Q_{alpha,z}(rho || sigma) = Tr (sigma^{(1-alpha)/2z} rho^{alpha/z} sigma^{(1-alpha)/2z})^z

when the support of ``rho`` lies in that of ``sigma``, and ``+inf`` otherwise.
``D = log Q / (alpha - 1)`` and the normalized variant subtracts
``log Tr rho / (alpha - 1)``.

All heavy lifting happens on the support subspaces: with ``U_rho, U_sigma``
the support eigenvectors, ``X = mu^{(1-alpha)/2z} U_sigma^* U_rho lam^{alpha/2z}``
is an ``rank(sigma) x rank(rho)`` matrix and ``Q = sum_i s_i(X)^{2z}``.
Working in logarithms keeps large ``alpha`` and extreme spectra finite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import mpmath
import numpy as np
from scipy.optimize import minimize
from scipy.special import logsumexp

from .operators import (
    RANK_TOL,
    SUPPORT_TOL,
    DiagonalModel,
    _psd_eigh,
    as_hermitian,
    partial_trace,
)
from .types import AlphaZ, ExtendedValue, InvalidInputError, NumericalError

AGREEMENT_TOL = 1e-8


@dataclass(frozen=True)
class _Spectra:
    lam: np.ndarray  # support eigenvalues of rho
    u: np.ndarray  # support eigenvectors of rho
    mu: np.ndarray
    v: np.ndarray
    nested: bool
    trace_rho: float


def _spectra(rho, sigma, rank_tol=RANK_TOL) -> _Spectra:
    w, U, r = _psd_eigh(rho, rank_tol, "rho")
    m, V, s = _psd_eigh(sigma, rank_tol, "sigma")
    if U.shape != V.shape:
        raise InvalidInputError(f"rho is {U.shape[0]}-dim but sigma is {V.shape[0]}-dim")
    if r == 0:
        raise InvalidInputError("rho must be nonzero")
    if s == 0:
        raise InvalidInputError("sigma must be nonzero")
    u, v = U[:, :r], V[:, :s]
    resid = u - v @ (v.conj().T @ u)
    nested = float(np.linalg.norm(resid, 2)) <= SUPPORT_TOL
    return _Spectra(w[:r], u, m[:s], v, nested, float(np.sum(w[:r])))


def _model_logs(rho, sigma):
    """Log-eigenvalues of a commuting pair given as diagonal models."""
    if rho.level != sigma.level:
        raise InvalidInputError(
            f"models are truncated at different levels ({rho.level} vs {sigma.level})"
        )
    return rho.log_eigenvalues(), sigma.log_eigenvalues()


def _coerce_pair(rho, sigma):
    """Return either ('model', rho, sigma) or ('matrix', rho, sigma)."""
    if isinstance(rho, DiagonalModel) and isinstance(sigma, DiagonalModel):
        return "model", rho, sigma
    if isinstance(rho, DiagonalModel):
        rho = np.diag(rho.eigenvalues())
    if isinstance(sigma, DiagonalModel):
        sigma = np.diag(sigma.eigenvalues())
    return "matrix", rho, sigma


def _x_matrix(sp: _Spectra, p: AlphaZ):
    """Scaled ``X`` and the log of the scale factored out of it."""
    a = (1.0 - p.alpha) / (2.0 * p.z)
    b = p.alpha / (2.0 * p.z)
    left = a * np.log(sp.mu)
    right = b * np.log(sp.lam)
    cl, cr = left.max(), right.max()
    overlap = sp.v.conj().T @ sp.u
    X = np.exp(left - cl)[:, None] * overlap * np.exp(right - cr)[None, :]
    return X, cl + cr


def _log_q_two_ways(sp: _Spectra, p: AlphaZ) -> tuple[float, float]:
    X, shift = _x_matrix(sp, p)
    s = np.linalg.svd(X, compute_uv=False)
    s = s[s > 0]
    log_q_sv = float(logsumexp(2.0 * p.z * (np.log(s) + shift)))
    ev = np.linalg.eigvalsh(X.conj().T @ X)
    ev = ev[ev > 0]
    log_q_tr = float(logsumexp(p.z * (np.log(ev) + 2.0 * shift)))
    # eigenvalue noise of size eps * lambda_max enters as (eps * lambda_max)^z, and a
    # relative rounding error delta in a singular value is amplified to 2 z delta
    eps = 64 * np.finfo(float).eps
    allowance = AGREEMENT_TOL + 2.0 * p.z * eps + ev.size * eps**p.z
    gap = abs(math.expm1(log_q_tr - log_q_sv))
    if gap > allowance:
        raise NumericalError(f"trace and Schatten forms of Q disagree (relative gap {gap:.3e})")
    return log_q_sv, log_q_tr


def _log_q_mp(rho, sigma, p: AlphaZ, dps: int = 40, rank_tol: float = RANK_TOL) -> float:
    """``log Q`` evaluated with mpmath at ``dps`` digits."""
    with mpmath.workdps(dps):
        def eig(A):
            M = mpmath.matrix(np.asarray(A, dtype=complex).tolist())
            E, Q = mpmath.eighe(M)
            vals = [mpmath.re(e) for e in E]
            top = max(vals)
            keep = [i for i, e in enumerate(vals) if e > rank_tol * top]
            return [vals[i] for i in keep], Q, keep

        lam, U, ku = eig(as_hermitian(rho, "rho"))
        mu, V, kv = eig(as_hermitian(sigma, "sigma"))
        a = mpmath.mpf(1 - p.alpha) / (2 * p.z)
        b = mpmath.mpf(p.alpha) / (2 * p.z)
        n = U.rows
        X = mpmath.matrix(len(kv), len(ku))
        for i, ii in enumerate(kv):
            for j, jj in enumerate(ku):
                ov = mpmath.fsum(mpmath.conj(V[k, ii]) * U[k, jj] for k in range(n))
                X[i, j] = mu[i] ** a * ov * lam[j] ** b
        G = X.H * X
        ev, _ = mpmath.eighe(G)
        terms = [mpmath.re(e) ** p.z for e in ev if mpmath.re(e) > 0]
        return float(mpmath.log(mpmath.fsum(terms)))


def log_q_alpha_z(rho, sigma, p, rank_tol: float = RANK_TOL, extended: bool = False) -> ExtendedValue:
    """``log Q_{alpha,z}(rho || sigma)``, overflow-free.

    Both the trace form and the Schatten form are evaluated and must agree to
    1e-8 relative; the Schatten (singular value) form is returned.
    """
    p = AlphaZ.coerce(p)
    kind, rho, sigma = _coerce_pair(rho, sigma)
    if kind == "model":
        lr, ls = _model_logs(rho, sigma)
        return ExtendedValue(float(logsumexp(p.alpha * lr + (1 - p.alpha) * ls)))
    sp = _spectra(rho, sigma, rank_tol)
    if not sp.nested:
        return ExtendedValue(math.inf, "support_violation")
    if extended:
        return ExtendedValue(_log_q_mp(rho, sigma, p, rank_tol=rank_tol))
    log_q, _ = _log_q_two_ways(sp, p)
    return ExtendedValue(log_q)


def q_alpha_z(rho, sigma, p, rank_tol: float = RANK_TOL, extended: bool = False) -> ExtendedValue:
    """``Q_{alpha,z}(rho || sigma)``; ``+inf`` with a reason when undefined or too large."""
    lq = log_q_alpha_z(rho, sigma, p, rank_tol, extended)
    if not lq.is_finite:
        return lq
    return ExtendedValue.of(math.exp(lq.value) if lq.value < 709.0 else math.inf, "overflow")


def rho_sigma_alpha_z(rho, sigma, p, rank_tol: float = RANK_TOL):
    """The operator ``sigma^{(1-a)/2z} rho^{a/z} sigma^{(1-a)/2z}``.

    Returns an ``ExtendedValue(+inf, "support_violation")`` instead when the
    support of ``rho`` is not contained in that of ``sigma``.
    """
    p = AlphaZ.coerce(p)
    _, rho, sigma = _coerce_pair(rho, sigma)
    sp = _spectra(rho, sigma, rank_tol)
    if not sp.nested:
        return ExtendedValue(math.inf, "support_violation")
    X, shift = _x_matrix(sp, p)
    X = X * math.exp(shift)
    R = sp.v @ (X @ X.conj().T) @ sp.v.conj().T
    return 0.5 * (R + R.conj().T)


def d_alpha_z(rho, sigma, p, rank_tol: float = RANK_TOL, extended: bool = False) -> ExtendedValue:
    """Renyi (alpha, z)-divergence ``log Q / (alpha - 1)``."""
    p = AlphaZ.coerce(p)
    lq = log_q_alpha_z(rho, sigma, p, rank_tol, extended)
    if not lq.is_finite:
        return lq
    return ExtendedValue(lq.value / (p.alpha - 1.0))


def _log_trace(rho) -> float:
    if isinstance(rho, DiagonalModel):
        return float(logsumexp(rho.log_eigenvalues()))
    w, _, r = _psd_eigh(rho, RANK_TOL, "rho")
    if r == 0:
        raise InvalidInputError("rho must be nonzero")
    return math.log(float(np.sum(w[:r])))


def d_tilde(rho, sigma, p, rank_tol: float = RANK_TOL, extended: bool = False) -> ExtendedValue:
    """Normalized divergence ``D_{alpha,z} - log Tr rho / (alpha - 1)``."""
    p = AlphaZ.coerce(p)
    d = d_alpha_z(rho, sigma, p, rank_tol, extended)
    if not d.is_finite:
        return d
    return ExtendedValue(d.value - _log_trace(rho) / (p.alpha - 1.0))


def d_sandwiched(rho, sigma, alpha: float, rank_tol: float = RANK_TOL) -> ExtendedValue:
    """Sandwiched Renyi divergence, ``z = alpha``."""
    return d_alpha_z(rho, sigma, AlphaZ.sandwiched(alpha), rank_tol)


def d_petz(rho, sigma, alpha: float, rank_tol: float = RANK_TOL) -> ExtendedValue:
    """Petz-type Renyi divergence, ``z = 1``."""
    return d_alpha_z(rho, sigma, AlphaZ.petz(alpha), rank_tol)


def d_max(rho, sigma, rank_tol: float = RANK_TOL) -> ExtendedValue:
    """Max-relative entropy ``log inf{lambda : rho <= lambda sigma}``."""
    kind, rho, sigma = _coerce_pair(rho, sigma)
    if kind == "model":
        lr, ls = _model_logs(rho, sigma)
        return ExtendedValue(float(np.max(lr - ls)))
    sp = _spectra(rho, sigma, rank_tol)
    if not sp.nested:
        return ExtendedValue(math.inf, "support_violation")
    X = (sp.mu ** -0.5)[:, None] * (sp.v.conj().T @ sp.u) * (sp.lam ** 0.5)[None, :]
    return ExtendedValue(2.0 * math.log(np.linalg.norm(X, 2)))


def relative_entropy(rho, sigma, rank_tol: float = RANK_TOL) -> ExtendedValue:
    """Umegaki relative entropy ``Tr rho (log rho - log sigma)`` (not normalized)."""
    kind, rho, sigma = _coerce_pair(rho, sigma)
    if kind == "model":
        lr, ls = _model_logs(rho, sigma)
        return ExtendedValue(math.fsum(np.exp(lr) * (lr - ls)))
    sp = _spectra(rho, sigma, rank_tol)
    if not sp.nested:
        return ExtendedValue(math.inf, "support_violation")
    weights = np.abs(sp.v.conj().T @ sp.u) ** 2  # |<v_j|u_i>|^2, shape (s, r)
    cross = np.log(sp.mu) @ weights  # sum_j |<v_j|u_i>|^2 log mu_j
    return ExtendedValue(math.fsum(sp.lam * (np.log(sp.lam) - cross)))


def renyi_entropy(rho, alpha: float, rank_tol: float = RANK_TOL) -> float:
    """``log Tr rho^alpha / (1 - alpha)``, cross-checked against ``-D(rho || I)``."""
    if not alpha > 1:
        raise InvalidInputError(f"alpha must exceed 1, got {alpha}")
    w, _, r = _psd_eigh(rho, rank_tol, "rho")
    if r == 0:
        raise InvalidInputError("rho must be nonzero")
    direct = float(logsumexp(alpha * np.log(w[:r]))) / (1.0 - alpha)
    rho = as_hermitian(rho)
    via_d = -d_alpha_z(rho, np.eye(rho.shape[0]), AlphaZ.sandwiched(alpha), rank_tol).value
    if abs(direct - via_d) > 1e-10 * max(1.0, abs(direct)):
        raise NumericalError(f"Renyi entropy routes disagree: {direct} vs {via_d}")
    return direct


def _check_bipartite(rho_ab, dims):
    dims = tuple(int(d) for d in dims)
    if len(dims) != 2:
        raise InvalidInputError("dims must be (d_A, d_B)")
    rho_ab = as_hermitian(rho_ab, "rho_AB")
    if rho_ab.shape[0] != dims[0] * dims[1]:
        raise InvalidInputError(f"rho_AB has dimension {rho_ab.shape[0]}, dims give {dims}")
    return rho_ab, dims


def cond_entropy_down(rho_ab, dims, p, rank_tol: float = RANK_TOL) -> float:
    """Conditional entropy ``-D_{alpha,z}(rho_AB || I_A (x) rho_B)``."""
    rho_ab, (da, db) = _check_bipartite(rho_ab, dims)
    rho_b = partial_trace(rho_ab, (da, db), keep=[1])
    return -d_alpha_z(rho_ab, np.kron(np.eye(da), rho_b), p, rank_tol).value


@dataclass(frozen=True)
class CondEntropyResult:
    """Outcome of the local search for the optimized conditional entropy.

    ``value`` is ``-min_omega D(rho_AB || I (x) omega)`` over the searched
    points, ``omega`` the best marginal found and ``gap_estimate`` the spread
    between the best and worst local optima reached from the starts.
    """

    value: float
    omega: np.ndarray
    gap_estimate: float
    starts: int


def _omega_from(params, db):
    M = params[: db * db].reshape(db, db) + 1j * params[db * db :].reshape(db, db)
    w = M @ M.conj().T
    return w / np.trace(w).real


def cond_entropy_up(
    rho_ab, dims, p, starts: int = 20, seed: int = 0, rank_tol: float = RANK_TOL
) -> CondEntropyResult:
    """Optimized conditional entropy ``-inf_omega D_{alpha,z}(rho_AB || I_A (x) omega_B)``.

    The infimum is approached by quasi-Newton local search from
    ``omega = rho_B`` and ``starts`` seeded random states.
    """
    p = AlphaZ.coerce(p)
    rho_ab, (da, db) = _check_bipartite(rho_ab, dims)
    rho_b = partial_trace(rho_ab, (da, db), keep=[1])
    eye_a = np.eye(da)

    def objective(params):
        omega = _omega_from(params, db)
        d = d_alpha_z(rho_ab, np.kron(eye_a, omega), p, rank_tol)
        return d.value if d.is_finite else 1e6

    rng = np.random.default_rng(seed)
    sqrt_b = _psd_eigh(rho_b)[1] @ np.diag(np.sqrt(np.clip(_psd_eigh(rho_b)[0], 0, None)))
    inits = [np.concatenate([sqrt_b.real.ravel(), sqrt_b.imag.ravel()])]
    inits += [rng.standard_normal(2 * db * db) for _ in range(starts)]
    results = []
    for x0 in inits:
        res = minimize(objective, x0, method="BFGS", options={"gtol": 1e-9, "maxiter": 500})
        results.append((min(res.fun, objective(x0)), res.x if res.fun <= objective(x0) else x0))
    values = np.array([r[0] for r in results])
    best = int(np.argmin(values))
    return CondEntropyResult(
        value=-float(values[best]),
        omega=_omega_from(results[best][1], db),
        gap_estimate=float(values.max() - values.min()),
        starts=len(inits),
    )


def lambda_min_dominance(rho, sigma, p, rank_tol: float = RANK_TOL) -> ExtendedValue:
    """Smallest ``lambda`` with ``rho^{alpha/z} <= lambda sigma^{(alpha-1)/z}``.

    Equals the operator norm of ``rho_{sigma,alpha,z}``; the pair belongs to
    the dominance class exactly when this is finite.
    """
    p = AlphaZ.coerce(p)
    kind, rho, sigma = _coerce_pair(rho, sigma)
    if kind == "model":
        lr, ls = _model_logs(rho, sigma)
        return ExtendedValue.of(math.exp(float(np.max(((p.alpha * lr + (1 - p.alpha) * ls) / p.z)))))
    sp = _spectra(rho, sigma, rank_tol)
    if not sp.nested:
        return ExtendedValue(math.inf, "support_violation")
    X, shift = _x_matrix(sp, p)
    return ExtendedValue.of(math.exp(2.0 * (math.log(np.linalg.norm(X, 2)) + shift)))
