"""Variational lower bounds for ``Q_{alpha,z}``.

For a positive witness ``H``

    F(H) = Tr (H^{1/2} rho^{alpha/z} H^{1/2})^{z/alpha}
    G(H) = Tr (H^{1/2} sigma^{(alpha-1)/z} H^{1/2})^{z/(alpha-1)}

and ``alpha F(H) + (1 - alpha) G(H) <= Q`` as well as
``alpha log F(H) + (1 - alpha) log G(H) <= log Q``. Both bounds are attained
by the witness returned from :func:`optimizer_H`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .divergences import _spectra, log_q_alpha_z
from .operators import RANK_TOL, _psd_eigh, as_hermitian, spectral_truncation
from .types import AlphaZ, ExtendedValue, InvalidInputError, InvalidWitnessError

CERTIFY_GAP = 1e-6
G_FLOOR = 1e-300


@dataclass(frozen=True)
class VariationalWitness:
    H: np.ndarray
    F: float
    G: float
    objective_Q: float
    objective_logQ: float


def _factor(H):
    """A matrix ``B`` with ``B B* = H``; only negative rounding noise is removed.

    Witnesses can be badly conditioned, so small eigenvalues of ``H`` are kept
    and the rank threshold is applied to the singular values downstream.
    """
    H = as_hermitian(H, "H")
    w, v = np.linalg.eigh(H)
    if w[0] < -RANK_TOL * max(w[-1], 0.0):
        raise InvalidWitnessError(f"witness is not positive semidefinite (eigenvalue {w[0]:.3e})")
    return v * np.sqrt(np.clip(w, 0.0, None))


def _schatten_power_sum(B, A, exponent, rank_tol):
    """``sum_i s_i^exponent`` over the singular values of ``B* A`` (those of ``H^{1/2} A``)."""
    s = np.linalg.svd(B.conj().T @ A, compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return 0.0
    s = s[s > rank_tol * s[0]]
    return float(np.sum(s**exponent))


def _support_power(A, q, rank_tol):
    w, v, r = _psd_eigh(A, rank_tol)
    vs = v[:, :r]
    return (vs * w[:r] ** q) @ vs.conj().T


def eval_F(H, rho, p, rank_tol: float = RANK_TOL) -> float:
    """``Tr (H^{1/2} rho^{alpha/z} H^{1/2})^{z/alpha}`` via singular values."""
    p = AlphaZ.coerce(p)
    return _f_from_factor(_factor(H), rho, p, rank_tol)


def _f_from_factor(B, rho, p, rank_tol):
    A = _support_power(rho, p.alpha / (2 * p.z), rank_tol)
    return _schatten_power_sum(B, A, 2 * p.z / p.alpha, rank_tol)


def _g_from_factor(B, sigma, p, rank_tol):
    C = _support_power(sigma, (p.alpha - 1) / (2 * p.z), rank_tol)
    return _schatten_power_sum(B, C, 2 * p.z / (p.alpha - 1), rank_tol)


def eval_G(H, sigma, p, rank_tol: float = RANK_TOL) -> float:
    """``Tr (H^{1/2} sigma^{(alpha-1)/z} H^{1/2})^{z/(alpha-1)}`` via singular values."""
    p = AlphaZ.coerce(p)
    return _g_from_factor(_factor(H), sigma, p, rank_tol)


def q_var_objective(H, rho, sigma, p, rank_tol: float = RANK_TOL) -> float:
    """``alpha F(H) + (1 - alpha) G(H)``, a lower bound on ``Q``."""
    p = AlphaZ.coerce(p)
    return p.alpha * eval_F(H, rho, p, rank_tol) + (1 - p.alpha) * eval_G(H, sigma, p, rank_tol)


def logq_var_objective(H, rho, sigma, p, rank_tol: float = RANK_TOL) -> float:
    """``alpha log F(H) + (1 - alpha) log G(H)``, a lower bound on ``log Q``.

    Raises :class:`InvalidWitnessError` when ``G(H)`` vanishes numerically.
    """
    p = AlphaZ.coerce(p)
    F = eval_F(H, rho, p, rank_tol)
    G = eval_G(H, sigma, p, rank_tol)
    if G <= G_FLOOR:
        raise InvalidWitnessError(f"G(H) = {G:.3e} is numerically zero")
    if F <= 0.0:
        return -math.inf
    return p.alpha * math.log(F) + (1 - p.alpha) * math.log(G)


def _witness(H, rho, sigma, p, rank_tol, B=None):
    B = _factor(H) if B is None else B
    F = _f_from_factor(B, rho, p, rank_tol)
    G = _g_from_factor(B, sigma, p, rank_tol)
    obj = p.alpha * F + (1 - p.alpha) * G
    log_obj = (
        p.alpha * math.log(F) + (1 - p.alpha) * math.log(G) if F > 0 and G > G_FLOOR else -math.inf
    )
    return VariationalWitness(H, F, G, obj, log_obj)


def optimizer_H(rho, sigma, p, window=None, rank_tol: float = RANK_TOL) -> VariationalWitness:
    """The saturating witness ``S (S rho^{alpha/z} S)^{alpha-1} S``, ``S = sigma_n^{(1-alpha)/2z}``.

    ``sigma_n`` is the compression of ``sigma`` to the spectral window
    ``window = (c, d)`` (default: the whole support). At this witness
    ``F = G = Tr (P rho_{sigma,alpha,z} P)^z``.
    """
    p = AlphaZ.coerce(p)
    rho, sigma = as_hermitian(rho, "rho"), as_hermitian(sigma, "sigma")
    if window is not None:
        P = spectral_truncation(sigma, *window)
        sigma_n = P @ sigma @ P
    else:
        sigma_n = sigma
    sp = _spectra(rho, sigma_n, rank_tol)
    a = (1 - p.alpha) / (2 * p.z)
    S = (sp.v * sp.mu**a) @ sp.v.conj().T
    R = S @ _support_power(rho, p.alpha / p.z, rank_tol) @ S
    R = 0.5 * (R + R.conj().T)
    B = S @ _support_power(R, (p.alpha - 1) / 2, rank_tol)
    H = B @ B.conj().T
    return _witness(0.5 * (H + H.conj().T), rho, sigma, p, rank_tol, B=B)


def dominance_witnesses(rho, sigma, p, scales=None, rank_tol: float = RANK_TOL):
    """Rank-one witnesses ``t |x><x|`` along a direction where dominance fails.

    ``x`` is taken in the kernel of ``sigma`` with ``<x|rho|x> > 0``, so
    ``G = 0`` and the linear objective grows without bound in ``t``.
    """
    p = AlphaZ.coerce(p)
    rho, sigma = as_hermitian(rho, "rho"), as_hermitian(sigma, "sigma")
    _, v, r = _psd_eigh(sigma, rank_tol, "sigma")
    ker = v[:, r:]
    if ker.shape[1] == 0:
        raise InvalidInputError("sigma has full support; no dominance-violating direction")
    w, y = np.linalg.eigh(ker.conj().T @ rho @ ker)
    if w[-1] <= rank_tol * max(np.linalg.eigvalsh(rho)[-1], 1e-300):
        raise InvalidInputError("rho vanishes on the kernel of sigma")
    x = ker @ y[:, -1]
    scales = [10.0**k for k in range(0, 13, 2)] if scales is None else scales
    return [t * np.outer(x, x.conj()) for t in scales]


@dataclass(frozen=True)
class VariationalCertificate:
    best_objective: float
    Q: ExtendedValue
    gap: float
    certified: bool


def var_certificate(rho, sigma, p, witnesses, rank_tol: float = RANK_TOL) -> VariationalCertificate:
    """Best linear objective over ``witnesses`` compared with ``Q``.

    ``gap`` is the relative shortfall ``(Q - best) / Q``; the certificate holds
    when it is below 1e-6. For ``Q = +inf`` the certificate holds when the
    objective values exceed 1e12.
    """
    p = AlphaZ.coerce(p)
    best = max(q_var_objective(H, rho, sigma, p, rank_tol) for H in witnesses)
    lq = log_q_alpha_z(rho, sigma, p, rank_tol)
    if not lq.is_finite:
        return VariationalCertificate(best, lq, math.inf, best > 1e12)
    Q = math.exp(lq.value)
    gap = (Q - best) / Q
    return VariationalCertificate(best, ExtendedValue(Q), gap, abs(gap) < CERTIFY_GAP)

