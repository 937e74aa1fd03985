"""Finite-dimensional approximation ladders.

A ladder evaluates a quantity on a growing family of compressions
``P_N rho P_N, P_N sigma P_N`` and decides whether the values settle, blow up,
or neither. Diagonal models use the first ``N`` basis vectors; matrices use
spectral windows of ``sigma``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .divergences import d_max, d_tilde, log_q_alpha_z
from .operators import (
    RANK_TOL,
    DiagonalModel,
    _psd_eigh,
    as_hermitian,
    compress,
    spectral_truncation,
    support_projection,
)
from .types import AlphaZ, ExtendedValue, InvalidInputError

CONV_TOL = 1e-6
DIV_CAP = 1e12
EXTENDED_COND = 1e10
DEFAULT_LEVELS = tuple(2**k for k in range(1, 13))
DEFAULT_ALPHAS = tuple(float(2**k) for k in range(1, 13))


@dataclass(frozen=True)
class LadderReport:
    """Values of a quantity along an increasing family of truncations.

    ``verdict`` is ``"converged"``, ``"diverging"`` or ``"inconclusive"``.
    ``limit`` and ``est_error`` are set for converged ladders. ``reference``
    holds a comparison value when one applies (``D_max`` for alpha ladders).
    """

    levels: tuple
    values: tuple
    monotone: bool
    verdict: str
    limit: float | None = None
    est_error: float | None = None
    log_values: tuple | None = None
    reference: float | None = None
    notes: tuple = field(default_factory=tuple)

    def floats(self) -> np.ndarray:
        return np.array([v.value for v in self.values])

    @property
    def log_limit(self) -> float | None:
        """Log of the limit, falling back to the last log value when the limit underflows."""
        if self.limit is not None and self.limit > 0.0:
            return math.log(self.limit)
        return self.log_values[-1] if self.log_values else None


def _is_monotone(vals: np.ndarray, slack: float, increasing: bool = True) -> bool:
    finite = vals[np.isfinite(vals)]
    if finite.size < 2:
        return True
    diff = np.diff(finite) if increasing else -np.diff(finite)
    scale = np.maximum(1.0, np.abs(finite[1:]))
    if not np.all(diff >= -slack * scale):
        return False
    # an infinite value may only appear after all the finite ones
    first_inf = np.argmax(~np.isfinite(vals)) if not np.all(np.isfinite(vals)) else vals.size
    return bool(np.all(np.isfinite(vals[:first_inf])))


def assess(values, conv_tol: float = CONV_TOL, div_cap: float = DIV_CAP):
    """Classify a ladder of non-negative values.

    Returns ``(verdict, limit, est_error, notes)``.

    * diverging: a value exceeds ``div_cap``, the values grow tenfold over the
      last three levels, or the last three increments do not shrink;
    * converged: the last three relative increments are below ``conv_tol``,
      or the non-negative increments contract geometrically (or vanish) and
      the extrapolated tail is below ``conv_tol``;
    * inconclusive otherwise.
    """
    v = np.asarray(values, dtype=float)
    notes = []
    if v.size == 0:
        return "inconclusive", None, None, ("empty ladder",)
    if np.any(~np.isfinite(v)) or np.any(v > div_cap):
        return "diverging", None, None, (f"value above cap {div_cap:g}",)
    if v.size >= 4 and v[-4] > 0 and v[-1] >= 10.0 * v[-4]:
        return "diverging", None, None, ("tenfold growth over the last three levels",)
    if v.size < 4:
        return "inconclusive", None, None, ("fewer than four levels",)
    inc = np.diff(v)[-3:]
    scale = max(abs(v[-1]), np.finfo(float).tiny)
    rel = np.abs(inc) / scale
    if np.all(rel < conv_tol):
        return "converged", float(v[-1]), float(abs(inc[-1])), tuple(notes)
    if np.all(inc > 0) and inc[2] >= inc[1] >= inc[0]:
        return "diverging", None, None, ("increments are not shrinking",)
    if np.all(inc >= 0) and inc[0] > 0:
        # an increment of exactly zero means the sum has saturated in floating point
        q1 = inc[1] / inc[0]
        q2 = inc[2] / inc[1] if inc[1] > 0 else (0.0 if inc[2] == 0 else math.inf)
        q = max(q1, q2)
        if q < 0.9:
            tail = inc[2] * q / (1.0 - q)
            if tail / scale < conv_tol:
                notes.append("geometric tail extrapolation")
                return "converged", float(v[-1] + tail), float(tail), tuple(notes)
    return "inconclusive", None, None, tuple(notes)


def _model_levels(rho: DiagonalModel, sigma: DiagonalModel, levels):
    levels = tuple(DEFAULT_LEVELS if levels is None else levels)
    cap = [m.max_level for m in (rho, sigma) if m.max_level is not None]
    if cap:
        levels = tuple(n for n in levels if n <= min(cap)) or (min(cap),)
    if any(int(n) < 1 for n in levels) or list(levels) != sorted(levels):
        raise InvalidInputError("levels must be increasing positive integers")
    return tuple(int(n) for n in levels)


def _model_log_partial_sums(rho: DiagonalModel, sigma: DiagonalModel, p: AlphaZ, levels):
    n_max = levels[-1]
    terms = p.alpha * rho.log_eigenvalues(n_max) + (1 - p.alpha) * sigma.log_eigenvalues(n_max)
    partial = np.logaddexp.accumulate(terms)
    return np.array([partial[n - 1] for n in levels])


PROBE_EXPONENTS = np.arange(1, 201)


def _term_probe(rho: DiagonalModel, sigma: DiagonalModel, p: AlphaZ, div_cap: float):
    """Largest single term of the series at ``N = 2^k``, ``k <= 200``.

    Every term is a lower bound on the full sum, so one term above the cap
    proves divergence beyond the reach of any explicit ladder.
    """
    if rho.max_level is not None or sigma.max_level is not None:
        return None
    k = 2.0**PROBE_EXPONENTS
    with np.errstate(over="ignore", invalid="ignore"):
        t = p.alpha * rho.log_eigenvalues_at(k) + (1 - p.alpha) * sigma.log_eigenvalues_at(k)
    t = np.where(np.isnan(t), -np.inf, t)
    i = int(np.argmax(t))
    if t[i] > math.log(div_cap):
        return int(PROBE_EXPONENTS[i])
    return None


def _log_to_value(lv: float) -> ExtendedValue:
    if lv >= 709.0:
        return ExtendedValue(math.inf, "overflow")
    return ExtendedValue(math.exp(lv))


def _matrix_windows(sigma, levels):
    w, _, r = _psd_eigh(sigma, RANK_TOL, "sigma")
    top, bottom = float(w[0]), float(w[r - 1])
    if levels is None:
        k_max = max(12, int(math.ceil(math.log2(top / bottom))) + 1)
        levels = tuple(range(1, k_max + 1))
    windows = []
    for lev in levels:
        if isinstance(lev, (tuple, list)):
            windows.append((float(lev[0]), float(lev[1])))
        else:
            windows.append((top * 2.0 ** -int(lev), 2.0 * top))
    return tuple(levels), windows


def _compressed_log_q(P, rho, sigma, p, extended):
    rho_n, sigma_n = P @ rho @ P, P @ sigma @ P
    if np.trace(rho_n).real <= 0:
        return -math.inf
    return log_q_alpha_z(rho_n, sigma_n, p, extended=extended).value


def ladder(
    rho,
    sigma,
    p,
    levels=None,
    conv_tol: float = CONV_TOL,
    div_cap: float = DIV_CAP,
) -> LadderReport:
    """``Q_{alpha,z}`` along a truncation ladder.

    For diagonal models the levels are basis cut-offs ``N`` (default ``2^k``,
    k = 1..12) and the partial sums are accumulated in log space. For matrices
    a level ``k`` is the spectral window ``(lambda_max 2^-k, 2 lambda_max)`` of
    ``sigma``; explicit ``(c, d)`` windows are also accepted. Windows whose
    condition number exceeds 1e10 are evaluated in extended precision.
    """
    p = AlphaZ.coerce(p)
    if isinstance(rho, DiagonalModel) and isinstance(sigma, DiagonalModel):
        levels = _model_levels(rho, sigma, levels)
        logs = _model_log_partial_sums(rho, sigma, p, levels)
    else:
        rho, sigma = as_hermitian(rho, "rho"), as_hermitian(sigma, "sigma")
        levels, windows = _matrix_windows(sigma, levels)
        logs = []
        for c, d in windows:
            P = spectral_truncation(sigma, c, d)
            extended = max(d, 1e-300) / max(c, 1e-300) > EXTENDED_COND
            logs.append(_compressed_log_q(P, rho, sigma, p, extended))
        logs = np.array(logs)
    values = tuple(_log_to_value(lv) for lv in logs)
    floats = np.array([v.value for v in values])
    verdict, limit, err, notes = assess(floats, conv_tol, div_cap)
    if verdict != "diverging" and isinstance(rho, DiagonalModel):
        k = _term_probe(rho, sigma, p, div_cap)
        if k is not None:
            verdict, limit, err = "diverging", None, None
            notes = (f"single term at N = 2^{k} exceeds cap {div_cap:g}",)
    if verdict == "diverging":
        values = tuple(
            v if v.is_finite else ExtendedValue(math.inf, "ladder_divergent") for v in values
        )
    return LadderReport(
        levels=tuple(levels),
        values=values,
        monotone=_is_monotone(floats, 1e-10),
        verdict=verdict,
        limit=limit,
        est_error=err,
        log_values=tuple(float(x) for x in logs),
        notes=notes,
    )


def escape_projections(rho, sigma, ts=None) -> list[np.ndarray]:
    """Rank-one projections onto ``sqrt(1 - t) chi + sqrt(t) phi``.

    ``chi`` lies in the kernel of ``sigma`` with ``<chi|rho|chi> > 0`` and
    ``phi`` in the support of ``sigma``. As ``t -> 0`` the compressed ``Q``
    blows up, which certifies ``Q = +inf`` for pairs whose supports do not nest.
    """
    rho, sigma = as_hermitian(rho, "rho"), as_hermitian(sigma, "sigma")
    ts = [10.0**-k for k in range(1, 13)] if ts is None else ts
    S = support_projection(sigma)
    K = np.eye(sigma.shape[0]) - S
    w, v = np.linalg.eigh(K @ rho @ K)
    if w[-1] <= RANK_TOL * max(np.linalg.eigvalsh(rho)[-1], 1e-300):
        raise InvalidInputError("the support of rho lies inside that of sigma")
    chi = v[:, -1]
    phi = np.linalg.eigh(sigma)[1][:, -1]
    out = []
    for t in ts:
        psi = math.sqrt(1.0 - t) * chi + math.sqrt(t) * phi
        psi /= np.linalg.norm(psi)
        out.append(np.outer(psi, psi.conj()))
    return out


def q_fa_estimate(
    rho, sigma, p, family, conv_tol: float = CONV_TOL, div_cap: float = DIV_CAP
) -> ExtendedValue:
    """Supremum of ``Q(P rho P || P sigma P)`` over a supplied family of projections.

    The family is read as a ladder; if its values diverge the estimate is
    ``+inf`` with reason ``"ladder_divergent"``.
    """
    p = AlphaZ.coerce(p)
    rho, sigma = as_hermitian(rho, "rho"), as_hermitian(sigma, "sigma")
    logs = []
    for P in family:
        P = np.asarray(P)
        if np.trace(P @ sigma @ P).real <= 0:
            continue
        logs.append(_compressed_log_q(P, rho, sigma, p, False))
    if not logs:
        raise InvalidInputError("no projection in the family overlaps the support of sigma")
    values = np.array([_log_to_value(lv).value for lv in logs])
    verdict, *_ = assess(values, conv_tol, div_cap)
    if verdict == "diverging":
        return ExtendedValue(math.inf, "ladder_divergent")
    return ExtendedValue(float(np.max(values)))


def contraction_vs_projection_check(K, rho, sigma, p, P=None, slack: float = 1e-9) -> bool:
    """Check ``Q(K rho K* || K sigma K*) <= Q(P rho P || P sigma P)``.

    ``P`` defaults to the support projection of ``|K|``. The inequality is
    only guaranteed for ``max(alpha - 1, alpha / 2) <= z <= alpha``.
    """
    p = AlphaZ.coerce(p)
    if not p.in_monotone_range:
        raise InvalidInputError(
            f"(alpha, z) = ({p.alpha}, {p.z}) is outside max(alpha-1, alpha/2) <= z <= alpha"
        )
    K = np.asarray(K)
    rho, sigma = as_hermitian(rho, "rho"), as_hermitian(sigma, "sigma")
    if P is None:
        P = support_projection(K.conj().T @ K)
    lhs = log_q_alpha_z(compress(K, rho), compress(K, sigma), p).value
    rhs = log_q_alpha_z(compress(P, rho), compress(P, sigma), p).value
    if math.isinf(rhs):
        return True
    return lhs <= rhs + math.log1p(slack)


def alpha_limit_to_dmax(
    rho, sigma, alpha_grid=None, tol: float = 1e-2, levels=None
) -> LadderReport:
    """Normalized sandwiched divergences along ``alpha = 2^k`` against ``D_max``.

    For matrices each value is computed directly; for diagonal models through
    a basis ladder, with ``+inf`` when that ladder diverges. The limit is a
    Richardson estimate from the last two values; the note
    ``"limit differs from D_max"`` flags a pair where the large-alpha limit and
    ``D_max`` disagree by more than ``tol``.
    """
    alphas = tuple(DEFAULT_ALPHAS if alpha_grid is None else (float(a) for a in alpha_grid))
    if isinstance(rho, DiagonalModel) and isinstance(sigma, DiagonalModel):
        vals, dmax = _model_alpha_values(rho, sigma, alphas, levels)
    else:
        vals = [d_tilde(rho, sigma, AlphaZ.sandwiched(a)) for a in alphas]
        dmax = d_max(rho, sigma)
    floats = np.array([v.value for v in vals])
    notes = []
    if np.all(np.isfinite(floats[-2:])) and len(alphas) >= 2:
        a1, a2 = alphas[-2], alphas[-1]
        v1, v2 = floats[-2], floats[-1]
        # first-order error in 1/alpha
        limit = (a2 * v2 - a1 * v1) / (a2 - a1)
        err = abs(limit - v2)
        verdict = "converged" if err < tol else "inconclusive"
    elif np.isinf(floats[-1]):
        limit, err, verdict = math.inf, None, "diverging"
    else:
        limit, err, verdict = None, None, "inconclusive"
    ref = dmax.value
    if limit is not None and not (
        (math.isinf(limit) and math.isinf(ref)) or abs(floats[-1] - ref) < tol
    ):
        notes.append("limit differs from D_max")
    else:
        notes.append("limit matches D_max")
    return LadderReport(
        levels=alphas,
        values=tuple(vals),
        monotone=_is_monotone(floats, 1e-9),
        verdict=verdict,
        limit=limit,
        est_error=err,
        reference=ref,
        notes=tuple(notes),
    )


def _model_alpha_values(rho, sigma, alphas, levels):
    levels = _model_levels(rho, sigma, levels)
    vals = []
    for a in alphas:
        rep = ladder(rho, sigma, AlphaZ.sandwiched(a), levels)
        if rep.verdict == "diverging":
            vals.append(ExtendedValue(math.inf, "ladder_divergent"))
            continue
        log_q = rep.log_limit
        log_tr = float(logsumexp(rho.log_eigenvalues(levels[-1])))
        vals.append(ExtendedValue((log_q - log_tr) / (a - 1.0)))
    return vals, model_d_max(rho, sigma, levels)


def model_d_max(rho: DiagonalModel, sigma: DiagonalModel, levels=None) -> ExtendedValue:
    """``D_max`` of a model pair as the limit of its basis ladder."""
    levels = _model_levels(rho, sigma, levels)
    n_max = levels[-1]
    ratio = np.maximum.accumulate(rho.log_eigenvalues(n_max) - sigma.log_eigenvalues(n_max))
    dm_ladder = np.exp(np.minimum([ratio[n - 1] for n in levels], 709.0))
    verdict, *_ = assess(dm_ladder)
    if verdict == "diverging":
        return ExtendedValue(math.inf, "ladder_divergent")
    return ExtendedValue(float(ratio[-1]))


def minimax_exchange_check(values, u_grid, tol: float = 1e-6) -> bool:
    """Check ``sup_u inf_k f_k(u) = inf_k sup_u f_k(u)`` on a grid.

    ``values[k][j]`` is ``f_k(u_j)`` for a family that is pointwise
    non-increasing in ``k``; this ordering is verified first.
    """
    f = np.asarray(values, dtype=float)
    u = np.asarray(u_grid, dtype=float)
    if f.ndim != 2 or f.shape[1] != u.size:
        raise InvalidInputError("values must have shape (levels, len(u_grid))")
    finite = np.where(np.isfinite(f), f, -np.inf)
    if np.any(np.diff(finite, axis=0) > tol * np.maximum(1.0, np.abs(finite[1:]))):
        raise InvalidInputError("family is not non-increasing along the levels")
    sup_inf = np.max(np.min(f, axis=0))
    inf_sup = np.min(np.max(f, axis=1))
    if math.isinf(sup_inf) or math.isinf(inf_sup):
        return sup_inf == inf_sup
    return abs(sup_inf - inf_sup) <= tol * max(1.0, abs(inf_sup))
