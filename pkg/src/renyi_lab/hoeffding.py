"""Log-moment curves, Hoeffding anti-divergences and cutoff rates.

For ``u`` in ``(0, 1)`` the curve is

    psi(u) = (1 - u) log Q*_{1/(1-u)}(rho || sigma),

with the sandwiched ``Q*`` (``z = alpha``), and the endpoints are
``psi(0) = log Tr rho`` and ``psi(1) = D_max(rho || sigma)``. The
anti-divergences are the Legendre-type transforms

    H_r = sup_{0 < u < 1} {u r - psi(u)},    H^_r = sup_{0 <= u <= 1} {u r - psi(u)},

with the convention ``u r - (+inf) = -inf``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache, reduce
from typing import Callable

import numpy as np
from scipy.optimize import minimize_scalar

from .divergences import _log_q_two_ways, _spectra, d_max, d_sandwiched
from .operators import DiagonalModel, as_hermitian
from .truncation import DEFAULT_LEVELS, _model_levels, ladder, model_d_max
from .types import AlphaZ, ExtendedValue, InvalidInputError

DEFAULT_U_POINTS = 101
EDGE = 1e-10
MAX_TENSOR_DIM = 4096


@dataclass(frozen=True)
class PsiCurve:
    """Sampled values of ``psi`` on ``u``, plus an exact evaluator for refinement."""

    u: np.ndarray
    values: np.ndarray
    reasons: tuple
    provenance: str
    evaluate: Callable[[float], float] = field(repr=False, compare=False)

    def at(self, u: float) -> float:
        return self.evaluate(float(u))

    def interior_reason(self) -> str:
        """Reason attached to the interior values when they are all infinite."""
        inner = [r for x, r in zip(self.u, self.reasons) if 0.0 < x < 1.0]
        return next((r for r in inner if r != "finite"), "finite")

    def is_convex(self, tol: float = 1e-9) -> bool:
        """Discrete convexity of the finite part on the sampled grid."""
        m = np.isfinite(self.values)
        u, v = self.u[m], self.values[m]
        if u.size < 3:
            return True
        slopes = np.diff(v) / np.diff(u)
        return bool(np.all(np.diff(slopes) >= -tol * np.maximum(1.0, np.abs(slopes[1:]))))


def _matrix_evaluator(rho, sigma):
    rho, sigma = as_hermitian(rho, "rho"), as_hermitian(sigma, "sigma")
    sp = _spectra(rho, sigma)
    log_tr = math.log(sp.trace_rho)
    dmax = d_max(rho, sigma)

    def psi(u: float):
        if u <= 0.0:
            return log_tr, "finite"
        if u >= 1.0:
            return dmax.value, dmax.reason
        if not sp.nested:
            return math.inf, "support_violation"
        alpha = 1.0 / (1.0 - u)
        return (1.0 - u) * _log_q_two_ways(sp, AlphaZ(alpha, alpha))[0], "finite"

    return psi


def _model_evaluator(rho: DiagonalModel, sigma: DiagonalModel, levels):
    levels = _model_levels(rho, sigma, levels)
    log_tr = rho.log_trace()
    dmax_rep = None

    def psi(u: float):
        nonlocal dmax_rep
        if u <= 0.0:
            return log_tr, "finite" if math.isfinite(log_tr) else "ladder_divergent"
        if u >= 1.0:
            if dmax_rep is None:
                dmax_rep = model_d_max(rho, sigma, levels)
            return dmax_rep.value, dmax_rep.reason
        alpha = 1.0 / (1.0 - u)
        rep = ladder(rho, sigma, AlphaZ(alpha, alpha), levels)
        if rep.verdict == "diverging":
            return math.inf, "ladder_divergent"
        log_q = rep.log_limit
        return (1.0 - u) * log_q, "finite"

    return psi, levels


def default_u_grid(points: int = DEFAULT_U_POINTS) -> np.ndarray:
    return np.linspace(0.0, 1.0, points)


def psi_curve(rho, sigma, u_grid=None, levels=None) -> PsiCurve:
    """Sample ``psi`` on ``u_grid`` (default: 101 uniform points on [0, 1]).

    Matrix pairs are evaluated exactly. Pairs of diagonal models use basis
    ladders (levels ``2^k`` by default); a diverging ladder gives ``+inf``.
    """
    u = default_u_grid() if u_grid is None else np.asarray(u_grid, dtype=float)
    if u.ndim != 1 or u.size == 0 or u.min() < 0.0 or u.max() > 1.0:
        raise InvalidInputError("u_grid must be a non-empty list of points in [0, 1]")
    if isinstance(rho, DiagonalModel) and isinstance(sigma, DiagonalModel):
        raw, lv = _model_evaluator(rho, sigma, levels)
        provenance = f"fa_ladder({lv[-1]})"
    else:
        raw = _matrix_evaluator(rho, sigma)
        provenance = "exact"
    cached = lru_cache(maxsize=4096)(raw)
    pairs = [cached(float(x)) for x in u]
    return PsiCurve(
        u=u,
        values=np.array([v for v, _ in pairs]),
        reasons=tuple(r for _, r in pairs),
        provenance=provenance,
        evaluate=lambda x: cached(x)[0],
    )


@dataclass(frozen=True)
class AntiDivergenceReport:
    r: float
    H_star: ExtendedValue
    H_hat: ExtendedValue
    maximizer_u: float
    variant: str = "plain"


def _objective(curve: PsiCurve, r: float):
    def g(u):
        v = curve.at(u)
        return -math.inf if math.isinf(v) and v > 0 else u * r - v

    return g


def _refine(g, lo: float, hi: float):
    """Maximize the concave ``g`` on ``[lo, hi]``."""
    if hi - lo <= 0:
        return lo, g(lo)
    def neg(x):
        v = g(x)
        return -v if math.isfinite(v) else 1e300

    res = minimize_scalar(
        neg,
        bounds=(lo, hi),
        method="bounded",
        options={"xatol": 1e-13},
    )
    cands = [(lo, g(lo)), (hi, g(hi)), (float(res.x), g(float(res.x)))]
    return max(cands, key=lambda c: c[1])


def hoeffding_anti(curve: PsiCurve, r: float) -> AntiDivergenceReport:
    """Both anti-divergences at ``r`` by grid search and bounded refinement.

    ``H_hat`` maximizes over the closed interval. ``H_star`` maximizes over
    the open interval; when the closed maximum sits on an endpoint, the
    open supremum is approached at distance 1e-10 from it. If ``psi`` is
    ``+inf`` throughout the interior, ``H_star = -inf``.
    """
    r = float(r)
    g = _objective(curve, r)
    u = curve.u
    vals = np.array([-math.inf if (math.isinf(v) and v > 0) else x * r - v
                     for x, v in zip(u, curve.values)])
    interior = (u > 0.0) & (u < 1.0)
    all_inf_inside = not np.any(np.isfinite(vals[interior])) if np.any(interior) else True

    if np.all(np.isneginf(vals)):
        h_hat, u_hat = -math.inf, 0.0
    else:
        i = int(np.argmax(vals))
        u_hat, h_hat = float(u[i]), float(vals[i])
        if not all_inf_inside:
            lo = float(u[max(i - 1, 0)])
            hi = float(u[min(i + 1, u.size - 1)])
            uu, hh = _refine(g, lo, hi)
            if hh > h_hat:
                u_hat, h_hat = uu, hh

    if all_inf_inside:
        reason = curve.interior_reason() if np.any(interior) else "not_evaluated"
        h_star = ExtendedValue(-math.inf, reason if reason != "finite" else "support_violation")
    elif 0.0 < u_hat < 1.0:
        h_star = ExtendedValue(h_hat)
    else:
        edge = EDGE if u_hat == 0.0 else 1.0 - EDGE
        inner = vals[interior]
        j = np.flatnonzero(interior)[int(np.argmax(inner))]
        lo = float(u[max(j - 1, 0)]) if u[max(j - 1, 0)] > 0 else EDGE
        hi = float(u[min(j + 1, u.size - 1)]) if u[min(j + 1, u.size - 1)] < 1 else 1 - EDGE
        _, h_in = _refine(g, lo, hi)
        h_star = ExtendedValue.of(max(h_in, g(edge)), "support_violation")

    h_hat_ev = (
        ExtendedValue(h_hat + 0.0)
        if math.isfinite(h_hat)
        else ExtendedValue(h_hat, "ladder_divergent" if "fa" in curve.provenance else "support_violation")
    )
    variant = "plain" if curve.provenance == "exact" else "fa"
    return AntiDivergenceReport(r, h_star, h_hat_ev, u_hat, variant)


def default_r_grid(dmax: float, points: int = 401) -> np.ndarray:
    """``points`` values evenly spread over ``[-5(1 + |D_max|), 5(1 + |D_max|)]``."""
    span = 5.0 * (1.0 + abs(dmax)) if math.isfinite(dmax) else 50.0
    return np.linspace(-span, span, points)


@dataclass(frozen=True)
class BipolarResult:
    u: float
    value: float
    argmax_r: float
    boundary: bool


def bipolar_recover(r_grid, h_values, u: float, h_func: Callable[[float], float] | None = None):
    """Recover ``psi(u) = sup_r {u r - H_r}`` from sampled anti-divergences.

    With ``h_func`` the grid maximum is refined on its bracket. ``boundary``
    flags a supremum that lands on the end of ``r_grid``, meaning the grid
    was too narrow.
    """
    r = np.asarray(r_grid, dtype=float)
    h = np.asarray(h_values, dtype=float)
    if r.shape != h.shape or r.size < 3:
        raise InvalidInputError("r_grid and h_values must be equal-length arrays of 3+ points")
    vals = u * r - h
    i = int(np.argmax(vals))
    best_r, best = float(r[i]), float(vals[i])
    boundary = i in (0, r.size - 1)
    if h_func is not None and not boundary:
        res = minimize_scalar(
            lambda x: -(u * x - h_func(x)),
            bounds=(float(r[i - 1]), float(r[i + 1])),
            method="bounded",
            options={"xatol": 1e-12},
        )
        if -res.fun > best:
            best_r, best = float(res.x), float(-res.fun)
    return BipolarResult(float(u), best, best_r, boundary)


@dataclass(frozen=True)
class CutoffResult:
    """Cutoff rate at ``kappa``: a value when regular, otherwise a bracket."""

    kappa: float
    value: ExtendedValue | None
    lower: float
    upper: float
    regular: bool


def _sandwiched_at(rho, sigma, alpha, levels):
    if isinstance(rho, DiagonalModel) and isinstance(sigma, DiagonalModel):
        rep = ladder(rho, sigma, AlphaZ.sandwiched(alpha), levels)
        if rep.verdict == "diverging":
            return ExtendedValue(math.inf, "ladder_divergent")
        log_q = rep.log_limit
        return ExtendedValue(log_q / (alpha - 1.0))
    return d_sandwiched(rho, sigma, alpha)


def cutoff_rate(rho, sigma, kappa: float, delta: float | None = None, levels=None) -> CutoffResult:
    """Generalized cutoff rate ``C_kappa = D*_{1/(1-kappa)}`` under regularity.

    Regularity is probed on the stencil ``kappa - delta, kappa, kappa + delta``:
    if the sandwiched divergence is finite at all three orders the value is
    returned. Otherwise only ``C_kappa <= D*_{1/(1-kappa)}`` is known and the
    result is the bracket ``[-inf, D*_{1/(1-kappa)}]``.
    """
    if not 0.0 < kappa < 1.0:
        raise InvalidInputError(f"kappa must lie in (0, 1), got {kappa}")
    delta = min(0.05, kappa / 2, (1 - kappa) / 2) if delta is None else delta
    if isinstance(rho, DiagonalModel) and isinstance(sigma, DiagonalModel):
        levels = _model_levels(rho, sigma, levels or DEFAULT_LEVELS)
    stencil = [kappa - delta, kappa, kappa + delta]
    ds = [_sandwiched_at(rho, sigma, 1.0 / (1.0 - k), levels) for k in stencil]
    centre = ds[1]
    if all(d.is_finite for d in ds):
        return CutoffResult(kappa, centre, centre.value, centre.value, True)
    return CutoffResult(kappa, None, -math.inf, centre.value, False)


def cutoff_from_exponents(r_grid, sc_values, kappa: float) -> float:
    """``inf{r0 : sc_r >= kappa (r - r0) for all r}`` from sampled exponents."""
    r = np.asarray(r_grid, dtype=float)
    sc = np.asarray(sc_values, dtype=float)
    return float(np.max(r - sc / kappa))


def tensor_power(A, n: int) -> np.ndarray:
    A = as_hermitian(A)
    if A.shape[0] ** n > MAX_TENSOR_DIM:
        raise InvalidInputError(f"tensor power of dimension {A.shape[0] ** n} exceeds {MAX_TENSOR_DIM}")
    return reduce(np.kron, [A] * n)


def tensor_power_psi(rho, sigma, n: int, u: float) -> float:
    """``psi(rho^{(x)n} || sigma^{(x)n} | u)`` by explicit Kronecker powers."""
    if n < 1:
        raise InvalidInputError("n must be a positive integer")
    return _matrix_evaluator(tensor_power(rho, n), tensor_power(sigma, n))(float(u))[0]


def tensor_power_hoeffding(rho, sigma, n: int, r: float, u_grid=None) -> AntiDivergenceReport:
    """``H^_{n r}(rho^{(x)n} || sigma^{(x)n})`` by explicit Kronecker powers."""
    curve = psi_curve(tensor_power(rho, n), tensor_power(sigma, n), u_grid)
    return hoeffding_anti(curve, n * r)


def hoeffding_objective_family(rho, sigma, projections, u_grid, r: float) -> np.ndarray:
    """``u r - psi(P rho P || P sigma P | u)`` for each projection in an increasing family.

    Rows follow the family, columns the grid; the result feeds
    :func:`renyi_lab.truncation.minimax_exchange_check`.
    """
    rho, sigma = as_hermitian(rho, "rho"), as_hermitian(sigma, "sigma")
    rows = []
    for P in projections:
        P = np.asarray(P)
        c = psi_curve(P @ rho @ P, P @ sigma @ P, u_grid)
        rows.append(np.where(np.isfinite(c.values), c.u * r - c.values, -np.inf))
    return np.array(rows)
