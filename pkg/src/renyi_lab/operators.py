"""Spectral calculus for positive operators and diagonal model families.

Fractional powers follow the support convention: for ``A >= 0`` and any real
``p``, ``A**p`` acts as ``lambda**p`` on the support of ``A`` and as zero on its
kernel. In particular ``A**0`` is the support projection.

Eigenvalues below ``rank_tol * lambda_max`` are treated as zero. Negative
eigenvalues within that band are rounding noise and are clamped; anything
more negative is rejected as non-PSD.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .types import InvalidInputError, SpectralData

RANK_TOL = 1e-10
HERMITIAN_TOL = 1e-10
SUPPORT_TOL = 1e-8
CONTRACTION_TOL = 1e-8
NORMALIZER_TAIL = 1e-14

FAMILIES = ("power", "superpower", "geometric", "finite")


class EmptyWindowWarning(UserWarning):
    """A spectral window that contains no eigenvalues."""


def as_hermitian(A, name: str = "operator") -> np.ndarray:
    """Validate a square Hermitian matrix and return its symmetrized copy."""
    if isinstance(A, DiagonalModel):
        return realize(A)
    A = np.asarray(A)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise InvalidInputError(f"{name} must be a square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise InvalidInputError(f"{name} has non-finite entries")
    if A.size == 0:
        raise InvalidInputError(f"{name} is empty")
    scale = max(1.0, float(np.max(np.abs(A))))
    if np.max(np.abs(A - A.conj().T)) > HERMITIAN_TOL * scale:
        raise InvalidInputError(f"{name} is not Hermitian")
    A = 0.5 * (A + A.conj().T)
    if np.iscomplexobj(A) and np.max(np.abs(A.imag)) == 0.0:
        A = A.real
    return A


def _psd_eigh(A, rank_tol: float = RANK_TOL, name: str = "operator"):
    """Eigenvalues (descending, clamped) and eigenvectors of a PSD matrix, plus its rank."""
    A = as_hermitian(A, name)
    w, v = np.linalg.eigh(A)
    w, v = w[::-1], v[:, ::-1]
    lam_max = max(float(w[0]), 0.0)
    floor = rank_tol * lam_max
    if w[-1] < -floor and w[-1] < -1e-300:
        raise InvalidInputError(
            f"{name} is not positive semidefinite (eigenvalue {w[-1]:.3e}, "
            f"largest {lam_max:.3e})"
        )
    rank = int(np.count_nonzero(w > floor)) if lam_max > 0 else 0
    w = w.copy()
    w[rank:] = 0.0
    return w, v, rank


def _canonical_basis(block: np.ndarray) -> np.ndarray:
    """Deterministic orthonormal basis of span(block) by Gram-Schmidt on e_1, e_2, ..."""
    d, k = block.shape
    proj = block @ block.conj().T
    chosen: list[np.ndarray] = []
    for threshold in (1e-6, 0.0):
        for j in range(d):
            if len(chosen) == k:
                break
            w = proj[:, j].copy()
            for b in chosen:
                w -= b * (b.conj() @ w)
            nrm = np.linalg.norm(w)
            if nrm > max(threshold, 1e-14):
                chosen.append(w / nrm)
        if len(chosen) == k:
            break
    return np.column_stack(chosen)


def spectral_decompose(A, rank_tol: float = RANK_TOL) -> SpectralData:
    """Spectral decomposition of a PSD matrix with deterministic eigenvectors.

    Eigenvalues are sorted in descending order. Within each eigenvalue cluster
    the eigenvectors are fixed by Gram-Schmidt on the standard basis vectors in
    lexicographic order, which also fixes the phase of simple eigenvectors.
    """
    w, v, rank = _psd_eigh(A, rank_tol)
    lam_max = float(w[0]) if w.size else 0.0
    cluster_tol = rank_tol * max(lam_max, np.finfo(float).tiny)
    out = np.empty_like(v)
    start = 0
    n = w.size
    while start < n:
        stop = start + 1
        while stop < n and abs(w[stop - 1] - w[stop]) <= cluster_tol:
            stop += 1
        out[:, start:stop] = _canonical_basis(v[:, start:stop])
        start = stop
    return SpectralData(w, out, rank, rank_tol, lam_max)


def fractional_power(A, p: float, rank_tol: float = RANK_TOL) -> np.ndarray:
    """``A**p`` on the support of ``A``, zero on its kernel (so ``0**p = 0``)."""
    w, v, rank = _psd_eigh(A, rank_tol)
    vs = v[:, :rank]
    return (vs * w[:rank] ** p) @ vs.conj().T


def support_projection(A, rank_tol: float = RANK_TOL) -> np.ndarray:
    """Orthogonal projection onto the support of ``A``."""
    _, v, rank = _psd_eigh(A, rank_tol)
    vs = v[:, :rank]
    return vs @ vs.conj().T


def support_residual(A, B, rank_tol: float = RANK_TOL) -> float:
    """Operator norm of ``(I - B^0) A^0``."""
    _, va, ra = _psd_eigh(A, rank_tol, "A")
    _, vb, rb = _psd_eigh(B, rank_tol, "B")
    ua, ub = va[:, :ra], vb[:, :rb]
    if ra == 0:
        return 0.0
    resid = ua - ub @ (ub.conj().T @ ua)
    return float(np.linalg.norm(resid, 2))


def support_leq(A, B, tol: float = SUPPORT_TOL, rank_tol: float = RANK_TOL) -> bool:
    """Whether ``A^0 <= B^0``, i.e. the support of ``A`` lies in that of ``B``."""
    return support_residual(A, B, rank_tol) <= tol


def spectral_truncation(sigma, c: float, d: float, rank_tol: float = RANK_TOL) -> np.ndarray:
    """Projection onto the eigenvectors of ``sigma`` with eigenvalue in the open window ``(c, d)``.

    A :class:`DiagonalModel` is realized at its current level first. An empty
    window returns the zero projection and emits :class:`EmptyWindowWarning`.
    """
    if not c < d:
        raise InvalidInputError(f"window requires c < d, got ({c}, {d})")
    if isinstance(sigma, DiagonalModel):
        lam = sigma.eigenvalues()
        mask = (lam > c) & (lam < d)
        proj = np.diag(mask.astype(float))
    else:
        w, v, _ = _psd_eigh(sigma, rank_tol, "sigma")
        sel = v[:, (w > c) & (w < d)]
        proj = sel @ sel.conj().T
    if not np.any(np.diag(proj).real > 0.5 / proj.shape[0]):
        warnings.warn(f"spectral window ({c}, {d}) is empty", EmptyWindowWarning, stacklevel=2)
    return proj


def schatten_norm(A, p: float, rank_tol: float = RANK_TOL) -> float:
    """Schatten ``p``-(quasi)norm ``(Tr |A|^p)^(1/p)``; ``p = inf`` gives the operator norm."""
    A = np.asarray(A)
    if A.ndim != 2:
        raise InvalidInputError("schatten_norm expects a matrix")
    if not p > 0:
        raise InvalidInputError(f"Schatten index must be positive, got {p}")
    s = np.linalg.svd(A, compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return 0.0
    if math.isinf(p):
        return float(s[0])
    s = s[s > rank_tol * s[0]]
    # factor out the largest singular value so large p cannot overflow
    return float(s[0] * np.sum((s / s[0]) ** p) ** (1.0 / p))


def compress(K, A, tol: float = CONTRACTION_TOL) -> np.ndarray:
    """``K A K*`` for a contraction ``K`` (``||K|| <= 1 + tol``)."""
    K = np.asarray(K)
    A = as_hermitian(A)
    if K.ndim != 2 or K.shape[1] != A.shape[0]:
        raise InvalidInputError(f"K of shape {K.shape} does not act on a {A.shape[0]}-dim space")
    norm = np.linalg.norm(K, 2) if K.size else 0.0
    if norm > 1.0 + tol:
        raise InvalidInputError(f"K is not a contraction (norm {norm:.6g})")
    out = K @ A @ K.conj().T
    return 0.5 * (out + out.conj().T)


# ---------------------------------------------------------------------------
# Diagonal model families


_BERNOULLI_2K = (1 / 6, -1 / 30, 1 / 42, -1 / 30, 5 / 66, -691 / 2730, 7 / 6, -3617 / 510)


def zeta_series(beta: float, cutoff: int = 64) -> tuple[float, float]:
    """Riemann zeta by direct summation plus Euler-Maclaurin tail.

    Returns ``(value, tail_bound)``, where the bound is the magnitude of the
    first omitted correction term.
    """
    if beta <= 1.0:
        return math.inf, 0.0
    n = np.arange(1, cutoff, dtype=float)
    head = math.fsum(n ** -beta)
    M = float(cutoff)
    tail = M ** (1 - beta) / (beta - 1) + 0.5 * M ** -beta
    rising = beta  # beta (beta + 1) ... (beta + 2k - 2)
    fact = 2.0  # (2k)!
    terms = []
    for k, b2k in enumerate(_BERNOULLI_2K, start=1):
        terms.append(b2k / fact * rising * M ** (-beta - 2 * k + 1))
        rising *= (beta + 2 * k - 1) * (beta + 2 * k)
        fact *= (2 * k + 1) * (2 * k + 2)
    bound = abs(terms[-1])
    return head + tail + math.fsum(terms[:-1]), bound


def _superpower_sum(gamma: float) -> tuple[float, float]:
    """Sum of ``n**(-n**gamma)`` over n >= 1 with a certified tail bound."""
    parts: list[float] = []
    lo, hi = 1, 64
    while hi <= 1 << 34:
        k = np.arange(lo, hi + 1, dtype=float)
        parts.extend(np.exp(-(k ** gamma) * np.log(k)))
        total = math.fsum(parts)
        # every term beyond hi is at most k**(-s) with s = hi**gamma
        s = hi ** gamma
        if s > 1.5:
            bound = hi ** (1.0 - s) / (s - 1.0)
            if bound < 0.1 * NORMALIZER_TAIL * total:
                return total, bound
        lo, hi = hi + 1, hi * 4
    raise InvalidInputError(f"superpower series with gamma={gamma} converges too slowly")


@dataclass(frozen=True)
class DiagonalModel:
    """A diagonal positive operator on l2(N) with eigenvalue ``c * f(n)``, ``n >= 1``.

    Families
    --------
    ``power``       f(n) = n**(-beta)
    ``superpower``  f(n) = n**(-n**gamma)
    ``geometric``   f(n) = r**n
    ``finite``      f(n) = values[n - 1]

    With ``normalize`` set, ``c`` makes the infinite trace equal to one when
    the series converges; otherwise ``c = 1``. ``level`` is the truncation N
    used when the model is realized as a matrix.
    """

    family: str
    params: tuple
    normalize: bool = True
    level: int = 1

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise InvalidInputError(f"unknown family {self.family!r}; expected one of {FAMILIES}")
        params = tuple(float(x) for x in self.params)
        object.__setattr__(self, "params", params)
        if not isinstance(self.level, (int, np.integer)) or self.level < 1:
            raise InvalidInputError(f"level must be a positive integer, got {self.level!r}")
        object.__setattr__(self, "level", int(self.level))
        if self.family == "geometric" and not params[0] > 0:
            raise InvalidInputError("geometric ratio must be positive")
        if self.family == "finite":
            if not params or min(params) <= 0:
                raise InvalidInputError("finite model needs strictly positive values")
            if self.level > len(params):
                raise InvalidInputError(
                    f"level {self.level} exceeds the {len(params)} finite values"
                )
        if any(not math.isfinite(x) for x in params):
            raise InvalidInputError("model parameters must be finite")

    @classmethod
    def power(cls, beta: float, normalize: bool = True, level: int = 1) -> "DiagonalModel":
        return cls("power", (beta,), normalize, level)

    @classmethod
    def superpower(cls, gamma: float, normalize: bool = True, level: int = 1) -> "DiagonalModel":
        return cls("superpower", (gamma,), normalize, level)

    @classmethod
    def geometric(cls, r: float, normalize: bool = True, level: int = 1) -> "DiagonalModel":
        return cls("geometric", (r,), normalize, level)

    @classmethod
    def finite(cls, values, normalize: bool = True, level: int | None = None) -> "DiagonalModel":
        values = tuple(values)
        return cls("finite", values, normalize, len(values) if level is None else level)

    def at(self, level: int) -> "DiagonalModel":
        """The same model truncated at a different level."""
        return DiagonalModel(self.family, self.params, self.normalize, level)

    @property
    def max_level(self) -> int | None:
        return len(self.params) if self.family == "finite" else None

    @cached_property
    def series_sum(self) -> tuple[float, float]:
        """Sum of ``f(n)`` over all n and a bound on the truncation error."""
        fam, x = self.family, self.params
        if fam == "power":
            return zeta_series(x[0])
        if fam == "superpower":
            return _superpower_sum(x[0]) if x[0] > 0 else (math.inf, 0.0)
        if fam == "geometric":
            r = x[0]
            return (r / (1.0 - r), 0.0) if r < 1 else (math.inf, 0.0)
        return math.fsum(x), 0.0

    @property
    def trace_class(self) -> bool:
        return math.isfinite(self.series_sum[0])

    @property
    def constant(self) -> float:
        """The prefactor ``c``."""
        total = self.series_sum[0]
        if self.normalize and math.isfinite(total):
            return 1.0 / total
        return 1.0

    def log_eigenvalues(self, n: int | None = None) -> np.ndarray:
        """``log(c f(k))`` for k = 1..n (default: the model level)."""
        n = self.level if n is None else int(n)
        if self.family == "finite" and n > len(self.params):
            raise InvalidInputError(f"finite model has only {len(self.params)} values")
        return self.log_eigenvalues_at(np.arange(1, n + 1, dtype=float))

    def log_eigenvalues_at(self, k) -> np.ndarray:
        """``log(c f(k))`` at arbitrary (possibly huge, real) indices ``k >= 1``."""
        k = np.asarray(k, dtype=float)
        x = self.params
        n = k.size
        if self.family == "finite":
            idx = k.astype(int)
            if np.any(idx != k) or np.any(idx < 1) or np.any(idx > len(x)):
                raise InvalidInputError("finite model indices must lie in 1..len(values)")
            return math.log(self.constant) + np.log(np.asarray(x, dtype=float)[idx - 1])
        if self.family == "power":
            logf = -x[0] * np.log(k)
        elif self.family == "superpower":
            logf = -(k ** x[0]) * np.log(k)
        elif self.family == "geometric":
            logf = k * math.log(x[0])
        return math.log(self.constant) + logf

    def eigenvalues(self, n: int | None = None) -> np.ndarray:
        return np.exp(self.log_eigenvalues(n))

    def log_trace(self) -> float:
        """Log of the full (untruncated) trace, ``+inf`` outside trace class."""
        total = self.series_sum[0]
        return math.log(self.constant * total) if math.isfinite(total) else math.inf


def realize(model: DiagonalModel, N: int | None = None) -> np.ndarray:
    """The N x N diagonal matrix of the first N eigenvalues of ``model``."""
    if not isinstance(model, DiagonalModel):
        raise InvalidInputError("realize expects a DiagonalModel")
    return np.diag(model.eigenvalues(N))


def partial_trace(rho, dims, keep) -> np.ndarray:
    """Partial trace of an operator on a tensor product, keeping the listed factors."""
    dims = [int(d) for d in dims]
    rho = np.asarray(rho)
    n = int(np.prod(dims))
    if rho.shape != (n, n):
        raise InvalidInputError(f"operator of shape {rho.shape} does not match dims {dims}")
    keep = sorted(set(int(k) for k in keep))
    k = len(dims)
    t = rho.reshape(dims + dims)
    traced = [i for i in range(k) if i not in keep]
    for shift, i in enumerate(traced):
        axis = i - shift
        t = np.trace(t, axis1=axis, axis2=axis + t.ndim // 2)
    d_keep = int(np.prod([dims[i] for i in keep])) if keep else 1
    return t.reshape(d_keep, d_keep)
