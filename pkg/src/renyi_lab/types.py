"""Shared value types and exceptions."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

REASONS = (
    "finite",
    "support_violation",
    "ladder_divergent",
    "endpoint_convention",
    "overflow",
    "not_evaluated",
)


class InvalidInputError(ValueError):
    """Malformed, non-Hermitian or non-PSD input, or parameters out of range."""


class InvalidWitnessError(InvalidInputError):
    """A variational witness that makes the log objective undefined."""


class NumericalError(ArithmeticError):
    """Two routes to the same quantity disagreed beyond tolerance."""


@dataclass(frozen=True)
class ExtendedValue:
    """A real number in ``[-inf, +inf]`` together with the reason it takes that value.

    ``reason`` is ``"finite"`` exactly when ``value`` is finite. An infinite
    value always carries the reason that produced it.
    """

    value: float
    reason: str = "finite"

    def __post_init__(self):
        if self.reason not in REASONS:
            raise InvalidInputError(f"unknown reason {self.reason!r}")
        v = float(self.value)
        if math.isnan(v):
            raise NumericalError("ExtendedValue cannot hold NaN")
        object.__setattr__(self, "value", v)
        if math.isfinite(v) and self.reason not in ("finite", "endpoint_convention"):
            raise InvalidInputError(f"finite value with reason {self.reason!r}")
        if not math.isfinite(v) and self.reason == "finite":
            raise InvalidInputError("infinite value must carry a non-finite reason")

    @classmethod
    def of(cls, value: float, reason_if_infinite: str = "overflow") -> "ExtendedValue":
        value = float(value)
        return cls(value, "finite" if math.isfinite(value) else reason_if_infinite)

    @property
    def is_finite(self) -> bool:
        return math.isfinite(self.value)

    def __float__(self) -> float:
        return self.value


@dataclass(frozen=True)
class AlphaZ:
    """Parameter pair ``(alpha, z)`` with ``alpha > 1`` and ``z > 0``."""

    alpha: float
    z: float

    def __post_init__(self):
        a, z = float(self.alpha), float(self.z)
        if not (math.isfinite(a) and math.isfinite(z)):
            raise InvalidInputError("alpha and z must be finite")
        if a <= 1.0:
            raise InvalidInputError(f"alpha must exceed 1, got {a}")
        if z <= 0.0:
            raise InvalidInputError(f"z must be positive, got {z}")
        object.__setattr__(self, "alpha", a)
        object.__setattr__(self, "z", z)

    @classmethod
    def sandwiched(cls, alpha: float) -> "AlphaZ":
        return cls(alpha, alpha)

    @classmethod
    def petz(cls, alpha: float) -> "AlphaZ":
        return cls(alpha, 1.0)

    @classmethod
    def coerce(cls, p) -> "AlphaZ":
        if isinstance(p, AlphaZ):
            return p
        if isinstance(p, (tuple, list)) and len(p) == 2:
            return cls(*p)
        raise InvalidInputError(f"cannot interpret {p!r} as (alpha, z)")

    @property
    def in_monotone_range(self) -> bool:
        """Whether ``max(alpha - 1, alpha / 2) <= z <= alpha``."""
        return max(self.alpha - 1.0, self.alpha / 2.0) <= self.z <= self.alpha


@dataclass(frozen=True)
class SpectralData:
    """Eigenvalues in descending order with orthonormal eigenvectors as columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    rank: int
    rank_tol: float = 1e-10
    lambda_max: float = field(default=0.0)

    @property
    def support_vectors(self) -> np.ndarray:
        return self.eigenvectors[:, : self.rank]

    @property
    def support_values(self) -> np.ndarray:
        return self.eigenvalues[: self.rank]
