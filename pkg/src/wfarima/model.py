"""Parameter vectors, the admissible parameter box and root-based checks."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.typing import ArrayLike

from .errors import InvalidParameterError

__all__ = [
    "ModelOrder",
    "ParamVector",
    "ParamSpace",
    "ValidationReport",
    "ar_poly",
    "ma_poly",
    "min_root_modulus",
    "poly_roots",
    "validate",
    "check_valid",
]

COMMON_ROOT_TOL = 1e-8


@dataclass(frozen=True)
class ModelOrder:
    p: int = 0
    q: int = 0

    def __post_init__(self):
        if int(self.p) != self.p or int(self.q) != self.q or self.p < 0 or self.q < 0:
            raise InvalidParameterError(f"orders must be nonnegative integers, got p={self.p}, q={self.q}")

    @property
    def k(self) -> int:
        """Number of free parameters, ``p + q + 1``."""
        return self.p + self.q + 1


@dataclass(frozen=True)
class ParamVector:
    """A point ``(a_1..a_p, b_1..b_q, d)`` with ``d`` stored last.

    The polynomials are ``a(z) = 1 - sum a_i z^i`` and
    ``b(z) = 1 - sum b_j z^j``.
    """

    ar: np.ndarray = field(default_factory=lambda: np.zeros(0))
    ma: np.ndarray = field(default_factory=lambda: np.zeros(0))
    d: float = 0.0

    def __post_init__(self):
        ar = np.atleast_1d(np.asarray(self.ar, dtype=float)).ravel()
        ma = np.atleast_1d(np.asarray(self.ma, dtype=float)).ravel()
        object.__setattr__(self, "ar", ar)
        object.__setattr__(self, "ma", ma)
        object.__setattr__(self, "d", float(self.d))
        if not (np.all(np.isfinite(ar)) and np.all(np.isfinite(ma)) and np.isfinite(self.d)):
            raise InvalidParameterError("parameter entries must be finite")

    @classmethod
    def from_flat(cls, values: ArrayLike, order: ModelOrder) -> "ParamVector":
        values = np.asarray(values, dtype=float).ravel()
        if values.size != order.k:
            raise InvalidParameterError(
                f"expected {order.k} parameters for p={order.p}, q={order.q}, got {values.size}"
            )
        return cls(values[: order.p], values[order.p : order.p + order.q], values[-1])

    @property
    def order(self) -> ModelOrder:
        return ModelOrder(self.ar.size, self.ma.size)

    @property
    def flat(self) -> np.ndarray:
        return np.concatenate([self.ar, self.ma, [self.d]])

    def __len__(self) -> int:
        return self.ar.size + self.ma.size + 1

    def __eq__(self, other):
        if not isinstance(other, ParamVector):
            return NotImplemented
        return self.order == other.order and np.array_equal(self.flat, other.flat)

    def __hash__(self):
        return hash(tuple(self.flat))

    def to_dict(self) -> dict:
        return {"ar": self.ar.tolist(), "ma": self.ma.tolist(), "d": self.d}


@dataclass(frozen=True)
class ParamSpace:
    """The compact set of admissible parameters.

    AR and MA roots must have modulus at least ``1 + kappa`` and ``d`` must
    lie in ``[d_lo, d_hi]``, a closed subinterval of ``(0, 1/2)``.
    """

    order: ModelOrder = field(default_factory=ModelOrder)
    kappa: float = 0.01
    d_lo: float = 0.005
    d_hi: float = 0.495

    def __post_init__(self):
        if not self.kappa > 0:
            raise InvalidParameterError("kappa must be positive")
        if not (0.0 < self.d_lo <= self.d_hi < 0.5):
            raise InvalidParameterError(f"need 0 < d_lo <= d_hi < 1/2, got [{self.d_lo}, {self.d_hi}]")

    @property
    def min_modulus(self) -> float:
        return 1.0 + self.kappa


@dataclass
class ValidationReport:
    ok: bool
    violations: list[str]

    def __bool__(self) -> bool:
        return self.ok


def ar_poly(theta: ParamVector) -> np.ndarray:
    """Coefficients ``[1, -a_1, ..., -a_p]`` of the AR polynomial."""
    return np.concatenate([[1.0], -theta.ar])


def ma_poly(theta: ParamVector) -> np.ndarray:
    """Coefficients ``[1, -b_1, ..., -b_q]`` of the MA polynomial."""
    return np.concatenate([[1.0], -theta.ma])


def _trim(poly: ArrayLike) -> np.ndarray:
    poly = np.atleast_1d(np.asarray(poly, dtype=float))
    if poly.size == 0 or poly[0] != 1.0:
        raise InvalidParameterError("polynomial must have constant term 1")
    nz = np.flatnonzero(poly)
    return poly[: nz[-1] + 1]


def poly_roots(poly: ArrayLike) -> np.ndarray:
    """Complex roots of ``poly[0] + poly[1] z + ...`` (companion eigenvalues)."""
    poly = _trim(poly)
    if poly.size == 1:
        return np.zeros(0, dtype=complex)
    # np.roots wants the highest power first
    roots = np.roots(poly[::-1])
    if not np.all(np.isfinite(roots)):
        raise InvalidParameterError(f"root finder failed for polynomial {poly.tolist()}")
    return roots


def min_root_modulus(poly: ArrayLike) -> float:
    """Smallest root modulus of a polynomial with constant term 1.

    Returns ``inf`` for a constant polynomial.
    """
    roots = poly_roots(poly)
    if roots.size == 0:
        return np.inf
    return float(np.min(np.abs(roots)))


def validate(theta: ParamVector, space: ParamSpace) -> ValidationReport:
    """Check membership of ``theta`` in the admissible set."""
    if theta.order != space.order:
        raise InvalidParameterError(
            f"parameter order (p={theta.order.p}, q={theta.order.q}) does not match "
            f"space order (p={space.order.p}, q={space.order.q})"
        )
    violations = []
    ar_roots = poly_roots(ar_poly(theta))
    ma_roots = poly_roots(ma_poly(theta))
    r = space.min_modulus
    if ar_roots.size and np.min(np.abs(ar_roots)) < r:
        violations.append("AR root inside margin")
    if ma_roots.size and np.min(np.abs(ma_roots)) < r:
        violations.append("MA root inside margin")
    if not (space.d_lo <= theta.d <= space.d_hi):
        violations.append(f"d outside [{space.d_lo}, {space.d_hi}]")
    if ar_roots.size and ma_roots.size:
        gaps = np.abs(ar_roots[:, None] - ma_roots[None, :])
        if np.min(gaps) < COMMON_ROOT_TOL:
            violations.append("AR and MA polynomials share a root")
    return ValidationReport(not violations, violations)


def check_valid(theta: ParamVector, space: ParamSpace) -> None:
    report = validate(theta, space)
    if not report.ok:
        raise InvalidParameterError("invalid parameter: " + "; ".join(report.violations))
