"""Series evaluation of I1, J1 and the principal Lambert W branch.

Every argument the kernels produce is bounded by sqrt(|gamma|), a few units
for any reasonable plant, so plain power series are accurate and need no
asymptotic switch-over. Arguments are capped at 50.

The Bessel routines accept scalars or numpy arrays and return the same shape
(a Python float for scalar input).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from decimal import Decimal, localcontext

import numpy as np

from .errors import DomainError

__all__ = [
    "SeriesTolerance",
    "DEFAULT_TOLERANCE",
    "bessel_i1",
    "bessel_j1",
    "i1_over_z",
    "j1_over_z",
    "bessel_ratio",
    "lambert_w0",
]

MAX_ARGUMENT = 50.0

# Above this argument the alternating J1 series loses more than ~2 digits in
# double precision; those points are summed in decimal arithmetic instead.
_FLOAT_J1_LIMIT = 4.0
_DECIMAL_PRECISION = 60

_LAMBERT_MAX_ITER = 40


@dataclass(frozen=True)
class SeriesTolerance:
    """Truncation control for the power series."""

    rel_tol: float = 1e-14
    max_terms: int = 200

    def __post_init__(self) -> None:
        if not 0.0 < self.rel_tol < 1e-6:
            raise ValueError(f"rel_tol must lie in (0, 1e-6), got {self.rel_tol}")
        if self.max_terms < 30:
            raise ValueError(f"max_terms must be >= 30, got {self.max_terms}")


DEFAULT_TOLERANCE = SeriesTolerance()


def _check_range(x: np.ndarray) -> None:
    if np.any(np.isnan(x)) or np.any(x < 0.0) or np.any(x > MAX_ARGUMENT):
        raise DomainError(f"argument must lie in [0, {MAX_ARGUMENT}]")


def _shape_like(x, values: np.ndarray):
    if np.ndim(x) == 0:
        return float(values)
    return values


def _reduced_series(q: np.ndarray, tol: SeriesTolerance) -> np.ndarray:
    """Sum_{m>=0} q^m / (m! (m+1)!) for real q of either sign.

    I1(z) = (z/2) S(z^2/4) and J1(z) = (z/2) S(-z^2/4).
    """
    term = np.ones_like(q)
    total = np.ones_like(q)
    for m in range(tol.max_terms):
        term = term * q / ((m + 1) * (m + 2))
        total = total + term
        if np.all(np.abs(term) <= tol.rel_tol * np.abs(total)):
            break
    return total


def _j1_decimal(x: float) -> float:
    with localcontext() as ctx:
        ctx.prec = _DECIMAL_PRECISION
        half = Decimal(x) / 2
        q = -(half * half)
        term = half
        total = half
        eps = Decimal(10) ** (-(_DECIMAL_PRECISION - 20))
        m = 0
        while True:
            m += 1
            term = term * q / (m * (m + 1))
            total += term
            # terms shrink monotonically once m exceeds x/2
            if m > x / 2 and abs(term) <= eps * max(abs(total), eps):
                break
        return float(total)


def bessel_i1(x, tol: SeriesTolerance = DEFAULT_TOLERANCE):
    """Modified Bessel function of the first kind, order one.

    Parameters
    ----------
    x : float or array_like
        Argument(s) in [0, 50].
    tol : SeriesTolerance
        Truncation control; the series stops once the next term falls below
        ``tol.rel_tol`` times the partial sum.

    Returns
    -------
    float or ndarray
    """
    arr = np.asarray(x, dtype=float)
    _check_range(arr)
    values = 0.5 * arr * _reduced_series(0.25 * arr * arr, tol)
    return _shape_like(x, values)


def bessel_j1(x, tol: SeriesTolerance = DEFAULT_TOLERANCE):
    """Bessel function of the first kind, order one, on [0, 50]."""
    arr = np.asarray(x, dtype=float)
    _check_range(arr)
    values = 0.5 * arr * _reduced_series(-0.25 * arr * arr, tol)
    far = arr > _FLOAT_J1_LIMIT
    if np.any(far):
        values = np.array(values, dtype=float, copy=True)
        flat = values.reshape(-1)
        for i in np.flatnonzero(far.reshape(-1)):
            flat[i] = _j1_decimal(float(arr.reshape(-1)[i]))
    return _shape_like(x, values)


def bessel_ratio(q, tol: SeriesTolerance = DEFAULT_TOLERANCE):
    """I1(z)/z written in the reduced variable q = z^2/4, for q of either sign.

    For q >= 0 this is I1(sqrt(4q))/sqrt(4q); for q < 0 it equals
    J1(sqrt(-4q))/sqrt(-4q). The value at q = 0 is exactly 1/2, so the
    diagonal of the backstepping kernels needs no special case.
    """
    arr = np.asarray(q, dtype=float)
    if np.any(np.isnan(arr)) or np.any(np.abs(arr) > 0.25 * MAX_ARGUMENT**2):
        raise DomainError("|q| must not exceed 625 (|z| <= 50)")
    values = 0.5 * _reduced_series(arr, tol)
    far = arr < -0.25 * _FLOAT_J1_LIMIT**2
    if np.any(far):
        values = np.array(values, dtype=float, copy=True)
        flat = values.reshape(-1)
        for i in np.flatnonzero(far.reshape(-1)):
            z = 2.0 * math.sqrt(-float(arr.reshape(-1)[i]))
            flat[i] = _j1_decimal(z) / z
    return _shape_like(q, values)


def i1_over_z(z, tol: SeriesTolerance = DEFAULT_TOLERANCE):
    """I1(z)/z, equal to 1/2 + z^2/16 + ... near the origin."""
    arr = np.asarray(z, dtype=float)
    _check_range(arr)
    return _shape_like(z, np.asarray(bessel_ratio(0.25 * arr * arr, tol)))


def j1_over_z(z, tol: SeriesTolerance = DEFAULT_TOLERANCE):
    """J1(z)/z, equal to 1/2 - z^2/16 + ... near the origin."""
    arr = np.asarray(z, dtype=float)
    _check_range(arr)
    return _shape_like(z, np.asarray(bessel_ratio(-0.25 * arr * arr, tol)))


def lambert_w0(x: float) -> float:
    """Principal branch of the Lambert W function for x >= 0.

    Newton iteration seeded at ln(1+x), which bounds W(x) from above on
    [0, inf). Small arguments iterate on w e^w - x; large ones on the
    overflow-free form w + ln w - ln x. Steps are damped so the iterate
    never leaves the positive half-line.
    """
    x = float(x)
    if math.isnan(x) or x < 0.0:
        raise DomainError(f"lambert_w0 requires x >= 0, got {x}")
    if x == 0.0:
        return 0.0
    if math.isinf(x):
        return math.inf
    w = math.log1p(x)
    log_x = math.log(x)
    for _ in range(_LAMBERT_MAX_ITER):
        if x <= math.e:
            ew = math.exp(w)
            step = (w * ew - x) / ((w + 1.0) * ew)
        else:
            step = (w + math.log(w) - log_x) / (1.0 + 1.0 / w)
        if step >= w:
            step = 0.5 * w
        w -= step
        if abs(step) <= 4.0 * math.ulp(w):
            break
    return w
