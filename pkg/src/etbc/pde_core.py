"""Finite-difference state and implicit Euler stepping for

    u_t = theta u_xx + lambda u,   u(t, 0) = 0,   u(t, 1) = U_d(t)

on a uniform grid of ``n`` intervals. Boundary nodes are eliminated from the
linear system; the right boundary value enters the last interior equation.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from functools import lru_cache
from typing import Any, Sequence

import numpy as np

from .errors import ConfigError, DomainError, GridMismatchError, SingularSystemError

__all__ = [
    "Grid",
    "StateProfile",
    "StepScheme",
    "TridiagonalSolver",
    "Stepper",
    "trapezoid_weights",
    "l2_norm",
    "implicit_euler_step",
    "make_initial_profile",
    "sweep_initial_conditions",
]


@dataclass(frozen=True)
class Grid:
    n: int

    def __post_init__(self) -> None:
        if int(self.n) != self.n or self.n < 10:
            raise DomainError(f"grid needs an integer n >= 10, got {self.n}")

    @property
    def h(self) -> float:
        return 1.0 / self.n

    @property
    def nodes(self) -> np.ndarray:
        return np.arange(self.n + 1) / self.n


@dataclass
class StateProfile:
    """Sampled profile u[t] at nodes x_i = i/n, plus its time stamp."""

    values: np.ndarray
    time: float = 0.0

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 1 or self.values.size < 11:
            raise DomainError("profile needs at least 11 nodes")

    @property
    def n(self) -> int:
        return self.values.size - 1

    @property
    def grid(self) -> Grid:
        return Grid(self.n)

    def copy(self) -> "StateProfile":
        return StateProfile(self.values.copy(), self.time)


@dataclass(frozen=True)
class StepScheme:
    dt: float
    theta: float = 1.0
    lam: float = math.pi**2

    def __post_init__(self) -> None:
        if not self.dt > 0:
            raise DomainError(f"dt must be positive, got {self.dt}")
        if not self.theta > 0:
            raise DomainError(f"theta must be positive, got {self.theta}")


@lru_cache(maxsize=64)
def _trapezoid_weights(n: int) -> np.ndarray:
    w = np.full(n + 1, 1.0 / n)
    w[0] = w[-1] = 0.5 / n
    w.flags.writeable = False
    return w


def trapezoid_weights(n: int) -> np.ndarray:
    """Composite trapezoid weights on [0, 1] with n intervals (read-only)."""
    return _trapezoid_weights(int(n))


def _values(u) -> np.ndarray:
    return u.values if isinstance(u, StateProfile) else np.asarray(u, dtype=float)


def l2_norm(u) -> float:
    """Trapezoid approximation of the L2(0,1) norm of a profile or array."""
    v = _values(u)
    return math.sqrt(float(np.dot(trapezoid_weights(v.size - 1), v * v)))


class TridiagonalSolver:
    """Thomas algorithm with the elimination factors computed once.

    ``sub[i]`` multiplies x[i-1] in row i (``sub[0]`` unused) and ``sup[i]``
    multiplies x[i+1] (``sup[-1]`` unused).
    """

    def __init__(self, sub: Sequence[float], diag: Sequence[float], sup: Sequence[float]):
        m = len(diag)
        if len(sub) != m or len(sup) != m:
            raise ValueError("sub, diag and sup must have equal length")
        self._sub = [float(v) for v in sub]
        self._inv = [0.0] * m
        self._cp = [0.0] * m
        pivot = float(diag[0])
        for i in range(m):
            if i > 0:
                pivot = float(diag[i]) - self._sub[i] * self._cp[i - 1]
            if pivot == 0.0 or not math.isfinite(pivot):
                raise SingularSystemError(f"zero pivot in row {i}")
            self._inv[i] = 1.0 / pivot
            self._cp[i] = float(sup[i]) * self._inv[i] if i < m - 1 else 0.0
        self.size = m

    def solve(self, rhs: Sequence[float]) -> list[float]:
        sub, inv, cp = self._sub, self._inv, self._cp
        m = self.size
        y = [0.0] * m
        prev = 0.0
        for i, r in enumerate(rhs):
            prev = (r - sub[i] * prev) * inv[i] if i else r * inv[0]
            y[i] = prev
        for i in range(m - 2, -1, -1):
            y[i] -= cp[i] * y[i + 1]
        return y


class Stepper:
    """Implicit Euler stepper for a fixed scheme and grid.

    The matrix (I - dt A_h) is constant, so it is factorized once and reused
    for every step of a simulation.
    """

    def __init__(self, scheme: StepScheme, grid: Grid):
        h = grid.h
        self.scheme = scheme
        self.grid = grid
        self.r = scheme.theta * scheme.dt / (h * h)
        diag = 1.0 + 2.0 * self.r - scheme.lam * scheme.dt
        if diag <= 0.0:
            raise SingularSystemError(
                f"1 + 2*theta*dt/h^2 - lambda*dt = {diag:.3g} <= 0; reduce dt"
            )
        m = grid.n - 1
        self._solver = TridiagonalSolver([-self.r] * m, [diag] * m, [-self.r] * m)

    def advance(self, values: np.ndarray, u_d: float) -> None:
        """Advance ``values`` in place by one step with boundary value ``u_d``."""
        rhs = values[1:-1].tolist()
        rhs[-1] += self.r * u_d
        values[1:-1] = self._solver.solve(rhs)
        values[0] = 0.0
        values[-1] = u_d


@lru_cache(maxsize=32)
def _stepper(scheme: StepScheme, n: int) -> Stepper:
    return Stepper(scheme, Grid(n))


def implicit_euler_step(u: StateProfile, u_d: float, scheme: StepScheme) -> StateProfile:
    """Return u at t + dt, the right boundary held at ``u_d`` on the new level."""
    out = u.copy()
    _stepper(scheme, u.n).advance(out.values, float(u_d))
    out.time = u.time + scheme.dt
    return out


# -- initial conditions ---------------------------------------------------------

_SQRT2 = math.sqrt(2.0)
_FAMILY_RE = re.compile(r"^([AB])(\d+)$")


def _sine_cubic(x: np.ndarray, sine: dict[float, float], cubic: float) -> np.ndarray:
    u = cubic * (x * x - x**3)
    for freq, coeff in sine.items():
        u = u + coeff * np.sin(freq * math.pi * x)
    return u


def _describe(ic: Any) -> tuple[dict[float, float], float]:
    if isinstance(ic, str):
        key = ic.strip()
        if key == "zero":
            return {}, 0.0
        if key == "primary":
            return {n: _SQRT2 / n for n in (1, 2, 3)}, 3.0
        match = _FAMILY_RE.match(key)
        if match:
            fam, l = match.group(1), int(match.group(2))
            if fam == "A" and 1 <= l <= 10:
                return {n: n * n * _SQRT2 for n in range(1, l + 1)}, float(l)
            if fam == "B" and 11 <= l <= 100:
                return {n * n: n * _SQRT2 for n in range(1, l + 1)}, float(l)
            raise ConfigError(f"initial condition {key!r}: family A needs l in 1..10, B needs 11..100")
    elif isinstance(ic, dict):
        unknown = set(ic) - {"sine", "cubic"}
        if unknown:
            raise ConfigError(f"unknown initial-condition keys: {sorted(unknown)}")
        coeffs = ic.get("sine", [])
        return {n: float(c) for n, c in enumerate(coeffs, start=1)}, float(ic.get("cubic", 0.0))
    raise ConfigError(f"unknown initial condition {ic!r}")


def make_initial_profile(ic: Any, grid: Grid) -> StateProfile:
    """Sample an initial condition on ``grid``.

    Accepted descriptors:

    * ``"zero"``
    * ``"primary"``: sum_{n=1}^{3} (sqrt2/n) sin(n pi x) + 3 (x^2 - x^3)
    * ``"A<l>"``, l = 1..10: sum_{n<=l} n^2 sqrt2 sin(n pi x) + l (x^2 - x^3)
    * ``"B<l>"``, l = 11..100: sum_{n<=l} n sqrt2 sin(n^2 pi x) + l (x^2 - x^3)
    * ``{"sine": [b_1, b_2, ...], "cubic": a}``: sum b_n sin(n pi x) + a (x^2 - x^3)

    The right boundary node is left as sampled; the simulator overwrites it
    with the first held control.
    """
    sine, cubic = _describe(ic)
    values = _sine_cubic(grid.nodes, sine, cubic)
    values[0] = 0.0
    return StateProfile(values, 0.0)


def sweep_initial_conditions() -> list[str]:
    """The 100 sweep initial conditions, indexed 1..100 by position + 1."""
    return [f"A{l}" for l in range(1, 11)] + [f"B{l}" for l in range(11, 101)]


def check_same_grid(u: StateProfile | np.ndarray, n: int) -> np.ndarray:
    v = _values(u)
    if v.size != n + 1:
        raise GridMismatchError(f"profile has {v.size} nodes, expected {n + 1}")
    return v
