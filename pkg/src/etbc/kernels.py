"""Backstepping kernels, the boundary gain k(y) = K(1, y) and Volterra transforms.

    K(x, y) = -y gamma I1(z)/z,   L(x, y) = -y gamma J1(z)/z,
    z = sqrt(gamma (x^2 - y^2)),  gamma = (lambda + c)/theta,

on the closed triangle 0 <= y <= x <= 1. Both ratios are evaluated through
the reduced series in q = gamma (x^2 - y^2)/4, which is smooth through the
diagonal and also covers gamma < 0 (the two kernels swap roles).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DomainError, ResolutionError
from .pde_core import StateProfile, check_same_grid, trapezoid_weights
from .special_functions import bessel_ratio

__all__ = [
    "KernelConfig",
    "KernelTables",
    "ModalTruncation",
    "eval_K",
    "eval_L",
    "gain_trace",
    "build_tables",
    "modal_truncation",
    "tail_norms",
    "choose_N",
    "volterra_matrix",
    "transform_to_target",
    "transform_from_target",
]

_EDGE_TOL = 1e-12


@dataclass(frozen=True)
class KernelConfig:
    theta: float = 1.0
    lam: float = math.pi**2
    c: float = 1.0

    def __post_init__(self) -> None:
        if not self.theta > 0:
            raise DomainError(f"theta must be positive, got {self.theta}")
        if not self.c >= 0:
            raise DomainError(f"c must be non-negative, got {self.c}")

    @property
    def gamma(self) -> float:
        return (self.lam + self.c) / self.theta


def _kernel(x, y, gamma: float, sign: float) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    q = sign * 0.25 * gamma * np.maximum(x * x - y * y, 0.0)
    return -y * gamma * np.asarray(bessel_ratio(q)) + 0.0  # no signed zeros


def _check_triangle(x: float, y: float) -> None:
    if not (-_EDGE_TOL <= y <= x + _EDGE_TOL and x <= 1.0 + _EDGE_TOL):
        raise DomainError(f"(x, y) = ({x}, {y}) lies outside 0 <= y <= x <= 1")


def eval_K(x: float, y: float, cfg: KernelConfig) -> float:
    """Forward kernel; on the diagonal it takes the limit -y gamma/2."""
    _check_triangle(x, y)
    return float(_kernel(x, y, cfg.gamma, 1.0))


def eval_L(x: float, y: float, cfg: KernelConfig) -> float:
    """Inverse kernel; same diagonal limit as :func:`eval_K`."""
    _check_triangle(x, y)
    return float(_kernel(x, y, cfg.gamma, -1.0))


def gain_trace(cfg: KernelConfig, grid_n: int) -> np.ndarray:
    y = np.arange(grid_n + 1) / grid_n
    return _kernel(1.0, y, cfg.gamma, 1.0)


def _triangle_norm(cfg: KernelConfig, grid_n: int, sign: float) -> float:
    # trapezoid in y over [0, x_i] for every node x_i, then trapezoid in x
    h = 1.0 / grid_n
    y = np.arange(grid_n + 1) * h
    inner = np.zeros(grid_n + 1)
    for i in range(1, grid_n + 1):
        row = _kernel(y[i], y[: i + 1], cfg.gamma, sign) ** 2
        inner[i] = h * (row.sum() - 0.5 * (row[0] + row[-1]))
    return math.sqrt(float(np.dot(trapezoid_weights(grid_n), inner)))


@dataclass(frozen=True)
class KernelTables:
    """Sampled gain and kernel norms on a grid of ``grid_n`` intervals.

    ``K_tilde`` and ``L_tilde`` are 1 plus the L2 norm of the kernel over the
    triangle; they bound the forward and inverse transforms in L2.
    """

    cfg: KernelConfig
    grid_n: int
    k_trace: np.ndarray
    k_norm: float
    K_tilde: float
    L_tilde: float

    @property
    def nodes(self) -> np.ndarray:
        return np.arange(self.grid_n + 1) / self.grid_n


def build_tables(cfg: KernelConfig, grid_n: int = 100) -> KernelTables:
    if int(grid_n) != grid_n or grid_n < 50:
        raise DomainError(f"grid_n must be an integer >= 50, got {grid_n}")
    grid_n = int(grid_n)
    k = gain_trace(cfg, grid_n)
    k.flags.writeable = False
    k_norm = math.sqrt(float(np.dot(trapezoid_weights(grid_n), k * k)))
    return KernelTables(
        cfg=cfg,
        grid_n=grid_n,
        k_trace=k,
        k_norm=k_norm,
        K_tilde=1.0 + _triangle_norm(cfg, grid_n, 1.0),
        L_tilde=1.0 + _triangle_norm(cfg, grid_n, -1.0),
    )


# -- modal truncation -----------------------------------------------------------


@dataclass(frozen=True)
class ModalTruncation:
    """N-term sine truncation g of the gain k.

    Attributes
    ----------
    N : int
        Number of retained modes.
    k_n : ndarray
        Coefficients against phi_n(y) = sqrt2 sin(n pi y), n = 1..N.
    eigenvalues : ndarray
        lambda_n = n^2 pi^2 theta - lambda.
    tail_norm : float
        ||k - g||, from Parseval.
    F_N, G_N : float
        sum |k_n phi_n'(1)| and sum |k_n lambda_n|.
    """

    N: int
    k_n: np.ndarray
    eigenvalues: np.ndarray
    tail_norm: float
    F_N: float
    G_N: float

    @property
    def boundary_slopes(self) -> np.ndarray:
        """phi_n'(1) = (-1)^n sqrt2 n pi."""
        n = np.arange(1, self.N + 1)
        return np.where(n % 2 == 0, 1.0, -1.0) * math.sqrt(2.0) * n * math.pi


def _max_modes(tables: KernelTables) -> int:
    return tables.grid_n // 4


def _modal_coefficients(tables: KernelTables, count: int) -> np.ndarray:
    y = tables.nodes
    weighted = trapezoid_weights(tables.grid_n) * tables.k_trace
    n = np.arange(1, count + 1)
    basis = math.sqrt(2.0) * np.sin(math.pi * np.outer(n, y))
    return basis @ weighted


def _tails(k_norm: float, k_n: np.ndarray) -> np.ndarray:
    return np.sqrt(np.maximum(k_norm**2 - np.cumsum(k_n * k_n), 0.0))


def tail_norms(tables: KernelTables, max_N: int | None = None) -> np.ndarray:
    """||k - g_N|| for N = 1..max_N (defaults to the resolvable maximum)."""
    limit = _max_modes(tables) if max_N is None else max_N
    if limit > _max_modes(tables):
        raise ResolutionError(f"N = {limit} exceeds grid_n/4 = {_max_modes(tables)}")
    # the running minimum keeps the sequence non-increasing under rounding
    return np.minimum.accumulate(_tails(tables.k_norm, _modal_coefficients(tables, limit)))


def modal_truncation(tables: KernelTables, cfg: KernelConfig | None, N: int) -> ModalTruncation:
    cfg = tables.cfg if cfg is None else cfg
    if N < 1:
        raise DomainError(f"N must be >= 1, got {N}")
    if N > _max_modes(tables):
        raise ResolutionError(
            f"N = {N} cannot be resolved on grid_n = {tables.grid_n} (max {_max_modes(tables)})"
        )
    k_n = _modal_coefficients(tables, N)
    n = np.arange(1, N + 1)
    eig = n * n * math.pi**2 * cfg.theta - cfg.lam
    slopes = math.sqrt(2.0) * n * math.pi
    tail = float(tail_norms(tables, N)[-1])
    k_n.flags.writeable = False
    eig.flags.writeable = False
    return ModalTruncation(
        N=N,
        k_n=k_n,
        eigenvalues=eig,
        tail_norm=tail,
        F_N=float(np.sum(np.abs(k_n * slopes))),
        G_N=float(np.sum(np.abs(k_n * eig))),
    )


def choose_N(tables: KernelTables, cfg: KernelConfig | None, beta: float) -> int:
    """Smallest N with ||k - g_N|| < beta ||k||."""
    if not beta > 0:
        raise DomainError(f"beta must be positive, got {beta}")
    if not tables.k_norm > 0:
        raise DomainError("choose_N needs a non-zero gain")
    tails = tail_norms(tables)
    hits = np.flatnonzero(tails < beta * tables.k_norm)
    if hits.size == 0:
        raise ResolutionError(
            f"no N <= {_max_modes(tables)} reaches ||k-g|| < {beta}*||k|| on grid_n = "
            f"{tables.grid_n} (best tail {tails[-1]:.4g}); refine the grid"
        )
    return int(hits[0]) + 1


# -- Volterra transforms --------------------------------------------------------


def _simpson_row(i: int, h: float) -> np.ndarray:
    """Weights integrating over [0, x_i] with nodes 0..i, fourth order.

    Composite Simpson; an odd interval count closes with a 3/8-rule panel.
    """
    w = np.zeros(i + 1)
    if i == 0:
        return w
    if i == 1:
        w[:] = 0.5 * h
        return w
    m = i if i % 2 == 0 else i - 3
    if m > 0:
        w[0 : m + 1 : 2] += 2.0 * h / 3.0
        w[1:m:2] += 4.0 * h / 3.0
        w[0] -= h / 3.0
        w[m] -= h / 3.0
    if i % 2 == 1:
        w[m : m + 4] += np.array([1.0, 3.0, 3.0, 1.0]) * 3.0 * h / 8.0
    return w


@lru_cache(maxsize=16)
def volterra_matrix(cfg: KernelConfig, n: int, kind: str = "K") -> np.ndarray:
    """Matrix A with (A v)_i ~ int_0^{x_i} kernel(x_i, y) v(y) dy."""
    if kind not in ("K", "L"):
        raise ValueError("kind must be 'K' or 'L'")
    h = 1.0 / n
    x = np.arange(n + 1) * h
    X, Y = np.meshgrid(x, x, indexing="ij")
    lower = Y <= X
    kern = np.where(lower, _kernel(X, np.where(lower, Y, 0.0), cfg.gamma, 1.0 if kind == "K" else -1.0), 0.0)
    weights = np.zeros((n + 1, n + 1))
    for i in range(1, n + 1):
        weights[i, : i + 1] = _simpson_row(i, h)
    mat = kern * weights
    mat.flags.writeable = False
    return mat


def transform_to_target(u: StateProfile, cfg: KernelConfig) -> StateProfile:
    """w(x) = u(x) - int_0^x K(x, y) u(y) dy."""
    v = check_same_grid(u, u.n)
    return StateProfile(v - volterra_matrix(cfg, u.n, "K") @ v, u.time)


def transform_from_target(w: StateProfile, cfg: KernelConfig) -> StateProfile:
    """u(x) = w(x) + int_0^x L(x, y) w(y) dy."""
    v = check_same_grid(w, w.n)
    return StateProfile(v + volterra_matrix(cfg, w.n, "L") @ v, w.time)
