"""Event-triggered boundary feedback and the closed-loop simulation.

Between events the boundary holds U_d = int k(y) u(t_j, y) dy. The actuation
deviation is d(t) = U_d - int k(y) u(t, y) dy, and an event fires at the
first time step where

    |d(t)| > beta ||k|| (||u[t]|| + ||u[t_j]||).

The rule is checked once per step, on the new time level, and the event is
stamped with that grid time.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError
from .kernels import KernelConfig, KernelTables, build_tables
from .pde_core import (
    Grid,
    StateProfile,
    Stepper,
    StepScheme,
    check_same_grid,
    l2_norm,
    make_initial_profile,
    trapezoid_weights,
)

__all__ = [
    "DIVERGENCE_LIMIT",
    "TriggerState",
    "EventLog",
    "Trajectory",
    "ClosedLoopRun",
    "control_sample",
    "deviation",
    "trigger_threshold",
    "trigger_fires",
    "simulate_closed_loop",
]

log = logging.getLogger(__name__)

DIVERGENCE_LIMIT = 1e12


def control_sample(u, tables: KernelTables) -> float:
    """Trapezoid quadrature of k(y) u(y) on the tables' grid."""
    v = check_same_grid(u, tables.grid_n)
    return float(np.dot(trapezoid_weights(tables.grid_n) * tables.k_trace, v))


def _held_control(values: np.ndarray, tables: KernelTables) -> float:
    """Held value U with values[-1] = U and U = control_sample(values).

    The boundary node carries the control it helps define, so the sample is
    the fixed point U = a + w_n k(1) U, where ``a`` is the interior part.
    """
    w = trapezoid_weights(tables.grid_n)
    k = tables.k_trace
    interior = float(np.dot(w[:-1] * k[:-1], values[:-1]))
    denom = 1.0 - w[-1] * k[-1]
    if denom <= 0.0:
        raise DomainError("boundary gain too large for the grid: 1 - w_n k(1) <= 0")
    return interior / denom


@dataclass
class TriggerState:
    t_last: float
    frozen_profile: np.ndarray
    frozen_norm: float
    held_control: float
    beta: float

    @classmethod
    def at_event(cls, t: float, values: np.ndarray, tables: KernelTables, beta: float) -> "TriggerState":
        """Freeze ``values`` (its boundary node is overwritten by the new control)."""
        u_d = _held_control(values, tables)
        values[-1] = u_d
        frozen = values.copy()
        return cls(t, frozen, l2_norm(frozen), u_d, beta)


def deviation(trigger: TriggerState, u, tables: KernelTables) -> float:
    """d = held control minus the nominal feedback evaluated on ``u``."""
    return trigger.held_control - control_sample(u, tables)


def trigger_threshold(trigger: TriggerState, u, tables: KernelTables) -> float:
    return trigger.beta * tables.k_norm * (l2_norm(u) + trigger.frozen_norm)


def trigger_fires(trigger: TriggerState, u, tables: KernelTables) -> bool:
    return abs(deviation(trigger, u, tables)) > trigger_threshold(trigger, u, tables)


@dataclass
class EventLog:
    """Event instants t_0 = 0 < t_1 < ... with the trigger values at each firing.

    ``d_at_fire`` is the signed deviation just before the reset; entry 0
    (the initial sample) carries zeros.
    """

    times: list[float] = field(default_factory=list)
    d_at_fire: list[float] = field(default_factory=list)
    threshold_at_fire: list[float] = field(default_factory=list)
    steps: list[int] = field(default_factory=list)

    def record(self, step: int, t: float, d: float, threshold: float) -> None:
        self.steps.append(step)
        self.times.append(t)
        self.d_at_fire.append(d)
        self.threshold_at_fire.append(threshold)

    @property
    def gaps(self) -> np.ndarray:
        return np.diff(np.asarray(self.times, dtype=float))

    @property
    def count(self) -> int:
        """Number of events after t_0."""
        return max(len(self.times) - 1, 0)

    def __len__(self) -> int:
        return len(self.times)


@dataclass
class Trajectory:
    """Per-step samples; ``d`` is the post-reset deviation (zero at events).

    Full profiles are kept every ``profile_every`` steps.
    """

    t: np.ndarray
    norm_u: np.ndarray
    U_d: np.ndarray
    d: np.ndarray
    threshold: np.ndarray
    profile_times: np.ndarray
    profiles: np.ndarray
    dt: float

    @property
    def abs_d(self) -> np.ndarray:
        return np.abs(self.d)


@dataclass
class ClosedLoopRun:
    trajectory: Trajectory
    events: EventLog
    tables: KernelTables
    beta: float
    diverged: bool = False

    def __iter__(self):
        # allows ``trajectory, events = simulate_closed_loop(...)``
        return iter((self.trajectory, self.events))


def simulate_closed_loop(
    cfg: KernelConfig,
    grid: Grid,
    scheme: StepScheme,
    beta: float,
    T_final: float,
    ic="primary",
    *,
    tables: KernelTables | None = None,
    profile_every: int = 100,
) -> ClosedLoopRun:
    """Run the plant under event-triggered backstepping feedback on [0, T_final].

    Parameters
    ----------
    cfg : KernelConfig
        Plant and design coefficients; ``scheme`` must use the same theta and
        lambda.
    grid, scheme : Grid, StepScheme
        Space and time discretization.
    beta : float
        Trigger parameter; need not satisfy the small-gain condition.
    T_final : float
        Horizon; the run takes round(T_final/dt) steps.
    ic : descriptor or StateProfile
        Initial condition (see :func:`etbc.pde_core.make_initial_profile`).
    tables : KernelTables, optional
        Precomputed gain tables on ``grid``; built if omitted.
    profile_every : int
        Decimation of the stored full profiles.

    Returns
    -------
    ClosedLoopRun
        Trajectory, event log and a ``diverged`` flag. A run whose norm
        leaves [0, 1e12] stops early and is flagged rather than raising.
    """
    if not beta > 0:
        raise DomainError(f"beta must be positive, got {beta}")
    if scheme.theta != cfg.theta or scheme.lam != cfg.lam:
        raise DomainError("scheme and kernel config disagree on theta/lambda")
    if tables is None:
        tables = build_tables(cfg, grid.n)
    elif tables.grid_n != grid.n:
        raise DomainError(f"tables built on grid_n={tables.grid_n}, grid has n={grid.n}")

    u0 = ic if isinstance(ic, StateProfile) else make_initial_profile(ic, grid)
    values = check_same_grid(u0, grid.n).astype(float, copy=True)
    values[0] = 0.0

    stepper = Stepper(scheme, grid)
    steps = int(round(T_final / scheme.dt))
    weights = trapezoid_weights(grid.n) * tables.k_trace
    norm_w = trapezoid_weights(grid.n)
    k_scale = beta * tables.k_norm

    t_out = np.empty(steps + 1)
    norm_out = np.empty(steps + 1)
    ud_out = np.empty(steps + 1)
    d_out = np.empty(steps + 1)
    thr_out = np.empty(steps + 1)
    prof_t: list[float] = []
    prof: list[np.ndarray] = []

    trig = TriggerState.at_event(0.0, values, tables, beta)
    events = EventLog()
    events.record(0, 0.0, 0.0, 0.0)
    t_out[0] = 0.0
    norm_out[0] = trig.frozen_norm
    ud_out[0] = trig.held_control
    d_out[0] = 0.0
    thr_out[0] = 2.0 * k_scale * trig.frozen_norm
    prof_t.append(0.0)
    prof.append(values.copy())

    diverged = False
    last = steps
    for s in range(1, steps + 1):
        t = s * scheme.dt
        stepper.advance(values, trig.held_control)
        nu = math.sqrt(float(np.dot(norm_w, values * values)))
        if not math.isfinite(nu) or nu > DIVERGENCE_LIMIT:
            log.warning("run diverged at t=%.6g (||u|| = %.3g)", t, nu)
            diverged = True
            last = s - 1
            break
        d = trig.held_control - float(np.dot(weights, values))
        thr = k_scale * (nu + trig.frozen_norm)
        fired = abs(d) > thr
        if fired:
            events.record(s, t, d, thr)
            trig = TriggerState.at_event(t, values, tables, beta)
            nu = trig.frozen_norm
            d = 0.0
            thr = 2.0 * k_scale * nu
        t_out[s] = t
        norm_out[s] = nu
        ud_out[s] = trig.held_control
        d_out[s] = d
        thr_out[s] = thr
        if s % profile_every == 0:
            prof_t.append(t)
            prof.append(values.copy())

    n = last + 1
    traj = Trajectory(
        t=t_out[:n],
        norm_u=norm_out[:n],
        U_d=ud_out[:n],
        d=d_out[:n],
        threshold=thr_out[:n],
        profile_times=np.asarray(prof_t),
        profiles=np.asarray(prof),
        dt=scheme.dt,
    )
    return ClosedLoopRun(traj, events, tables, beta, diverged)
