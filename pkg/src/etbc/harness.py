"""Configuration, experiment orchestration and file output for the CLI."""

from __future__ import annotations

import csv
import json
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields
from functools import lru_cache
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np

from .analysis import DEFAULT_MODAL_GRID, CertificateReport, certify
from .errors import ConfigError, DomainError, ResolutionError
from .event_trigger import ClosedLoopRun, simulate_closed_loop
from .kernels import KernelConfig, KernelTables, build_tables, choose_N, modal_truncation
from .pde_core import Grid, StepScheme, sweep_initial_conditions
from .svg import Series, line_chart

__all__ = [
    "PERIODIC_PERIOD",
    "HIST_BIN_WIDTH",
    "RunConfig",
    "SweepSpec",
    "load_run_config",
    "load_sweep_spec",
    "cached_tables",
    "run_analyze",
    "run_simulation",
    "run_sweep",
    "SweepResult",
    "histogram",
    "write_csv",
]

log = logging.getLogger(__name__)

# Sampled-data period quoted for the default plant, used only as a comparison point.
PERIODIC_PERIOD = 9.96e-7
HIST_BIN_WIDTH = 0.1


def _fmt(v: Any) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return str(v)


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


# -- configuration --------------------------------------------------------------


def _number(name: str, value: Any, *, integer: bool = False, optional: bool = False):
    if value is None and optional:
        return None
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{name} must be a number, got {value!r}")
    if integer:
        if int(value) != value:
            raise ConfigError(f"{name} must be an integer, got {value!r}")
        return int(value)
    if not math.isfinite(value):
        raise ConfigError(f"{name} must be finite")
    return float(value)


def _read_json(path: str | os.PathLike) -> dict:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be an object")
    return data


@dataclass(frozen=True)
class RunConfig:
    """Single-run configuration. The JSON key for ``lam`` is ``"lambda"``."""

    theta: float = 1.0
    lam: float = math.pi**2
    c: float = 1.0
    beta: float = 0.07
    grid_n: int = 100
    dt: float = 1e-4
    T_final: float = 1.0
    ic: Any = "primary"
    sigma: float | None = None
    b: float = 1.0
    gamma_override: float | None = None
    modal_grid_n: int = DEFAULT_MODAL_GRID
    output_dir: str = "out"
    seed: int | None = None

    _INTS = ("grid_n", "modal_grid_n")
    _OPTIONAL = ("sigma", "gamma_override")

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        keys = {("lambda" if f.name == "lam" else f.name): f.name for f in fields(cls)}
        unknown = set(data) - set(keys)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        kw: dict[str, Any] = {}
        for key, value in data.items():
            name = keys[key]
            if name in ("ic",):
                kw[name] = value
            elif name == "output_dir":
                if not isinstance(value, str):
                    raise ConfigError("output_dir must be a string")
                kw[name] = value
            elif name == "seed":
                kw[name] = _number("seed", value, integer=True, optional=True)
            else:
                kw[name] = _number(key, value, integer=name in cls._INTS, optional=name in cls._OPTIONAL)
        cfg = cls(**kw)
        cfg.validate()
        return cfg

    def validate(self) -> None:
        if self.theta <= 0:
            raise ConfigError("theta must be positive")
        if self.c < 0:
            raise ConfigError("c must be non-negative")
        if self.beta <= 0:
            raise ConfigError("beta must be positive")
        if self.grid_n < 50 or self.modal_grid_n < 50:
            raise ConfigError("grid_n and modal_grid_n must be >= 50")
        if self.dt <= 0 or self.T_final <= 0:
            raise ConfigError("dt and T_final must be positive")
        if self.b <= 0:
            raise ConfigError("b must be positive")

    @property
    def kernel(self) -> KernelConfig:
        return KernelConfig(self.theta, self.lam, self.c)

    @property
    def scheme(self) -> StepScheme:
        return StepScheme(self.dt, self.theta, self.lam)


@dataclass(frozen=True)
class SweepSpec:
    """The 100-IC sweep: families A (l = 1..10) and B (l = 11..100) for each beta.

    ``ic_count`` keeps only the first entries of the family (for quick runs).
    """

    betas: tuple[float, ...] = (0.07, 0.02)
    ic_family: str = "standard"
    ic_count: int = 100
    T_final: float = 1.0
    theta: float = 1.0
    lam: float = math.pi**2
    c: float = 1.0
    grid_n: int = 100
    dt: float = 1e-4
    modal_grid_n: int = DEFAULT_MODAL_GRID
    output_dir: str = "out"
    seed: int | None = None

    @classmethod
    def from_dict(cls, data: dict) -> "SweepSpec":
        keys = {("lambda" if f.name == "lam" else f.name): f.name for f in fields(cls)}
        unknown = set(data) - set(keys)
        if unknown:
            raise ConfigError(f"unknown sweep keys: {sorted(unknown)}")
        kw: dict[str, Any] = {}
        for key, value in data.items():
            name = keys[key]
            if name == "betas":
                if not isinstance(value, list) or not value:
                    raise ConfigError("betas must be a non-empty list")
                kw[name] = tuple(_number("betas", v) for v in value)
                if min(kw[name]) <= 0:
                    raise ConfigError("betas must be positive")
            elif name == "ic_family":
                if value != "standard":
                    raise ConfigError("ic_family must be 'standard'")
                kw[name] = value
            elif name == "output_dir":
                if not isinstance(value, str):
                    raise ConfigError("output_dir must be a string")
                kw[name] = value
            elif name == "seed":
                kw[name] = _number("seed", value, integer=True, optional=True)
            else:
                kw[name] = _number(key, value, integer=name in ("grid_n", "modal_grid_n", "ic_count"))
        spec = cls(**kw)
        if not 1 <= spec.ic_count <= 100:
            raise ConfigError("ic_count must lie in 1..100")
        if spec.theta <= 0 or spec.c < 0 or spec.dt <= 0 or spec.T_final <= 0:
            raise ConfigError("theta, dt, T_final must be positive and c >= 0")
        if spec.grid_n < 50 or spec.modal_grid_n < 50:
            raise ConfigError("grid_n and modal_grid_n must be >= 50")
        return spec

    @property
    def kernel(self) -> KernelConfig:
        return KernelConfig(self.theta, self.lam, self.c)

    @property
    def scheme(self) -> StepScheme:
        return StepScheme(self.dt, self.theta, self.lam)

    def initial_conditions(self) -> list[str]:
        return sweep_initial_conditions()[: self.ic_count]


def load_run_config(path: str | os.PathLike) -> RunConfig:
    return RunConfig.from_dict(_read_json(path))


def load_sweep_spec(path: str | os.PathLike) -> SweepSpec:
    return SweepSpec.from_dict(_read_json(path))


@lru_cache(maxsize=8)
def cached_tables(cfg: KernelConfig, grid_n: int) -> KernelTables:
    return build_tables(cfg, grid_n)


# -- single-run commands ------------------------------------------------------------


def run_analyze(cfg: RunConfig) -> CertificateReport:
    return certify(
        cfg.kernel,
        cfg.beta,
        cached_tables(cfg.kernel, cfg.grid_n),
        sigma=cfg.sigma,
        b=cfg.b,
        gamma_override=cfg.gamma_override,
        modal_tables=cached_tables(cfg.kernel, cfg.modal_grid_n),
    )


def write_certificate(report: CertificateReport, out: Path) -> None:
    rows = report.rows()
    write_csv(out / "certificate.csv", ["quantity", "value"], rows)
    width = max(len(k) for k, _ in rows)
    lines = [f"{k.ljust(width)} = {_fmt(v)}" for k, v in rows]
    lines += [f"note: {n}" for n in report.notes]
    (out / "certificate.txt").write_text("\n".join(lines) + "\n")


def run_simulation(cfg: RunConfig) -> ClosedLoopRun:
    return simulate_closed_loop(
        cfg.kernel,
        Grid(cfg.grid_n),
        cfg.scheme,
        cfg.beta,
        cfg.T_final,
        cfg.ic,
        tables=cached_tables(cfg.kernel, cfg.grid_n),
    )


def write_simulation(run: ClosedLoopRun, out: Path) -> None:
    traj, ev = run.trajectory, run.events
    write_csv(
        out / "trajectory.csv",
        ["t", "norm_u", "U_d", "d", "abs_d", "threshold"],
        zip(traj.t, traj.norm_u, traj.U_d, traj.d, traj.abs_d, traj.threshold),
    )
    gaps = [None] + list(ev.gaps)
    write_csv(
        out / "events.csv",
        ["j", "t_j", "gap", "abs_d_at_fire", "threshold_at_fire"],
        (
            (j, ev.times[j], gaps[j], abs(ev.d_at_fire[j]), ev.threshold_at_fire[j])
            for j in range(len(ev))
        ),
    )
    x = np.arange(run.tables.grid_n + 1) / run.tables.grid_n
    write_csv(
        out / "profiles.csv",
        ["t", "x", "u"],
        ((t, xi, ui) for t, prof in zip(traj.profile_times, traj.profiles) for xi, ui in zip(x, prof)),
    )
    (out / "control.svg").write_text(
        line_chart([Series("U_d", traj.t, traj.U_d, step=True)], "Held boundary control", "t (s)", "U_d")
    )
    (out / "trigger.svg").write_text(
        line_chart(
            [Series("|d(t)|", traj.t, traj.abs_d), Series("threshold", traj.t, traj.threshold)],
            f"Trigger function, beta = {run.beta:g}",
            "t (s)",
            "value",
        )
    )


def write_kernel(cfg: RunConfig, out: Path) -> None:
    tables = cached_tables(cfg.kernel, cfg.grid_n)
    write_csv(out / "kernel.csv", ["y", "k_of_y"], zip(tables.nodes, tables.k_trace))
    modal = cached_tables(cfg.kernel, cfg.modal_grid_n)
    try:
        N = choose_N(modal, cfg.kernel, cfg.beta)
    except (DomainError, ResolutionError):
        N = modal.grid_n // 4
    modes = modal_truncation(modal, cfg.kernel, N)
    write_csv(
        out / "kernel_summary.csv",
        ["quantity", "value"],
        [
            ("grid_n", tables.grid_n),
            ("gamma_kernel", cfg.kernel.gamma),
            ("k_norm", tables.k_norm),
            ("K_tilde", tables.K_tilde),
            ("L_tilde", tables.L_tilde),
            ("modal_grid_n", modal.grid_n),
            ("N", N),
            ("tail_norm", modes.tail_norm),
            ("F_N", modes.F_N),
            ("G_N", modes.G_N),
        ],
    )
    write_csv(
        out / "modes.csv",
        ["n", "k_n", "lambda_n"],
        zip(range(1, N + 1), modes.k_n, modes.eigenvalues),
    )


def comparison_rows(run: ClosedLoopRun, report: CertificateReport, T_final: float) -> list[tuple]:
    rows = [("event_triggered", run.events.count, run.events.count / T_final, None)]
    periodic = math.floor(T_final / PERIODIC_PERIOD * (1 + 1e-12))
    rows.append(("periodic_T", periodic, periodic / T_final, PERIODIC_PERIOD))
    tau = report.tau_lambert
    if tau is not None:
        n_tau = math.floor(T_final / tau)
        rows.append(("periodic_tau_lambert", n_tau, n_tau / T_final, tau))
    return rows


# -- sweep ----------------------------------------------------------------------


@dataclass
class SweepResult:
    spec: SweepSpec
    gaps: list[tuple[float, int, int, float]] = field(default_factory=list)
    counts: dict[tuple[float, int], int] = field(default_factory=dict)
    diverged: list[tuple[float, int]] = field(default_factory=list)
    reports: dict[float, CertificateReport] = field(default_factory=dict)

    def gaps_for(self, beta: float) -> np.ndarray:
        return np.asarray([g for b, _, _, g in self.gaps if b == beta])


def _sweep_job(args: tuple) -> tuple[float, int, list[float], int, bool]:
    kernel, grid_n, scheme, beta, T_final, ic, index = args
    run = simulate_closed_loop(
        kernel, Grid(grid_n), scheme, beta, T_final, ic, tables=cached_tables(kernel, grid_n), profile_every=10**9
    )
    return beta, index, [float(g) for g in run.events.gaps], run.events.count, run.diverged


def _workers() -> int:
    env = os.environ.get("ETBC_THREADS")
    if env:
        try:
            n = int(env)
        except ValueError as exc:
            raise ConfigError(f"ETBC_THREADS must be an integer, got {env!r}") from exc
        return max(n, 1)
    return os.cpu_count() or 1


def run_sweep(spec: SweepSpec, workers: int | None = None) -> SweepResult:
    """Run every (beta, initial condition) pair; results sorted by (beta, ic_index)."""
    jobs = [
        (spec.kernel, spec.grid_n, spec.scheme, beta, spec.T_final, ic, idx)
        for beta in spec.betas
        for idx, ic in enumerate(spec.initial_conditions(), start=1)
    ]
    workers = _workers() if workers is None else workers
    if workers <= 1:
        results = [_sweep_job(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_sweep_job, jobs, chunksize=4))
    results.sort(key=lambda r: (r[0], r[1]))
    out = SweepResult(spec)
    for beta, idx, gaps, count, diverged in results:
        out.counts[(beta, idx)] = count
        if diverged:
            log.warning("sweep run beta=%g ic=%d diverged", beta, idx)
            out.diverged.append((beta, idx))
        out.gaps.extend((beta, idx, j, g) for j, g in enumerate(gaps, start=1))
    modal = cached_tables(spec.kernel, spec.modal_grid_n)
    tables = cached_tables(spec.kernel, spec.grid_n)
    for beta in sorted(set(spec.betas)):
        out.reports[beta] = certify(spec.kernel, beta, tables, modal_tables=modal)
    return out


def _bin_index(gap: float) -> int:
    # round before flooring so gaps like 0.01 land on their exact edge
    return math.floor(round(math.log10(gap) / HIST_BIN_WIDTH, 9))


def histogram(gaps: Sequence[float]) -> list[tuple[float, float, int, float]]:
    """(bin_lo, bin_hi, count, density) over log10(gap), width 0.1, contiguous."""
    positive = [g for g in gaps if g > 0]
    if not positive:
        return []
    idx = [_bin_index(g) for g in positive]
    counts: dict[int, int] = {}
    for i in idx:
        counts[i] = counts.get(i, 0) + 1
    total = len(idx)
    rows = []
    for i in range(min(idx), max(idx) + 1):
        c = counts.get(i, 0)
        rows.append((round(i * HIST_BIN_WIDTH, 10), round((i + 1) * HIST_BIN_WIDTH, 10), c, c / (total * HIST_BIN_WIDTH)))
    return rows


def modal_bin(gaps: Sequence[float]) -> float | None:
    rows = histogram(gaps)
    if not rows:
        return None
    best = max(rows, key=lambda r: (r[2], -r[0]))
    return best[0]


def write_sweep(result: SweepResult, out: Path) -> None:
    write_csv(out / "gaps.csv", ["beta", "ic_index", "j", "gap"], result.gaps)
    hist_rows = []
    series = []
    summary = []
    for beta in sorted(set(result.spec.betas), reverse=True):
        g = result.gaps_for(beta)
        rows = histogram(g)
        hist_rows.extend((beta,) + r for r in rows)
        if rows:
            xs = [rows[0][0]] + [r[1] for r in rows]
            ys = [r[3] for r in rows] + [rows[-1][3]]
            series.append(Series(f"beta = {beta:g}", xs, ys, step=True))
        rep = result.reports[beta]
        n_runs = sum(1 for (b, _) in result.counts if b == beta)
        summary.append(
            (
                beta,
                n_runs,
                sum(1 for (b, _) in result.diverged if b == beta),
                int(g.size),
                float(g.mean()) if g.size else None,
                float(np.median(g)) if g.size else None,
                float(g.min()) if g.size else None,
                modal_bin(g),
                rep.tau_lambert,
                rep.tau_numeric,
                int(np.sum(g < rep.tau_lambert)) if rep.tau_lambert is not None else None,
            )
        )
    write_csv(out / "histogram.csv", ["beta", "bin_lo", "bin_hi", "count", "density"], hist_rows)
    write_csv(
        out / "summary.csv",
        [
            "beta",
            "runs",
            "diverged",
            "gaps",
            "mean_gap",
            "median_gap",
            "min_gap",
            "modal_bin_lo",
            "tau_lambert",
            "tau_numeric",
            "gaps_below_tau_lambert",
        ],
        summary,
    )
    (out / "histogram.svg").write_text(
        line_chart(series, "Inter-execution times", "log10(gap / s)", "density")
    )
