"""Command-line entry point: ``etbc <command> --config <path> [--out <dir>]``.

Exit codes: 0 success, 2 configuration error, 3 not certified, 4 diverged.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import harness
from .errors import ConfigError, DomainError, EtbcError, InvalidRegimeError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NOT_CERTIFIED = 3
EXIT_DIVERGED = 4

log = logging.getLogger("etbc")


def _outdir(args, cfg_dir: str) -> Path:
    out = Path(args.out if args.out else cfg_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_analyze(args) -> int:
    cfg = harness.load_run_config(args.config)
    report = harness.run_analyze(cfg)
    harness.write_certificate(report, _outdir(args, cfg.output_dir))
    for note in report.notes:
        log.warning(note)
    print(f"Phi_e = {report.phi_e:.6g} (gamma {report.gamma_source} = {report.gamma:.6g}); certified: {report.certified}")
    return EXIT_OK if report.certified else EXIT_NOT_CERTIFIED


def cmd_simulate(args) -> int:
    cfg = harness.load_run_config(args.config)
    run = harness.run_simulation(cfg)
    harness.write_simulation(run, _outdir(args, cfg.output_dir))
    print(f"{run.events.count} events after t0 on [0, {cfg.T_final:g}]")
    if run.diverged:
        log.error("closed-loop run diverged")
        return EXIT_DIVERGED
    return EXIT_OK


def cmd_sweep(args) -> int:
    spec = harness.load_sweep_spec(args.config)
    result = harness.run_sweep(spec)
    harness.write_sweep(result, _outdir(args, spec.output_dir))
    for beta in sorted(set(spec.betas), reverse=True):
        g = result.gaps_for(beta)
        print(f"beta = {beta:g}: {g.size} gaps, modal log10 bin {harness.modal_bin(g)}")
    return EXIT_OK


def cmd_kernel(args) -> int:
    cfg = harness.load_run_config(args.config)
    harness.write_kernel(cfg, _outdir(args, cfg.output_dir))
    t = harness.cached_tables(cfg.kernel, cfg.grid_n)
    print(f"||k|| = {t.k_norm:.6g}, K~ = {t.K_tilde:.6g}, L~ = {t.L_tilde:.6g}")
    return EXIT_OK


def cmd_compare_periodic(args) -> int:
    cfg = harness.load_run_config(args.config)
    run = harness.run_simulation(cfg)
    report = harness.run_analyze(cfg)
    rows = harness.comparison_rows(run, report, cfg.T_final)
    harness.write_csv(
        _outdir(args, cfg.output_dir) / "comparison.csv",
        ["method", "updates", "updates_per_second", "period"],
        rows,
    )
    for method, n, _, _ in rows:
        print(f"{method}: {n} updates")
    return EXIT_DIVERGED if run.diverged else EXIT_OK


COMMANDS = {
    "analyze": cmd_analyze,
    "simulate": cmd_simulate,
    "sweep": cmd_sweep,
    "kernel": cmd_kernel,
    "compare-periodic": cmd_compare_periodic,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="etbc", description="Event-triggered boundary control of a reaction-diffusion PDE.")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="JSON configuration file")
        p.add_argument("--out", help="output directory (overrides output_dir)")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, DomainError, InvalidRegimeError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except EtbcError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
