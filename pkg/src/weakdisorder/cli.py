"""Command line front end.

    weakdisorder <command> --config <path> [--out <dir>] [--seed <n>]

Commands: bands, expand, lower, spectrum, bounds, verify.  ``verify`` needs
no config.  Exit codes: 0 success, 2 configuration error, 3 failed
assumption, 4 numerical failure, 5 failed acceptance check.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .bands import analyze_bands
from .config import ExperimentConfig, parse_config
from .disorder import sample_configurations
from .ensemble import enumerate_configurations, periodic_spectrum
from .errors import AssumptionFailed, ConfigError, WeakDisorderError
from .expansion import expand_edge
from .lower import build_hat_problem, lower_bound_sweep
from .report import bounds_report, header_line, write_csv

log = logging.getLogger("weakdisorder")

EXIT_ACCEPTANCE = 5
COMMANDS = ("bands", "expand", "lower", "spectrum", "bounds", "verify")


def _edge(cfg: ExperimentConfig):
    disc = cfg.grid()
    band = analyze_bands(cfg.operator, disc, cfg.sweeps.theta_points, cfg.sweeps.n_bands)
    return disc, band


def cmd_bands(cfg: ExperimentConfig, out: Path) -> int:
    disc, band = _edge(cfg)
    cols = ["theta"] + [f"E{k}" for k in range(band.n_bands)]
    rows = ({"theta": th, **{f"E{k}": e for k, e in enumerate(es)}} for th, es in zip(band.theta_samples, band.energies))
    write_csv(out / "bands.csv", rows, cols, "bands")
    log.info("theta0 = %.12g, Lambda0 = %.12g, gap = %.6g", band.theta0, band.Lambda0, band.gap_at_theta0)
    return 0


def cmd_expand(cfg: ExperimentConfig, out: Path) -> int:
    disc, band = _edge(cfg)
    exp = expand_edge(cfg.operator, cfg.family, cfg.disorder, disc, band)
    rec = {"version": __version__, **exp.record(), "psi1_residual": exp.psi1_residual}
    (out / "expansion.json").write_text(json.dumps(rec, indent=2, sort_keys=True) + "\n")
    log.info("s* = %g, Lambda1 = %.12g, Lambda2 = %.12g", exp.s_star, exp.Lambda1, exp.Lambda2)
    return 0


def cmd_lower(cfg: ExperimentConfig, out: Path) -> int:
    disc, band = _edge(cfg)
    exp = expand_edge(cfg.operator, cfg.family, cfg.disorder, disc, band)
    d = cfg.discretization
    hat = build_hat_problem(cfg.operator, cfg.family, exp, d.hat_N, d.hat_order)
    sweep = lower_bound_sweep(hat, cfg.family, cfg.disorder, exp.s_star, cfg.sweeps.eps_list, cfg.sweeps.s_grid)
    cols = ["eps", "s_min_at", "lambda_min", "expansion", "deficit", "inferred_C"]
    write_csv(out / "lower.csv", sweep.csv_rows(), cols, "lower")
    log.info("b1 = (%.6g, %.6g), hat Lambda2 = %.12g, inferred C = %.6g", hat.b1_left, hat.b1_right, hat.hat_Lambda2, sweep.inferred_C)
    return 0


def cmd_spectrum(cfg: ExperimentConfig, out: Path) -> int:
    sdisc = cfg.supercell_grid()
    sw = cfg.sweeps
    configs = enumerate_configurations(cfg.disorder.support, sw.max_period)
    if sw.samples:
        configs += sample_configurations(cfg.disorder, sw.sample_period, sw.samples, cfg.seed)
    n_eigs = 4
    cols = ["eps", "period", "config_id", "config_values", "momentum"] + [f"E{k}" for k in range(n_eigs)] + ["inf_estimate"]
    rows = []
    for eps in sw.eps_list:
        best = np.inf
        for cid, c in enumerate(configs):
            s = periodic_spectrum(cfg.operator, cfg.family, c, eps, sdisc, sw.momenta_per_cell * c.period, n_eigs)
            for th, ev in zip(s.momentum_samples, s.eigenvalues):
                rows.append({"eps": eps, "period": c.period, "config_id": cid, "config_values": list(c.values),
                             "momentum": th, **{f"E{k}": e for k, e in enumerate(ev)}})
            best = min(best, s.inf_value)
        rows.append({"eps": eps, "config_id": "summary", "inf_estimate": best})
        log.info("eps = %g: inf estimate %.15g over %d configurations", eps, best, len(configs))
    write_csv(out / "spectrum.csv", rows, cols, "spectrum")
    return 0


def cmd_bounds(cfg: ExperimentConfig, out: Path) -> int:
    disc, band = _edge(cfg)
    exp = expand_edge(cfg.operator, cfg.family, cfg.disorder, disc, band)
    hat = None
    failed = []
    if cfg.operator.order == 1:
        d = cfg.discretization
        hat = build_hat_problem(cfg.operator, cfg.family, exp, d.hat_N, d.hat_order)
        if not hat.a2.holds:
            failed.append("A2 (cell ground state) FAILED; lower bound omitted")
            hat = None
    else:
        failed.append("lower bound not available for m = 2")
    rep = bounds_report(
        cfg.operator, cfg.family, cfg.disorder, exp, disc,
        cfg.supercell_grid(), cfg.supercell_grid(refine=2), cfg.sweeps.eps_list, hat,
        cfg.sweeps.max_period, cfg.sweeps.s_grid, cfg.sweeps.momenta_per_cell,
    )
    cols = ["eps", "upper", "rayleigh_oracle", "lower", "inf_estimate", "upper_minus_inf",
            "inf_minus_lower", "expansion_error", "precision_floor"]
    write_csv(out / "bounds.csv", rep.csv_rows(), cols, "bounds")
    text = "\n".join([header_line("bounds"), rep.summary(), *failed]) + "\n"
    (out / "bounds.txt").write_text(text)
    sys.stdout.write(text)
    if failed and cfg.operator.order == 1:
        return 3
    return 0 if rep.passed else EXIT_ACCEPTANCE


def cmd_verify(out: Path) -> int:
    from .acceptance import run_all

    results, report = run_all()
    lines = [header_line("verify")] + [r.line() for r in results]
    if report is not None:
        lines += ["", report.summary()]
    text = "\n".join(lines) + "\n"
    (out / "verify.txt").write_text(text)
    sys.stdout.write(text)
    return 0 if all(r.passed for r in results) else EXIT_ACCEPTANCE


HANDLERS = {
    "bands": cmd_bands,
    "expand": cmd_expand,
    "lower": cmd_lower,
    "spectrum": cmd_spectrum,
    "bounds": cmd_bounds,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="weakdisorder", description="Spectral edge under weak disorder")
    p.add_argument("--version", action="version", version=f"weakdisorder {__version__}")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", type=Path, help="JSON experiment description (not needed for verify)")
    p.add_argument("--out", type=Path, help="output directory (default: output_dir from the config)")
    p.add_argument("--seed", type=int, help="override the config seed")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        if args.command == "verify":
            out = args.out or Path("out")
            out.mkdir(parents=True, exist_ok=True)
            return cmd_verify(out)
        if args.config is None:
            raise ConfigError(f"{args.command} needs --config")
        cfg = parse_config(args.config)
        if args.seed is not None:
            if args.seed < 0:
                raise ConfigError("--seed must be non-negative")
            cfg = dataclasses.replace(cfg, seed=args.seed)
        out = args.out or Path(cfg.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        return HANDLERS[args.command](cfg, out)
    except ConfigError as exc:
        for v in getattr(exc, "violations", [str(exc)]):
            print(f"config error: {v}", file=sys.stderr)
        return exc.exit_code
    except AssumptionFailed as exc:
        print(f"assumption failed ({type(exc).__name__}): {exc}", file=sys.stderr)
        return exc.exit_code
    except WeakDisorderError as exc:
        print(f"numerical failure ({type(exc).__name__}): {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
