"""Command-line front end.

Subcommands: ``scan`` (one phase scan), ``sweep`` (scan per photon number),
``fit-heights`` (peak-height model fit, from a sweep table or a fresh
sweep), and ``analyze`` (phase uncertainties and resolution for an existing
scan table).  All output is a CSV or JSON table on stdout or ``--out``.
"""

from __future__ import annotations

import argparse
import sys

from .config import ConfigError, RunConfig, parse_config
from .core import ObservableKind
from .estimation import PeakHeightSeries, fit_peak_heights
from .runner import run_scan, run_sweep
from .tables import (
    ResultTable,
    analyze_table,
    base_metadata,
    fit_table,
    read_table,
    scan_table,
    sweep_table,
    write_table,
)


def load_config(args) -> RunConfig:
    if args.config is None:
        raise ConfigError("this command needs --config")
    with open(args.config, encoding="utf-8") as fh:
        config = parse_config(fh.read())
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.shots is not None:
        overrides["shots_per_point"] = args.shots
    if args.format is not None:
        overrides["output_format"] = args.format
    if overrides:
        from dataclasses import replace
        config = replace(config, **overrides)
    return config


def emit(args, table: ResultTable, config: RunConfig | None) -> int:
    fmt = args.format or (config.output_format if config else "csv")
    write_table(table, args.out, fmt)
    return 0


def cmd_scan(args) -> int:
    config = load_config(args)
    result = run_scan(config.scan_spec(), max_workers=args.workers)
    return emit(args, scan_table(result, config), config)


def cmd_sweep(args) -> int:
    config = load_config(args)
    base = config.sweep_base()
    result = run_sweep(base, config.photon_numbers, max_workers=args.workers)
    return emit(args, sweep_table(result, config), config)


def cmd_fit_heights(args) -> int:
    config = None
    if args.table is not None:
        table = read_table(args.table)
        if table.table != "sweep":
            raise ConfigError(f"--in expects a sweep table, got {table.table!r}")
        meta = dict(table.metadata)
        meta["table"] = "fit-heights"
    else:
        config = load_config(args)
        result = run_sweep(config.sweep_base(), config.photon_numbers,
                           max_workers=args.workers)
        table = sweep_table(result, config)
        meta = base_metadata(config, "fit-heights")

    n_mean = table.column("n_mean")
    fits = []
    for kind, col in ((ObservableKind.PARITY, "parity_height"),
                      (ObservableKind.ZERO_PHOTON, "p0_height")):
        series = PeakHeightSeries(n_mean, table.column(col), kind)
        fits.append((fit_peak_heights(series), len(n_mean)))
    parity_fit, p0_fit = fits[0][0], fits[1][0]
    if p0_fit.visibility < 1.0:
        ratio = 2.0 * (1.0 - parity_fit.visibility) / (1.0 - p0_fit.visibility)
        meta["parity_p0_slope_ratio"] = format(ratio, ".12g")
    return emit(args, fit_table(fits, meta), config)


def cmd_analyze(args) -> int:
    if args.table is None:
        raise ConfigError("analyze needs --in <scan table>")
    table = read_table(args.table)
    for col in ("phi_rad", "parity_est", "p0_est"):
        if col not in table.columns:
            raise ConfigError(f"input table lacks required column {col!r}")
    meta = dict(table.metadata)
    meta["table"] = "analyze"
    mean_photons = None
    config_echo = meta.get("config")
    if isinstance(config_echo, dict):
        mean_photons = config_echo.get("source", {}).get("mean_photons")
    out = analyze_table(
        table.column("phi_rad"),
        table.column("parity_est"),
        table.column("p0_est"),
        meta,
        mean_photons,
    )
    return emit(args, out, None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mzparity",
        description="Simulate super-resolved interferometric phase scans with "
                    "parity and zero-photon detection.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_text, needs_in=False):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="JSON config document")
        if needs_in:
            p.add_argument("--in", dest="table", default=None,
                           help="previously emitted table to read instead of simulating")
        p.add_argument("--out", default=None, help="output path (default: stdout)")
        p.add_argument("--format", choices=["csv", "json"], default=None,
                       help="output format (default: from config)")
        p.add_argument("--seed", type=int, default=None, help="override config seed")
        p.add_argument("--shots", type=int, default=None,
                       help="override shots per phase point")
        p.add_argument("--workers", type=int, default=1,
                       help="worker threads for scan points")
        p.set_defaults(func=func)
        return p

    add("scan", cmd_scan, "run one Monte Carlo phase scan")
    add("sweep", cmd_sweep, "run one scan per photon number and summarize")
    add("fit-heights", cmd_fit_heights,
        "fit the peak-height model to a sweep", needs_in=True)
    add("analyze", cmd_analyze,
        "phase uncertainties and resolution for an existing scan table",
        needs_in=True)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ValueError, OSError) as exc:
        print(f"mzparity: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
