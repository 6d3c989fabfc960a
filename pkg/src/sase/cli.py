"""Command-line entry point: ``sase run | rank-check | budget-table | show-config``.

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import os
import sys
from pathlib import Path

from . import harness, metrics
from .errors import InvalidParameterError, NumericalError, SaseError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

OUTPUT_DIR_ENV = "SASE_OUTPUT_DIR"

# CLI flag -> ExperimentConfig field
_OVERRIDES = {
    "seed": "seed",
    "trials": "trials",
    "mode": "mode",
    "geometry": "geometry",
    "snr_db": "snr_db",
    "snr_grid": "snr_db_grid",
    "n_r": "n_r",
    "n_t": "n_t",
    "m_rf": "m_rf",
    "n_rf": "n_rf",
    "paths": "true_l",
    "assumed_paths": "assumed_l",
    "m": "m",
    "channel_uses": "channel_uses",
    "dict_factor": "dict_factor",
    "path_policy": "path_policy",
    "workers": "workers",
}


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="flat 'key = value' config file")
    p.add_argument("--seed", type=int)
    p.add_argument("--trials", type=int)
    p.add_argument("--mode", choices=["hybrid", "unconstrained"])
    p.add_argument("--geometry", choices=["ula", "upa"])
    p.add_argument("--snr-db", type=float, help="SNR for non-SNR sweeps")
    p.add_argument("--snr-grid", help="comma-separated SNR grid in dB")
    p.add_argument("--n-r", type=int)
    p.add_argument("--n-t", type=int)
    p.add_argument("--m-rf", type=int)
    p.add_argument("--n-rf", type=int)
    p.add_argument("--paths", type=int, help="true path count L")
    p.add_argument("--assumed-paths", help="estimator path count, or 'auto'")
    p.add_argument("--m", type=int, help="stage-one column budget")
    p.add_argument("--channel-uses", type=int, help="total channel-use target K")
    p.add_argument("--dict-factor", type=int, help="dictionary size as a multiple of the array size")
    p.add_argument("--path-policy", choices=["largest_gap", "noise_floor"])
    p.add_argument("--workers", type=int)


def _build_config(args, sweep: str) -> harness.ExperimentConfig:
    base = harness.ExperimentConfig()
    if args.config is not None:
        base = harness.load_config(args.config, base)
    overrides = {}
    for flag, key in _OVERRIDES.items():
        value = getattr(args, flag, None)
        if value is not None:
            overrides[key] = value
    if "m" in overrides:
        overrides.setdefault("channel_uses", None)
    config = harness.config_from_mapping(overrides, base)
    if sweep:
        config = dataclasses.replace(config, sweep=sweep)
    return config.validate()


def _output_path(out: str | None, default_name: str) -> Path:
    if out:
        path = Path(out)
        if not path.is_absolute() and os.environ.get(OUTPUT_DIR_ENV) and path.parent == Path("."):
            path = Path(os.environ[OUTPUT_DIR_ENV]) / path
        return path
    return Path(os.environ.get(OUTPUT_DIR_ENV, ".")) / default_name


def cmd_run(args) -> int:
    config = _build_config(args, args.sweep)
    result = harness.run_sweep(config)
    if config.sweep == "rank_check":
        return _write_rank(result, args)
    path = _output_path(args.out, f"sase_{config.sweep}.{args.format}")
    harness.emit(result, args.format, path)
    print(f"wrote {len(result.rows)} rows to {path} ({result.wall_time:.1f} s)")
    return EXIT_OK


def _write_rank(result: harness.RankCheckResult, args) -> int:
    text = harness.rank_check_csv(result)
    if args.out is None and os.environ.get(OUTPUT_DIR_ENV) is None:
        sys.stdout.write(text)
        return EXIT_OK
    path = _output_path(args.out, "sase_rank_check.csv")
    path.write_text(text, encoding="utf-8")
    print(f"wrote {len(result.rows)} rows to {path}")
    return EXIT_OK


def cmd_rank_check(args) -> int:
    config = _build_config(args, "rank_check")
    if args.trials is None and args.config is None:
        config = dataclasses.replace(config, trials=100)
    return _write_rank(harness.run_rank_check(config), args)


def cmd_budget_table(args) -> int:
    config = _build_config(args, "")
    table = metrics.budget_table(
        num_paths=config.true_l,
        n_r=config.n_r,
        n_t=config.n_t,
        m_rf=config.m_rf,
        n_rf=config.n_rf,
        m=config.column_budget,
        grid=args.grid,
        q=args.arnoldi_iters,
        s=args.ace_stages,
        n_m=args.ace_grid,
    )
    print("scheme,channel_uses,exact")
    for name, (value, exact) in table.items():
        print(f"{name},{value!r},{str(exact).lower()}")
    return EXIT_OK


def cmd_show_config(args) -> int:
    config = _build_config(args, args.sweep or "")
    sys.stdout.write(harness.format_config(config))
    print(f"# derived: m = {config.column_budget},"
          f" K = {metrics.sase_channel_uses(config.column_budget, config.n_r, config.m_rf, config.n_t)}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sase", description="SASE channel-estimation experiments")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a Monte Carlo sweep")
    run.add_argument("--sweep", choices=harness.SWEEPS, default=None)
    run.add_argument("--out", help="output file")
    run.add_argument("--format", choices=["csv", "json"], default="csv")
    _add_config_flags(run)
    run.set_defaults(func=cmd_run)

    rank = sub.add_parser("rank-check", help="numerical rank of the sampled block")
    rank.add_argument("--out")
    _add_config_flags(rank)
    rank.set_defaults(func=cmd_rank_check)

    budget = sub.add_parser("budget-table", help="training overhead of SASE and other schemes")
    budget.add_argument("--grid", type=int, default=256, help="angle grid size for OMP/SBL")
    budget.add_argument("--arnoldi-iters", type=int, default=8)
    budget.add_argument("--ace-stages", type=int, default=3)
    budget.add_argument("--ace-grid", type=int, default=144)
    _add_config_flags(budget)
    budget.set_defaults(func=cmd_budget_table)

    show = sub.add_parser("show-config", help="print the resolved configuration")
    show.add_argument("--sweep", choices=harness.SWEEPS, default=None)
    _add_config_flags(show)
    show.set_defaults(func=cmd_show_config)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except InvalidParameterError as exc:
        print(f"sase: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"sase: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except SaseError as exc:
        print(f"sase: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"sase: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
