#!/usr/bin/env python3
"""
Command-line entry point of the rational pricing-kernel library.

CLI usage:
    python cli.py calibrate --market market/ --out out/ [--config cfg.toml] [--engine nig]
    python cli.py price --params out/params.json --trades trades.csv [--mc-check --paths 200000]
    python cli.py verify [--params out/params.json] [--suites parity cross] [--inject-fault 0.01] [--tighten 100]
    python cli.py imply-vols --market market/ --out out/

Reusable API:
    from cli import main
    exit_code = main(["verify", "--suites", "curves", "parity"])

Exit codes: 0 success, 2 parse/config error, 3 solver failure,
4 pricing invariant violated or a verification check failed.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path
from typing import Optional, Sequence

import pandas as pd

from core import settings
from core.calibration import (
    MODEL_CONFIG,
    CalibConfig,
    calibration_targets,
    figure_tables,
    reference_params,
    run_pipeline,
)
from core.errors import EXIT_INVARIANT, RpksError
from core.fourier import QuadratureConfig
from core.market_data import load_snapshot
from core.mc_oracle import mc_report
from core.rpks import RpksParams
from core.state_manager import PARAMS_FILE, StateManager
from core.trades import parse_trades, price_trades
from core.verification import SUITES, VerifyConfig, run_verification

logger = logging.getLogger("rpks")


def _quad(abs_tol: Optional[float]) -> QuadratureConfig:
    quad = QuadratureConfig()
    return quad if abs_tol is None else replace(quad, abs_tol=abs_tol)


def _load_params(path: str) -> RpksParams:
    p = Path(path)
    return StateManager(p.parent).load_params(p.name)


def _print_frame(frame: pd.DataFrame) -> None:
    with pd.option_context("display.width", 200, "display.max_columns", 20):
        print(frame.to_string(index=False))


# ----------------------------
# Subcommands
# ----------------------------

def cmd_calibrate(args: argparse.Namespace) -> int:
    config = CalibConfig.load(args.config or MODEL_CONFIG, {"engine": args.engine})
    if args.abs_tol is not None:
        config = replace(config, quad=replace(config.quad, abs_tol=args.abs_tol))
    snapshot = load_snapshot(args.market)
    out = StateManager(args.out)
    initial = _load_params(args.initial) if args.initial else None

    result = run_pipeline(snapshot, config, initial=initial, state_manager=out)

    out.save_params(result.params)
    out.save_result("calibration_result.json", {**result.to_dict(), "config": config.to_dict()})
    out.write_table("residuals.csv", result.residual_frame())
    for name, table in figure_tables(result, snapshot, config).items():
        out.write_table(f"figures/{name}.csv", table)

    _print_frame(result.residual_frame())
    print(f"Calibration written to {out.root} ({config.engine} engine).")
    return 0


def cmd_price(args: argparse.Namespace) -> int:
    params = _load_params(args.params)
    trades = parse_trades(args.trades)
    quad = _quad(args.abs_tol)
    prices = price_trades(params, trades, quad=quad)
    if args.mc_check:
        check = mc_report(params, trades, list(prices["price"]), paths=args.paths, seed=args.seed)
        prices = prices.merge(check.drop(columns=["analytic"]), on="trade_id", how="left")
    out = StateManager(args.out)
    path = out.write_table("prices.csv", prices)
    _print_frame(prices)
    print(f"Prices written to {path}.")
    return 0


def cmd_verify(args: argparse.Namespace) -> int:
    params = _load_params(args.params) if args.params else reference_params(engine=args.engine)
    cfg = VerifyConfig(
        paths=args.paths,
        seed=args.seed,
        drift_fault=args.inject_fault,
        suites=tuple(args.suites),
        quad=_quad(args.abs_tol),
        progress=settings.PROGRESS,
    )
    runs = [("verify_report.csv", cfg)]
    if args.tighten is not None:
        runs.append(("verify_report_tight.csv", cfg.tightened(args.tighten)))

    out = StateManager(args.out)
    failed = False
    for name, run_cfg in runs:
        report = run_verification(params, run_cfg)
        frame = report.to_frame()
        out.write_table(name, frame)
        _print_frame(frame)
        status = "PASS" if report.passed else f"FAIL ({len(report.failures)} checks)"
        print(f"{name}: {status}")
        failed = failed or not report.passed
    return EXIT_INVARIANT if failed else 0


def cmd_imply_vols(args: argparse.Namespace) -> int:
    config = CalibConfig.load(args.config or MODEL_CONFIG)
    snapshot = load_snapshot(args.market)
    targets = calibration_targets(snapshot, config)
    surface = pd.DataFrame(
        [{"maturity": p.maturity, "strike": p.strike, "side": p.side, "price": p.price, "vol": p.vol}
         for p in targets.surface],
        columns=["maturity", "strike", "side", "price", "vol"],
    )
    atm = pd.DataFrame(
        [{"maturity": T, "swap_rate": targets.swap_rates[T], "atm_vol": targets.atm_vols[T]} for T in targets.maturities],
        columns=["maturity", "swap_rate", "atm_vol"],
    )
    out = StateManager(args.out)
    out.write_table("yoy_vols.csv", surface)
    out.write_table("atm_vols.csv", atm)
    _print_frame(atm)
    print(f"Implied vols written to {out.root}.")
    return 0


# ----------------------------
# Argument parsing
# ----------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description="Rational pricing-kernel models for inflation and rates")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--out", type=str, default=settings.OUT_DIR, help="Output directory")
        p.add_argument("--abs-tol", type=float, default=None, help="Fourier quadrature absolute tolerance")

    p = sub.add_parser("calibrate", help="Run the four-step calibration on a market snapshot")
    p.add_argument("--market", required=True, help="Snapshot directory of CSV files or a JSON document")
    p.add_argument("--config", default=None, help="Calibration settings (JSON or TOML)")
    p.add_argument("--engine", choices=settings.ENGINES, default=None, help="Driver family")
    p.add_argument("--initial", default=None, help="params.json used to warm-start the solvers")
    common(p)
    p.set_defaults(handler=cmd_calibrate)

    p = sub.add_parser("price", help="Price a trade file with fitted parameters")
    p.add_argument("--params", default=str(Path(settings.OUT_DIR) / PARAMS_FILE), help="Fitted parameters")
    p.add_argument("--trades", required=True, help="Trades as CSV or JSON")
    p.add_argument("--mc-check", action="store_true", help="Add Monte Carlo prices and z-scores")
    p.add_argument("--paths", type=int, default=settings.MC_PATHS)
    p.add_argument("--seed", type=int, default=settings.SEED)
    common(p)
    p.set_defaults(handler=cmd_price)

    p = sub.add_parser("verify", help="Run the invariant suites")
    p.add_argument("--params", default=None, help="Parameters to verify (default: the reference model)")
    p.add_argument("--engine", choices=settings.ENGINES, default=None, help="Driver of the reference model")
    p.add_argument("--suites", nargs="+", choices=SUITES, default=list(SUITES))
    p.add_argument("--paths", type=int, default=settings.MC_PATHS)
    p.add_argument("--seed", type=int, default=settings.SEED)
    p.add_argument("--inject-fault", type=float, default=0.0, help="Drift added to the simulated S-coordinate")
    p.add_argument("--tighten", type=float, default=None, help="Rerun with thresholds divided by this factor")
    common(p)
    p.set_defaults(handler=cmd_verify)

    p = sub.add_parser("imply-vols", help="Black strip vols and ATM vols of a YoY quote grid")
    p.add_argument("--market", required=True)
    p.add_argument("--config", default=None)
    common(p)
    p.set_defaults(handler=cmd_imply_vols)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=settings.LOG_LEVEL, format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    try:
        return args.handler(args)
    except RpksError as exc:
        logger.error("%s failed: %s", args.command, exc)
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
