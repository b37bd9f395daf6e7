#!/usr/bin/env python3
"""
Create a synthetic market snapshot from the reference model in config/model.json.

CLI usage:
    python create_market.py --out market/ [--engine nig] [--params out/params.json]

Reusable API:
    from pathlib import Path
    from create_market import create_market

    create_market(Path("market"))
"""

from __future__ import annotations

import argparse
import logging
from pathlib import Path
from typing import Optional

from core import settings
from core.calibration import reference_params, synthetic_snapshot
from core.market_data import write_snapshot
from core.rpks import RpksParams
from core.state_manager import StateManager

logger = logging.getLogger("rpks")


def create_market(out: Path, params: Optional[RpksParams] = None, engine: Optional[str] = None) -> Path:
    """
    Price the standard YoY strip grid and ATM swaption row with ``params``
    (default: the reference model) and write them with the curves to ``out``.
    A ``.json`` path gives one document, anything else a CSV directory; the
    parameters used are stored next to it as ``true_params.json``.
    """
    params = params or reference_params(engine=engine)
    snapshot = synthetic_snapshot(params)
    path = write_snapshot(snapshot, out)
    root = path if path.is_dir() else path.parent
    StateManager(root).save_params(params, "true_params.json")
    return path


def parse_args() -> argparse.Namespace:
    parser = argparse.ArgumentParser()
    parser.add_argument("--out", type=str, default="market")
    parser.add_argument("--engine", choices=settings.ENGINES, default=None)
    parser.add_argument("--params", type=str, default=None, help="Price with these parameters instead")
    return parser.parse_args()


def main() -> None:
    args = parse_args()
    logging.basicConfig(level=settings.LOG_LEVEL)
    params = None
    if args.params:
        p = Path(args.params)
        params = StateManager(p.parent).load_params(p.name)
    path = create_market(Path(args.out), params, args.engine)

    print(f"Synthetic market written to {path}.")


if __name__ == "__main__":
    main()
