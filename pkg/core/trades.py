# Copyright 2026 Hasan Mavlonov
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.

# core/trades.py
"""
Trade records, parsing and pricing dispatch.

A trades file is CSV (one row per trade) or JSON (a list of the same
records). Columns:

    trade_id, kind                        required
    start, end, pay, lag                  dates and payment lag in years
    strike                                rate k (ratio strike 1 + k for YoY
                                          lets, (1 + k)^(end - start) for ZC
                                          options); fixed amount for lpi_swap
    side                                  cap/floor (caplet/floorlet for lets)
    floor, cap                            LPI collar rates
    accrual, mode, notional               swaps and swaptions
    base                                  LPI base level
    engine                                auto | fourier | gaussian
"""

from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from . import settings
from .errors import ParseError, RpksError, UnsupportedTrade, WrongSpecKind
from .fourier import QuadDiagnostics, QuadratureConfig
from .gaussian_pricers import lpi_bond_gaussian, yoy_option_gaussian, zc_cap_gaussian, zc_floor_gaussian
from .inflation_pricers import (
    CAP,
    CAPLET,
    FLOOR,
    FLOORLET,
    LpiSpec,
    YoYOptionSpec,
    ZcOptionSpec,
    lpi_bond,
    yoy_option,
    yoy_strip,
    zc_cap,
    zc_floor,
)
from .market_data import LIBOR_ACCRUAL, bachelier_implied_vol, annual_schedule
from .nominal_pricers import (
    MULTI,
    SINGLE,
    Quad2dConfig,
    SwapSpec,
    SwaptionSpec,
    swap_annuity,
    swap_price_multi,
    swap_price_single,
    swaption_price,
    par_rate_multi,
    par_rate_single,
)
from .rpks import (
    MarketState,
    RpksParams,
    inflation_linked_bond,
    nominal_bond,
    yoy_swaplet_price,
    zc_swap_price,
)

logger = logging.getLogger(__name__)

TRADE_COLUMNS = (
    "trade_id", "kind", "start", "end", "pay", "lag", "strike", "side",
    "floor", "cap", "accrual", "mode", "notional", "base", "engine",
)
AUTO = "auto"
FOURIER = "fourier"
GAUSSIAN = "gaussian"
ENGINES = (AUTO, FOURIER, GAUSSIAN)


# ---------- linear instruments ----------
@dataclass(frozen=True)
class NominalBond:
    T: float


@dataclass(frozen=True)
class InflationBond:
    """Pays C_T / C_0 at T."""

    T: float


@dataclass(frozen=True)
class ZcSwap:
    """Receives C_T / C_0, pays (1 + k)^T at T."""

    T: float
    k: float

    @property
    def fixed(self) -> float:
        return (1.0 + self.k) ** self.T


@dataclass(frozen=True)
class YoYSwap:
    """Receives C_Ti / C_Ti-1, pays 1 + k, each at T_i + lag."""

    schedule: Tuple[float, ...]
    k: float
    payment_lag: float = 0.0


@dataclass(frozen=True)
class YoYCapFloor:
    schedule: Tuple[float, ...]
    K: float
    side: str = CAP
    payment_lag: float = settings.PAYMENT_LAG


@dataclass(frozen=True)
class LpiSwap:
    lpi: LpiSpec
    K: float


@dataclass(frozen=True)
class Swap:
    swap: SwapSpec
    mode: str = MULTI


@dataclass(frozen=True)
class Trade:
    trade_id: str
    kind: str
    instrument: Any
    engine: str = AUTO


@dataclass
class PricedTrade:
    trade_id: str
    kind: str
    engine: str
    price: float
    diagnostics: List[QuadDiagnostics] = field(default_factory=list)

    def row(self) -> Dict[str, Any]:
        d = self.diagnostics
        return {
            "trade_id": self.trade_id,
            "kind": self.kind,
            "engine": self.engine,
            "price": self.price,
            "truncation": max((x.truncation for x in d), default=None),
            "panels": sum(x.panels for x in d) if d else None,
            "tail_bound": max((x.tail_bound for x in d), default=None),
            "damping": str(d[-1].damping) if d else None,
        }


# ---------- parsing ----------
def _num(row: Dict[str, Any], key: str, default: Optional[float] = None) -> float:
    value = row.get(key)
    if value is None or (isinstance(value, float) and np.isnan(value)) or value == "":
        if default is None:
            raise ParseError(f"{row.get('kind')} trade needs a value", column=key)
        return float(default)
    try:
        return float(value)
    except (TypeError, ValueError):
        raise ParseError(f"not a number: {value!r}", column=key) from None


def _text(row: Dict[str, Any], key: str, default: str) -> str:
    value = row.get(key)
    if value is None or (isinstance(value, float) and np.isnan(value)) or str(value).strip() == "":
        return default
    return str(value).strip().lower()


def _annual(start: float, end: float) -> Tuple[float, ...]:
    return tuple(start + t for t in annual_schedule(end - start))


def _pay(row: Dict[str, Any]) -> Optional[float]:
    return None if _text(row, "pay", "") == "" else _num(row, "pay")


def _swap(row: Dict[str, Any]) -> SwapSpec:
    start = _num(row, "start", 0.0)
    strike = _num(row, "strike")
    regular = SwapSpec.regular(start, _num(row, "end") - start, strike, _num(row, "accrual", LIBOR_ACCRUAL))
    return SwapSpec(regular.schedule, strike, _num(row, "notional", 1.0))


def _instrument(kind: str, row: Dict[str, Any]) -> Any:
    if kind == "nominal_bond":
        return NominalBond(_num(row, "end"))
    if kind == "inflation_bond":
        return InflationBond(_num(row, "end"))
    if kind == "zc_swap":
        return ZcSwap(_num(row, "end"), _num(row, "strike"))
    if kind == "yoy_swap":
        return YoYSwap(_annual(_num(row, "start", 0.0), _num(row, "end")), _num(row, "strike"), _num(row, "lag", 0.0))
    if kind == "yoy_capfloor":
        side = _text(row, "side", CAP)
        if side not in (CAP, FLOOR):
            raise ParseError(f"YoY strip side must be cap or floor, got {side!r}", column="side")
        return YoYCapFloor(
            _annual(_num(row, "start", 0.0), _num(row, "end")),
            1.0 + _num(row, "strike"),
            side,
            _num(row, "lag", settings.PAYMENT_LAG),
        )
    if kind == "yoy_option":
        side = {CAP: CAPLET, FLOOR: FLOORLET}.get(_text(row, "side", FLOORLET), _text(row, "side", FLOORLET))
        return YoYOptionSpec(_num(row, "start"), _num(row, "end"), _pay(row), 1.0 + _num(row, "strike"), side)
    if kind == "zc_option":
        start, end = _num(row, "start", 0.0), _num(row, "end")
        K = (1.0 + _num(row, "strike")) ** (end - start)
        return ZcOptionSpec(start, end, _pay(row), K, _text(row, "side", FLOOR))
    if kind in ("lpi_bond", "lpi_swap"):
        lpi = LpiSpec(
            _annual(_num(row, "start", 0.0), _num(row, "end")),
            _num(row, "floor"),
            _num(row, "cap"),
            _num(row, "base", 1.0),
            _pay(row),
        )
        return lpi if kind == "lpi_bond" else LpiSwap(lpi, _num(row, "strike"))
    if kind in ("swap", "swaption"):
        mode = _text(row, "mode", MULTI)
        if mode not in (SINGLE, MULTI):
            raise ParseError(f"mode must be single or multi, got {mode!r}", column="mode")
        swap = _swap(row)
        return Swap(swap, mode) if kind == "swap" else SwaptionSpec(swap, mode)
    raise UnsupportedTrade(f"unknown trade kind {kind!r}")


def trade_from_dict(row: Dict[str, Any], index: int = 0) -> Trade:
    trade_id = str(row.get("trade_id") or f"T{index + 1}")
    kind = _text(row, "kind", "")
    engine = _text(row, "engine", AUTO)
    if engine not in ENGINES:
        raise ParseError(f"engine must be one of {', '.join(ENGINES)}, got {engine!r}", row=index + 1, column="engine")
    try:
        return Trade(trade_id, kind, _instrument(kind, row), engine)
    except ParseError as exc:
        raise ParseError(f"trade {trade_id}: {exc}", row=index + 1) from None
    except (RpksError, ValueError) as exc:
        raise ParseError(f"trade {trade_id}: {exc}", row=index + 1) from None


def parse_trades(path: str | Path) -> List[Trade]:
    path = Path(path)
    if not path.exists():
        raise ParseError(f"trades file not found: {path}")
    if path.suffix.lower() == ".json":
        try:
            records = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ParseError(f"trades file {path} is not valid JSON: {exc.msg}", row=exc.lineno) from None
        if not isinstance(records, list):
            raise ParseError("a JSON trades file holds a list of trade records")
    else:
        try:
            frame = pd.read_csv(path)
        except (pd.errors.ParserError, pd.errors.EmptyDataError) as exc:
            raise ParseError(f"trades file {path} could not be read: {exc}") from None
        for col in ("trade_id", "kind"):
            if col not in frame.columns:
                raise ParseError(f"trades file {path} is missing a column", column=col)
        unknown = set(frame.columns) - set(TRADE_COLUMNS)
        if unknown:
            raise ParseError(f"unknown trade columns: {', '.join(sorted(unknown))}")
        records = frame.to_dict(orient="records")
    trades = [trade_from_dict(r, i) for i, r in enumerate(records)]
    logger.info("parsed %d trades from %s", len(trades), path)
    return trades


def trade_to_dict(trade: Trade) -> Dict[str, Any]:
    return {"trade_id": trade.trade_id, "kind": trade.kind, "engine": trade.engine, **asdict(trade.instrument)}


# ---------- pricing ----------
def _closed_form(params: RpksParams, trade: Trade) -> bool:
    has_closed_form = isinstance(trade.instrument, (YoYOptionSpec, ZcOptionSpec, LpiSpec, LpiSwap, YoYCapFloor))
    if trade.engine == GAUSSIAN:
        if not params.spec.is_gaussian:
            raise WrongSpecKind(f"trade {trade.trade_id} asks for the Gaussian closed form on a {params.spec.kind} driver")
        if not has_closed_form:
            raise UnsupportedTrade(f"no Gaussian closed form for a {trade.kind} trade")
        return True
    return trade.engine == AUTO and has_closed_form and params.spec.is_gaussian


def price_instrument(
    params: RpksParams,
    inst: Any,
    state: MarketState | None = None,
    closed_form: bool = False,
    quad: QuadratureConfig | None = None,
    quad2d: Quad2dConfig | None = None,
    report: Optional[List[QuadDiagnostics]] = None,
) -> float:
    state = state or MarketState()
    if isinstance(inst, NominalBond):
        return float(nominal_bond(params, state, inst.T))
    if isinstance(inst, InflationBond):
        return float(inflation_linked_bond(params, state, inst.T))
    if isinstance(inst, ZcSwap):
        return zc_swap_price(params, state, inst.T, inst.fixed)
    if isinstance(inst, YoYSwap):
        total = 0.0
        for a, b in zip(inst.schedule, inst.schedule[1:]):
            total += yoy_swaplet_price(params, state, a, b, b + inst.payment_lag).price(1.0 + inst.k)
        return total
    if isinstance(inst, YoYCapFloor):
        if closed_form:
            let_side = CAPLET if inst.side == CAP else FLOORLET
            return sum(
                yoy_option_gaussian(params, state, YoYOptionSpec(a, b, b + inst.payment_lag, inst.K, let_side))
                for a, b in zip(inst.schedule, inst.schedule[1:])
                if state.t <= b + inst.payment_lag
            )
        return yoy_strip(params, state, inst.schedule, inst.K, inst.side, quad, inst.payment_lag, report)
    if isinstance(inst, YoYOptionSpec):
        if closed_form:
            return yoy_option_gaussian(params, state, inst)
        return yoy_option(params, state, inst, quad, report)
    if isinstance(inst, ZcOptionSpec):
        if inst.side == FLOOR:
            return zc_floor_gaussian(params, state, inst) if closed_form else zc_floor(params, state, inst, quad, report)
        return zc_cap_gaussian(params, state, inst) if closed_form else zc_cap(params, state, inst, quad, report)
    if isinstance(inst, LpiSpec):
        return lpi_bond_gaussian(params, state, inst) if closed_form else lpi_bond(params, state, inst, quad)
    if isinstance(inst, LpiSwap):
        bond = price_instrument(params, inst.lpi, state, closed_form, quad, quad2d, report)
        return bond - inst.K * float(nominal_bond(params, state, inst.lpi.T))
    if isinstance(inst, Swap):
        if inst.mode == SINGLE:
            return swap_price_single(params, state, inst.swap)
        return swap_price_multi(params, state, inst.swap)
    if isinstance(inst, SwaptionSpec):
        return swaption_price(params, state, inst, quad, quad2d, report)
    raise UnsupportedTrade(f"no pricer for {type(inst).__name__}")


def price_trade(
    params: RpksParams,
    trade: Trade,
    state: MarketState | None = None,
    quad: QuadratureConfig | None = None,
    quad2d: Quad2dConfig | None = None,
) -> PricedTrade:
    report: List[QuadDiagnostics] = []
    closed = _closed_form(params, trade)
    price = price_instrument(params, trade.instrument, state, closed, quad, quad2d, report)
    return PricedTrade(trade.trade_id, trade.kind, GAUSSIAN if closed else FOURIER, price, report)


def price_trades(
    params: RpksParams,
    trades: Sequence[Trade],
    state: MarketState | None = None,
    quad: QuadratureConfig | None = None,
    quad2d: Quad2dConfig | None = None,
) -> pd.DataFrame:
    rows = []
    for i, trade in enumerate(trades):
        try:
            rows.append(price_trade(params, trade, state, quad, quad2d).row())
        except RpksError as exc:
            exc.args = (f"trade {trade.trade_id} (row {i + 1}): {exc}",) + exc.args[1:]
            raise
    return pd.DataFrame(rows, columns=["trade_id", "kind", "engine", "price", "truncation", "panels", "tail_bound", "damping"])


# ---------- ladders ----------
def yoy_ladder_prices(
    params: RpksParams,
    ladder: pd.DataFrame,
    payment_lag: float | None = None,
    quad: QuadratureConfig | None = None,
) -> pd.DataFrame:
    """Strip prices for a (maturity, strike, side) ladder; strikes are rates."""
    for col in ("maturity", "strike", "side"):
        if col not in ladder.columns:
            raise ParseError("YoY ladder is missing a column", column=col)
    lag = settings.PAYMENT_LAG if payment_lag is None else payment_lag
    out = ladder.copy()
    gaussian = params.spec.is_gaussian
    prices = []
    for row in ladder.itertuples(index=False):
        inst = YoYCapFloor(annual_schedule(float(row.maturity)), 1.0 + float(row.strike), str(row.side), lag)
        prices.append(price_instrument(params, inst, closed_form=gaussian, quad=quad))
    out["price"] = prices
    return out


def swaption_ladder_prices(
    params: RpksParams,
    ladder: pd.DataFrame,
    mode: str = MULTI,
    quad: QuadratureConfig | None = None,
    quad2d: Quad2dConfig | None = None,
) -> pd.DataFrame:
    """Payer swaption prices and normal vols (bp) for an (expiry, tenor, strike) ladder; blank strike is ATM."""
    for col in ("expiry", "tenor"):
        if col not in ladder.columns:
            raise ParseError("swaption ladder is missing a column", column=col)
    state = MarketState()
    rows = []
    for row in ladder.to_dict(orient="records"):
        expiry, tenor = float(row["expiry"]), float(row["tenor"])
        sched = SwapSpec.regular(expiry, tenor, 0.0).schedule
        forward = par_rate_multi(params, state, sched) if mode == MULTI else par_rate_single(params, state, sched)
        strike = row.get("strike")
        strike = forward if strike is None or (isinstance(strike, float) and np.isnan(strike)) else float(strike)
        annuity = swap_annuity(params, state, sched)
        price = swaption_price(params, state, SwaptionSpec(SwapSpec(sched, strike), mode), quad, quad2d)
        try:
            vol = bachelier_implied_vol(price, annuity, forward, strike, expiry) * 1e4
        except RpksError as exc:
            logger.warning("no normal vol for expiry %s strike %s: %s", expiry, strike, exc)
            vol = float("nan")
        rows.append({**row, "strike": strike, "forward": forward, "price": price, "normal_vol_model": vol})
    return pd.DataFrame(rows)
