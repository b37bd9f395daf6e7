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

# core/market_data.py
"""
Market inputs and quote conversion.

Curves are plain callables of the maturity in years. Snapshots live on disk
either as a directory of CSV files or as a single JSON document:

    nominal.csv      maturity_years,value        OIS discount factors
    zc_rates.csv     maturity_years,value        ZC inflation swap rates
    yoy_grid.csv     maturity,strike,side,price  YoY cap/floor strip prices
    swaptions.csv    expiry,tenor,normal_vol_bp  ATM swaption normal vols
    libor.csv        maturity_years,value        3m projection curve (optional)

Strikes are simple rates (0.02 for 2%). CSV row numbers in error messages
count the header as row 1.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy.interpolate import PchipInterpolator
from scipy.optimize import brentq
from scipy.stats import norm

from .additive_process import check_time, scalar_or_array
from .errors import (
    InsufficientStrikes,
    InvariantViolation,
    NoConvergence,
    NonPositiveCurve,
    NoOverlap,
    OrderError,
    ParseError,
    PriceOutOfBounds,
)

logger = logging.getLogger(__name__)

CAP = "cap"
FLOOR = "floor"
SIDES = (CAP, FLOOR)

YOY_MATURITIES = (2.0, 5.0, 7.0, 10.0, 12.0, 15.0, 20.0, 30.0)
FLOOR_STRIKES = (-0.01, -0.005, 0.0, 0.005, 0.01, 0.015, 0.02, 0.025, 0.03)
CAP_STRIKES = (0.01, 0.015, 0.02, 0.025, 0.03, 0.035, 0.04, 0.045, 0.05, 0.055, 0.06)
SWAPTION_EXPIRIES = (0.25, 0.5, 1.0, 2.0, 3.0, 5.0, 7.0, 10.0, 15.0, 20.0, 30.0)
SWAPTION_TENOR = 1.0
LIBOR_ACCRUAL = 0.25

CURVE_COLUMNS = ("maturity_years", "value")
GRID_COLUMNS = ("maturity", "strike", "side", "price")
SWAPTION_COLUMNS = ("expiry", "tenor", "normal_vol_bp")

MAX_VOL = 5.0


# ---------- curves ----------
def _sorted_knots(pillars: Iterable[float], values: Iterable[float], what: str) -> Tuple[np.ndarray, np.ndarray]:
    p = np.asarray(list(pillars), dtype=float)
    v = np.asarray(list(values), dtype=float)
    if p.ndim != 1 or p.shape != v.shape or p.size == 0:
        raise InvariantViolation(f"{what}: pillars and values must be non-empty 1-d arrays of equal length")
    if not np.all(np.isfinite(p)) or not np.all(np.isfinite(v)):
        raise InvariantViolation(f"{what}: pillars and values must be finite")
    order = np.argsort(p, kind="stable")
    p, v = p[order], v[order]
    if np.any(np.diff(p) <= 0.0):
        raise InvariantViolation(f"{what}: duplicate pillar {p[np.argmin(np.diff(p))]}")
    if p[0] < 0.0:
        raise InvariantViolation(f"{what}: negative pillar {p[0]}")
    return p, v


@dataclass(frozen=True)
class DiscountCurve:
    """Unit-initialised positive curve; monotone cubic Hermite on log-values."""

    pillars: Tuple[float, ...]
    values: Tuple[float, ...]
    name: str = "curve"

    def __post_init__(self) -> None:
        p, v = _sorted_knots(self.pillars, self.values, self.name)
        if np.any(v <= 0.0):
            bad = p[np.argmax(v <= 0.0)]
            raise NonPositiveCurve(f"{self.name}: non-positive value at T={bad}")
        if p[0] > 0.0:
            p = np.concatenate([[0.0], p])
            v = np.concatenate([[1.0], v])
        elif abs(v[0] - 1.0) > 1e-14:
            raise InvariantViolation(f"{self.name}: value at T=0 must be 1, got {v[0]}")
        object.__setattr__(self, "pillars", tuple(p.tolist()))
        object.__setattr__(self, "values", tuple(v.tolist()))

    @cached_property
    def _log_interp(self) -> Optional[PchipInterpolator]:
        if len(self.pillars) < 2:
            return None
        return PchipInterpolator(np.asarray(self.pillars), np.log(self.values), extrapolate=False)

    @cached_property
    def _tail_slope(self) -> float:
        if self._log_interp is None:
            return 0.0
        return float(self._log_interp.derivative()(self.pillars[-1]))

    def __call__(self, t: Any) -> Any:
        t = check_time(t)
        if self._log_interp is None:
            return scalar_or_array(np.ones_like(t))
        last = self.pillars[-1]
        inside = np.minimum(t, last)
        log_v = self._log_interp(inside) + self._tail_slope * np.maximum(t - last, 0.0)
        return scalar_or_array(np.exp(log_v))

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"maturity_years": self.pillars, "value": self.values})

    @classmethod
    def from_frame(cls, df: pd.DataFrame, name: str = "curve") -> "DiscountCurve":
        return cls(tuple(df["maturity_years"]), tuple(df["value"]), name)


@dataclass(frozen=True)
class KnotCurve:
    """Monotone cubic Hermite through knots, flat outside the knot range."""

    knots: Tuple[float, ...]
    values: Tuple[float, ...]
    name: str = "knots"

    def __post_init__(self) -> None:
        p, v = _sorted_knots(self.knots, self.values, self.name)
        object.__setattr__(self, "knots", tuple(p.tolist()))
        object.__setattr__(self, "values", tuple(v.tolist()))

    @classmethod
    def constant(cls, value: float, knots: Sequence[float], name: str = "knots") -> "KnotCurve":
        return cls(tuple(knots), (float(value),) * len(knots), name)

    def with_values(self, values: Iterable[float]) -> "KnotCurve":
        return KnotCurve(self.knots, tuple(float(v) for v in values), self.name)

    @cached_property
    def _interp(self) -> Optional[PchipInterpolator]:
        if len(self.knots) < 2:
            return None
        return PchipInterpolator(np.asarray(self.knots), np.asarray(self.values), extrapolate=False)

    def __call__(self, t: Any) -> Any:
        t = np.asarray(t, dtype=float)
        if self._interp is None:
            return scalar_or_array(np.full_like(t, self.values[0]))
        return scalar_or_array(self._interp(np.clip(t, self.knots[0], self.knots[-1])))

    def second_derivative(self, t: Any) -> Any:
        if self._interp is None:
            return scalar_or_array(np.zeros_like(np.asarray(t, dtype=float)))
        return scalar_or_array(self._interp.derivative(2)(np.clip(t, self.knots[0], self.knots[-1])))


@dataclass(frozen=True)
class StepCurve:
    """Right-continuous step function: values[j] on [knots[j], knots[j+1])."""

    knots: Tuple[float, ...]
    values: Tuple[float, ...]

    def __post_init__(self) -> None:
        knots = tuple(float(k) for k in self.knots)
        values = tuple(float(v) for v in self.values)
        if len(values) != len(knots) - 1 or not values:
            raise InvariantViolation("step curve needs len(values) == len(knots) - 1")
        if any(b <= a for a, b in zip(knots, knots[1:])):
            raise InvariantViolation("step curve knots must be strictly increasing")
        object.__setattr__(self, "knots", knots)
        object.__setattr__(self, "values", values)

    @classmethod
    def zero(cls, knots: Sequence[float]) -> "StepCurve":
        return cls(tuple(knots), (0.0,) * (len(knots) - 1))

    def with_values(self, values: Iterable[float]) -> "StepCurve":
        return StepCurve(self.knots, tuple(values))

    def index(self, t: Any) -> Any:
        idx = np.searchsorted(np.asarray(self.knots), np.asarray(t, dtype=float), side="right") - 1
        return np.clip(idx, 0, len(self.values) - 1)

    def __call__(self, t: Any) -> Any:
        return scalar_or_array(np.asarray(self.values)[self.index(t)])


def forward_rate(projection: DiscountCurve, start: Any, end: Any) -> Any:
    """Simple forward rate between ``start`` and ``end`` on a projection curve."""
    start = np.asarray(start, dtype=float)
    end = np.asarray(end, dtype=float)
    return scalar_or_array((np.asarray(projection(start)) / np.asarray(projection(end)) - 1.0) / (end - start))


# ---------- inflation curve ----------
@dataclass(frozen=True)
class InflationForwardCurve:
    """P^IL_{0T} = P^N_{0T} / (1 + k(T))^T from ZC inflation swap rates k(T)."""

    nominal: DiscountCurve
    rates: KnotCurve

    def __call__(self, T: Any) -> Any:
        T = check_time(T)
        growth = 1.0 + np.asarray(self.rates(T))
        return scalar_or_array(np.asarray(self.nominal(T)) / growth ** T)

    def implied_rate(self, T: Any) -> Any:
        T = np.asarray(T, dtype=float)
        if np.any(T <= 0.0):
            raise OrderError(f"ZC inflation rate needs a maturity after 0, got T={T}")
        ratio = np.asarray(self.nominal(T)) / np.asarray(self(T))
        return scalar_or_array(ratio ** (1.0 / T) - 1.0)

    def pillars(self) -> Tuple[float, ...]:
        return tuple(sorted(set(self.nominal.pillars) | set(self.rates.knots) | {0.0}))

    def to_discount_curve(self, pillars: Optional[Sequence[float]] = None) -> DiscountCurve:
        grid = np.asarray(pillars if pillars is not None else self.pillars(), dtype=float)
        return DiscountCurve(tuple(grid), tuple(np.atleast_1d(self(grid))), "inflation-linked")


def il_curve_from_zc_rates(nominal: DiscountCurve, rates: KnotCurve) -> InflationForwardCurve:
    if np.any(1.0 + np.asarray(rates.values) <= 0.0):
        raise NonPositiveCurve("ZC inflation rates must stay above -100%")
    return InflationForwardCurve(nominal, rates)


# ---------- quotes ----------
@dataclass(frozen=True)
class YoYQuote:
    maturity: float
    strike: float
    side: str
    price: float


@dataclass(frozen=True)
class YoYOptionGrid:
    quotes: Tuple[YoYQuote, ...]

    def __post_init__(self) -> None:
        kept: List[YoYQuote] = []
        for q in self.quotes:
            if q.side not in SIDES:
                raise InvariantViolation(f"YoY quote side must be cap or floor, got {q.side!r}")
            if q.price < 0.0:
                raise InvariantViolation(f"negative YoY {q.side} price at T={q.maturity}, k={q.strike}")
            if q.price == 0.0:
                logger.info("dropping zero-price YoY %s quote T=%s k=%s", q.side, q.maturity, q.strike)
                continue
            kept.append(q)
        object.__setattr__(self, "quotes", tuple(kept))

    def maturities(self) -> Tuple[float, ...]:
        return tuple(sorted({q.maturity for q in self.quotes}))

    def slice(self, maturity: float, side: str) -> Tuple[np.ndarray, np.ndarray]:
        rows = sorted((q.strike, q.price) for q in self.quotes if q.maturity == maturity and q.side == side)
        if not rows:
            return np.empty(0), np.empty(0)
        k, p = zip(*rows)
        return np.asarray(k), np.asarray(p)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([q.__dict__ for q in self.quotes], columns=list(GRID_COLUMNS))


@dataclass(frozen=True)
class SwaptionQuote:
    expiry: float
    tenor: float
    normal_vol_bp: float


@dataclass(frozen=True)
class SwaptionVolRow:
    quotes: Tuple[SwaptionQuote, ...]

    def __post_init__(self) -> None:
        for q in self.quotes:
            if q.normal_vol_bp < 0.0:
                raise InvariantViolation(f"negative swaption vol at expiry {q.expiry}")
        object.__setattr__(self, "quotes", tuple(sorted(self.quotes, key=lambda q: q.expiry)))

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([q.__dict__ for q in self.quotes], columns=list(SWAPTION_COLUMNS))


@dataclass(frozen=True)
class MarketSnapshot:
    nominal: DiscountCurve
    zc_rates: KnotCurve
    yoy_grid: YoYOptionGrid
    swaptions: Optional[SwaptionVolRow] = None
    libor: Optional[DiscountCurve] = None
    meta: Dict[str, Any] = field(default_factory=dict, compare=False)

    @cached_property
    def il(self) -> InflationForwardCurve:
        return il_curve_from_zc_rates(self.nominal, self.zc_rates)

    @property
    def projection(self) -> DiscountCurve:
        return self.libor if self.libor is not None else self.nominal


# ---------- Black on the YoY ratio ----------
def yoy_forward(nominal: DiscountCurve, il: Any, T_prev: float, T_i: float) -> float:
    return float((il(T_i) / il(T_prev)) * (nominal(T_prev) / nominal(T_i)))


def yoy_black_price(
    forward: float, strike: float, vol: float, accrual: float, discount: float, side: str
) -> float:
    """Black price of (C_Ti/C_Tprev - K)^+ (cap) or (K - C_Ti/C_Tprev)^+ (floor); K = 1 + k."""
    if side not in SIDES:
        raise InvariantViolation(f"side must be cap or floor, got {side!r}")
    std = vol * np.sqrt(accrual)
    if std <= 0.0:
        intrinsic = forward - strike if side == CAP else strike - forward
        return discount * max(intrinsic, 0.0)
    d1 = (np.log(forward / strike) + 0.5 * std * std) / std
    d2 = d1 - std
    if side == CAP:
        return float(discount * (forward * norm.cdf(d1) - strike * norm.cdf(d2)))
    return float(discount * (strike * norm.cdf(-d2) - forward * norm.cdf(-d1)))


def _implied_vol(price_fn, price: float, lower: float, upper: float, what: str, xtol: float) -> float:
    if price < lower - 1e-15 or price > upper + 1e-15:
        raise PriceOutOfBounds(f"{what}: price {price} outside no-arbitrage bounds [{lower}, {upper}]")
    if price <= lower:
        return 0.0
    hi = 0.05
    while price_fn(hi) < price:
        hi *= 2.0
        if hi > MAX_VOL:
            raise NoConvergence(f"{what}: no volatility below {MAX_VOL} reproduces price {price}")
    try:
        return float(brentq(lambda s: price_fn(s) - price, 0.0, hi, xtol=xtol, rtol=1e-15, maxiter=200))
    except (RuntimeError, ValueError) as exc:
        raise NoConvergence(f"{what}: {exc}") from None


def black_implied_vol(
    price: float, forward: float, strike: float, accrual: float, discount: float, side: str
) -> float:
    if side == CAP:
        lower, upper = discount * max(forward - strike, 0.0), discount * forward
    else:
        lower, upper = discount * max(strike - forward, 0.0), discount * strike
    return _implied_vol(
        lambda s: yoy_black_price(forward, strike, s, accrual, discount, side),
        price, lower, upper, f"YoY {side} implied vol", 1e-13,
    )


def yoy_lognormal_implied_vol(
    price: float,
    side: str,
    strike: float,
    T_prev: float,
    T_i: float,
    nominal: DiscountCurve,
    il: Any,
    payment: Optional[float] = None,
) -> float:
    """Implied lognormal vol of one YoY caplet/floorlet with strike rate ``strike``."""
    forward = yoy_forward(nominal, il, T_prev, T_i)
    discount = float(nominal(T_i if payment is None else payment))
    return black_implied_vol(price, forward, 1.0 + strike, T_i - T_prev, discount, side)


def yoy_lognormal_price(
    vol: float,
    side: str,
    strike: float,
    T_prev: float,
    T_i: float,
    nominal: DiscountCurve,
    il: Any,
    payment: Optional[float] = None,
) -> float:
    forward = yoy_forward(nominal, il, T_prev, T_i)
    discount = float(nominal(T_i if payment is None else payment))
    return yoy_black_price(forward, 1.0 + strike, vol, T_i - T_prev, discount, side)


def annual_schedule(maturity: float) -> Tuple[float, ...]:
    n = int(round(maturity))
    if n < 1 or abs(n - maturity) > 1e-9:
        raise InvariantViolation(f"YoY strips need a whole number of years, got {maturity}")
    return tuple(float(i) for i in range(n + 1))


def yoy_cap_black_price(
    vol: float, side: str, strike: float, maturity: float, nominal: DiscountCurve, il: Any, payment_lag: float = 0.0
) -> float:
    """Strip of annual YoY lets priced with one flat Black vol."""
    sched = annual_schedule(maturity)
    return float(
        sum(
            yoy_lognormal_price(vol, side, strike, a, b, nominal, il, b + payment_lag)
            for a, b in zip(sched, sched[1:])
        )
    )


def yoy_cap_implied_vol(
    price: float, side: str, strike: float, maturity: float, nominal: DiscountCurve, il: Any, payment_lag: float = 0.0
) -> float:
    sched = annual_schedule(maturity)
    lower = 0.0
    upper = 0.0
    for a, b in zip(sched, sched[1:]):
        F = yoy_forward(nominal, il, a, b)
        D = float(nominal(b + payment_lag))
        K = 1.0 + strike
        lower += D * max(F - K, 0.0) if side == CAP else D * max(K - F, 0.0)
        upper += D * F if side == CAP else D * K
    return _implied_vol(
        lambda s: yoy_cap_black_price(s, side, strike, maturity, nominal, il, payment_lag),
        price, lower, upper, f"YoY {side} strip implied vol (T={maturity}, k={strike})", 1e-13,
    )


# ---------- Bachelier ----------
def bachelier_price(
    forward: float, strike: float, vol: float, expiry: float, annuity: float, side: str = "payer"
) -> float:
    """Normal-model swaption price; ``vol`` in absolute rate units (0.01 = 100bp)."""
    std = vol * np.sqrt(expiry)
    sign = 1.0 if side == "payer" else -1.0
    if std <= 0.0:
        return annuity * max(sign * (forward - strike), 0.0)
    d = sign * (forward - strike) / std
    return float(annuity * (sign * (forward - strike) * norm.cdf(d) + std * norm.pdf(d)))


def bachelier_implied_vol(
    price: float, annuity: float, forward: float, strike: float, expiry: float, side: str = "payer"
) -> float:
    sign = 1.0 if side == "payer" else -1.0
    lower = annuity * max(sign * (forward - strike), 0.0)
    return _implied_vol(
        lambda s: bachelier_price(forward, strike, s, expiry, annuity, side),
        price, lower, np.inf, f"Bachelier implied vol (T={expiry})", 1e-15,
    )


# ---------- parity and interpolation ----------
def swap_rates_from_parity(
    grid: YoYOptionGrid, nominal: DiscountCurve, payment_lag: float = 0.0
) -> Dict[float, float]:
    """
    Cap(k) - floor(k) = V_float - (1 + k) * annuity on every overlapping
    strike; the fair rate is where the implied swap value is zero.
    """
    out: Dict[float, float] = {}
    for T in grid.maturities():
        kc, pc = grid.slice(T, CAP)
        kf, pf = grid.slice(T, FLOOR)
        common = np.intersect1d(np.round(kc, 10), np.round(kf, 10))
        if common.size == 0:
            raise NoOverlap(f"no strike quoted as both cap and floor at T={T}")
        sched = annual_schedule(T)
        annuity = float(np.sum(nominal(np.asarray(sched[1:]) + payment_lag)))
        swap_value = np.array(
            [pc[np.isclose(kc, k)][0] - pf[np.isclose(kf, k)][0] for k in common]
        )
        # the slope in k is -annuity; least squares then only estimates the floating leg
        floating = swap_value + (1.0 + common) * annuity
        out[T] = float(np.mean(floating)) / annuity - 1.0
        if common.size > 1:
            logger.debug("parity spread at T=%s: %.3g", T, float(np.ptp(floating)) / annuity)
    return out


def atm_vol_interp(strikes: Sequence[float], vols: Sequence[float], atm_strike: float) -> float:
    k = np.asarray(strikes, dtype=float)
    v = np.asarray(vols, dtype=float)
    if k.size < 2:
        raise InsufficientStrikes(f"need at least two strikes to interpolate an ATM vol, got {k.size}")
    order = np.argsort(k)
    k, v = k[order], v[order]
    interp = PchipInterpolator(k, v, extrapolate=False)
    return float(interp(np.clip(atm_strike, k[0], k[-1])))


# ---------- ingestion ----------
def _read_table(path: Path, columns: Sequence[str], numeric: Sequence[str], what: str) -> pd.DataFrame:
    try:
        df = pd.read_csv(path, skipinitialspace=True)
    except FileNotFoundError:
        raise ParseError(f"{what}: file not found: {path}") from None
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as exc:
        raise ParseError(f"{what}: cannot parse {path}: {exc}") from None
    df.columns = [str(c).strip() for c in df.columns]
    for col in columns:
        if col not in df.columns:
            raise ParseError(f"{what}: missing column in {path}", column=col)
    for col in numeric:
        values = pd.to_numeric(df[col], errors="coerce")
        bad = values.isna()
        if bad.any():
            row = int(np.argmax(bad.to_numpy())) + 2
            raise ParseError(f"{what}: non-numeric value {df[col][bad].iloc[0]!r} in {path}", row=row, column=col)
        df[col] = values.astype(float)
    return df


def _curve_from_doc(doc: Dict[str, Any], what: str) -> pd.DataFrame:
    try:
        return pd.DataFrame({c: [float(x) for x in doc[c]] for c in CURVE_COLUMNS})
    except KeyError as exc:
        raise ParseError(f"{what}: missing field", column=str(exc.args[0])) from None
    except (TypeError, ValueError) as exc:
        raise ParseError(f"{what}: {exc}") from None


def _grid_from_frame(df: pd.DataFrame) -> YoYOptionGrid:
    sides = df["side"].astype(str).str.strip().str.lower()
    bad = ~sides.isin(SIDES)
    if bad.any():
        raise ParseError(f"YoY grid: unknown side {df['side'][bad].iloc[0]!r}", row=int(np.argmax(bad.to_numpy())) + 2, column="side")
    return YoYOptionGrid(
        tuple(YoYQuote(float(m), float(k), s, float(p)) for m, k, s, p in zip(df["maturity"], df["strike"], sides, df["price"]))
    )


def _swaptions_from_frame(df: pd.DataFrame) -> SwaptionVolRow:
    return SwaptionVolRow(
        tuple(SwaptionQuote(float(e), float(t), float(v)) for e, t, v in zip(df["expiry"], df["tenor"], df["normal_vol_bp"]))
    )


def load_snapshot(path: str | Path) -> MarketSnapshot:
    """Load a snapshot directory of CSV files or a single JSON document."""
    path = Path(path)
    if path.suffix.lower() == ".json":
        try:
            doc = json.loads(path.read_text(encoding="utf-8"))
        except FileNotFoundError:
            raise ParseError(f"snapshot file not found: {path}") from None
        except json.JSONDecodeError as exc:
            raise ParseError(f"snapshot {path} is not valid JSON: {exc.msg}", row=exc.lineno) from None
        return snapshot_from_dict(doc)
    if not path.is_dir():
        raise ParseError(f"snapshot path must be a directory or a .json file: {path}")

    nominal = _read_table(path / "nominal.csv", CURVE_COLUMNS, CURVE_COLUMNS, "nominal curve")
    rates = _read_table(path / "zc_rates.csv", CURVE_COLUMNS, CURVE_COLUMNS, "ZC inflation rates")
    grid = _read_table(path / "yoy_grid.csv", GRID_COLUMNS, ("maturity", "strike", "price"), "YoY grid")
    swaptions = None
    if (path / "swaptions.csv").exists():
        swaptions = _swaptions_from_frame(
            _read_table(path / "swaptions.csv", SWAPTION_COLUMNS, SWAPTION_COLUMNS, "swaption vols")
        )
    libor = None
    if (path / "libor.csv").exists():
        libor = DiscountCurve.from_frame(
            _read_table(path / "libor.csv", CURVE_COLUMNS, CURVE_COLUMNS, "libor curve"), "libor"
        )
    snapshot = MarketSnapshot(
        nominal=DiscountCurve.from_frame(nominal, "nominal"),
        zc_rates=KnotCurve(tuple(rates["maturity_years"]), tuple(rates["value"]), "zc rates"),
        yoy_grid=_grid_from_frame(grid),
        swaptions=swaptions,
        libor=libor,
        meta={"source": str(path)},
    )
    logger.info(
        "loaded snapshot %s: %d nominal pillars, %d YoY quotes over %d maturities",
        path, len(snapshot.nominal.pillars), len(snapshot.yoy_grid.quotes), len(snapshot.yoy_grid.maturities()),
    )
    return snapshot


def snapshot_from_dict(doc: Dict[str, Any]) -> MarketSnapshot:
    for key in ("nominal", "zc_rates", "yoy_grid"):
        if key not in doc:
            raise ParseError("snapshot document is missing a block", column=key)
    nominal = _curve_from_doc(doc["nominal"], "nominal curve")
    rates = _curve_from_doc(doc["zc_rates"], "ZC inflation rates")
    try:
        grid = pd.DataFrame(doc["yoy_grid"], columns=list(GRID_COLUMNS))
        for col in ("maturity", "strike", "price"):
            grid[col] = grid[col].astype(float)
        swaptions = None
        if doc.get("swaptions"):
            sw = pd.DataFrame(doc["swaptions"], columns=list(SWAPTION_COLUMNS)).astype(float)
            swaptions = _swaptions_from_frame(sw)
    except (TypeError, ValueError) as exc:
        raise ParseError(f"snapshot document: {exc}") from None
    libor = None
    if doc.get("libor"):
        libor = DiscountCurve.from_frame(_curve_from_doc(doc["libor"], "libor curve"), "libor")
    return MarketSnapshot(
        nominal=DiscountCurve.from_frame(nominal, "nominal"),
        zc_rates=KnotCurve(tuple(rates["maturity_years"]), tuple(rates["value"]), "zc rates"),
        yoy_grid=_grid_from_frame(grid),
        swaptions=swaptions,
        libor=libor,
        meta=dict(doc.get("meta", {})),
    )


def snapshot_to_dict(snapshot: MarketSnapshot) -> Dict[str, Any]:
    doc: Dict[str, Any] = {
        "nominal": {"maturity_years": list(snapshot.nominal.pillars), "value": list(snapshot.nominal.values)},
        "zc_rates": {"maturity_years": list(snapshot.zc_rates.knots), "value": list(snapshot.zc_rates.values)},
        "yoy_grid": snapshot.yoy_grid.to_frame().to_dict(orient="records"),
    }
    if snapshot.swaptions is not None:
        doc["swaptions"] = snapshot.swaptions.to_frame().to_dict(orient="records")
    if snapshot.libor is not None:
        doc["libor"] = {"maturity_years": list(snapshot.libor.pillars), "value": list(snapshot.libor.values)}
    if snapshot.meta:
        doc["meta"] = snapshot.meta
    return doc


def write_snapshot(snapshot: MarketSnapshot, path: str | Path) -> Path:
    path = Path(path)
    if path.suffix.lower() == ".json":
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(snapshot_to_dict(snapshot), indent=2), encoding="utf-8")
        return path
    path.mkdir(parents=True, exist_ok=True)
    fmt = "%.17g"
    snapshot.nominal.to_frame().to_csv(path / "nominal.csv", index=False, float_format=fmt)
    pd.DataFrame({"maturity_years": snapshot.zc_rates.knots, "value": snapshot.zc_rates.values}).to_csv(
        path / "zc_rates.csv", index=False, float_format=fmt
    )
    snapshot.yoy_grid.to_frame().to_csv(path / "yoy_grid.csv", index=False, float_format=fmt)
    if snapshot.swaptions is not None:
        snapshot.swaptions.to_frame().to_csv(path / "swaptions.csv", index=False, float_format=fmt)
    if snapshot.libor is not None:
        snapshot.libor.to_frame().to_csv(path / "libor.csv", index=False, float_format=fmt)
    return path
