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

# core/calibration.py
"""
Four-step calibration of the RPKS to a market snapshot.

    1. bootstrap the time-change rates a_k to ATM YoY cap vols (b^R = 1);
       the NIG engine first fits (a, nu, theta) to the whole vol surface
    2. fit the b^R Hermite knots to the parity YoY swap rates
    3. repeat step 1 with the fitted b^R
    4. fit the b~_L steps to ATM swaption normal vols, shortest expiry first

Also home of the synthetic market generator used by create_market.py and
the round-trip tests, and of the figure-data tables written by
``cli.py calibrate``.
"""

from __future__ import annotations

import json
import logging
import time
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
import warnings
from contextlib import contextmanager
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import TYPE_CHECKING, Any, Callable, Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy.optimize import brentq, least_squares
from tqdm import tqdm

from . import settings
from .additive_process import (
    DEFAULT_A_L,
    DEFAULT_A_R,
    DEFAULT_B,
    DEFAULT_TC_KNOTS,
    NIG,
    WeightVectors,
    gaussian_spec,
    nig_spec,
)
from .errors import (
    ConfigError,
    DomainError,
    IdentifiabilityWarning,
    InvariantViolation,
    NoConvergence,
    NoRoot,
    PriceOutOfBounds,
    RpksError,
    SolverFail,
)
from .fourier import QuadratureConfig
from .gaussian_pricers import ratio_ladder_gaussian
from .inflation_pricers import CAPLET, FLOORLET, yoy_option_ladder
from .market_data import (
    CAP,
    CAP_STRIKES,
    FLOOR,
    FLOOR_STRIKES,
    MAX_VOL,
    SWAPTION_EXPIRIES,
    SWAPTION_TENOR,
    YOY_MATURITIES,
    DiscountCurve,
    KnotCurve,
    MarketSnapshot,
    StepCurve,
    SwaptionQuote,
    SwaptionVolRow,
    YoYOptionGrid,
    YoYQuote,
    annual_schedule,
    atm_vol_interp,
    bachelier_implied_vol,
    bachelier_price,
    il_curve_from_zc_rates,
    swap_rates_from_parity,
    yoy_cap_implied_vol,
)
from .nominal_pricers import Quad2dConfig, atm_swaption, swaption_multi
from .rpks import (
    B_L_KNOTS,
    B_R_KNOTS,
    MarketState,
    RpksParams,
    build_params,
    params_to_dict,
    yoy_fair_rate,
    yoy_fair_rate_independent,
    zc_fair_rate,
)

if TYPE_CHECKING:
    from .state_manager import StateManager

logger = logging.getLogger(__name__)

BP = 1e-4
B_R_TOL = 1e-4
BAD_RESIDUAL = 10.0
STEP_NAMES = {1: "time change", 2: "b_r", 3: "time change (refit)", 4: "b_l"}


# ---------- configuration ----------
@dataclass(frozen=True)
class CalibConfig:
    engine: str = settings.ENGINE
    b: float = DEFAULT_B
    a_R: float = DEFAULT_A_R
    a_L: float = DEFAULT_A_L
    tc_knots: Tuple[float, ...] = DEFAULT_TC_KNOTS
    initial_rate: float = 1e-4
    nig_nu: float = 15.0
    nig_theta: float = -0.5
    lambda_smooth: float = 1e2
    lambda_box: float = 1e6
    objective_tol: float = 1e-8
    max_iter: int = 200
    max_sweeps: int = 20
    payment_lag: float = settings.PAYMENT_LAG
    swaption_tenor: float = SWAPTION_TENOR
    b_r_knots: Tuple[float, ...] = B_R_KNOTS
    b_l_knots: Tuple[float, ...] = B_L_KNOTS
    quad: QuadratureConfig = field(default_factory=QuadratureConfig)
    quad2d: Quad2dConfig = field(default_factory=Quad2dConfig)
    progress: bool = settings.PROGRESS

    def __post_init__(self) -> None:
        if self.engine not in settings.ENGINES:
            raise ConfigError(f"engine must be one of {', '.join(settings.ENGINES)}, got {self.engine!r}")
        # b = 0 or a_R = 0 is allowed: it switches the convexity channel off
        for name in ("b", "a_R", "a_L"):
            if getattr(self, name) < 0.0:
                raise ConfigError(f"{name} must be non-negative, got {getattr(self, name)}")
        if not self.initial_rate > 0.0:
            raise ConfigError(f"initial_rate must be positive, got {self.initial_rate}")
        if self.lambda_smooth < 0.0 or self.lambda_box < 0.0:
            raise ConfigError("penalty weights must be non-negative")
        if self.max_iter < 1 or self.max_sweeps < 1:
            raise ConfigError("max_iter and max_sweeps must be at least 1")
        object.__setattr__(self, "tc_knots", tuple(float(k) for k in self.tc_knots))
        object.__setattr__(self, "b_r_knots", tuple(float(k) for k in self.b_r_knots))
        object.__setattr__(self, "b_l_knots", tuple(float(k) for k in self.b_l_knots))

    @property
    def weights(self) -> WeightVectors:
        return WeightVectors(self.b, self.a_R, self.a_L)

    @classmethod
    def from_dict(cls, doc: Dict[str, Any]) -> "CalibConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(doc) - known
        if unknown:
            raise ConfigError(f"unknown calibration settings: {', '.join(sorted(unknown))}")
        kwargs = dict(doc)
        try:
            if "quad" in kwargs:
                kwargs["quad"] = QuadratureConfig(**kwargs["quad"])
            if "quad2d" in kwargs:
                kwargs["quad2d"] = Quad2dConfig(**kwargs["quad2d"])
            for key in ("tc_knots", "b_r_knots", "b_l_knots"):
                if key in kwargs:
                    kwargs[key] = tuple(kwargs[key])
            return cls(**kwargs)
        except (TypeError, InvariantViolation) as exc:
            raise ConfigError(f"invalid calibration settings: {exc}") from None

    @classmethod
    def load(cls, path: str | Path, overrides: Optional[Dict[str, Any]] = None) -> "CalibConfig":
        """Read a JSON or TOML file; the ``calibration`` table is used when present."""
        path = Path(path)
        try:
            text = path.read_text(encoding="utf-8")
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {path}") from None
        try:
            doc = tomllib.loads(text) if path.suffix.lower() == ".toml" else json.loads(text)
        except (tomllib.TOMLDecodeError, json.JSONDecodeError) as exc:
            raise ConfigError(f"config file {path} could not be parsed: {exc}") from None
        doc = dict(doc.get("calibration", doc))
        doc.update({k: v for k, v in (overrides or {}).items() if v is not None})
        return cls.from_dict(doc)

    def to_dict(self) -> Dict[str, Any]:
        doc = {f.name: getattr(self, f.name) for f in fields(self)}
        doc["quad"] = dict(self.quad.__dict__)
        doc["quad2d"] = dict(self.quad2d.__dict__)
        return doc


# ---------- targets ----------
@dataclass(frozen=True)
class SurfacePoint:
    maturity: float
    strike: float
    side: str
    price: float
    vol: float


@dataclass(frozen=True)
class CalibrationTargets:
    swap_rates: Dict[float, float]
    atm_vols: Dict[float, float]
    surface: Tuple[SurfacePoint, ...]
    swaptions: Tuple[SwaptionQuote, ...] = ()

    @property
    def maturities(self) -> Tuple[float, ...]:
        return tuple(sorted(self.atm_vols))


def _strip_vol(price: float, side: str, strike: float, T: float, snapshot: MarketSnapshot, lag: float) -> float:
    return yoy_cap_implied_vol(price, side, strike, T, snapshot.nominal, snapshot.il, lag)


def calibration_targets(snapshot: MarketSnapshot, config: CalibConfig) -> CalibrationTargets:
    """Parity swap rates, Black strip vols of every quote and OTM-interpolated ATM vols."""
    lag = config.payment_lag
    rates = swap_rates_from_parity(snapshot.yoy_grid, snapshot.nominal, lag)
    surface: List[SurfacePoint] = []
    atm: Dict[float, float] = {}
    for T in snapshot.yoy_grid.maturities():
        k_atm = rates[T]
        points = []
        for side in (CAP, FLOOR):
            for k, p in zip(*snapshot.yoy_grid.slice(T, side)):
                try:
                    vol = _strip_vol(float(p), side, float(k), T, snapshot, lag)
                except (PriceOutOfBounds, NoConvergence) as exc:
                    logger.warning("skipping YoY %s quote T=%s k=%s: %s", side, T, k, exc)
                    continue
                points.append(SurfacePoint(T, float(k), side, float(p), vol))
        surface.extend(points)
        otm = [p for p in points if (p.side == CAP) == (p.strike >= k_atm)]
        atm[T] = atm_vol_interp([p.strike for p in otm], [p.vol for p in otm], k_atm)
        logger.debug("T=%s: ATM strike %.6f, ATM vol %.6f from %d OTM quotes", T, k_atm, atm[T], len(otm))
    swaptions = snapshot.swaptions.quotes if snapshot.swaptions is not None else ()
    return CalibrationTargets(swap_rates=rates, atm_vols=atm, surface=tuple(surface), swaptions=swaptions)


# ---------- model strips ----------
def let_ladder(
    params: RpksParams,
    T_prev: float,
    T_i: float,
    pay: float,
    strikes: Sequence[float],
    side: str,
    quad: QuadratureConfig | None = None,
) -> np.ndarray:
    """Time-0 prices of one YoY let for several ratio strikes K = 1 + k."""
    state = MarketState()
    let_side = CAPLET if side in (CAP, CAPLET) else FLOORLET
    if params.spec.is_gaussian:
        return ratio_ladder_gaussian(params, state, T_prev, T_i, pay, strikes, let_side)
    return yoy_option_ladder(params, state, T_prev, T_i, pay, strikes, let_side, quad)


def strip_matrix(
    params: RpksParams,
    maturities: Sequence[float],
    strikes: Sequence[float],
    side: str,
    payment_lag: float,
    quad: QuadratureConfig | None = None,
) -> np.ndarray:
    """Model strip prices, one row per maturity and one column per strike rate."""
    sched = annual_schedule(max(maturities))
    Ks = 1.0 + np.asarray(strikes, dtype=float)
    lets = np.array([let_ladder(params, a, b, b + payment_lag, Ks, side, quad) for a, b in zip(sched, sched[1:])])
    total = np.cumsum(lets, axis=0)
    return total[[int(round(T)) - 1 for T in maturities]]


def _model_strip_vol(
    params: RpksParams, snapshot: MarketSnapshot, T: float, k: float, side: str, price: float, lag: float
) -> float:
    try:
        return _strip_vol(price, side, k, T, snapshot, lag)
    except PriceOutOfBounds:
        return 0.0
    except NoConvergence:
        return MAX_VOL


def model_atm_vol(params: RpksParams, snapshot: MarketSnapshot, T: float, k_atm: float, config: CalibConfig) -> float:
    price = float(strip_matrix(params, [T], [k_atm], CAP, config.payment_lag, config.quad)[0, 0])
    return _model_strip_vol(params, snapshot, T, k_atm, CAP, price, config.payment_lag)


# ---------- step 1: time change ----------
def _grow_bracket(f: Callable[[float], float], x0: float, what: str, floor: float = 1e-14, ceiling: float = 10.0):
    """Bracket the root of an increasing f, growing geometrically from x0."""
    lo, hi = x0 / 2.0, x0 * 2.0
    f_lo, f_hi = f(lo), f(hi)
    while f_lo * f_hi > 0.0:
        if f_lo > 0.0:
            hi, f_hi = lo, f_lo
            lo /= 2.0
            if lo < floor:
                raise NoRoot(f"{what}: target not reached as the rate goes to zero")
            f_lo = f(lo)
        else:
            lo, f_lo = hi, f_hi
            hi *= 2.0
            if hi > ceiling:
                raise NoRoot(f"{what}: target not reached below rate {ceiling}")
            f_hi = f(hi)
    return lo, hi


def _rate_blocks(knots: Sequence[float], maturities: Sequence[float]) -> List[Tuple[float, List[int]]]:
    """Time-change intervals first entering the strip at each maturity."""
    blocks = []
    prev = 0.0
    n_rates = len(knots) - 1
    for T in maturities:
        idx = [i for i in range(n_rates) if prev - 1e-12 <= knots[i] < T - 1e-12]
        if idx:
            blocks.append((T, idx))
            prev = T
        else:
            logger.warning("no free time-change interval for maturity %s; its ATM vol is not fitted exactly", T)
    return blocks


def bootstrap_a(
    snapshot: MarketSnapshot,
    config: CalibConfig,
    params: RpksParams,
    targets: Optional[CalibrationTargets] = None,
) -> RpksParams:
    """Sequential root-finds: a_k matches the ATM vol at T_k with a_1..a_{k-1} held."""
    targets = targets or calibration_targets(snapshot, config)
    lag = config.payment_lag
    knots = params.spec.time_change.knots
    rates = list(params.spec.time_change.rates)
    blocks = _rate_blocks(knots, targets.maturities)
    last: Optional[float] = None
    for T, idx in tqdm(blocks, desc="time change", disable=not config.progress):
        k_atm = targets.swap_rates[T]
        target = targets.atm_vols[T]
        lower = knots[idx[0]]
        sched = annual_schedule(T)
        periods = list(zip(sched, sched[1:]))
        held = [(a, b) for a, b in periods if b + lag <= lower + 1e-12]
        free = [(a, b) for a, b in periods if b + lag > lower + 1e-12]
        current = params.with_spec(params.spec.with_rates(rates))
        fixed = sum(float(let_ladder(current, a, b, b + lag, [1.0 + k_atm], CAP, config.quad)[0]) for a, b in held)

        def objective(x: float) -> float:
            trial = list(rates)
            for i in idx:
                trial[i] = x
            model = params.with_spec(params.spec.with_rates(trial))
            price = fixed + sum(
                float(let_ladder(model, a, b, b + lag, [1.0 + k_atm], CAP, config.quad)[0]) for a, b in free
            )
            return _model_strip_vol(model, snapshot, T, k_atm, CAP, price, lag) - target

        x0 = last if last is not None else rates[idx[0]]
        what = f"time-change bootstrap at maturity {T}"
        lo, hi = _grow_bracket(objective, x0, what)
        try:
            x = brentq(objective, lo, hi, xtol=1e-16, rtol=1e-12, maxiter=200)
        except (RuntimeError, ValueError) as exc:
            raise NoRoot(f"{what}: {exc}") from None
        for i in idx:
            rates[i] = x
        last = x
        logger.info("a on [%s, %s) = %.6e (ATM vol %.6f at T=%s)", knots[idx[0]], knots[idx[-1] + 1], x, target, T)
    if last is not None:
        assigned = max(i for _, idx in blocks for i in idx)
        for i in range(assigned + 1, len(rates)):
            rates[i] = last
    return params.with_spec(params.spec.with_rates(rates))


def fit_nig_global(
    snapshot: MarketSnapshot,
    config: CalibConfig,
    params: RpksParams,
    targets: Optional[CalibrationTargets] = None,
) -> RpksParams:
    """Least squares in (a, nu, theta) over the whole strip vol surface, then the exact ATM bootstrap."""
    if params.spec.kind != NIG:
        raise DomainError("the global smile fit needs the NIG engine")
    targets = targets or calibration_targets(snapshot, config)
    points = targets.surface
    if not points:
        raise SolverFail("no YoY quotes left to fit the NIG smile")
    lag = config.payment_lag
    maturities = sorted({p.maturity for p in points})
    row = {T: i for i, T in enumerate(maturities)}
    strikes = {side: sorted({p.strike for p in points if p.side == side}) for side in (CAP, FLOOR)}
    col = {side: {k: j for j, k in enumerate(ks)} for side, ks in strikes.items()}
    n_rates = len(params.spec.time_change.rates)
    market = np.array([p.vol for p in points])
    best: Dict[str, Any] = {"cost": np.inf, "x": None}

    def unpack(x: np.ndarray) -> Tuple[float, float, float]:
        nu = float(np.exp(x[1]))
        return float(np.exp(x[0])), nu, 0.95 * nu * float(np.tanh(x[2]))

    def residuals(x: np.ndarray) -> np.ndarray:
        a, nu, theta = unpack(x)
        try:
            model = params.with_spec(params.spec.with_rates([a] * n_rates).with_nig(nu, theta))
            prices = {
                side: strip_matrix(model, maturities, ks, side, lag, config.quad)
                for side, ks in strikes.items()
                if ks
            }
        except (DomainError, NoConvergence) as exc:
            logger.debug("NIG trial a=%.3g nu=%.3g theta=%.3g rejected: %s", a, nu, theta, exc)
            return np.full(market.shape, BAD_RESIDUAL)
        vols = np.array(
            [
                _model_strip_vol(
                    model, snapshot, p.maturity, p.strike, p.side,
                    float(prices[p.side][row[p.maturity], col[p.side][p.strike]]), lag,
                )
                for p in points
            ]
        )
        res = vols - market
        cost = float(res @ res)
        if cost < best["cost"]:
            best.update(cost=cost, x=x.copy())
        return res

    nig = params.spec.nig_s
    nu0 = nig.nu if nig is not None else config.nig_nu
    theta0 = nig.theta if nig is not None else config.nig_theta
    a0 = float(np.mean(params.spec.time_change.rates))
    x0 = np.array([np.log(a0), np.log(nu0), np.arctanh(np.clip(theta0 / (0.95 * nu0), -0.999, 0.999))])
    lower = np.array([np.log(1e-8), np.log(10.5), -3.0])
    upper = np.array([np.log(1.0), np.log(200.0), 3.0])
    x0 = np.clip(x0, lower + 1e-9, upper - 1e-9)
    try:
        fit = least_squares(
            residuals, x0, bounds=(lower, upper), method="trf",
            ftol=config.objective_tol, xtol=config.objective_tol, gtol=config.objective_tol,
            max_nfev=config.max_iter, diff_step=1e-4,
        )
    except (ValueError, np.linalg.LinAlgError) as exc:
        raise SolverFail(f"NIG surface fit failed: {exc}", best=best["x"]) from None
    if fit.status < 0 or not np.isfinite(fit.cost) or best["x"] is None:
        raise SolverFail(f"NIG surface fit failed: {fit.message}", best=best["x"])
    if fit.status == 0:
        logger.warning("NIG surface fit stopped at the evaluation limit (cost %.3g)", fit.cost)
    a, nu, theta = unpack(fit.x)
    logger.info("NIG surface fit: a=%.6e nu=%.4f theta=%.4f rms vol error %.3g",
                a, nu, theta, float(np.sqrt(2.0 * fit.cost / market.size)))
    fitted = params.with_spec(params.spec.with_rates([a] * n_rates).with_nig(nu, theta))
    return bootstrap_a(snapshot, config, fitted, targets)


# ---------- step 2: b^R ----------
def _check_b_r(curve: KnotCurve) -> None:
    """
    Post-fit bound on b^R, checked on the closed interval [-B_R_TOL, 1 + B_R_TOL].
    The box penalty is soft, so a fit that reproduces b^R = 1 (the starting
    value) may land a hair above 1.
    """
    grid = np.linspace(curve.knots[0], curve.knots[-1], 301)
    values = np.asarray(curve(grid))
    if np.any(values < -B_R_TOL) or np.any(values > 1.0 + B_R_TOL):
        raise InvariantViolation(
            f"fitted b_r leaves [0, 1]: min {values.min():.6f}, max {values.max():.6f}"
        )


def fit_bR(
    snapshot: MarketSnapshot,
    config: CalibConfig,
    params: RpksParams,
    targets: Optional[CalibrationTargets] = None,
) -> RpksParams:
    """Penalised least squares of the b^R knots on YoY fair-rate residuals (in bp)."""
    w = params.weights
    if w.b == 0.0 or w.a_R == 0.0:
        warnings.warn(
            "b or a_R is zero: YoY swap rates carry no convexity and b_r cannot be identified; keeping it",
            IdentifiabilityWarning,
            stacklevel=2,
        )
        return params
    targets = targets or calibration_targets(snapshot, config)
    maturities = targets.maturities
    goal = np.array([targets.swap_rates[T] for T in maturities])
    schedules = [annual_schedule(T) for T in maturities]
    state = MarketState()
    grid = np.linspace(params.b_r.knots[0], params.b_r.knots[-1], 121)
    smooth = np.sqrt(config.lambda_smooth * (grid[1] - grid[0]))
    box = np.sqrt(config.lambda_box)

    def residuals(x: np.ndarray) -> np.ndarray:
        model = params.with_b_r(x)
        try:
            rates = np.array([yoy_fair_rate(model, state, s, config.payment_lag) for s in schedules])
        except RpksError as exc:
            logger.debug("b_r trial rejected: %s", exc)
            rates = goal + BAD_RESIDUAL * BP
        curvature = smooth * np.asarray(model.b_r.second_derivative(grid))
        outside = box * np.maximum.reduce([np.zeros_like(x), x - 1.0, -x])
        return np.concatenate([(rates - goal) / BP, curvature, outside])

    x0 = np.asarray(params.b_r.values, dtype=float)
    try:
        fit = least_squares(
            residuals, x0, method="trf",
            ftol=config.objective_tol, xtol=config.objective_tol, gtol=config.objective_tol,
            max_nfev=config.max_iter, diff_step=1e-6,
        )
    except (ValueError, np.linalg.LinAlgError) as exc:
        raise SolverFail(f"b_r fit failed: {exc}", best=x0) from None
    if fit.status < 0 or not np.isfinite(fit.cost):
        raise SolverFail(f"b_r fit failed: {fit.message}", best=fit.x)
    fitted = params.with_b_r(fit.x)
    _check_b_r(fitted.b_r)
    worst = float(np.max(np.abs(fit.fun[: len(maturities)])))
    logger.info("b_r fit: worst YoY swap-rate residual %.4f bp", worst)
    return fitted


# ---------- step 4: b~_L ----------
def _signed_bracket(f: Callable[[float], float], x0: float, step: float, what: str, limit: float = 10.0):
    f0 = f(x0)
    if f0 == 0.0:
        return x0, x0
    d = step
    while d <= limit:
        for x in (x0 + d, x0 - d):
            if f0 * f(x) <= 0.0:
                return min(x0, x), max(x0, x)
        d *= 2.0
    raise NoRoot(f"{what}: no b_l level within {limit} of {x0} reproduces the target")


def fit_bL(
    snapshot: MarketSnapshot,
    config: CalibConfig,
    params: RpksParams,
    targets: Optional[CalibrationTargets] = None,
) -> RpksParams:
    """Gauss-Seidel sweeps of exact ATM fits, each expiry owning the b~_L step it starts."""
    quotes = targets.swaptions if targets is not None else (snapshot.swaptions.quotes if snapshot.swaptions else ())
    if not quotes:
        raise NoRoot("no swaption quotes to fit b_l")
    state = MarketState()
    owners: Dict[int, Tuple[SwaptionQuote, Any, float, float]] = {}
    for q in sorted(quotes, key=lambda q: q.expiry):
        step = int(params.b_l.index(q.expiry))
        if step in owners:
            logger.warning("expiry %s shares b_l step %d with expiry %s; not fitted exactly",
                           q.expiry, step, owners[step][0].expiry)
            continue
        spec, rate, annuity = atm_swaption(params, q.expiry, q.tenor)
        target = bachelier_price(rate, rate, q.normal_vol_bp * BP, q.expiry, annuity)
        owners[step] = (q, spec, target / annuity, annuity)

    values = list(params.b_l.values)
    for sweep in range(config.max_sweeps):
        change = 0.0
        for step, (q, spec, target, annuity) in tqdm(owners.items(), desc=f"b_l sweep {sweep + 1}", disable=not config.progress):
            def objective(x: float) -> float:
                trial = list(values)
                trial[step] = x
                price = swaption_multi(params.with_b_l(trial), state, spec, config.quad2d, quad=config.quad)
                return price / annuity - target

            what = f"b_l fit at expiry {q.expiry}"
            lo, hi = _signed_bracket(objective, values[step], 1e-3, what)
            if lo == hi:
                continue
            try:
                x = brentq(objective, lo, hi, xtol=1e-14, rtol=1e-13, maxiter=200)
            except (RuntimeError, ValueError) as exc:
                raise NoRoot(f"{what}: {exc}") from None
            change = max(change, abs(x - values[step]))
            values[step] = x
        logger.info("b_l sweep %d: largest step change %.3e", sweep + 1, change)
        if change < 1e-12:
            break
    else:
        logger.warning("b_l sweeps stopped after %d passes (last change %.3e)", config.max_sweeps, change)
    return params.with_b_l(values)


# ---------- pipeline ----------
@dataclass
class CalibResult:
    params: RpksParams
    targets: CalibrationTargets
    residuals: List[Dict[str, Any]] = field(default_factory=list)
    log: List[Dict[str, Any]] = field(default_factory=list)

    @property
    def rates(self) -> Tuple[float, ...]:
        return self.params.spec.time_change.rates

    @property
    def nig(self) -> Optional[Dict[str, float]]:
        p = self.params.spec.nig_s
        return None if p is None else {"nu": p.nu, "theta": p.theta, "sigma": p.sigma}

    @property
    def b_r(self) -> Tuple[float, ...]:
        return self.params.b_r.values

    @property
    def b_l(self) -> Tuple[float, ...]:
        return self.params.b_l.values

    def residual_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.residuals, columns=["instrument", "maturity", "strike", "target", "model", "residual", "unit"])

    def to_dict(self) -> Dict[str, Any]:
        return {
            "params": params_to_dict(self.params),
            "rates": list(self.rates),
            "nig": self.nig,
            "b_r": list(self.b_r),
            "b_l": list(self.b_l),
            "residuals": self.residuals,
        }


def initial_params(snapshot: MarketSnapshot, config: CalibConfig) -> RpksParams:
    weights = config.weights
    if config.engine == NIG:
        spec = nig_spec(config.nig_nu, config.nig_theta, config.initial_rate, config.tc_knots, weights)
    else:
        spec = gaussian_spec(config.initial_rate, config.tc_knots, weights)
    params = build_params(spec, snapshot.nominal, snapshot.il, libor=snapshot.projection)
    return replace(
        params,
        b_r=KnotCurve.constant(1.0, config.b_r_knots, "b_r"),
        b_l=StepCurve.zero(config.b_l_knots),
    )


def residual_records(
    params: RpksParams, snapshot: MarketSnapshot, targets: CalibrationTargets, config: CalibConfig
) -> List[Dict[str, Any]]:
    records: List[Dict[str, Any]] = []
    state = MarketState()
    for T in targets.maturities:
        k = targets.swap_rates[T]
        vol = model_atm_vol(params, snapshot, T, k, config)
        records.append(dict(instrument="yoy_atm_vol", maturity=T, strike=k, target=targets.atm_vols[T],
                            model=vol, residual=vol - targets.atm_vols[T], unit="vol"))
        rate = yoy_fair_rate(params, state, annual_schedule(T), config.payment_lag)
        records.append(dict(instrument="yoy_swap_rate", maturity=T, strike=None, target=k / BP,
                            model=rate / BP, residual=(rate - k) / BP, unit="bp"))
    if params.libor is not None:
        for q in targets.swaptions:
            spec, rate, annuity = atm_swaption(params, q.expiry, q.tenor)
            price = swaption_multi(params, state, spec, config.quad2d, quad=config.quad)
            try:
                vol = bachelier_implied_vol(price, annuity, rate, rate, q.expiry) / BP
            except (PriceOutOfBounds, NoConvergence):
                vol = float("nan")
            records.append(dict(instrument="swaption_atm_vol", maturity=q.expiry, strike=rate,
                                target=q.normal_vol_bp, model=vol, residual=vol - q.normal_vol_bp, unit="bp"))
    return records


@contextmanager
def _step(index: int) -> Iterator[None]:
    try:
        yield
    except RpksError as exc:
        exc.args = (f"calibration step {index} ({STEP_NAMES[index]}): {exc}",) + exc.args[1:]
        raise


def _summary(params: RpksParams) -> Dict[str, Any]:
    return {
        "rates": list(params.spec.time_change.rates),
        "nig": None if params.spec.nig_s is None else {"nu": params.spec.nig_s.nu, "theta": params.spec.nig_s.theta},
        "b_r": list(params.b_r.values),
        "b_l": list(params.b_l.values),
    }


def run_pipeline(
    snapshot: MarketSnapshot,
    config: CalibConfig | None = None,
    initial: RpksParams | None = None,
    state_manager: Optional["StateManager"] = None,
) -> CalibResult:
    """Steps 1-4; ``initial`` only warm-starts the solvers."""
    config = config or CalibConfig()
    targets = calibration_targets(snapshot, config)
    params = initial_params(snapshot, config)
    if initial is not None:
        spec = params.spec.with_rates(initial.spec.time_change.rates)
        if config.engine == NIG and initial.spec.nig_s is not None:
            spec = spec.with_nig(initial.spec.nig_s.nu, initial.spec.nig_s.theta)
        params = replace(params, spec=spec, b_l=initial.b_l)
    log: List[Dict[str, Any]] = []

    def record(index: int, started: float) -> None:
        entry = {
            "step": index,
            "block": STEP_NAMES[index],
            "engine": config.engine,
            "elapsed_s": round(time.perf_counter() - started, 3),
            **_summary(params),
        }
        log.append(entry)
        if state_manager is not None:
            state_manager.append_log(entry)

    started = time.perf_counter()
    with _step(1):
        if config.engine == NIG:
            params = fit_nig_global(snapshot, config, params, targets)
        else:
            params = bootstrap_a(snapshot, config, params, targets)
    record(1, started)

    started = time.perf_counter()
    with _step(2):
        params = fit_bR(snapshot, config, params, targets)
    record(2, started)

    started = time.perf_counter()
    with _step(3):
        params = bootstrap_a(snapshot, config, params, targets)
    record(3, started)

    if targets.swaptions and params.libor is not None:
        started = time.perf_counter()
        with _step(4):
            params = fit_bL(snapshot, config, params, targets)
        record(4, started)
    else:
        logger.warning("snapshot has no swaption quotes; skipping the b_l step")

    result = CalibResult(params, targets, residual_records(params, snapshot, targets, config), log)
    logger.info("calibration done: %d residuals recorded", len(result.residuals))
    return result


# ---------- synthetic market ----------
def synthetic_snapshot(
    params: RpksParams,
    maturities: Sequence[float] = YOY_MATURITIES,
    floor_strikes: Sequence[float] = FLOOR_STRIKES,
    cap_strikes: Sequence[float] = CAP_STRIKES,
    expiries: Sequence[float] = SWAPTION_EXPIRIES,
    tenor: float = SWAPTION_TENOR,
    payment_lag: float | None = None,
    quad: QuadratureConfig | None = None,
    quad2d: Quad2dConfig | None = None,
) -> MarketSnapshot:
    """Curves, a YoY strip grid with the ATM strike added, and ATM swaption vols priced by ``params``."""
    lag = settings.PAYMENT_LAG if payment_lag is None else payment_lag
    state = MarketState()
    pillars = [p for p in params.nominal.pillars if p > 0.0]
    zc = KnotCurve(tuple(pillars), tuple(np.atleast_1d(zc_fair_rate(params, pillars))), "zc rates")

    maturities = sorted(float(T) for T in maturities)
    atm = {T: yoy_fair_rate(params, state, annual_schedule(T), lag) for T in maturities}
    quotes: List[YoYQuote] = []
    for side, base in ((FLOOR, floor_strikes), (CAP, cap_strikes)):
        strikes = sorted(set(float(k) for k in base) | set(atm.values()))
        prices = strip_matrix(params, maturities, strikes, side, lag, quad)
        for i, T in enumerate(maturities):
            wanted = [k for k in base if abs(k - atm[T]) > 1e-8] + [atm[T]]
            for k in wanted:
                price = float(prices[i, strikes.index(float(k))])
                if price <= 0.0:
                    logger.debug("synthetic %s T=%s k=%s has no value; not quoted", side, T, k)
                    continue
                quotes.append(YoYQuote(T, float(k), side, price))

    swaptions = None
    if params.libor is not None and len(expiries):
        row = []
        for e in tqdm(expiries, desc="synthetic swaptions", disable=not settings.PROGRESS):
            spec, rate, annuity = atm_swaption(params, float(e), tenor)
            price = swaption_multi(params, state, spec, quad2d, quad=quad)
            vol = bachelier_implied_vol(price, annuity, rate, rate, float(e))
            row.append(SwaptionQuote(float(e), tenor, vol / BP))
        swaptions = SwaptionVolRow(tuple(row))

    return MarketSnapshot(
        nominal=params.nominal,
        zc_rates=zc,
        yoy_grid=YoYOptionGrid(tuple(quotes)),
        swaptions=swaptions,
        libor=params.libor,
        meta={"synthetic": True, "engine": params.spec.kind, "payment_lag": lag},
    )


# ---------- figure data ----------
def figure_tables(result: CalibResult, snapshot: MarketSnapshot, config: CalibConfig) -> Dict[str, pd.DataFrame]:
    params = result.params
    targets = result.targets
    lag = config.payment_lag
    frame = result.residual_frame()
    tables: Dict[str, pd.DataFrame] = {}

    atm = frame[frame["instrument"] == "yoy_atm_vol"]
    tables["atm_vol_fit"] = pd.DataFrame(
        {"maturity": atm["maturity"], "strike": atm["strike"], "market_vol": atm["target"],
         "model_vol": atm["model"], "residual": atm["residual"]}
    )

    smile = []
    if targets.surface:
        maturities = sorted({p.maturity for p in targets.surface})
        for side in (CAP, FLOOR):
            pts = [p for p in targets.surface if p.side == side]
            if not pts:
                continue
            ks = sorted({p.strike for p in pts})
            prices = strip_matrix(params, maturities, ks, side, lag, config.quad)
            for p in pts:
                price = float(prices[maturities.index(p.maturity), ks.index(p.strike)])
                smile.append({"maturity": p.maturity, "strike": p.strike, "side": side, "market_vol": p.vol,
                              "model_vol": _model_strip_vol(params, snapshot, p.maturity, p.strike, side, price, lag)})
    tables["smile_grid"] = pd.DataFrame(smile, columns=["maturity", "strike", "side", "market_vol", "model_vol"])

    grid = np.linspace(0.0, params.b_r.knots[-1], 121)
    tables["b_r"] = pd.DataFrame({"t": grid, "b_r": np.asarray(params.b_r(grid))})
    tables["b_l"] = pd.DataFrame(
        {"start": params.b_l.knots[:-1], "end": params.b_l.knots[1:], "b_l": params.b_l.values}
    )
    tc = params.spec.time_change
    tables["time_change"] = pd.DataFrame(
        {"start": tc.knots[:-1], "end": tc.knots[1:], "rate": tc.rates, "tau_end": tc.cumulative[1:]}
    )

    state = MarketState()
    convexity = []
    for T in targets.maturities:
        sched = annual_schedule(T)
        model = yoy_fair_rate(params, state, sched)
        independent = yoy_fair_rate_independent(snapshot.nominal, snapshot.il, sched)
        convexity.append({"maturity": T, "model_rate": model, "independent_rate": independent,
                          "convexity_bp": (model - independent) / BP})
    tables["convexity"] = pd.DataFrame(convexity, columns=["maturity", "model_rate", "independent_rate", "convexity_bp"])

    sw = frame[frame["instrument"] == "swaption_atm_vol"]
    tables["swaption_fit"] = pd.DataFrame(
        {"expiry": sw["maturity"], "market_vol_bp": sw["target"], "model_vol_bp": sw["model"], "residual_bp": sw["residual"]}
    )
    return tables


# ---------- reference model ----------
MODEL_CONFIG = settings.CONFIG_DIR / "model.json"


def load_model_config(path: str | Path = MODEL_CONFIG) -> Dict[str, Any]:
    path = Path(path)
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError(f"model config not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"model config {path} is not valid JSON: {exc.msg}") from None


def reference_params(doc: Optional[Dict[str, Any]] = None, engine: Optional[str] = None) -> RpksParams:
    """
    Known parameters behind the synthetic market: flat nominal, ZC inflation
    and LIBOR curves on one set of pillars, a flat clock and constant b^R, b~_L.
    """
    model = load_model_config()
    doc = doc if doc is not None else model["reference_model"]
    calib = CalibConfig.from_dict(model.get("calibration", {}))
    try:
        engine = engine or doc.get("engine", calib.engine)
        pillars = np.asarray(doc["pillars"], dtype=float)
        nominal = DiscountCurve(tuple(pillars), tuple(np.exp(-float(doc["nominal_rate"]) * pillars)), "nominal")
        zc = KnotCurve.constant(float(doc["zc_inflation_rate"]), pillars, "zc rates")
        libor_rate = float(doc["nominal_rate"]) + float(doc.get("libor_spread", 0.0))
        libor = DiscountCurve(tuple(pillars), tuple(np.exp(-libor_rate * pillars)), "libor")
        rates = doc.get("rates", calib.initial_rate)
        nig = doc.get("nig", {})
        b_r = float(doc.get("b_r", 1.0))
        b_l = float(doc.get("b_l", 0.0))
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"invalid reference model: {exc!r}") from None
    if engine == NIG:
        spec = nig_spec(nig.get("nu", calib.nig_nu), nig.get("theta", calib.nig_theta), rates, calib.tc_knots, calib.weights)
    else:
        spec = gaussian_spec(rates, calib.tc_knots, calib.weights)
    params = build_params(
        spec,
        nominal,
        il_curve_from_zc_rates(nominal, zc),
        b_r=KnotCurve.constant(b_r, calib.b_r_knots, "b_r"),
        libor=libor,
        b_l=StepCurve(calib.b_l_knots, (b_l,) * (len(calib.b_l_knots) - 1)),
    )
    logger.debug("reference model: %s engine, %d pillars", engine, len(pillars))
    return params
