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

# core/verification.py
"""
Invariant suites run by ``cli.py verify``.

Every suite returns a list of ``Check`` rows (value against threshold). A
pricer error inside a suite becomes a failed row carrying the message, so a
report always covers every suite that was asked for.

Suites:
    curves       model P^N and P^IL reproduce the input curves
    parity       cap - floor equals the time-lagged swap (YoY and ZC), time-lag identities
    cross        Fourier against the Gaussian closed forms, LPI collar limits
    convexity    b = 0 removes the YoY convexity correction
    swaption     2D multi-curve integrator against the single-curve swaption
    mc           martingale check and Monte Carlo prices of representative trades
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Dict, List, Sequence, Tuple

import numpy as np
import pandas as pd

from . import settings
from .additive_process import GAUSSIAN, AdditiveSpec, WeightVectors
from .errors import InvariantViolation, RpksError
from .fourier import QuadratureConfig
from .gaussian_pricers import (
    lpi_bond_gaussian,
    yoy_caplet_gaussian,
    yoy_floorlet_gaussian,
    zc_cap_gaussian,
    zc_floor_gaussian,
)
from .inflation_pricers import (
    CAP,
    CAPLET,
    FLOOR,
    LpiSpec,
    YoYOptionSpec,
    ZcOptionSpec,
    lpi_bond,
    yoy_caplet,
    yoy_floorlet,
    yoy_timelag_value,
    zc_cap,
    zc_floor,
    zc_timelag_value,
)
from .mc_oracle import SimPlan, instrument_dates, martingale_suite, mc_price
from .nominal_pricers import (
    SINGLE,
    ExponentialSum,
    Quad2dConfig,
    SwapSpec,
    SwaptionSpec,
    par_rate_single,
    positive_part_expectation,
    single_curve_coefficients,
    swaption_single,
)
from .rpks import (
    MarketState,
    RpksParams,
    inflation_linked_bond,
    kernel_values,
    nominal_bond,
    yoy_convexity,
    yoy_swaplet_price,
)
from .trades import NominalBond, price_instrument

logger = logging.getLogger(__name__)

SUITES = ("curves", "parity", "cross", "convexity", "swaption", "mc")


@dataclass(frozen=True)
class Check:
    suite: str
    name: str
    value: float
    threshold: float
    detail: str = ""

    @property
    def passed(self) -> bool:
        return math.isfinite(self.value) and self.value <= self.threshold


@dataclass
class VerifyReport:
    checks: List[Check] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def failures(self) -> List[Check]:
        return [c for c in self.checks if not c.passed]

    def to_frame(self) -> pd.DataFrame:
        rows = [
            {"suite": c.suite, "check": c.name, "value": c.value, "threshold": c.threshold,
             "passed": c.passed, "detail": c.detail}
            for c in self.checks
        ]
        return pd.DataFrame(rows, columns=["suite", "check", "value", "threshold", "passed", "detail"])


@dataclass(frozen=True)
class VerifyConfig:
    maturities: Tuple[float, ...] = (1.0, 2.0, 3.0, 5.0, 7.0)
    rate_strikes: Tuple[float, ...] = (-0.01, 0.0, 0.01, 0.02, 0.03)
    payment_lag: float = settings.PAYMENT_LAG
    curve_tol: float = 1e-12
    parity_tol: float = 1e-10
    cross_tol: float = 1e-7
    convexity_tol: float = 1e-12
    swaption_tol: float = 1e-6
    wide_collar_tol: float = 1e-4
    swaption_expiries: Tuple[float, ...] = (1.0, 5.0, 10.0)
    swaption_tenor: float = 1.0
    convexity_lengths: Tuple[int, ...] = tuple(range(2, 31))
    martingale_grid: Tuple[float, ...] = tuple(float(t) for t in range(1, 31))
    paths: int = settings.MC_PATHS
    seed: int | None = settings.SEED
    z_max: float = 3.0
    drift_fault: float = 0.0
    suites: Tuple[str, ...] = SUITES
    quad: QuadratureConfig = field(default_factory=QuadratureConfig)
    quad2d: Quad2dConfig = field(default_factory=Quad2dConfig)
    progress: bool = False

    def __post_init__(self) -> None:
        unknown = set(self.suites) - set(SUITES)
        if unknown:
            raise InvariantViolation(f"unknown verification suites {sorted(unknown)}; expected some of {SUITES}")

    def tightened(self, factor: float) -> "VerifyConfig":
        """Same suites with every deterministic threshold and the quadrature tolerances divided by ``factor``."""
        if not factor > 1.0:
            raise InvariantViolation(f"tightening factor must exceed 1, got {factor}")
        return replace(
            self,
            curve_tol=self.curve_tol / factor,
            parity_tol=self.parity_tol / factor,
            cross_tol=self.cross_tol / factor,
            convexity_tol=self.convexity_tol / factor,
            swaption_tol=self.swaption_tol / factor,
            quad=self.quad.tightened(factor),
        )


def _guarded(suite: str, fn: Callable[[], List[Check]]) -> List[Check]:
    try:
        return fn()
    except RpksError as exc:
        logger.warning("%s suite aborted: %s", suite, exc)
        return [Check(suite, "error", math.inf, 0.0, f"{type(exc).__name__}: {exc}")]


def _worst(suite: str, name: str, errors: Sequence[Tuple[float, str]], threshold: float) -> Check:
    value, where = max(errors, key=lambda e: e[0])
    return Check(suite, name, float(value), threshold, where)


def gaussian_counterpart(spec: AdditiveSpec) -> AdditiveSpec:
    """The Gaussian driver on the same time change and weights."""
    if spec.is_gaussian:
        return spec
    return replace(spec, kind=GAUSSIAN, nig_s=None, nig_r=None)


def _yoy_lattice(cfg: VerifyConfig) -> List[YoYOptionSpec]:
    return [
        YoYOptionSpec(T - 1.0, T, T + cfg.payment_lag, 1.0 + k)
        for T in cfg.maturities
        for k in cfg.rate_strikes
    ]


def _zc_lattice(cfg: VerifyConfig) -> List[ZcOptionSpec]:
    return [
        ZcOptionSpec(0.0, T, T + cfg.payment_lag, (1.0 + k) ** T)
        for T in cfg.maturities
        for k in cfg.rate_strikes
    ]


# ---------- curves ----------
def curve_checks(params: RpksParams, cfg: VerifyConfig) -> List[Check]:
    state = MarketState()
    nominal = np.asarray(params.nominal.pillars)
    real = np.asarray(params.R.pillars)
    nominal = nominal[nominal > 0.0]
    real = real[real > 0.0]
    pn = np.abs(np.atleast_1d(nominal_bond(params, state, nominal)) - np.atleast_1d(params.nominal(nominal)))
    pil = np.abs(np.atleast_1d(inflation_linked_bond(params, state, real)) - np.atleast_1d(params.R(real)))
    return [
        Check("curves", "nominal_curve", float(pn.max()), cfg.curve_tol, f"T={nominal[pn.argmax()]:g}"),
        Check("curves", "inflation_curve", float(pil.max()), cfg.curve_tol, f"T={real[pil.argmax()]:g}"),
    ]


# ---------- parity ----------
def parity_checks(params: RpksParams, cfg: VerifyConfig) -> List[Check]:
    state = MarketState()
    checks: List[Check] = []
    yoy = _yoy_lattice(cfg)
    zc = _zc_lattice(cfg)

    def swap_value(base: float, fix: float, pay: float, K: float) -> float:
        return yoy_swaplet_price(params, state, base, fix, pay).price(K)

    if params.spec.is_gaussian:
        errs = [
            (abs(yoy_caplet_gaussian(params, state, o) - yoy_floorlet_gaussian(params, state, o)
                 - swap_value(o.T_prev, o.T_i, o.T, o.K)), f"T={o.T_i:g} K={o.K:g}")
            for o in yoy
        ]
        checks.append(_worst("parity", "yoy_cap_floor_closed_form", errs, cfg.parity_tol))
        errs = [
            (abs(zc_cap_gaussian(params, state, o) - zc_floor_gaussian(params, state, o)
                 - swap_value(o.T_0, o.T_i, o.T, o.K)), f"T={o.T_i:g} K={o.K:g}")
            for o in zc
        ]
        checks.append(_worst("parity", "zc_cap_floor_closed_form", errs, cfg.parity_tol))

    # quadrature-based identities are held to the cross-engine tolerance
    errs = [
        (abs(yoy_caplet(params, state, o, cfg.quad, direct=True) - yoy_floorlet(params, state, o, cfg.quad)
             - swap_value(o.T_prev, o.T_i, o.T, o.K)), f"T={o.T_i:g} K={o.K:g}")
        for o in yoy
    ]
    checks.append(_worst("parity", "yoy_cap_floor_fourier", errs, cfg.cross_tol))
    errs = [
        (abs(zc_cap(params, state, o, cfg.quad, direct=True) - zc_floor(params, state, o, cfg.quad)
             - swap_value(o.T_0, o.T_i, o.T, o.K)), f"T={o.T_i:g} K={o.K:g}")
        for o in zc
    ]
    checks.append(_worst("parity", "zc_cap_floor_fourier", errs, cfg.cross_tol))

    errs = []
    for o in yoy:
        prompt = replace(o, T=o.T_i)
        direct = yoy_floorlet(params, state, o, cfg.quad) - yoy_floorlet(params, state, prompt, cfg.quad)
        errs.append((abs(yoy_timelag_value(params, state, o, cfg.quad) - direct), f"T={o.T_i:g} K={o.K:g}"))
    checks.append(_worst("parity", "yoy_time_lag", errs, cfg.cross_tol))
    errs = []
    for o in zc:
        prompt = replace(o, T=o.T_i)
        direct = zc_floor(params, state, o, cfg.quad) - zc_floor(params, state, prompt, cfg.quad)
        errs.append((abs(zc_timelag_value(params, state, o, cfg.quad) - direct), f"T={o.T_i:g} K={o.K:g}"))
    checks.append(_worst("parity", "zc_time_lag", errs, cfg.cross_tol))
    return checks


# ---------- cross-engine ----------
def cross_engine_checks(params: RpksParams, cfg: VerifyConfig) -> List[Check]:
    """Fourier quadrature against the closed forms on the Gaussian driver with the same clock."""
    gauss = params.with_spec(gaussian_counterpart(params.spec))
    state = MarketState()
    checks = []
    errs = [
        (abs(yoy_floorlet(gauss, state, o, cfg.quad) - yoy_floorlet_gaussian(gauss, state, o)),
         f"T={o.T_i:g} K={o.K:g}")
        for o in _yoy_lattice(cfg)
    ]
    checks.append(_worst("cross", "yoy_floor", errs, cfg.cross_tol))
    errs = [
        (abs(zc_floor(gauss, state, o, cfg.quad) - zc_floor_gaussian(gauss, state, o)), f"T={o.T_i:g} K={o.K:g}")
        for o in _zc_lattice(cfg)
    ]
    checks.append(_worst("cross", "zc_floor", errs, cfg.cross_tol))

    N = int(max(cfg.maturities))
    sched = tuple(float(i) for i in range(N + 1))
    lpi = LpiSpec(sched, 0.0, 0.05)
    diff = abs(lpi_bond(gauss, state, lpi, cfg.quad) - lpi_bond_gaussian(gauss, state, lpi))
    checks.append(Check("cross", "lpi_bond", diff, cfg.cross_tol, f"N={N} collar=[0, 5%]"))

    k_bar = 0.02
    degenerate = LpiSpec(sched, k_bar, k_bar)
    exact = (1.0 + k_bar) ** N * float(nominal_bond(params, state, sched[-1]))
    value = price_instrument(params, degenerate, state, params.spec.is_gaussian, cfg.quad)
    checks.append(Check("cross", "lpi_degenerate_collar", abs(value - exact), cfg.cross_tol, f"k={k_bar:g} N={N}"))

    wide = LpiSpec(sched, -0.99, 10.0)
    value = price_instrument(params, wide, state, params.spec.is_gaussian, cfg.quad)
    il = float(inflation_linked_bond(params, state, sched[-1]))
    checks.append(Check("cross", "lpi_wide_collar", abs(value - il), cfg.wide_collar_tol, "collar=[-99%, 1000%]"))
    return checks


# ---------- convexity ----------
def convexity_checks(params: RpksParams, cfg: VerifyConfig) -> List[Check]:
    w = params.weights
    flat = replace(params, spec=replace(params.spec, weights=WeightVectors(0.0, w.a_R, w.a_L)), S_curve=None)
    errs = []
    for n in cfg.convexity_lengths:
        sched = tuple(float(i) for i in range(n + 1))
        errs.append((abs(yoy_convexity(flat, sched)), f"{n}Y"))
    return [_worst("convexity", "convexity_vanishes_without_b", errs, cfg.convexity_tol)]


# ---------- swaption ----------
def swaption_checks(params: RpksParams, cfg: VerifyConfig) -> List[Check]:
    """With the floating leg written through nominal bonds the 2D integral is the single-curve swaption."""
    state = MarketState()
    w = params.weights
    h = kernel_values(params, state).hN
    errs = []
    for T_k in cfg.swaption_expiries:
        sched = SwapSpec.regular(T_k, cfg.swaption_tenor, 0.0).schedule
        swap = SwapSpec(sched, par_rate_single(params, state, sched))
        c0, c1 = single_curve_coefficients(params, swap)
        payoff = ExponentialSum(0.0, ((0.0, tuple(w.w_L)), (c0, tuple(w.w_S)), (c1, tuple(w.w_R + w.w_S))))
        two_d = positive_part_expectation(params, state, T_k, payoff, cfg.quad2d) / h
        one_d = swaption_single(params, state, SwaptionSpec(swap, SINGLE), cfg.quad)
        errs.append((abs(two_d - one_d), f"expiry={T_k:g}"))
    return [_worst("swaption", "multi_curve_reduces_to_single", errs, cfg.swaption_tol)]


# ---------- Monte Carlo ----------
def mc_trades(params: RpksParams, cfg: VerifyConfig) -> Dict[str, Any]:
    """Representative instruments for the simulation cross-check."""
    lag = cfg.payment_lag
    trades: Dict[str, Any] = {
        "nominal_bond_10y": NominalBond(10.0),
        "yoy_floorlet_5y": YoYOptionSpec(4.0, 5.0, 5.0 + lag, 1.02),
        "yoy_caplet_5y": YoYOptionSpec(4.0, 5.0, 5.0 + lag, 1.03, CAPLET),
        "zc_floor_5y": ZcOptionSpec(0.0, 5.0, 5.0 + lag, 1.02**5, FLOOR),
        "zc_cap_5y": ZcOptionSpec(0.0, 5.0, 5.0 + lag, 1.03**5, CAP),
        "lpi_bond_5y": LpiSpec(tuple(float(i) for i in range(6)), 0.0, 0.05),
    }
    # deep in-the-money single-curve swaption: both kernel coefficients positive
    swaption = SwaptionSpec(SwapSpec.regular(2.0, 1.0, -0.05), SINGLE)
    c0, c1 = single_curve_coefficients(params, swaption.swap)
    if c0 >= 0.0 and c1 >= 0.0:
        trades["swaption_single_itm"] = swaption
    else:
        logger.info("skipping the in-the-money swaption check: coefficients (%.4g, %.4g)", c0, c1)
    return trades


def mc_checks(params: RpksParams, cfg: VerifyConfig) -> List[Check]:
    report = martingale_suite(
        params.spec,
        cfg.martingale_grid,
        SimPlan(cfg.martingale_grid, paths=cfg.paths, seed=cfg.seed),
        drift_fault=cfg.drift_fault,
        z_max=cfg.z_max,
        progress=cfg.progress,
    )
    worst = max(report.rows, key=lambda r: abs(r["z"]))
    checks = [Check("mc", "martingale", report.worst_z, cfg.z_max, f"{worst['factor']} t={worst['t']:g}")]
    for stream, (name, inst) in enumerate(mc_trades(params, cfg).items()):
        analytic = price_instrument(params, inst, MarketState(), params.spec.is_gaussian, cfg.quad, cfg.quad2d)
        plan = SimPlan.for_dates(instrument_dates(inst), paths=cfg.paths, seed=None if cfg.seed is None else cfg.seed + stream)
        est = mc_price(params, inst, plan, cfg.drift_fault, cfg.progress)
        z = abs(est.z_score(analytic))
        checks.append(Check("mc", name, z, cfg.z_max, f"analytic {analytic:.8g}, mc {est.price:.8g} +- {est.se:.2g}"))
    return checks


SUITE_FUNCTIONS: Dict[str, Callable[[RpksParams, VerifyConfig], List[Check]]] = {
    "curves": curve_checks,
    "parity": parity_checks,
    "cross": cross_engine_checks,
    "convexity": convexity_checks,
    "swaption": swaption_checks,
    "mc": mc_checks,
}


def run_verification(params: RpksParams, cfg: VerifyConfig | None = None) -> VerifyReport:
    cfg = cfg or VerifyConfig()
    report = VerifyReport()
    for suite in cfg.suites:
        checks = _guarded(suite, lambda s=suite: SUITE_FUNCTIONS[s](params, cfg))
        report.checks.extend(checks)
        failed = sum(not c.passed for c in checks)
        logger.info("%s: %d checks, %d failed", suite, len(checks), failed)
    return report
