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

# core/inflation_pricers.py
"""
YoY and ZC caps/floors, payment-lag values and LPI bonds.

YoY lets and ZC options share one "ratio option" engine: a payoff
(K - C_fix / C_base)^+ paid at T >= fix is rewritten as

    K / h^N_t * E_t[(c0 e^{Y2} + c5 l e^{Y2 + Y3}) (1 - e^{Y1})^+]

with Y2 = <w_S, X_fix>, Y3 = <w_R, X_fix>, c0 = R(T)(1 - b^R(T)) S(T),
c5 = R(T) b^R(T) S(T) and l = exp kappa_{fix,T}(w_R + w_S).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from . import settings
from .additive_process import AdditiveSpec, LinearFunctional, forward_laplace, functional_mgf
from .errors import InvariantViolation, MissingFixing, NonAdditiveSpec, OrderError
from .fourier import (
    QuadDiagnostics,
    QuadratureConfig,
    ladder_put_kernel,
    price_call_kernel,
    price_floor_kernel,
)
from .rpks import FIXING_TOL, MarketState, RpksParams, cpi_level, kernel_values, nominal_bond

logger = logging.getLogger(__name__)

FLOORLET = "floorlet"
CAPLET = "caplet"
FLOOR = "floor"
CAP = "cap"


# ---------- trade types ----------
@dataclass(frozen=True)
class YoYOptionSpec:
    T_prev: float
    T_i: float
    T: Optional[float] = None
    K: float = 1.0
    side: str = FLOORLET

    def __post_init__(self) -> None:
        if self.T is None:
            object.__setattr__(self, "T", self.T_i + settings.PAYMENT_LAG)
        if not self.T_prev < self.T_i <= self.T:
            raise OrderError(f"YoY option needs T_prev < T_i <= T, got {self.T_prev}, {self.T_i}, {self.T}")
        if not self.K > 0.0:
            raise InvariantViolation(f"YoY strike K = 1 + k must be positive, got {self.K}")
        if self.side not in (FLOORLET, CAPLET):
            raise InvariantViolation(f"YoY option side must be floorlet or caplet, got {self.side!r}")


@dataclass(frozen=True)
class ZcOptionSpec:
    T_0: float
    T_i: float
    T: Optional[float] = None
    K: float = 1.0
    side: str = FLOOR

    def __post_init__(self) -> None:
        if self.T is None:
            object.__setattr__(self, "T", self.T_i + settings.PAYMENT_LAG)
        if not self.T_0 <= self.T_i <= self.T:
            raise OrderError(f"ZC option needs T_0 <= T_i <= T, got {self.T_0}, {self.T_i}, {self.T}")
        if not self.K > 0.0:
            raise InvariantViolation(f"ZC strike must be positive, got {self.K}")
        if self.side not in (FLOOR, CAP):
            raise InvariantViolation(f"ZC option side must be floor or cap, got {self.side!r}")


@dataclass(frozen=True)
class LpiSpec:
    schedule: Tuple[float, ...]
    K_f: float
    K_c: float
    base_level: float = 1.0
    T: Optional[float] = None

    def __post_init__(self) -> None:
        sched = tuple(float(x) for x in self.schedule)
        object.__setattr__(self, "schedule", sched)
        if len(sched) < 2 or any(b <= a for a, b in zip(sched, sched[1:])):
            raise OrderError(f"LPI schedule must be strictly increasing with at least one period, got {sched}")
        if self.T is None:
            object.__setattr__(self, "T", sched[-1])
        if self.T < sched[-1]:
            raise OrderError(f"LPI payment {self.T} precedes the last roll date {sched[-1]}")
        if self.K_f > self.K_c:
            raise InvariantViolation(f"LPI floor {self.K_f} above cap {self.K_c}")
        if not self.K_c > -1.0:
            raise InvariantViolation("LPI cap must exceed -100%")


# ---------- ratio option engine ----------
@dataclass(frozen=True)
class RatioSetup:
    """Ingredients of K/h E[(m0 e^{Y2} + m1 e^{Y2+Y3})(1 - e^{Y1})^+]."""

    y1: LinearFunctional
    y2: LinearFunctional
    y3: LinearFunctional
    m0: float
    m1: float
    scale: float
    K: float
    annuity: float
    known_ratio: Optional[float] = None

    def mgf(self, spec: AdditiveSpec, state: MarketState) -> Callable:
        x_t = state.driver(spec.weights)
        funcs = [self.y1, self.y2, self.y3]

        def q(z1, z2, z3):
            return functional_mgf(spec, state.t, x_t, funcs, [z1, z2, z3])

        return q

    def forward(self, spec: AdditiveSpec, state: MarketState) -> float:
        """Value of the ratio leg C_fix / C_base paid at T."""
        if self.known_ratio is not None:
            return self.known_ratio * self.annuity
        q = self.mgf(spec, state)
        return self.scale * float(np.real(self.m0 * q(1.0, 1.0, 0.0) + self.m1 * q(1.0, 1.0, 1.0)))


def _cpi_at(params: RpksParams, state: MarketState, date: float) -> float:
    try:
        return state.fixing(date)
    except MissingFixing:
        if abs(date - state.t) <= FIXING_TOL:
            return cpi_level(params, state)
        raise


def ratio_setup(
    params: RpksParams, state: MarketState, base: float, fix: float, pay: float, K: float
) -> RatioSetup:
    t = state.t
    if t > pay:
        raise OrderError(f"option paid at {pay} has expired at t={t}")
    w = params.weights
    annuity = float(nominal_bond(params, state, pay))
    h = kernel_values(params, state).hN
    S_T, R_T, b_T = float(params.S(pay)), float(params.R(pay)), float(params.bR(pay))
    y2 = LinearFunctional.at(fix, w.w_S)
    y3 = LinearFunctional.at(fix, w.w_R)
    if t >= fix - FIXING_TOL and t > base:
        ratio = _cpi_at(params, state, fix) / _cpi_at(params, state, base)
        return RatioSetup(LinearFunctional(), y2, y3, 0.0, 0.0, 0.0, K, annuity, ratio)
    S_fix = float(params.S(fix))
    if t >= base - FIXING_TOL:
        c_base = _cpi_at(params, state, base)
        y1 = LinearFunctional.at(fix, -w.w_S, const=np.log(1.0 / (K * S_fix * c_base)))
    else:
        y1 = LinearFunctional(
            np.log(float(params.S(base)) / (K * S_fix)),
            ((base, tuple(w.w_S)), (fix, tuple(-w.w_S))),
        )
    lag = float(np.exp(forward_laplace(params.spec, fix, pay, w.w_R + w.w_S)))
    return RatioSetup(
        y1=y1,
        y2=y2,
        y3=y3,
        m0=R_T * (1.0 - b_T) * S_T,
        m1=R_T * b_T * S_T * lag,
        scale=K / h,
        K=K,
        annuity=annuity,
    )


def _ratio_floor(
    params: RpksParams,
    state: MarketState,
    setup: RatioSetup,
    quad: QuadratureConfig | None,
    report: Optional[List[QuadDiagnostics]],
) -> float:
    if setup.known_ratio is not None:
        return max(setup.K - setup.known_ratio, 0.0) * setup.annuity
    q = setup.mgf(params.spec, state)
    return setup.scale * price_floor_kernel(q, quad=quad, mix=(setup.m0, setup.m1), report=report)


def _ratio_cap(
    params: RpksParams,
    state: MarketState,
    setup: RatioSetup,
    quad: QuadratureConfig | None,
    report: Optional[List[QuadDiagnostics]],
    direct: bool = False,
) -> float:
    if setup.known_ratio is not None:
        return max(setup.known_ratio - setup.K, 0.0) * setup.annuity
    if direct:
        q = setup.mgf(params.spec, state)
        value = 0.0
        for m, z3 in ((setup.m0, 0.0), (setup.m1, 1.0)):
            if m:
                value += m * price_call_kernel(lambda z1, z2, z3=z3: q(z1, z2, z3), 1.0, quad=quad, report=report)
        return setup.scale * value
    floor = _ratio_floor(params, state, setup, quad, report)
    return floor + setup.forward(params.spec, state) - setup.K * setup.annuity


# ---------- YoY ----------
def yoy_floorlet(
    params: RpksParams,
    state: MarketState,
    opt: YoYOptionSpec,
    quad: QuadratureConfig | None = None,
    report: Optional[List[QuadDiagnostics]] = None,
) -> float:
    setup = ratio_setup(params, state, opt.T_prev, opt.T_i, opt.T, opt.K)
    return _ratio_floor(params, state, setup, quad, report)


def yoy_caplet(
    params: RpksParams,
    state: MarketState,
    opt: YoYOptionSpec,
    quad: QuadratureConfig | None = None,
    report: Optional[List[QuadDiagnostics]] = None,
    direct: bool = False,
) -> float:
    """Caplet by cap-floor parity; ``direct`` integrates the call payoff instead."""
    setup = ratio_setup(params, state, opt.T_prev, opt.T_i, opt.T, opt.K)
    return _ratio_cap(params, state, setup, quad, report, direct)


def yoy_option(
    params: RpksParams,
    state: MarketState,
    opt: YoYOptionSpec,
    quad: QuadratureConfig | None = None,
    report: Optional[List[QuadDiagnostics]] = None,
) -> float:
    if opt.side == FLOORLET:
        return yoy_floorlet(params, state, opt, quad, report)
    return yoy_caplet(params, state, opt, quad, report)


def yoy_option_ladder(
    params: RpksParams,
    state: MarketState,
    T_prev: float,
    T_i: float,
    T: float,
    strikes: Sequence[float],
    side: str = FLOORLET,
    quad: QuadratureConfig | None = None,
) -> np.ndarray:
    """One YoY period priced for several ratio strikes K with a shared transform."""
    Ks = np.asarray(strikes, dtype=float)
    base = ratio_setup(params, state, T_prev, T_i, T, 1.0)
    if base.known_ratio is not None:
        sign = 1.0 if side == CAPLET else -1.0
        return np.maximum(sign * (base.known_ratio - Ks), 0.0) * base.annuity
    q = base.mgf(params.spec, state)

    def combined(z1, z2):
        return base.m0 * np.asarray(q(z1, z2, 0.0)) + base.m1 * np.asarray(q(z1, z2, 1.0))

    # Y1 carries -ln K, so the strike enters as alpha = 1/K
    floors = Ks * base.scale * ladder_put_kernel(combined, 1.0 / Ks, quad=quad)
    if side == FLOORLET:
        return floors
    forward = base.scale * float(np.real(combined(1.0, 1.0)))
    return floors + forward - Ks * base.annuity


def yoy_strip(
    params: RpksParams,
    state: MarketState,
    schedule: Sequence[float],
    K: float,
    side: str = CAP,
    quad: QuadratureConfig | None = None,
    payment_lag: float | None = None,
    report: Optional[List[QuadDiagnostics]] = None,
) -> float:
    """YoY cap or floor as the sum of its lets over consecutive schedule dates."""
    lag = settings.PAYMENT_LAG if payment_lag is None else payment_lag
    let_side = CAPLET if side in (CAP, CAPLET) else FLOORLET
    total = 0.0
    for a, b in zip(schedule, schedule[1:]):
        if state.t > b + lag:
            continue
        total += yoy_option(params, state, YoYOptionSpec(a, b, b + lag, K, let_side), quad, report)
    return total


def yoy_timelag_value(
    params: RpksParams,
    state: MarketState,
    opt: YoYOptionSpec,
    quad: QuadratureConfig | None = None,
    report: Optional[List[QuadDiagnostics]] = None,
) -> float:
    """V(T) - V(T = T_i) for the floorlet as one integral."""
    lagged = ratio_setup(params, state, opt.T_prev, opt.T_i, opt.T, opt.K)
    prompt = ratio_setup(params, state, opt.T_prev, opt.T_i, opt.T_i, opt.K)
    return _timelag(params, state, lagged, prompt, quad, report)


def _timelag(
    params: RpksParams,
    state: MarketState,
    lagged: RatioSetup,
    prompt: RatioSetup,
    quad: QuadratureConfig | None,
    report: Optional[List[QuadDiagnostics]],
) -> float:
    if lagged.known_ratio is not None:
        return max(lagged.K - lagged.known_ratio, 0.0) * (lagged.annuity - prompt.annuity)
    if lagged.m0 == prompt.m0 and lagged.m1 == prompt.m1:
        return 0.0
    q = lagged.mgf(params.spec, state)
    mix = (lagged.m0 - prompt.m0, lagged.m1 - prompt.m1)
    return lagged.scale * price_floor_kernel(q, quad=quad, mix=mix, report=report)


# ---------- ZC ----------
def zc_floor(
    params: RpksParams,
    state: MarketState,
    opt: ZcOptionSpec,
    quad: QuadratureConfig | None = None,
    report: Optional[List[QuadDiagnostics]] = None,
) -> float:
    setup = ratio_setup(params, state, opt.T_0, opt.T_i, opt.T, opt.K)
    return _ratio_floor(params, state, setup, quad, report)


def zc_cap(
    params: RpksParams,
    state: MarketState,
    opt: ZcOptionSpec,
    quad: QuadratureConfig | None = None,
    report: Optional[List[QuadDiagnostics]] = None,
    direct: bool = False,
) -> float:
    setup = ratio_setup(params, state, opt.T_0, opt.T_i, opt.T, opt.K)
    return _ratio_cap(params, state, setup, quad, report, direct)


def zc_timelag_value(
    params: RpksParams,
    state: MarketState,
    opt: ZcOptionSpec,
    quad: QuadratureConfig | None = None,
    report: Optional[List[QuadDiagnostics]] = None,
) -> float:
    lagged = ratio_setup(params, state, opt.T_0, opt.T_i, opt.T, opt.K)
    prompt = ratio_setup(params, state, opt.T_0, opt.T_i, opt.T_i, opt.K)
    return _timelag(params, state, lagged, prompt, quad, report)


# ---------- LPI ----------
@dataclass(frozen=True)
class LpiPeriod:
    start: float
    end: float
    rho: float


@dataclass(frozen=True)
class LpiSetup:
    periods: Tuple[LpiPeriod, ...]
    beta_f: float
    beta_c: float
    vectors: Tuple[np.ndarray, np.ndarray]
    prefactors: Tuple[float, float]
    c0: float
    c5: float
    scale: float
    A_S: float
    A_R: float


def lpi_setup(params: RpksParams, state: MarketState, lpi: LpiSpec) -> LpiSetup:
    if not isinstance(params.spec, AdditiveSpec):
        raise NonAdditiveSpec("LPI pricing needs a driver with independent increments")
    t = state.t
    sched = lpi.schedule
    if t >= sched[1]:
        raise OrderError(f"LPI valuation time {t} must precede the first roll date {sched[1]}")
    w = params.weights
    v1, v2 = w.w_S, w.w_S + w.w_R
    spec = params.spec
    T0, TN, T = sched[0], sched[-1], lpi.T

    periods = []
    for k in range(1, len(sched)):
        a, b = sched[k - 1], sched[k]
        if k == 1 and t >= T0:
            rho = 1.0 / (_cpi_at(params, state, T0) * float(params.S(b)) * state.A_S)
            periods.append(LpiPeriod(t, b, rho))
        else:
            periods.append(LpiPeriod(a, b, float(params.S(a)) / float(params.S(b))))
    if t < T0:
        prefactors = (
            float(np.exp(forward_laplace(spec, t, T0, v1))),
            float(np.exp(forward_laplace(spec, t, T0, v2))),
        )
    else:
        prefactors = (1.0, 1.0)

    S_T, R_T, b_T = float(params.S(T)), float(params.R(T)), float(params.bR(T))
    lag = float(np.exp(forward_laplace(spec, TN, T, v2)))
    h = kernel_values(params, state).hN
    return LpiSetup(
        periods=tuple(periods),
        beta_f=1.0 + lpi.K_f,
        beta_c=1.0 + lpi.K_c,
        vectors=(v1, v2),
        prefactors=prefactors,
        c0=R_T * (1.0 - b_T) * S_T,
        c5=R_T * b_T * S_T * lag,
        scale=lpi.base_level / h,
        A_S=state.A_S,
        A_R=state.A_R,
    )


PutFn = Callable[[LpiPeriod, np.ndarray, np.ndarray], np.ndarray]


def lpi_assemble(params: RpksParams, setup: LpiSetup, put: PutFn) -> float:
    """
    Product of per-period collar factors
    V = beta_c e^{kappa(v)} - beta_c P(rho / beta_c) + beta_f P(rho / beta_f),
    where ``put(period, v, alphas)`` returns E[e^{<v, dX>} (1 - alpha e^{-<w_S, dX>})^+].
    """
    spec = params.spec
    factors = []
    for v in setup.vectors:
        prod = 1.0
        for p in setup.periods:
            growth = float(np.exp(forward_laplace(spec, p.start, p.end, v)))
            if setup.beta_f == setup.beta_c:
                prod *= setup.beta_c * growth
                continue
            alphas = [p.rho / setup.beta_c]
            if setup.beta_f > 0.0:
                alphas.append(p.rho / setup.beta_f)
            puts = np.asarray(put(p, v, np.asarray(alphas)))
            factor = setup.beta_c * growth - setup.beta_c * puts[0]
            if setup.beta_f > 0.0:
                factor += setup.beta_f * puts[1]
            prod *= factor
        factors.append(prod)
    first = setup.c0 * setup.A_S * setup.prefactors[0] * factors[0]
    second = setup.c5 * setup.A_S * setup.A_R * setup.prefactors[1] * factors[1]
    return setup.scale * (first + second)


def lpi_bond(
    params: RpksParams,
    state: MarketState,
    lpi: LpiSpec,
    quad: QuadratureConfig | None = None,
) -> float:
    setup = lpi_setup(params, state, lpi)
    spec = params.spec
    w_S = params.weights.w_S

    def put(period: LpiPeriod, v: np.ndarray, alphas: np.ndarray) -> np.ndarray:
        def q(z1, z2):
            z = np.multiply.outer(np.asarray(z1), -w_S) + np.multiply.outer(np.asarray(z2), v)
            return np.exp(np.asarray(forward_laplace(spec, period.start, period.end, z)))

        return ladder_put_kernel(q, alphas, quad=quad)

    return lpi_assemble(params, setup, put)


def lpi_swap(
    params: RpksParams,
    state: MarketState,
    lpi: LpiSpec,
    K: float,
    quad: QuadratureConfig | None = None,
) -> float:
    return lpi_bond(params, state, lpi, quad) - K * float(nominal_bond(params, state, lpi.T))
