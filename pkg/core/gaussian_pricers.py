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

# core/gaussian_pricers.py
"""
Closed forms for the Gaussian driver.

Every option payoff reduces to E[e^X (alpha e^Y - beta)^+] (or its put)
for a bivariate normal (X, Y); the moments come from the mean path and
Sigma(min(s, r)) - Sigma(t).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Sequence

import numpy as np
from scipy.stats import norm

from .additive_process import AdditiveSpec, LinearFunctional
from .errors import WrongSpecKind
from .inflation_pricers import (
    CAP,
    CAPLET,
    FLOORLET,
    LpiPeriod,
    LpiSpec,
    RatioSetup,
    YoYOptionSpec,
    ZcOptionSpec,
    lpi_assemble,
    lpi_setup,
    ratio_setup,
)
from .rpks import MarketState, RpksParams


@dataclass(frozen=True)
class BivariateNormalMoments:
    mu_x: float
    mu_y: float
    var_x: float
    var_y: float
    cov_xy: float


def _require_gaussian(spec: AdditiveSpec) -> None:
    if not spec.is_gaussian:
        raise WrongSpecKind(f"closed-form pricer needs a Gaussian driver, got {spec.kind!r}")


def _mean(spec: AdditiveSpec, t: float, x_t: np.ndarray, f: LinearFunctional) -> float:
    mu_t = spec.drift(t)
    total = f.const
    for date, vec in f.terms:
        total += float(np.dot(vec, x_t + spec.drift(date) - mu_t))
    return total


def _cov(spec: AdditiveSpec, t: float, f: LinearFunctional, g: LinearFunctional) -> float:
    sigma_t = spec.covariance(t)
    total = 0.0
    for s, v in f.terms:
        for r, u in g.terms:
            total += float(np.asarray(v) @ (spec.covariance(min(s, r)) - sigma_t) @ np.asarray(u))
    return total


def gaussian_moments(
    spec: AdditiveSpec, t: float, x_t: Any, fx: LinearFunctional, fy: LinearFunctional
) -> BivariateNormalMoments:
    """Conditional moments of (X, Y) = (fx, fy) given X_t = x_t."""
    _require_gaussian(spec)
    x_t = np.asarray(x_t, dtype=float)
    return BivariateNormalMoments(
        mu_x=_mean(spec, t, x_t, fx),
        mu_y=_mean(spec, t, x_t, fy),
        var_x=max(_cov(spec, t, fx, fx), 0.0),
        var_y=max(_cov(spec, t, fy, fy), 0.0),
        cov_xy=_cov(spec, t, fx, fy),
    )


def _tilt(m: BivariateNormalMoments):
    """e^delta and the tilted mean of Y so that E[e^X g(Y)] = e^delta E~[g(Y)]."""
    b = m.cov_xy / m.var_y
    a = m.mu_x - b * m.mu_y + 0.5 * (m.var_x - m.cov_xy**2 / m.var_y)
    delta = a + b * m.mu_y + 0.5 * b * b * m.var_y
    return delta, m.mu_y + b * m.var_y


def bn_call_kernel(m: BivariateNormalMoments, alpha: Any = 1.0, beta: float = 1.0) -> Any:
    """E[e^X (alpha e^Y - beta)^+]."""
    alpha = np.asarray(alpha, dtype=float)
    if m.var_y <= 0.0:
        value = np.exp(m.mu_x + 0.5 * m.var_x) * np.maximum(alpha * np.exp(m.mu_y) - beta, 0.0)
        return value if value.ndim else float(value)
    sd = np.sqrt(m.var_y)
    delta, mean = _tilt(m)
    d = (np.log(alpha / beta) + mean) / sd
    value = np.exp(delta) * (alpha * np.exp(mean + 0.5 * m.var_y) * norm.cdf(d + sd) - beta * norm.cdf(d))
    return value if value.ndim else float(value)


def bn_put_kernel(m: BivariateNormalMoments, alpha: Any = 1.0, beta: float = 1.0) -> Any:
    """E[e^X (beta - alpha e^Y)^+]."""
    alpha = np.asarray(alpha, dtype=float)
    if m.var_y <= 0.0:
        value = np.exp(m.mu_x + 0.5 * m.var_x) * np.maximum(beta - alpha * np.exp(m.mu_y), 0.0)
        return value if value.ndim else float(value)
    sd = np.sqrt(m.var_y)
    delta, mean = _tilt(m)
    d = (np.log(alpha / beta) + mean) / sd
    value = np.exp(delta) * (beta * norm.cdf(-d) - alpha * np.exp(mean + 0.5 * m.var_y) * norm.cdf(-d - sd))
    return value if value.ndim else float(value)


# ---------- ratio options ----------
def _ratio_moments(params: RpksParams, state: MarketState, setup: RatioSetup):
    spec = params.spec
    x_t = state.driver(spec.weights)
    plain = gaussian_moments(spec, state.t, x_t, setup.y2, setup.y1)
    joint = gaussian_moments(spec, state.t, x_t, setup.y2 + setup.y3, setup.y1)
    return plain, joint


def ratio_ladder_gaussian(
    params: RpksParams,
    state: MarketState,
    base: float,
    fix: float,
    pay: float,
    strikes: Sequence[float],
    side: str = FLOORLET,
) -> np.ndarray:
    """(K - C_fix / C_base)^+ (or the call) paid at ``pay`` for several K."""
    _require_gaussian(params.spec)
    Ks = np.asarray(strikes, dtype=float)
    setup = ratio_setup(params, state, base, fix, pay, 1.0)
    call = side in (CAPLET, CAP)
    if setup.known_ratio is not None:
        sign = 1.0 if call else -1.0
        return np.maximum(sign * (setup.known_ratio - Ks), 0.0) * setup.annuity
    plain, joint = _ratio_moments(params, state, setup)
    kernel = bn_call_kernel if call else bn_put_kernel
    # with K = 1 in Y1 the strike enters through alpha = 1/K
    values = setup.m0 * np.asarray(kernel(plain, 1.0 / Ks)) + setup.m1 * np.asarray(kernel(joint, 1.0 / Ks))
    return Ks * setup.scale * values


def _ratio_option(params: RpksParams, state: MarketState, base: float, fix: float, pay: float, K: float, side: str) -> float:
    return float(ratio_ladder_gaussian(params, state, base, fix, pay, [K], side)[0])


def yoy_floorlet_gaussian(params: RpksParams, state: MarketState, opt: YoYOptionSpec) -> float:
    return _ratio_option(params, state, opt.T_prev, opt.T_i, opt.T, opt.K, FLOORLET)


def yoy_caplet_gaussian(params: RpksParams, state: MarketState, opt: YoYOptionSpec) -> float:
    return _ratio_option(params, state, opt.T_prev, opt.T_i, opt.T, opt.K, CAPLET)


def yoy_option_gaussian(params: RpksParams, state: MarketState, opt: YoYOptionSpec) -> float:
    return _ratio_option(params, state, opt.T_prev, opt.T_i, opt.T, opt.K, opt.side)


def zc_floor_gaussian(params: RpksParams, state: MarketState, opt: ZcOptionSpec) -> float:
    return _ratio_option(params, state, opt.T_0, opt.T_i, opt.T, opt.K, FLOORLET)


def zc_cap_gaussian(params: RpksParams, state: MarketState, opt: ZcOptionSpec) -> float:
    return _ratio_option(params, state, opt.T_0, opt.T_i, opt.T, opt.K, CAPLET)


# ---------- LPI ----------
def lpi_bond_gaussian(params: RpksParams, state: MarketState, lpi: LpiSpec) -> float:
    spec = params.spec
    _require_gaussian(spec)
    setup = lpi_setup(params, state, lpi)
    w_S = params.weights.w_S
    x_t = np.zeros(3)

    def put(period: LpiPeriod, v: np.ndarray, alphas: np.ndarray) -> np.ndarray:
        gain = LinearFunctional(0.0, ((period.start, tuple(-v)), (period.end, tuple(v))))
        drop = LinearFunctional(0.0, ((period.start, tuple(w_S)), (period.end, tuple(-w_S))))
        m = gaussian_moments(spec, state.t, x_t, gain, drop)
        return np.atleast_1d(bn_put_kernel(m, alphas))

    return lpi_assemble(params, setup, put)
