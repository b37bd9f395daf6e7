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

# core/rpks.py
"""
Rational pricing-kernel system.

    h^R_t = R(t) [1 + b^R(t) (A^R_t - 1)]
    h^N_t = S(t) A^S_t h^R_t
    C_t   = h^R_t / h^N_t = 1 / (S(t) A^S_t)          (C_0 = 1)

Linear instruments follow from E_t[A^S_T A^R_T] = A^S_t A^R_t exp(kappa_tT(w_R + w_S)).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Any, Dict, Mapping, Optional, Sequence, Tuple

import numpy as np

from .additive_process import (
    AdditiveSpec,
    WeightVectors,
    cov_factor,
    forward_laplace,
    scalar_or_array,
    spec_from_dict,
    spec_to_dict,
    validate_document,
)
from .errors import (
    EmptySchedule,
    InvariantViolation,
    MissingFixing,
    NegativeTime,
    NonPositiveCurve,
    OrderError,
)
from .market_data import DiscountCurve, InflationForwardCurve, KnotCurve, StepCurve
from .settings import CONFIG_DIR

logger = logging.getLogger(__name__)

PARAMS_SCHEMA = CONFIG_DIR / "params.schema.json"

B_R_KNOTS = (0.0, 2.0, 5.0, 7.0, 10.0, 15.0, 20.0, 30.0)
B_L_KNOTS = (0.25, 0.5, 1.0, 2.0, 3.0, 5.0, 7.0, 10.0, 15.0, 20.0, 30.0, 31.0)
FIXING_TOL = 1e-9


# ---------- model ----------
@dataclass(frozen=True)
class RpksParams:
    spec: AdditiveSpec
    R: DiscountCurve
    nominal: DiscountCurve
    b_r: KnotCurve
    S_curve: Optional[DiscountCurve] = None
    libor: Optional[DiscountCurve] = None
    b_l: StepCurve = field(default_factory=lambda: StepCurve.zero(B_L_KNOTS))
    b_l_anchored: bool = True

    @property
    def weights(self) -> WeightVectors:
        return self.spec.weights

    def bR(self, t: Any) -> Any:
        return self.b_r(t)

    def S(self, t: Any) -> Any:
        """S(t) fitted so the model reproduces the nominal curve; explicit S_curve wins."""
        if self.S_curve is not None:
            return self.S_curve(t)
        t = np.asarray(t, dtype=float)
        w = self.weights
        cov = np.asarray(cov_factor(self.spec, 0.0, t, w.w_R, w.w_S))
        denom = np.asarray(self.R(t)) * (1.0 + np.asarray(self.bR(t)) * cov)
        return scalar_or_array(np.asarray(self.nominal(t)) / denom)

    def with_spec(self, spec: AdditiveSpec) -> "RpksParams":
        return replace(self, spec=spec)

    def with_b_r(self, values: Sequence[float]) -> "RpksParams":
        return replace(self, b_r=self.b_r.with_values(values))

    def with_b_l(self, values: Sequence[float]) -> "RpksParams":
        return replace(self, b_l=self.b_l.with_values(values))


@dataclass(frozen=True)
class MarketState:
    """Valuation time, factor levels and stored CPI fixings C_s (C_0 = 1)."""

    t: float = 0.0
    A_S: float = 1.0
    A_R: float = 1.0
    A_L: float = 1.0
    fixings: Mapping[float, float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.t < 0.0:
            raise NegativeTime(f"valuation time must be non-negative, got {self.t}")
        for name in ("A_S", "A_R", "A_L"):
            if not getattr(self, name) > 0.0:
                raise InvariantViolation(f"factor level {name} must be positive, got {getattr(self, name)}")
        object.__setattr__(self, "fixings", {float(k): float(v) for k, v in dict(self.fixings).items()})

    @classmethod
    def from_driver(
        cls, weights: WeightVectors, t: float, x: Sequence[float], fixings: Mapping[float, float] | None = None
    ) -> "MarketState":
        levels = np.exp(weights.matrix() @ np.asarray(x, dtype=float))
        return cls(float(t), *map(float, levels), fixings=dict(fixings or {}))

    def driver(self, weights: WeightVectors) -> np.ndarray:
        return np.linalg.solve(weights.matrix(), np.log([self.A_S, self.A_R, self.A_L]))

    def fixing(self, s: float) -> float:
        if abs(s) <= FIXING_TOL:
            return self.fixings.get(0.0, 1.0)
        for date, level in self.fixings.items():
            if abs(date - s) <= FIXING_TOL:
                return level
        raise MissingFixing(f"no CPI fixing stored for date {s} (valuation time {self.t})")


@dataclass(frozen=True)
class KernelValue:
    hN: float
    hR: float
    s: float


@dataclass(frozen=True)
class SwapletValue:
    floating: float
    annuity: float
    covariance: float

    def price(self, strike: float) -> float:
        return self.floating - strike * self.annuity


# ---------- kernel ----------
def _kappa_rs(params: RpksParams, t: Any, T: Any) -> Any:
    w = params.weights
    return forward_laplace(params.spec, t, T, w.w_R + w.w_S)


def kernel_values(params: RpksParams, state: MarketState) -> KernelValue:
    t = state.t
    hR = float(params.R(t)) * (1.0 + float(params.bR(t)) * (state.A_R - 1.0))
    s = float(params.S(t)) * state.A_S
    return KernelValue(hN=s * hR, hR=hR, s=s)


def cpi_level(params: RpksParams, state: MarketState) -> float:
    return 1.0 / (float(params.S(state.t)) * state.A_S)


def _check_order(t: float, T: Any) -> None:
    if np.any(np.asarray(T, dtype=float) < t):
        raise OrderError(f"maturity {T} precedes valuation time {t}")


def affine_payoff_price(params: RpksParams, state: MarketState, T: Any, a1: float, a2: float) -> Any:
    """Value at t of a1 + a2 * C_T / C_0 paid at T."""
    t = state.t
    _check_order(t, T)
    T = np.asarray(T, dtype=float)
    R_T = np.asarray(params.R(T))
    S_T = np.asarray(params.S(T))
    b_T = np.asarray(params.bR(T))
    b0 = a2 * R_T * (1.0 - b_T)
    b1 = a2 * R_T * b_T
    b2 = a1 * S_T * R_T * (1.0 - b_T)
    b3 = a1 * S_T * R_T * b_T
    joint = state.A_S * state.A_R * np.exp(np.asarray(_kappa_rs(params, t, T)))
    value = b0 + b1 * state.A_R + b2 * state.A_S + b3 * joint
    return scalar_or_array(value / kernel_values(params, state).hN)


def nominal_bond(params: RpksParams, state: MarketState, T: Any) -> Any:
    return affine_payoff_price(params, state, T, 1.0, 0.0)


def inflation_linked_bond(params: RpksParams, state: MarketState, T: Any) -> Any:
    return affine_payoff_price(params, state, T, 0.0, 1.0)


def real_bond(params: RpksParams, state: MarketState, T: Any) -> Any:
    _check_order(state.t, T)
    T = np.asarray(T, dtype=float)
    b_T = np.asarray(params.bR(T))
    num = np.asarray(params.R(T)) * (1.0 - b_T + b_T * state.A_R)
    return scalar_or_array(num / kernel_values(params, state).hR)


def zc_swap_price(params: RpksParams, state: MarketState, T: float, K: float) -> float:
    return float(inflation_linked_bond(params, state, T) - K * nominal_bond(params, state, T))


def zc_fair_rate(params: RpksParams, T: Any) -> Any:
    T = np.asarray(T, dtype=float)
    if np.any(T <= 0.0):
        raise OrderError(f"ZC fair rate needs a maturity after 0, got T={T}")
    state = MarketState()
    pn = np.asarray(nominal_bond(params, state, T))
    pil = np.asarray(inflation_linked_bond(params, state, T))
    if np.any(pn <= 0.0) or np.any(pil <= 0.0):
        raise NonPositiveCurve(f"non-positive bond price at T={T}")
    return scalar_or_array((pn / pil) ** (1.0 / T) - 1.0)


# ---------- YoY ----------
def yoy_swaplet_price(
    params: RpksParams, state: MarketState, T_prev: float, T_i: float, payment: Optional[float] = None
) -> SwapletValue:
    """Floating leg C_Ti / C_Tprev and unit fixed leg, both paid at ``payment`` (default T_i)."""
    t = state.t
    T = T_i if payment is None else float(payment)
    if not T_prev < T_i <= T:
        raise OrderError(f"YoY period needs T_prev < T_i <= payment, got {T_prev}, {T_i}, {T}")
    if t > T:
        raise OrderError(f"swaplet paid at {T} has expired at t={t}")
    h = kernel_values(params, state).hN
    annuity = float(nominal_bond(params, state, T))
    S_T, R_T, b_T = float(params.S(T)), float(params.R(T)), float(params.bR(T))
    S_i = float(params.S(T_i))
    lag = float(np.exp(_kappa_rs(params, T_i, T)))

    if t > T_i:
        ratio = state.fixing(T_i) / state.fixing(T_prev)
        return SwapletValue(ratio * annuity, annuity, 0.0)
    if t > T_prev:
        base = state.fixing(T_prev)
        floating = S_T * R_T / S_i * (1.0 - b_T + b_T * lag * state.A_R) / (h * base)
        return SwapletValue(floating, annuity, 0.0)

    S_p = float(params.S(T_prev))
    joint = float(np.exp(_kappa_rs(params, t, T_prev)))
    scale = S_T * R_T * S_p / S_i * state.A_S
    floating = scale * ((1.0 - b_T) + b_T * lag * state.A_R * joint) / h
    covariance = scale * b_T * lag * state.A_R * (joint - 1.0) / h
    return SwapletValue(floating, annuity, covariance)


def _periods(schedule: Sequence[float]) -> Tuple[Tuple[float, float], ...]:
    sched = [float(x) for x in schedule]
    if len(sched) < 2:
        raise EmptySchedule("a YoY schedule needs at least two dates")
    if any(b <= a for a, b in zip(sched, sched[1:])):
        raise OrderError(f"schedule must be strictly increasing, got {sched}")
    return tuple(zip(sched, sched[1:]))


def yoy_fair_rate(
    params: RpksParams, state: MarketState, schedule: Sequence[float], payment_lag: float = 0.0
) -> float:
    floating = 0.0
    annuity = 0.0
    for a, b in _periods(schedule):
        let = yoy_swaplet_price(params, state, a, b, b + payment_lag)
        floating += let.floating
        annuity += let.annuity
    return floating / annuity - 1.0


def yoy_fair_rate_independent(nominal: Any, il: Any, schedule: Sequence[float]) -> float:
    """YoY rate implied by the curves alone (zero covariance)."""
    floating = 0.0
    annuity = 0.0
    for a, b in _periods(schedule):
        floating += float(nominal(a)) / float(il(a)) * float(il(b))
        annuity += float(nominal(b))
    return floating / annuity - 1.0


def yoy_convexity(params: RpksParams, schedule: Sequence[float]) -> float:
    state = MarketState()
    model = yoy_fair_rate(params, state, schedule)
    independent = yoy_fair_rate_independent(
        lambda T: nominal_bond(params, state, T), lambda T: inflation_linked_bond(params, state, T), schedule
    )
    return model - independent


# ---------- fitting the curves ----------
def fit_R(il_curve: InflationForwardCurve | DiscountCurve) -> DiscountCurve:
    if isinstance(il_curve, InflationForwardCurve):
        curve = il_curve.to_discount_curve()
    else:
        curve = il_curve
    if np.any(np.asarray(curve.values) <= 0.0):
        raise NonPositiveCurve("inflation-linked curve must be strictly positive")
    return curve


def fit_S(params: RpksParams, nominal: DiscountCurve) -> DiscountCurve:
    """Sample S(t) = P^N_0t / (R(t) (1 + b^R(t) Cov[A^R_t, A^S_t])) on the nominal pillars."""
    if np.any(np.asarray(nominal.values) <= 0.0):
        raise NonPositiveCurve("nominal curve must be strictly positive")
    pillars = np.asarray(nominal.pillars)
    values = np.atleast_1d(replace(params, nominal=nominal, S_curve=None).S(pillars))
    return DiscountCurve(tuple(pillars), tuple(values), "S")


def build_params(
    spec: AdditiveSpec,
    nominal: DiscountCurve,
    il: InflationForwardCurve | DiscountCurve,
    b_r: KnotCurve | None = None,
    libor: DiscountCurve | None = None,
    b_l: StepCurve | None = None,
    b_l_anchored: bool = True,
) -> RpksParams:
    return RpksParams(
        spec=spec,
        R=fit_R(il),
        nominal=nominal,
        b_r=b_r if b_r is not None else KnotCurve.constant(1.0, B_R_KNOTS, "b_r"),
        libor=libor,
        b_l=b_l if b_l is not None else StepCurve.zero(B_L_KNOTS),
        b_l_anchored=b_l_anchored,
    )


# ---------- JSON ----------
def _curve_doc(curve: DiscountCurve) -> Dict[str, Any]:
    return {"maturity_years": list(curve.pillars), "value": list(curve.values)}


def params_to_dict(params: RpksParams) -> Dict[str, Any]:
    doc: Dict[str, Any] = {
        "spec": spec_to_dict(params.spec),
        "R": _curve_doc(params.R),
        "nominal": _curve_doc(params.nominal),
        "b_r": {"knots": list(params.b_r.knots), "values": list(params.b_r.values)},
        "b_l": {"knots": list(params.b_l.knots), "values": list(params.b_l.values), "anchored": params.b_l_anchored},
    }
    if params.S_curve is not None:
        doc["S"] = _curve_doc(params.S_curve)
    if params.libor is not None:
        doc["libor"] = _curve_doc(params.libor)
    return doc


def params_from_dict(doc: Dict[str, Any]) -> RpksParams:
    validate_document(doc, PARAMS_SCHEMA, "model parameters")

    def curve(block: Dict[str, Any], name: str) -> DiscountCurve:
        return DiscountCurve(tuple(block["maturity_years"]), tuple(block["value"]), name)

    b_l = doc.get("b_l")
    return RpksParams(
        spec=spec_from_dict(doc["spec"]),
        R=curve(doc["R"], "R"),
        nominal=curve(doc["nominal"], "nominal"),
        b_r=KnotCurve(tuple(doc["b_r"]["knots"]), tuple(doc["b_r"]["values"]), "b_r"),
        S_curve=curve(doc["S"], "S") if "S" in doc else None,
        libor=curve(doc["libor"], "libor") if "libor" in doc else None,
        b_l=StepCurve(tuple(b_l["knots"]), tuple(b_l["values"])) if b_l else StepCurve.zero(B_L_KNOTS),
        b_l_anchored=bool(b_l.get("anchored", True)) if b_l else True,
    )
