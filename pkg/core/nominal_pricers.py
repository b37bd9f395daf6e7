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

# core/nominal_pricers.py
"""
Nominal swaps, multi-curve forward LIBOR and swaptions.

Single curve: h_Tk V_Tk = A^S_Tk (c0 + c1 A^R_Tk), priced in closed form or
with one Fourier integral.

Multi curve: h_Tk V_Tk = H(X_Tk), a constant plus three exponentials of the
driver. E[H^+] is integrated over the two random coordinates: the outer
(R) coordinate on nodes, the inner (S) coordinate exactly between the sign
changes of H.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import brentq
from scipy.stats import norm

from .additive_process import AdditiveSpec, LinearFunctional, forward_laplace, functional_mgf
from .errors import (
    DampingInfeasible,
    InvariantViolation,
    MissingLiborCurve,
    OrderError,
    QuadratureNoConvergence,
)
from .fourier import QuadDiagnostics, QuadratureConfig, digital_2d_kernel, price_call_kernel, price_put_kernel
from .market_data import LIBOR_ACCRUAL, SWAPTION_TENOR, forward_rate
from .rpks import FIXING_TOL, MarketState, RpksParams, kernel_values, nominal_bond

logger = logging.getLogger(__name__)

SINGLE = "single"
MULTI = "multi"


# ---------- trade types ----------
@dataclass(frozen=True)
class SwapSpec:
    """Payer swap: receive LIBOR, pay K, both at each T_i."""

    schedule: Tuple[float, ...]
    K: float
    notional: float = 1.0

    def __post_init__(self) -> None:
        sched = tuple(float(x) for x in self.schedule)
        if len(sched) < 2:
            raise InvariantViolation("a swap needs at least one accrual period")
        if any(b <= a for a, b in zip(sched, sched[1:])):
            raise OrderError(f"swap schedule must be strictly increasing, got {sched}")
        object.__setattr__(self, "schedule", sched)

    @property
    def accruals(self) -> np.ndarray:
        return np.diff(self.schedule)

    @property
    def start(self) -> float:
        return self.schedule[0]

    @property
    def end(self) -> float:
        return self.schedule[-1]

    @classmethod
    def regular(cls, start: float, tenor: float, K: float, accrual: float = LIBOR_ACCRUAL) -> "SwapSpec":
        n = int(round(tenor / accrual))
        return cls(tuple(start + accrual * np.arange(n + 1)), K)


@dataclass(frozen=True)
class SwaptionSpec:
    swap: SwapSpec
    mode: str = MULTI

    def __post_init__(self) -> None:
        if self.mode not in (SINGLE, MULTI):
            raise InvariantViolation(f"swaption mode must be single or multi, got {self.mode!r}")

    @property
    def expiry(self) -> float:
        return self.swap.start


@dataclass(frozen=True)
class Quad2dConfig:
    hermite_nodes: int = 64
    outer_panels: int = 8
    outer_nodes: int = 32
    root_grid: int = 2001
    gaussian_width: float = 12.0
    tail_log: float = 23.0
    cos_terms: int = 256
    max_cos_terms: int = 2**15
    cos_tol: float = 1e-13


# ---------- swaps ----------
def _check_forward_start(state: MarketState, swap: SwapSpec) -> None:
    if state.t > swap.start + FIXING_TOL:
        raise OrderError(f"swap starting at {swap.start} has already fixed at t={state.t}")


def swap_price_single(params: RpksParams, state: MarketState, swap: SwapSpec) -> float:
    _check_forward_start(state, swap)
    P = np.atleast_1d(nominal_bond(params, state, np.asarray(swap.schedule)))
    value = np.sum(P[:-1] - (1.0 + swap.accruals * swap.K) * P[1:])
    return float(swap.notional * value)


def par_rate_single(params: RpksParams, state: MarketState, schedule: Sequence[float]) -> float:
    P = np.atleast_1d(nominal_bond(params, state, np.asarray(schedule, dtype=float)))
    return float((P[0] - P[-1]) / np.sum(np.diff(schedule) * P[1:]))


def libor_numerator(params: RpksParams, T_prev: float, T_i: float) -> Tuple[float, float]:
    """(L(0, T_prev, T_i), b^L(T_prev, T_i)) of the rational multi-curve forward."""
    if params.libor is None:
        raise MissingLiborCurve("multi-curve pricing needs a LIBOR projection curve")
    F = float(forward_rate(params.libor, T_prev, T_i))
    L0 = float(params.nominal(T_i)) * F
    b = float(params.b_l(T_prev))
    if params.b_l_anchored:
        b += float(params.nominal(T_prev)) * F
    return L0, b


def forward_libor(params: RpksParams, state: MarketState, T_prev: float, T_i: float) -> float:
    """[L(0, T_prev, T_i) + b^L (A^L_t - 1)] / h^N_t."""
    L0, b = libor_numerator(params, T_prev, T_i)
    return (L0 + b * (state.A_L - 1.0)) / kernel_values(params, state).hN


def swap_price_multi(params: RpksParams, state: MarketState, swap: SwapSpec) -> float:
    _check_forward_start(state, swap)
    value = 0.0
    for (a, b), d in zip(zip(swap.schedule, swap.schedule[1:]), swap.accruals):
        value += d * (forward_libor(params, state, a, b) - swap.K * float(nominal_bond(params, state, b)))
    return float(swap.notional * value)


def par_rate_multi(params: RpksParams, state: MarketState, schedule: Sequence[float]) -> float:
    sched = [float(x) for x in schedule]
    floating = 0.0
    annuity = 0.0
    for a, b in zip(sched, sched[1:]):
        floating += (b - a) * forward_libor(params, state, a, b)
        annuity += (b - a) * float(nominal_bond(params, state, b))
    return floating / annuity


def swap_annuity(params: RpksParams, state: MarketState, schedule: Sequence[float]) -> float:
    sched = np.asarray(schedule, dtype=float)
    return float(np.sum(np.diff(sched) * np.atleast_1d(nominal_bond(params, state, sched[1:]))))


# ---------- single-curve swaption ----------
def single_curve_coefficients(params: RpksParams, swap: SwapSpec) -> Tuple[float, float]:
    w = params.weights
    T_k = swap.start

    def weights_at(T: float) -> Tuple[float, float]:
        R, S, b = float(params.R(T)), float(params.S(T)), float(params.bR(T))
        lag = float(np.exp(forward_laplace(params.spec, T_k, T, w.w_R + w.w_S)))
        return R * (1.0 - b) * S, R * b * S * lag

    c0 = c1 = 0.0
    for (a, b), d in zip(zip(swap.schedule, swap.schedule[1:]), swap.accruals):
        p0, p1 = weights_at(a)
        q0, q1 = weights_at(b)
        c0 += p0 - (1.0 + d * swap.K) * q0
        c1 += p1 - (1.0 + d * swap.K) * q1
    return c0, c1


def swaption_single(
    params: RpksParams,
    state: MarketState,
    swaption: SwaptionSpec,
    quad: QuadratureConfig | None = None,
    report: Optional[List[QuadDiagnostics]] = None,
) -> float:
    t, T_k = state.t, swaption.expiry
    if t > T_k + FIXING_TOL:
        raise OrderError(f"swaption expired at {T_k}, valuation time {t}")
    h = kernel_values(params, state).hN
    c0, c1 = single_curve_coefficients(params, swaption.swap)
    notional = swaption.swap.notional
    w = params.weights
    if c0 >= 0.0 and c1 >= 0.0:
        joint = float(np.exp(forward_laplace(params.spec, t, T_k, w.w_S + w.w_R)))
        return notional * state.A_S * (c0 + state.A_R * c1 * joint) / h
    if c0 <= 0.0 and c1 <= 0.0:
        return 0.0
    if T_k - t <= FIXING_TOL:
        return notional * state.A_S * max(c0 + c1 * state.A_R, 0.0) / h

    x_t = state.driver(w)
    funcs = [LinearFunctional.at(T_k, w.w_R), LinearFunctional.at(T_k, w.w_S)]

    def q(z1, z2):
        return functional_mgf(params.spec, t, x_t, funcs, [z1, z2])

    alpha = abs(c1 / c0)
    if c0 > 0.0:
        value = c0 * price_put_kernel(q, alpha, quad=quad, report=report)
    else:
        value = -c0 * price_call_kernel(q, alpha, quad=quad, report=report)
    return notional * value / h


# ---------- multi-curve swaption ----------
@dataclass(frozen=True)
class ExponentialSum:
    """H(x) = const + sum_j c_j exp<v_j, x>."""

    const: float
    terms: Tuple[Tuple[float, Tuple[float, float, float]], ...] = field(default_factory=tuple)

    def __call__(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        out = np.full(x.shape[:-1], self.const)
        for c, v in self.terms:
            out = out + c * np.exp(x @ np.asarray(v))
        return out


def multi_curve_payoff(params: RpksParams, swap: SwapSpec) -> ExponentialSum:
    """H with h_Tk V_Tk = H(X_Tk): coefficients c0, c_L, c_S, c_SR."""
    w = params.weights
    T_k = swap.start
    c0 = c_L = c_S = c_SR = 0.0
    for (a, b), d in zip(zip(swap.schedule, swap.schedule[1:]), swap.accruals):
        L0, bL = libor_numerator(params, a, b)
        R, S, bR = float(params.R(b)), float(params.S(b)), float(params.bR(b))
        lag = float(np.exp(forward_laplace(params.spec, T_k, b, w.w_R + w.w_S)))
        c0 += d * (L0 - bL)
        c_L += d * bL
        c_S -= d * swap.K * R * S * (1.0 - bR)
        c_SR -= d * swap.K * R * bR * S * lag
    n = swap.notional
    terms = (
        (n * c_L, tuple(w.w_L)),
        (n * c_S, tuple(w.w_S)),
        (n * c_SR, tuple(w.w_R + w.w_S)),
    )
    return ExponentialSum(n * c0, terms)


class _GaussianMarginal:
    def __init__(self, clock: float) -> None:
        self.var = clock
        self.sd = float(np.sqrt(clock))

    def range(self, betas: Sequence[float], cfg: Quad2dConfig) -> Tuple[float, float]:
        shifts = [b * self.var for b in betas]
        return min(shifts) - cfg.gaussian_width * self.sd, max(shifts) + cfg.gaussian_width * self.sd

    def mass(self, beta: float, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
        """E[e^{beta Z} 1{lo < Z < hi}] for Z ~ N(0, var)."""
        shift = beta * self.var
        scale = np.exp(0.5 * beta * beta * self.var)
        return scale * (norm.cdf((hi - shift) / self.sd) - norm.cdf((lo - shift) / self.sd))


class _CosMarginal:
    """Cosine expansions of e^{beta z} f(z) for a Lévy marginal with exponent clock * base(z)."""

    def __init__(self, spec: AdditiveSpec, coord: int, clock: float, cfg: Quad2dConfig) -> None:
        self.spec = spec
        self.coord = coord
        self.clock = clock
        self.cfg = cfg
        p = spec.nig_s if coord == 0 else spec.nig_r
        root = np.sqrt(p.theta**2 + p.sigma**2 * p.nu**2)
        self.upper = (-p.theta + root) / p.sigma**2
        self.lower = (-p.theta - root) / p.sigma**2
        self._cache: dict = {}

    def _log_mgf(self, z):
        return self.clock * np.asarray(self.spec.base_exponent(self.coord, z))

    def _expansion(self, beta: float):
        if beta in self._cache:
            return self._cache[beta]
        if not self.lower < beta < self.upper:
            raise DampingInfeasible(f"tilt {beta} outside the moment domain ({self.lower:.4g}, {self.upper:.4g})")
        h = 1e-4 * max(1.0, abs(beta))
        h = min(h, 0.5 * (self.upper - beta), 0.5 * (beta - self.lower))
        k = [float(np.real(self._log_mgf(beta + s * h))) for s in (-1.0, 0.0, 1.0)]
        mean = (k[2] - k[0]) / (2.0 * h)
        sd = float(np.sqrt(max((k[2] - 2.0 * k[1] + k[0]) / (h * h), 1e-300)))
        cfg = self.cfg
        lo = mean - max(10.0 * sd, cfg.tail_log / (beta - self.lower))
        hi = mean + max(10.0 * sd, cfg.tail_log / (self.upper - beta))
        L = hi - lo
        n = cfg.cos_terms
        while True:
            u = np.arange(n) * np.pi / L
            m = np.exp(self._log_mgf(beta + 1j * u) - k[1])
            if abs(m[-1]) < cfg.cos_tol or n >= cfg.max_cos_terms:
                break
            n *= 2
        if abs(m[-1]) >= cfg.cos_tol:
            raise QuadratureNoConvergence(f"cosine expansion did not settle with {n} terms (tilt {beta})")
        coef = (2.0 / L) * np.real(m * np.exp(-1j * u * lo)) * np.exp(k[1])
        coef[0] *= 0.5
        self._cache[beta] = (lo, hi, u, coef)
        return self._cache[beta]

    def range(self, betas: Sequence[float], cfg: Quad2dConfig) -> Tuple[float, float]:
        bounds = [self._expansion(b)[:2] for b in betas]
        return min(b[0] for b in bounds), max(b[1] for b in bounds)

    def mass(self, beta: float, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
        a, b, u, coef = self._expansion(beta)
        lo = np.clip(lo, a, b)
        hi = np.clip(hi, a, b)
        # integral of cos(u (x - a)) over [lo, hi]
        with np.errstate(divide="ignore", invalid="ignore"):
            upper = np.sin(np.multiply.outer(hi - a, u)) / u
            lower = np.sin(np.multiply.outer(lo - a, u)) / u
        span = upper - lower
        span[..., 0] = hi - lo
        return span @ coef

    def density(self, x: np.ndarray) -> np.ndarray:
        a, _, u, coef = self._expansion(0.0)
        return np.maximum(np.cos(np.multiply.outer(x - a, u)) @ coef, 0.0)


def _marginal(spec: AdditiveSpec, coord: int, clock: float, cfg: Quad2dConfig):
    if spec.is_gaussian:
        return _GaussianMarginal(clock)
    return _CosMarginal(spec, coord, clock, cfg)


def _outer_nodes(marginal, cfg: Quad2dConfig) -> Tuple[np.ndarray, np.ndarray]:
    if isinstance(marginal, _GaussianMarginal):
        x, w = np.polynomial.hermite_e.hermegauss(cfg.hermite_nodes)
        return marginal.sd * x, w / np.sqrt(2.0 * np.pi)
    lo, hi = marginal.range([0.0], cfg)
    gx, gw = np.polynomial.legendre.leggauss(cfg.outer_nodes)
    edges = np.linspace(lo, hi, cfg.outer_panels + 1)
    nodes = np.concatenate([0.5 * (b - a) * gx + 0.5 * (a + b) for a, b in zip(edges, edges[1:])])
    weights = np.concatenate([0.5 * (b - a) * gw for a, b in zip(edges, edges[1:])])
    return nodes, weights * marginal.density(nodes)


def _positive_intervals(f: Callable[[np.ndarray], np.ndarray], lo: float, hi: float, n: int) -> List[Tuple[float, float]]:
    grid = np.linspace(lo, hi, n)
    vals = f(grid)
    positive = vals > 0.0
    edges = [-np.inf]
    for i in np.nonzero(positive[1:] != positive[:-1])[0]:
        edges.append(brentq(lambda x: float(f(np.array([x]))[0]), grid[i], grid[i + 1], xtol=1e-14))
    edges.append(np.inf)
    starts_positive = bool(positive[0])
    return [(a, b) for j, (a, b) in enumerate(zip(edges, edges[1:])) if (j % 2 == 0) == starts_positive]


def positive_part_expectation(
    params: RpksParams,
    state: MarketState,
    T: float,
    payoff: ExponentialSum,
    cfg: Quad2dConfig | None = None,
) -> float:
    """E_t[H(X_T)^+] for an exponential sum H."""
    cfg = cfg or Quad2dConfig()
    spec = params.spec
    t = state.t
    if T < t:
        raise OrderError(f"expiry {T} precedes valuation time {t}")
    mean = state.driver(spec.weights) + spec.drift(T) - spec.drift(t)
    tau_t, _ = spec.clocks(t)
    tau_T, _ = spec.clocks(T)
    clock0, clock1 = float(tau_T - tau_t), T - t
    if clock0 <= 0.0 and clock1 <= 0.0:
        return float(max(payoff(mean), 0.0))

    coefs = np.array([c for c, _ in payoff.terms])
    vecs = np.array([v for _, v in payoff.terms])
    gammas = vecs @ mean
    betas = vecs[:, 0]
    etas = vecs[:, 1]

    inner = _marginal(spec, 0, clock0, cfg)
    if clock1 > 0.0:
        z1, w1 = _outer_nodes(_marginal(spec, 1, clock1, cfg), cfg)
    else:
        z1, w1 = np.zeros(1), np.ones(1)
    tilts = [0.0] + [float(b) for b, c in zip(betas, coefs) if c != 0.0]
    lo, hi = inner.range(tilts, cfg)

    total = 0.0
    for node, weight in zip(z1, w1):
        if weight == 0.0:
            continue
        a = coefs * np.exp(gammas + etas * node)

        def H(z0: np.ndarray, a=a) -> np.ndarray:
            return payoff.const + np.exp(np.multiply.outer(z0, betas)) @ a

        intervals = _positive_intervals(H, lo, hi, cfg.root_grid)
        if not intervals:
            continue
        lows = np.array([i[0] for i in intervals])
        highs = np.array([i[1] for i in intervals])
        value = payoff.const * float(np.sum(inner.mass(0.0, lows, highs)))
        for aj, bj in zip(a, betas):
            if aj != 0.0:
                value += aj * float(np.sum(inner.mass(float(bj), lows, highs)))
        total += weight * value
    return float(total)


def _digital_lower_bound(
    params: RpksParams,
    state: MarketState,
    T_k: float,
    payoff: ExponentialSum,
    quad: QuadratureConfig | None,
    report: Optional[List[QuadDiagnostics]],
) -> float:
    """E[H 1_G] with G from H after freezing A^R at its conditional mean."""
    w = params.weights
    (c_L, _), (c_S, _), (c_SR, _) = payoff.terms
    c0 = payoff.const
    c_S_frozen = c_S + c_SR * state.A_R
    if not (c0 < 0.0 and c_L > 0.0 and c_S_frozen < 0.0):
        raise DampingInfeasible(
            f"exercise region is not of digital form (c0={c0:.4g}, c_L={c_L:.4g}, c_S={c_S_frozen:.4g})"
        )
    y1 = LinearFunctional.at(T_k, w.w_L, const=np.log(c_L / -c0))
    y2 = LinearFunctional.at(T_k, w.w_S, const=np.log(-c_S_frozen / -c0))
    x_t = state.driver(w)
    legs = [
        (c0, LinearFunctional()),
        (c_L, LinearFunctional.at(T_k, w.w_L)),
        (c_S, LinearFunctional.at(T_k, w.w_S)),
        (c_SR, LinearFunctional.at(T_k, w.w_R + w.w_S)),
    ]

    def leg_mgf(f: LinearFunctional):
        return lambda z1, z2: functional_mgf(params.spec, state.t, x_t, [f, y1, y2], [1.0, z1, z2])

    mgfs = [leg_mgf(f) for _, f in legs]
    return digital_2d_kernel(mgfs, [c for c, _ in legs], quad=quad, report=report)


def swaption_multi(
    params: RpksParams,
    state: MarketState,
    swaption: SwaptionSpec,
    quad2d: Quad2dConfig | None = None,
    approx: bool = False,
    quad: QuadratureConfig | None = None,
    report: Optional[List[QuadDiagnostics]] = None,
) -> float:
    """(1/h^N_t) E_t[H(X_Tk)^+]; ``approx`` returns the digital lower bound E[H 1_G]."""
    T_k = swaption.expiry
    if state.t > T_k + FIXING_TOL:
        raise OrderError(f"swaption expired at {T_k}, valuation time {state.t}")
    h = kernel_values(params, state).hN
    payoff = multi_curve_payoff(params, swaption.swap)
    if approx:
        try:
            return _digital_lower_bound(params, state, T_k, payoff, quad, report) / h
        except DampingInfeasible as exc:
            logger.warning("digital lower bound unavailable for expiry %s (%s); integrating exactly", T_k, exc)
    return positive_part_expectation(params, state, T_k, payoff, quad2d) / h


def swaption_price(
    params: RpksParams,
    state: MarketState,
    swaption: SwaptionSpec,
    quad: QuadratureConfig | None = None,
    quad2d: Quad2dConfig | None = None,
    report: Optional[List[QuadDiagnostics]] = None,
) -> float:
    if swaption.mode == SINGLE:
        return swaption_single(params, state, swaption, quad, report)
    return swaption_multi(params, state, swaption, quad2d, quad=quad, report=report)


def atm_swaption(params: RpksParams, expiry: float, tenor: float = SWAPTION_TENOR) -> Tuple[SwaptionSpec, float, float]:
    """ATM multi-curve swaption at t=0 with its forward swap rate and annuity."""
    state = MarketState()
    sched = SwapSpec.regular(expiry, tenor, 0.0).schedule
    rate = par_rate_multi(params, state, sched)
    annuity = swap_annuity(params, state, sched)
    return SwaptionSpec(SwapSpec(sched, rate), MULTI), rate, annuity
