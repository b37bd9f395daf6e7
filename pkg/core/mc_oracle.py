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

# core/mc_oracle.py
"""
Monte Carlo oracle for the analytic pricers.

Paths of the driver X are built from independent increments on a date
grid: normal increments for the Gaussian driver, an inverse-Gaussian
subordinator followed by a conditional normal for NIG, plus the
martingalizing drift. Every batch draws from its own Philox stream keyed
by (seed, batch index), so a run is fixed by the seed and the batch size.
Prices are E_t[h^N_T payoff] / h^N_t from a valuation state (t = 0 and
unit factor levels unless one is given); CPI dates before t read the
state's fixings.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from tqdm import tqdm

from . import settings
from .additive_process import AdditiveSpec, forward_laplace
from .errors import InvariantViolation, MissingFixing, SeedMissing, UnsupportedTrade
from .inflation_pricers import CAPLET, FLOOR, LpiSpec, YoYOptionSpec, ZcOptionSpec
from .nominal_pricers import SINGLE, SwapSpec, SwaptionSpec, libor_numerator
from .rpks import MarketState, RpksParams, kernel_values
from .trades import (
    InflationBond,
    LpiSwap,
    NominalBond,
    Swap,
    Trade,
    YoYCapFloor,
    YoYSwap,
    ZcSwap,
)

logger = logging.getLogger(__name__)

DATE_TOL = 1e-9


# ---------- plan and paths ----------
@dataclass(frozen=True)
class SimPlan:
    grid: Tuple[float, ...]
    paths: int = settings.MC_PATHS
    seed: Optional[int] = settings.SEED
    antithetic: bool = True
    batch: int = settings.MC_BATCH
    reproducible: bool = True

    def __post_init__(self) -> None:
        grid = tuple(float(t) for t in self.grid)
        if not grid or any(t < 0.0 for t in grid):
            raise InvariantViolation("simulation grid must be a non-empty set of non-negative dates")
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise InvariantViolation("simulation grid must be strictly increasing")
        if self.paths < 2 or self.batch < 2:
            raise InvariantViolation("a simulation needs at least two paths per batch")
        object.__setattr__(self, "grid", grid)

    @classmethod
    def for_dates(cls, dates: Iterable[float], start: float = 0.0, **kwargs: Any) -> "SimPlan":
        grid = sorted({round(float(d), 12) for d in dates if d > start + DATE_TOL})
        return cls(tuple(grid), **kwargs)

    def covers(self, dates: Iterable[float], start: float = 0.0) -> bool:
        """Dates before ``start`` are fixings and need no grid point."""
        grid = np.asarray((start,) + self.grid)
        return all(d < start - DATE_TOL or np.min(np.abs(grid - d)) <= DATE_TOL for d in dates)

    def generator(self, stream: int) -> np.random.Generator:
        if self.seed is None and self.reproducible:
            raise SeedMissing("a reproducible simulation needs a seed")
        seq = np.random.SeedSequence(self.seed, spawn_key=(stream,))
        return np.random.Generator(np.random.Philox(seq))

    def batch_sizes(self) -> List[int]:
        full, rest = divmod(self.paths, self.batch)
        sizes = [self.batch] * full + ([rest] if rest else [])
        if self.antithetic:
            sizes = [n + (n % 2) for n in sizes]
        return sizes


@dataclass(frozen=True)
class PathTableau:
    """Driver values X_t, shape (paths, dates, 3), with dates[0] the start of the simulation."""

    dates: np.ndarray
    x: np.ndarray

    def index(self, date: float) -> int:
        i = int(np.argmin(np.abs(self.dates - date)))
        if abs(self.dates[i] - date) > DATE_TOL:
            raise InvariantViolation(f"date {date} is not on the simulation grid")
        return i

    def at(self, date: float) -> np.ndarray:
        return self.x[:, self.index(date), :]


def _inverse_gaussian(rng: np.random.Generator, clock: np.ndarray, nu: float, size: int) -> np.ndarray:
    """Subordinator increments G with E[G] = d tau and shape (nu d tau)^2."""
    out = np.zeros((size, clock.size))
    for j, d in enumerate(clock):
        if d > 0.0:
            out[:, j] = rng.wald(d, nu * nu * d * d, size)
    return out


def simulate_increments(
    spec: AdditiveSpec,
    plan: SimPlan,
    stream: int = 0,
    paths: Optional[int] = None,
    drift_fault: float = 0.0,
    start: float = 0.0,
    x0: Optional[np.ndarray] = None,
) -> PathTableau:
    """
    One batch of driver paths from X_start = ``x0`` (zero by default);
    ``drift_fault`` adds a per-year drift error to the S-coordinate.
    """
    dates = np.concatenate([[float(start)], [t for t in plan.grid if t > start + DATE_TOL]])
    n = paths or min(plan.batch, plan.paths)
    if plan.antithetic and n % 2:
        n += 1
    rng = plan.generator(stream)
    half = n // 2 if plan.antithetic else n
    tau_s, tau_r = spec.clocks(dates)
    clocks = (np.diff(np.asarray(tau_s, dtype=float)), np.diff(np.asarray(tau_r, dtype=float)))
    m = dates.size - 1

    z = rng.standard_normal((half, m, 2))
    if plan.antithetic:
        z = np.concatenate([z, -z])
    noise = np.zeros((n, m, 3))
    if spec.is_gaussian:
        for c in (0, 1):
            noise[..., c] = z[..., c] * np.sqrt(clocks[c])
    else:
        for c, p in enumerate((spec.nig_s, spec.nig_r)):
            g = _inverse_gaussian(rng, clocks[c], p.nu, half)
            if plan.antithetic:
                g = np.concatenate([g, g])
            noise[..., c] = p.theta * g + p.sigma * np.sqrt(g) * z[..., c]

    increments = noise + np.diff(spec.drift(dates), axis=0)
    if drift_fault:
        increments[..., 0] += drift_fault * np.diff(dates)
    x = np.concatenate([np.zeros((n, 1, 3)), np.cumsum(increments, axis=1)], axis=1)
    if x0 is not None:
        x = x + np.asarray(x0, dtype=float)
    return PathTableau(dates, x)


# ---------- running moments ----------
@dataclass
class _Moments:
    """Chan's pairwise update of count, mean and sum of squared deviations."""

    n: int = 0
    mean: Any = 0.0
    m2: Any = 0.0

    def add(self, samples: np.ndarray) -> None:
        nb = samples.shape[0]
        mb = samples.mean(axis=0)
        m2b = np.sum((samples - mb) ** 2, axis=0)
        total = self.n + nb
        delta = mb - self.mean
        self.mean = self.mean + delta * nb / total
        self.m2 = self.m2 + m2b + delta * delta * self.n * nb / total
        self.n = total

    @property
    def se(self) -> Any:
        return np.sqrt(self.m2 / (self.n - 1) / self.n)


def _pair_average(samples: np.ndarray, antithetic: bool) -> np.ndarray:
    if not antithetic:
        return samples
    half = samples.shape[0] // 2
    return 0.5 * (samples[:half] + samples[half:])


# ---------- kernel along paths ----------
class _PathModel:
    """Factor levels, kernel, CPI and bond prices evaluated on every path."""

    def __init__(self, params: RpksParams, tab: PathTableau, state: Optional[MarketState] = None):
        self.params = params
        self.tab = tab
        self.state = state or MarketState()
        self.start = float(tab.dates[0])
        self.W = params.weights.matrix()
        w = params.weights
        self.joint = w.w_R + w.w_S

    def levels(self, t: float) -> np.ndarray:
        return np.exp(self.tab.at(t) @ self.W.T)

    def hN(self, t: float) -> np.ndarray:
        p = self.params
        A = self.levels(t)
        hR = float(p.R(t)) * (1.0 + float(p.bR(t)) * (A[:, 1] - 1.0))
        return float(p.S(t)) * A[:, 0] * hR

    def cpi(self, t: float) -> np.ndarray:
        if t <= self.start + DATE_TOL:
            try:
                return np.full(self.tab.x.shape[0], self.state.fixing(t))
            except MissingFixing:
                if abs(t - self.start) > DATE_TOL:
                    raise
        return 1.0 / (float(self.params.S(t)) * self.levels(t)[:, 0])

    def bond(self, t: float, T: float) -> np.ndarray:
        """P^N(t, T) on every path."""
        if T - t <= DATE_TOL:
            return np.ones(self.tab.x.shape[0])
        p = self.params
        A = self.levels(t)
        R_T, S_T, b_T = float(p.R(T)), float(p.S(T)), float(p.bR(T))
        lag = float(np.exp(forward_laplace(p.spec, t, T, self.joint)))
        num = S_T * R_T * A[:, 0] * ((1.0 - b_T) + b_T * A[:, 1] * lag)
        return num / self.hN(t)

    def libor(self, t: float, T_prev: float, T_i: float) -> np.ndarray:
        L0, b = libor_numerator(self.params, T_prev, T_i)
        return (L0 + b * (self.levels(t)[:, 2] - 1.0)) / self.hN(t)


# ---------- payoffs ----------
def instrument_dates(inst: Any) -> List[float]:
    if isinstance(inst, Trade):
        return instrument_dates(inst.instrument)
    if isinstance(inst, (NominalBond, InflationBond, ZcSwap)):
        return [inst.T]
    if isinstance(inst, (YoYSwap, YoYCapFloor)):
        return list(inst.schedule) + [b + inst.payment_lag for b in inst.schedule[1:]]
    if isinstance(inst, YoYOptionSpec):
        return [inst.T_prev, inst.T_i, inst.T]
    if isinstance(inst, ZcOptionSpec):
        return [inst.T_0, inst.T_i, inst.T]
    if isinstance(inst, LpiSpec):
        return list(inst.schedule) + [inst.T]
    if isinstance(inst, LpiSwap):
        return instrument_dates(inst.lpi)
    if isinstance(inst, Swap):
        return list(inst.swap.schedule[:-1])
    if isinstance(inst, SwaptionSpec):
        return [inst.expiry]
    raise UnsupportedTrade(f"no Monte Carlo payoff for {type(inst).__name__}")


def _ratio_payoff(model: _PathModel, base: float, fix: float, pay: float, K: float, call: bool) -> np.ndarray:
    ratio = model.cpi(fix) / model.cpi(base)
    payoff = np.maximum(ratio - K, 0.0) if call else np.maximum(K - ratio, 0.0)
    return model.hN(pay) * payoff


def _lpi_payoff(model: _PathModel, lpi: LpiSpec) -> np.ndarray:
    growth = np.full(model.tab.x.shape[0], lpi.base_level)
    for a, b in zip(lpi.schedule, lpi.schedule[1:]):
        growth = growth * np.clip(model.cpi(b) / model.cpi(a), 1.0 + lpi.K_f, 1.0 + lpi.K_c)
    return model.hN(lpi.T) * growth


def _swap_value(model: _PathModel, swap: SwapSpec, t: float, mode: str) -> np.ndarray:
    """Payer swap value at t (before the first fixing) on every path."""
    value = np.zeros(model.tab.x.shape[0])
    for (a, b), d in zip(zip(swap.schedule, swap.schedule[1:]), swap.accruals):
        if mode == SINGLE:
            value += model.bond(t, a) - (1.0 + d * swap.K) * model.bond(t, b)
        else:
            value += d * (model.libor(t, a, b) - swap.K * model.bond(t, b))
    return swap.notional * value


def deflated_payoff(
    params: RpksParams, inst: Any, tab: PathTableau, state: Optional[MarketState] = None
) -> np.ndarray:
    """h^N-weighted cash flows of one instrument, summed per path."""
    if isinstance(inst, Trade):
        return deflated_payoff(params, inst.instrument, tab, state)
    model = _PathModel(params, tab, state)
    if isinstance(inst, NominalBond):
        return model.hN(inst.T)
    if isinstance(inst, InflationBond):
        return model.hN(inst.T) * model.cpi(inst.T)
    if isinstance(inst, ZcSwap):
        return model.hN(inst.T) * (model.cpi(inst.T) - inst.fixed)
    if isinstance(inst, YoYSwap):
        total = 0.0
        for a, b in zip(inst.schedule, inst.schedule[1:]):
            total = total + model.hN(b + inst.payment_lag) * (model.cpi(b) / model.cpi(a) - 1.0 - inst.k)
        return total
    if isinstance(inst, YoYCapFloor):
        call = inst.side != FLOOR
        return sum(
            _ratio_payoff(model, a, b, b + inst.payment_lag, inst.K, call)
            for a, b in zip(inst.schedule, inst.schedule[1:])
        )
    if isinstance(inst, YoYOptionSpec):
        return _ratio_payoff(model, inst.T_prev, inst.T_i, inst.T, inst.K, inst.side == CAPLET)
    if isinstance(inst, ZcOptionSpec):
        return _ratio_payoff(model, inst.T_0, inst.T_i, inst.T, inst.K, inst.side != FLOOR)
    if isinstance(inst, LpiSpec):
        return _lpi_payoff(model, inst)
    if isinstance(inst, LpiSwap):
        return _lpi_payoff(model, inst.lpi) - inst.K * model.hN(inst.lpi.T)
    if isinstance(inst, Swap):
        total = 0.0
        for a, b in zip(inst.swap.schedule, inst.swap.schedule[1:]):
            period = SwapSpec((a, b), inst.swap.K, inst.swap.notional)
            total = total + model.hN(a) * _swap_value(model, period, a, inst.mode)
        return total
    if isinstance(inst, SwaptionSpec):
        T_k = inst.expiry
        return model.hN(T_k) * np.maximum(_swap_value(model, inst.swap, T_k, inst.mode), 0.0)
    raise UnsupportedTrade(f"no Monte Carlo payoff for {type(inst).__name__}")


# ---------- pricing ----------
@dataclass(frozen=True)
class McEstimate:
    price: float
    se: float
    paths: int

    def z_score(self, reference: float) -> float:
        if self.se == 0.0:
            return 0.0 if abs(self.price - reference) <= 1e-12 else math.inf
        return (self.price - reference) / self.se


def mc_price(
    params: RpksParams,
    trade: Any,
    plan: SimPlan | None = None,
    drift_fault: float = 0.0,
    progress: bool = False,
    state: Optional[MarketState] = None,
) -> McEstimate:
    state = state or MarketState()
    start = state.t
    dates = instrument_dates(trade)
    plan = plan or SimPlan.for_dates(dates, start)
    if not plan.covers(dates, start):
        raise InvariantViolation(f"simulation grid misses some of the trade dates {sorted(set(dates))}")
    levels = (state.A_S, state.A_R, state.A_L)
    x0 = None if levels == (1.0, 1.0, 1.0) else state.driver(params.weights)
    h0 = kernel_values(params, state).hN
    stats = _Moments()
    for stream, n in enumerate(tqdm(plan.batch_sizes(), desc="mc", disable=not progress)):
        tab = simulate_increments(params.spec, plan, stream, n, drift_fault, start, x0)
        stats.add(_pair_average(deflated_payoff(params, trade, tab, state), plan.antithetic))
    return McEstimate(float(stats.mean) / h0, float(stats.se) / h0, sum(plan.batch_sizes()))


def mc_report(
    params: RpksParams,
    trades: Sequence[Trade],
    analytic: Sequence[float],
    paths: int = settings.MC_PATHS,
    seed: Optional[int] = settings.SEED,
) -> pd.DataFrame:
    """trade_id, analytic price, MC price, SE and z-score for each trade."""
    rows = []
    for trade, price in zip(trades, analytic):
        plan = SimPlan.for_dates(instrument_dates(trade), paths=paths, seed=seed)
        est = mc_price(params, trade, plan)
        rows.append({"trade_id": trade.trade_id, "analytic": price, "mc_price": est.price, "se": est.se,
                     "z": est.z_score(price)})
        logger.info("MC check %s: analytic %.8g, MC %.8g +- %.2g", trade.trade_id, price, est.price, est.se)
    return pd.DataFrame(rows, columns=["trade_id", "analytic", "mc_price", "se", "z"])


# ---------- martingale suite ----------
@dataclass
class MartingaleReport:
    rows: List[Dict[str, Any]] = field(default_factory=list)
    z_max: float = 3.0

    @property
    def worst_z(self) -> float:
        return max((abs(r["z"]) for r in self.rows), default=0.0)

    @property
    def passed(self) -> bool:
        return self.worst_z < self.z_max

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.rows, columns=["factor", "t", "mean", "se", "z"])


FACTORS = ("A_S", "A_R", "A_L")


def martingale_suite(
    spec: AdditiveSpec,
    grid: Sequence[float] = tuple(float(t) for t in range(1, 31)),
    plan: SimPlan | None = None,
    drift_fault: float = 0.0,
    z_max: float = 3.0,
    progress: bool = False,
) -> MartingaleReport:
    """E[A^i_t] = 1 for every factor and grid date, as z-scores of the sample means."""
    plan = plan or SimPlan(tuple(grid))
    if not plan.covers(grid):
        raise InvariantViolation("martingale grid must lie on the simulation grid")
    W = spec.weights.matrix()
    stats = _Moments()
    for stream, n in enumerate(tqdm(plan.batch_sizes(), desc="martingale", disable=not progress)):
        tab = simulate_increments(spec, plan, stream, n, drift_fault)
        idx = [tab.index(t) for t in grid]
        levels = np.exp(tab.x[:, idx, :] @ W.T)
        stats.add(_pair_average(levels, plan.antithetic))
    report = MartingaleReport(z_max=z_max)
    mean = np.asarray(stats.mean)
    se = np.asarray(stats.se)
    for j, t in enumerate(grid):
        for i, name in enumerate(FACTORS):
            m, s = float(mean[j, i]), float(se[j, i])
            z = McEstimate(m, s, stats.n).z_score(1.0)
            report.rows.append({"factor": name, "t": float(t), "mean": m, "se": s, "z": z})
    logger.info("martingale suite: worst |z| = %.3f over %d checks", report.worst_z, len(report.rows))
    return report
