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

# core/additive_process.py
"""
Three-dimensional additive driver X_t = (S-coordinate, R-coordinate, L-coordinate).

* S-coordinate: a unit-variance Lévy process (Wiener or NIG) run on the
  deterministic clock tau_S(t) of a piecewise-constant rate a(t).
* R-coordinate: an independent unit-variance Lévy process on calendar time.
* L-coordinate: deterministic (drift only).

Every coordinate carries a deterministic drift chosen so that the three
exponential factors A^i_t = exp<w_i, X_t> have expectation one.
Laplace exponents accept real or complex arguments of shape (..., 3).
"""

from __future__ import annotations

import functools
import json
import logging
from dataclasses import dataclass, field, replace
from functools import cached_property
from pathlib import Path
from typing import Any, Callable, Dict, Iterable, Optional, Sequence, Tuple

import numpy as np
from jsonschema import ValidationError, validate

from .errors import DomainError, InvariantViolation, NegativeTime, OrderError, ParseError
from .settings import CONFIG_DIR

logger = logging.getLogger(__name__)

GAUSSIAN = "gaussian"
NIG = "nig"
KINDS = (GAUSSIAN, NIG)

DEFAULT_TC_KNOTS = (0.0, 2.0, 5.0, 7.0, 10.0, 12.0, 15.0, 20.0, 30.0)
DEFAULT_B = 30.0
DEFAULT_A_R = 0.25
DEFAULT_A_L = 1.3

SPEC_SCHEMA = CONFIG_DIR / "additive_spec.schema.json"


def scalar_or_array(value: Any) -> Any:
    arr = np.asarray(value)
    if arr.ndim:
        return arr
    return complex(arr) if np.iscomplexobj(arr) else float(arr)


def check_time(t: Any) -> np.ndarray:
    arr = np.asarray(t, dtype=float)
    if np.any(arr < 0.0):
        raise NegativeTime(f"time must be non-negative, got {t}")
    return arr


# ---------- time change ----------
@dataclass(frozen=True)
class TimeChange:
    knots: Tuple[float, ...] = DEFAULT_TC_KNOTS
    rates: Tuple[float, ...] = (1.0,) * (len(DEFAULT_TC_KNOTS) - 1)

    def __post_init__(self) -> None:
        knots = tuple(float(k) for k in self.knots)
        rates = tuple(float(r) for r in self.rates)
        object.__setattr__(self, "knots", knots)
        object.__setattr__(self, "rates", rates)
        if len(knots) < 2 or len(rates) != len(knots) - 1:
            raise InvariantViolation(
                f"time change needs len(rates) == len(knots) - 1, got {len(knots)} knots, {len(rates)} rates"
            )
        if knots[0] != 0.0:
            raise InvariantViolation("time change knots must start at 0")
        if any(b <= a for a, b in zip(knots, knots[1:])):
            raise InvariantViolation("time change knots must be strictly increasing")
        if any(not np.isfinite(r) or r < 0.0 for r in rates):
            raise InvariantViolation("time change rates must be finite and non-negative")

    @classmethod
    def flat(cls, rate: float, knots: Sequence[float] = DEFAULT_TC_KNOTS) -> "TimeChange":
        return cls(tuple(knots), (float(rate),) * (len(knots) - 1))

    def with_rates(self, rates: Iterable[float]) -> "TimeChange":
        return replace(self, rates=tuple(rates))

    @cached_property
    def cumulative(self) -> np.ndarray:
        k = np.asarray(self.knots)
        r = np.asarray(self.rates)
        return np.concatenate([[0.0], np.cumsum(r * np.diff(k))])


def integrate_time_change(tc: TimeChange, t: Any) -> Any:
    """tau(t) = int_0^t a(s) ds; the last rate extends past the final knot."""
    arr = check_time(t)
    knots = np.asarray(tc.knots)
    rates = np.asarray(tc.rates)
    idx = np.clip(np.searchsorted(knots, arr, side="right") - 1, 0, len(rates) - 1)
    tau = tc.cumulative[idx] + rates[idx] * (arr - knots[idx])
    return scalar_or_array(tau)


# ---------- marginal laws ----------
@dataclass(frozen=True)
class NigParams:
    nu: float
    theta: float = 0.0
    sigma: Optional[float] = None

    def __post_init__(self) -> None:
        nu = float(self.nu)
        theta = float(self.theta)
        if not nu > 0.0:
            raise DomainError(f"NIG nu must be positive, got {nu}")
        sigma = self.sigma
        if sigma is None:
            s2 = 1.0 - theta * theta / (nu * nu)
            if s2 <= 0.0:
                raise DomainError(f"unit-variance NIG needs |theta| < nu, got theta={theta}, nu={nu}")
            sigma = float(np.sqrt(s2))
        if not float(sigma) > 0.0:
            raise DomainError(f"NIG sigma must be positive, got {sigma}")
        object.__setattr__(self, "nu", nu)
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "sigma", float(sigma))

    @property
    def variance(self) -> float:
        return self.sigma ** 2 + self.theta ** 2 / self.nu ** 2


def nig_laplace(nu: float, theta: float, sigma: float, z: Any) -> Any:
    """-nu * (sqrt(nu^2 - 2 z theta - z^2 sigma^2) - nu), principal branch for complex z."""
    z = np.asarray(z)
    x = np.real(z)
    radicand_real = nu * nu - 2.0 * theta * x - sigma * sigma * x * x
    if np.any(radicand_real < 0.0):
        bad = np.asarray(x)[radicand_real < 0.0] if np.ndim(x) else x
        raise DomainError(
            f"argument outside NIG moment domain (nu={nu}, theta={theta}, sigma={sigma}): Re z = {np.min(bad) if np.ndim(bad) else bad}"
        )
    radicand = nu * nu - 2.0 * theta * z - sigma * sigma * z * z
    return scalar_or_array(-nu * (np.sqrt(radicand) - nu))


def gaussian_laplace(z: Any) -> Any:
    z = np.asarray(z)
    return scalar_or_array(0.5 * z * z)


# ---------- weights ----------
@dataclass(frozen=True)
class WeightVectors:
    b: float = DEFAULT_B
    a_R: float = DEFAULT_A_R
    a_L: float = DEFAULT_A_L

    @property
    def w_S(self) -> np.ndarray:
        return np.array([1.0, 0.0, 0.0])

    @property
    def w_R(self) -> np.ndarray:
        return np.array([self.a_R * self.b, self.a_R, 0.0])

    @property
    def w_L(self) -> np.ndarray:
        return self.a_L * self.w_R + np.array([0.0, 0.0, 1.0])

    def matrix(self) -> np.ndarray:
        return np.vstack([self.w_S, self.w_R, self.w_L])


# ---------- spec ----------
@dataclass(frozen=True)
class AdditiveSpec:
    kind: str = GAUSSIAN
    time_change: TimeChange = field(default_factory=TimeChange)
    weights: WeightVectors = field(default_factory=WeightVectors)
    nig_s: Optional[NigParams] = None
    nig_r: Optional[NigParams] = None

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise DomainError(f"unknown driver kind {self.kind!r}; expected one of {KINDS}")
        if self.kind == NIG:
            if self.nig_s is None:
                raise DomainError("NIG driver needs marginal parameters for the S-coordinate")
            if self.nig_r is None:
                object.__setattr__(self, "nig_r", self.nig_s)
        # the configured factors must have finite exponential moments
        w = self.weights
        for name, vec in (("w_S", w.w_S), ("w_R", w.w_R), ("w_L", w.w_L), ("w_R+w_S", w.w_R + w.w_S)):
            try:
                self.base_exponent(0, vec[0])
                self.base_exponent(1, vec[1])
            except DomainError as exc:
                raise DomainError(f"weight vector {name}={vec.tolist()} is outside the moment domain: {exc}") from None

    @property
    def is_gaussian(self) -> bool:
        return self.kind == GAUSSIAN

    def base_exponent(self, coord: int, z: Any) -> Any:
        """Laplace exponent of the undated coordinate per unit of its own clock."""
        if self.kind == GAUSSIAN:
            return gaussian_laplace(z)
        p = self.nig_s if coord == 0 else self.nig_r
        return nig_laplace(p.nu, p.theta, p.sigma, z)

    def clocks(self, t: Any) -> Tuple[Any, Any]:
        return integrate_time_change(self.time_change, t), np.asarray(t, dtype=float)

    @cached_property
    def drift_coefficients(self) -> Tuple[np.ndarray, np.ndarray]:
        # mu(t) = tau_S(t) m_S + t m_R with <w_i, mu(t)> = -kappa0_t(w_i)
        W = self.weights.matrix()
        rhs_s = -np.array([float(self.base_exponent(0, row[0])) for row in W])
        rhs_r = -np.array([float(self.base_exponent(1, row[1])) for row in W])
        m_s = np.linalg.lstsq(W, rhs_s, rcond=None)[0]
        m_r = np.linalg.lstsq(W, rhs_r, rcond=None)[0]
        return m_s, m_r

    def drift(self, t: Any) -> np.ndarray:
        tau_s, tau_r = self.clocks(check_time(t))
        m_s, m_r = self.drift_coefficients
        return np.multiply.outer(tau_s, m_s) + np.multiply.outer(tau_r, m_r)

    def covariance(self, t: float) -> np.ndarray:
        """Sigma_t of the Gaussian driver (zero for the pure-jump NIG driver)."""
        if self.kind != GAUSSIAN:
            return np.zeros((3, 3))
        tau_s, tau_r = self.clocks(check_time(t))
        return np.diag([float(tau_s), float(tau_r), 0.0])

    def with_rates(self, rates: Iterable[float]) -> "AdditiveSpec":
        return replace(self, time_change=self.time_change.with_rates(rates))

    def with_nig(self, nu: float, theta: float) -> "AdditiveSpec":
        p = NigParams(nu, theta)
        return replace(self, kind=NIG, nig_s=p, nig_r=p)


def gaussian_spec(
    rates: Sequence[float] | float = 1e-4,
    knots: Sequence[float] = DEFAULT_TC_KNOTS,
    weights: WeightVectors | None = None,
) -> AdditiveSpec:
    if np.isscalar(rates):
        tc = TimeChange.flat(float(rates), knots)
    else:
        tc = TimeChange(tuple(knots), tuple(rates))
    return AdditiveSpec(GAUSSIAN, tc, weights or WeightVectors())


def nig_spec(
    nu: float,
    theta: float,
    rates: Sequence[float] | float = 1e-4,
    knots: Sequence[float] = DEFAULT_TC_KNOTS,
    weights: WeightVectors | None = None,
    nu_r: float | None = None,
    theta_r: float | None = None,
) -> AdditiveSpec:
    base = gaussian_spec(rates, knots, weights)
    p_s = NigParams(nu, theta)
    p_r = NigParams(nu if nu_r is None else nu_r, theta if theta_r is None else theta_r)
    return AdditiveSpec(NIG, base.time_change, base.weights, p_s, p_r)


# ---------- public operations ----------
def laplace_exponent(spec: AdditiveSpec, t: Any, z: Any) -> Any:
    """kappa_t(z) = log E[exp <z, X_t>] for z of shape (..., 3)."""
    tt = check_time(t)
    z = np.asarray(z)
    if z.shape[-1:] != (3,):
        raise DomainError(f"z must have 3 coordinates, got shape {z.shape}")
    tau_s, tau_r = spec.clocks(tt)
    tau_s = np.asarray(tau_s)
    value = np.zeros(np.broadcast_shapes(tt.shape, z.shape[:-1]), dtype=np.result_type(z, float))
    if np.any(tau_s > 0.0):
        value = value + tau_s * np.asarray(spec.base_exponent(0, z[..., 0]))
    if np.any(tau_r > 0.0):
        value = value + tau_r * np.asarray(spec.base_exponent(1, z[..., 1]))
    value = value + np.sum(z * spec.drift(tt), axis=-1)
    return scalar_or_array(value)


def forward_laplace(spec: AdditiveSpec, t: Any, T: Any, z: Any) -> Any:
    if np.any(np.asarray(t, dtype=float) > np.asarray(T, dtype=float)):
        raise OrderError(f"forward exponent needs t <= T, got t={t}, T={T}")
    return scalar_or_array(np.asarray(laplace_exponent(spec, T, z)) - np.asarray(laplace_exponent(spec, t, z)))


def martingalizing_drifts(
    spec: AdditiveSpec, weights: WeightVectors | None = None
) -> Tuple[Callable[[Any], Any], Callable[[Any], Any], Callable[[Any], Any]]:
    if weights is not None and weights != spec.weights:
        spec = replace(spec, weights=weights)

    def coordinate(i: int) -> Callable[[Any], Any]:
        return lambda t: scalar_or_array(spec.drift(t)[..., i])

    return coordinate(0), coordinate(1), coordinate(2)


def multiperiod_mgf(
    spec: AdditiveSpec,
    t: float,
    times: Sequence[float],
    terms: Sequence[Tuple[Any, Any]],
    x_t: Any = None,
) -> Any:
    """
    E_t[exp(sum_i u_i <w_i, X_{T_i}>)] by iterated conditioning on the
    independent increments. ``u_i`` may be arrays (broadcast together).
    """
    times = [float(T) for T in times]
    if len(times) != len(terms):
        raise InvariantViolation("multiperiod_mgf needs one (u, w) term per date")
    if any(b < a for a, b in zip(times, times[1:])):
        raise OrderError(f"dates must be sorted, got {times}")
    if times and times[0] < t:
        raise OrderError(f"conditioning time {t} is after the first date {times[0]}")
    if not times:
        return 1.0

    zs: list = [None] * len(times)
    acc: Any = 0.0
    for i in reversed(range(len(times))):
        u, w = terms[i]
        acc = acc + np.multiply.outer(np.asarray(u), np.asarray(w))
        zs[i] = acc

    log_q: Any = 0.0
    prev = float(t)
    for z, T in zip(zs, times):
        log_q = log_q + np.asarray(forward_laplace(spec, prev, T, z))
        prev = T
    if x_t is not None:
        log_q = log_q + np.sum(zs[0] * np.asarray(x_t, dtype=float), axis=-1)
    return scalar_or_array(np.exp(log_q))


def cov_factor(spec: AdditiveSpec, t: Any, T: Any, w1: Any, w2: Any) -> Any:
    """Cov_t of exp<w1, X_T - X_t> and exp<w2, X_T - X_t>."""
    w1 = np.asarray(w1, dtype=float)
    w2 = np.asarray(w2, dtype=float)
    k1 = np.asarray(forward_laplace(spec, t, T, w1))
    k2 = np.asarray(forward_laplace(spec, t, T, w2))
    k12 = np.asarray(forward_laplace(spec, t, T, w1 + w2))
    return scalar_or_array(np.exp(k1 + k2) * np.expm1(k12 - k1 - k2))


# ---------- linear functionals of the path ----------
@dataclass(frozen=True)
class LinearFunctional:
    """Y = const + sum_j <v_j, X_{t_j}>; dates are merged and sorted."""

    const: float = 0.0
    terms: Tuple[Tuple[float, Tuple[float, float, float]], ...] = ()

    def __post_init__(self) -> None:
        merged: Dict[float, np.ndarray] = {}
        for date, vec in self.terms:
            merged[float(date)] = merged.get(float(date), np.zeros(3)) + np.asarray(vec, dtype=float)
        terms = tuple((d, tuple(float(x) for x in merged[d])) for d in sorted(merged))
        object.__setattr__(self, "terms", terms)
        object.__setattr__(self, "const", float(self.const))

    @classmethod
    def at(cls, date: float, vec: Any, const: float = 0.0) -> "LinearFunctional":
        return cls(const, ((date, tuple(np.asarray(vec, dtype=float))),))

    def __add__(self, other: "LinearFunctional") -> "LinearFunctional":
        return LinearFunctional(self.const + other.const, self.terms + other.terms)

    def __neg__(self) -> "LinearFunctional":
        return LinearFunctional(-self.const, tuple((d, tuple(-np.asarray(v))) for d, v in self.terms))

    def __sub__(self, other: "LinearFunctional") -> "LinearFunctional":
        return self + (-other)

    def shifted(self, c: float) -> "LinearFunctional":
        return LinearFunctional(self.const + c, self.terms)

    def dates(self) -> Tuple[float, ...]:
        return tuple(d for d, _ in self.terms)

    def vector(self, date: float) -> np.ndarray:
        for d, v in self.terms:
            if d == date:
                return np.asarray(v)
        return np.zeros(3)


def functional_mgf(
    spec: AdditiveSpec,
    t: float,
    x_t: Any,
    functionals: Sequence[LinearFunctional],
    zs: Sequence[Any],
) -> Any:
    """E_t[exp(sum_k z_k Y_k)] for linear functionals observed at dates >= t."""
    zs = [np.asarray(z) for z in zs]
    shape = np.broadcast_shapes(*(z.shape for z in zs))
    zs = [np.broadcast_to(z, shape) for z in zs]
    dates = sorted({d for f in functionals for d in f.dates()})
    if dates and dates[0] < t:
        raise OrderError(f"functional observed at {dates[0]} before valuation time {t}")
    const = sum(z * f.const for z, f in zip(zs, functionals))
    terms = []
    for d in dates:
        vec = sum(z[..., None] * f.vector(d) for z, f in zip(zs, functionals))
        terms.append((1.0, vec))
    q = np.asarray(multiperiod_mgf(spec, t, dates, terms, x_t)) if dates else 1.0
    return scalar_or_array(np.exp(const) * q)


# ---------- Lévy–Khintchine data ----------
@dataclass(frozen=True)
class LevyTriplet:
    mu: Callable[[Any], np.ndarray]
    sigma: Callable[[float], np.ndarray]
    nu: Dict[str, Any]


def levy_triplet(spec: AdditiveSpec) -> LevyTriplet:
    if spec.kind == GAUSSIAN:
        nu: Dict[str, Any] = {"kind": "none"}
    else:
        nu = {
            "kind": "nig",
            "S": {"nu": spec.nig_s.nu, "theta": spec.nig_s.theta, "sigma": spec.nig_s.sigma, "clock": "tau_S"},
            "R": {"nu": spec.nig_r.nu, "theta": spec.nig_r.theta, "sigma": spec.nig_r.sigma, "clock": "t"},
        }
    return LevyTriplet(mu=spec.drift, sigma=spec.covariance, nu=nu)


def check_triplet(triplet: LevyTriplet, grid: Sequence[float]) -> None:
    """Raise InvariantViolation unless mu_0 = 0, Sigma_0 = 0 and Sigma_t increases on ``grid``."""
    if np.max(np.abs(triplet.mu(0.0))) > 0.0 or np.max(np.abs(triplet.sigma(0.0))) > 0.0:
        raise InvariantViolation("Lévy–Khintchine data must vanish at t=0")
    prev = triplet.sigma(0.0)
    for T in sorted(float(x) for x in grid):
        cur = triplet.sigma(T)
        if np.min(np.linalg.eigvalsh(cur - prev)) < -1e-14:
            raise InvariantViolation(f"Sigma_t decreases at t={T}")
        prev = cur


# ---------- JSON ----------
@functools.lru_cache(maxsize=None)
def load_schema(path: Path) -> Dict[str, Any]:
    return json.loads(Path(path).read_text(encoding="utf-8"))


def validate_document(doc: Dict[str, Any], schema_path: Path, what: str) -> None:
    try:
        validate(instance=doc, schema=load_schema(schema_path))
    except ValidationError as exc:
        location = ".".join(str(p) for p in exc.absolute_path) or None
        raise ParseError(f"invalid {what}: {exc.message}", column=location) from None


def spec_to_dict(spec: AdditiveSpec) -> Dict[str, Any]:
    doc: Dict[str, Any] = {
        "kind": spec.kind,
        "time_change": {"knots": list(spec.time_change.knots), "rates": list(spec.time_change.rates)},
        "weights": {"b": spec.weights.b, "a_R": spec.weights.a_R, "a_L": spec.weights.a_L},
    }
    if spec.kind == NIG:
        doc["nig"] = {
            "S": {"nu": spec.nig_s.nu, "theta": spec.nig_s.theta, "sigma": spec.nig_s.sigma},
            "R": {"nu": spec.nig_r.nu, "theta": spec.nig_r.theta, "sigma": spec.nig_r.sigma},
        }
    return doc


def spec_from_dict(doc: Dict[str, Any]) -> AdditiveSpec:
    validate_document(doc, SPEC_SCHEMA, "additive spec")
    tc = TimeChange(tuple(doc["time_change"]["knots"]), tuple(doc["time_change"]["rates"]))
    wd = doc.get("weights", {})
    weights = WeightVectors(
        float(wd.get("b", DEFAULT_B)), float(wd.get("a_R", DEFAULT_A_R)), float(wd.get("a_L", DEFAULT_A_L))
    )
    if doc["kind"] == GAUSSIAN:
        return AdditiveSpec(GAUSSIAN, tc, weights)
    nig = doc.get("nig")
    if not nig:
        raise ParseError("NIG spec needs a 'nig' block", column="nig")
    s = nig["S"]
    r = nig.get("R", s)
    return AdditiveSpec(
        NIG,
        tc,
        weights,
        NigParams(s["nu"], s.get("theta", 0.0), s.get("sigma")),
        NigParams(r["nu"], r.get("theta", 0.0), r.get("sigma")),
    )
