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

# core/fourier.py
"""
Damped Fourier kernels over conditional moment generating functions.

With z = R + iu and (1 - e^y)^+ = (1/2 pi i) int e^{-zy} / (z (1 + z)) dz:

    floor:  E[(1 - e^{Y1})^+ (m0 e^{Y2} + m1 e^{Y2+Y3})]    R > 0
    put:    E[e^{Y2} (1 - a e^{Y1})^+]                        R > 0
    call:   E[e^{Y2} (a e^{Y1} - 1)^+]                        R < -1
    digital E[sum_i c_i e^{W_i} 1{e^{Y1} - e^{Y2} - 1 > 0}]   R2 < 0, R1 + R2 > 1

One-dimensional integrals run over [0, inf) on Gauss-Legendre panels of
growing width; the two-dimensional digital uses a tensor rule on a box
sized from the cumulants of (Y1, Y2).
"""

from __future__ import annotations

import functools
import logging
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import loggamma

from . import settings
from .errors import DampingInfeasible, DomainError, InvariantViolation, QuadratureNoConvergence

logger = logging.getLogger(__name__)

FLOOR = "floor"
CALL = "call"
PUT = "put"
DIGITAL2D = "digital2d"

DEFAULT_DAMPING = {FLOOR: 1.5, PUT: 1.5, CALL: -2.5, DIGITAL2D: (2.5, -1.2)}


@dataclass(frozen=True)
class QuadratureConfig:
    abs_tol: float = settings.ABS_TOL
    rel_tol: float = settings.REL_TOL
    max_truncation: float = 2.0e6
    nodes: int = 32
    first_width: float = 1.0
    growth: float = 2.0
    min_panels: int = 4
    damping_step: float = 0.25
    max_shifts: int = 8
    nodes_2d: int = 32
    panels_2d: int = 8

    def __post_init__(self) -> None:
        if not (self.abs_tol > 0.0 and self.rel_tol > 0.0):
            raise InvariantViolation("quadrature tolerances must be positive")
        if self.nodes < 2 or self.first_width <= 0.0 or self.growth < 1.0:
            raise InvariantViolation("invalid panel scheme")

    def tightened(self, factor: float = 100.0) -> "QuadratureConfig":
        return QuadratureConfig(**{**self.__dict__, "abs_tol": self.abs_tol / factor, "rel_tol": self.rel_tol / factor})


@dataclass(frozen=True)
class QuadDiagnostics:
    truncation: float
    panels: int
    tail_bound: float
    damping: float | Tuple[float, float]


@dataclass(frozen=True)
class DampedTransform:
    R: float | Tuple[float, float]
    mgf: Callable
    kind: str

    def __post_init__(self) -> None:
        if self.kind == DIGITAL2D:
            r1, r2 = self.R
            ok = r2 < 0.0 and r1 + r2 > 1.0
        elif self.kind == CALL:
            ok = self.R < -1.0
        elif self.kind in (FLOOR, PUT):
            ok = self.R > 0.0
        else:
            raise InvariantViolation(f"unknown transform kind {self.kind!r}")
        if not ok:
            raise DampingInfeasible(f"damping {self.R} violates the {self.kind} kernel constraint")


@functools.lru_cache(maxsize=8)
def _legendre(n: int) -> Tuple[np.ndarray, np.ndarray]:
    return np.polynomial.legendre.leggauss(n)


def integrate_half_line(
    f: Callable[[np.ndarray], np.ndarray],
    quad: QuadratureConfig,
    width_cap: float = np.inf,
) -> Tuple[float, QuadDiagnostics]:
    """
    int_0^inf f(u) du for a real vectorised integrand with algebraic decay.

    Stops once two consecutive panels (after ``min_panels``) each contribute
    less than a tenth of the tolerance.
    """
    x, w = _legendre(quad.nodes)
    a = 0.0
    width = min(quad.first_width, width_cap)
    total = 0.0
    quiet = 0
    panels = 0
    while a < quad.max_truncation:
        b = a + width
        u = 0.5 * (b - a) * x + 0.5 * (a + b)
        vals = np.asarray(f(u), dtype=float)
        if not np.all(np.isfinite(vals)):
            raise DomainError(f"integrand not finite on [{a:.4g}, {b:.4g}]")
        panel = 0.5 * (b - a) * float(np.dot(w, vals))
        total += panel
        panels += 1
        tol = max(quad.abs_tol, quad.rel_tol * abs(total))
        quiet = quiet + 1 if (panels >= quad.min_panels and abs(panel) < 0.1 * tol) else 0
        if quiet >= 2:
            tail = abs(float(vals[-1])) * u[-1]
            return total, QuadDiagnostics(truncation=b, panels=panels, tail_bound=tail, damping=0.0)
        a = b
        width = min(width * quad.growth, width_cap)
    raise QuadratureNoConvergence(
        f"tolerance {quad.abs_tol:g} not met before truncation {quad.max_truncation:g} ({panels} panels)"
    )


# ---------- 1-d kernels ----------
Numerator = Callable[[np.ndarray], np.ndarray]


def _phase_speed(numer: Numerator) -> float:
    h = 1e-4
    g = numer(np.array([0.0, h]))
    if not np.all(np.isfinite(g)) or g[0] == 0.0:
        return 0.0
    return abs(float(np.angle(g[1] / g[0]))) / h


def _damped_integral(
    build: Callable[[float], Numerator],
    R: float,
    kind: str,
    quad: QuadratureConfig,
    report: Optional[List[QuadDiagnostics]],
) -> float:
    step = quad.damping_step if kind == CALL else -quad.damping_step
    last_error: Exception | None = None
    for _ in range(quad.max_shifts + 1):
        try:
            DampedTransform(R, build, kind)
        except DampingInfeasible:
            break
        try:
            numer = build(R)

            def integrand(u: np.ndarray, numer=numer, R=R) -> np.ndarray:
                z = R + 1j * u
                return np.real(numer(u) / (z * (1.0 + z)))

            omega = max(_phase_speed(numer), 1e-3)
            value, diag = integrate_half_line(integrand, quad, width_cap=16.0 / omega)
        except DomainError as exc:
            last_error = exc
            logger.debug("damping %s infeasible for %s kernel (%s); shifting", R, kind, exc)
            R = R + step
            continue
        if report is not None:
            report.append(QuadDiagnostics(diag.truncation, diag.panels, diag.tail_bound, R))
        return value / np.pi
    raise DampingInfeasible(f"no feasible damping for the {kind} kernel: {last_error}")


def price_floor_kernel(
    mgf: Callable[[np.ndarray, float, float], np.ndarray],
    R: float = DEFAULT_DAMPING[FLOOR],
    quad: QuadratureConfig | None = None,
    mix: Tuple[float, float] = (1.0, 1.0),
    report: Optional[List[QuadDiagnostics]] = None,
) -> float:
    """E[(1 - e^{Y1})^+ (m0 e^{Y2} + m1 e^{Y2 + Y3})] from q(z1, z2, z3)."""
    quad = quad or QuadratureConfig()
    m0, m1 = mix

    def build(r: float) -> Numerator:
        def numer(u: np.ndarray) -> np.ndarray:
            z = -(r + 1j * np.asarray(u))
            out = 0.0
            if m0:
                out = out + m0 * np.asarray(mgf(z, 1.0, 0.0))
            if m1:
                out = out + m1 * np.asarray(mgf(z, 1.0, 1.0))
            return np.asarray(out, dtype=complex) * np.ones_like(z)

        return numer

    return _damped_integral(build, R, FLOOR, quad, report)


def _ratio_kernel(
    mgf: Callable[[np.ndarray, float], np.ndarray],
    alpha: float,
    R: float,
    kind: str,
    quad: QuadratureConfig | None,
    report: Optional[List[QuadDiagnostics]],
) -> float:
    if not alpha > 0.0:
        raise InvariantViolation(f"{kind} kernel needs alpha > 0, got {alpha}")
    quad = quad or QuadratureConfig()
    log_alpha = np.log(alpha)

    def build(r: float) -> Numerator:
        def numer(u: np.ndarray) -> np.ndarray:
            z = r + 1j * np.asarray(u)
            return np.exp(-z * log_alpha) * np.asarray(mgf(-z, 1.0))

        return numer

    return _damped_integral(build, R, kind, quad, report)


def price_call_kernel(
    mgf: Callable[[np.ndarray, float], np.ndarray],
    alpha: float,
    R: float = DEFAULT_DAMPING[CALL],
    quad: QuadratureConfig | None = None,
    report: Optional[List[QuadDiagnostics]] = None,
) -> float:
    """E[e^{Y2} (alpha e^{Y1} - 1)^+] from q(z1, z2) = E[e^{z1 Y1 + z2 Y2}]."""
    return _ratio_kernel(mgf, alpha, R, CALL, quad, report)


def price_put_kernel(
    mgf: Callable[[np.ndarray, float], np.ndarray],
    alpha: float,
    R: float = DEFAULT_DAMPING[PUT],
    quad: QuadratureConfig | None = None,
    report: Optional[List[QuadDiagnostics]] = None,
) -> float:
    """E[e^{Y2} (1 - alpha e^{Y1})^+] from q(z1, z2) = E[e^{z1 Y1 + z2 Y2}]."""
    return _ratio_kernel(mgf, alpha, R, PUT, quad, report)


def ladder_put_kernel(
    mgf: Callable[[np.ndarray, float], np.ndarray],
    alphas: Sequence[float],
    R: float = DEFAULT_DAMPING[PUT],
    quad: QuadratureConfig | None = None,
) -> np.ndarray:
    """Put kernel for several alphas sharing one evaluation of q per node."""
    quad = quad or QuadratureConfig()
    log_alpha = np.log(np.asarray(alphas, dtype=float))
    if not np.all(np.isfinite(log_alpha)):
        raise InvariantViolation("ladder alphas must be positive")
    x, w = _legendre(quad.nodes)
    for _ in range(quad.max_shifts + 1):
        if R <= 0.0:
            break
        try:
            q0 = complex(np.asarray(mgf(np.array([-R + 0j]), 1.0))[0])
            if not np.isfinite(q0):
                raise DomainError("mgf not finite at damping point")
            drift = float(np.angle(np.asarray(mgf(np.array([-R - 1e-4j]), 1.0))[0] / q0)) / 1e-4
            omega = max(float(np.max(np.abs(drift - log_alpha))), 1e-3)
            cap = 16.0 / omega
            a, width, total, quiet, panels = 0.0, min(quad.first_width, cap), np.zeros_like(log_alpha), 0, 0
            while True:
                if a >= quad.max_truncation:
                    raise QuadratureNoConvergence(f"ladder tolerance not met before {quad.max_truncation:g}")
                b = a + width
                u = 0.5 * (b - a) * x + 0.5 * (a + b)
                z = R + 1j * u
                q = np.asarray(mgf(-z, 1.0)) / (z * (1.0 + z))
                vals = np.real(np.exp(-np.multiply.outer(log_alpha, z)) * q)
                if not np.all(np.isfinite(vals)):
                    raise DomainError("ladder integrand not finite")
                panel = 0.5 * (b - a) * (vals @ w)
                total = total + panel
                panels += 1
                tol = np.maximum(quad.abs_tol, quad.rel_tol * np.abs(total))
                quiet = quiet + 1 if (panels >= quad.min_panels and np.all(np.abs(panel) < 0.1 * tol)) else 0
                if quiet >= 2:
                    return total / np.pi
                a = b
                width = min(width * quad.growth, cap)
        except DomainError:
            R -= quad.damping_step
    raise DampingInfeasible("no feasible damping for the put ladder")


# ---------- 2-d digital ----------
def digital_transform(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Transform of e^{-R.y} 1{e^{y1} - e^{y2} - 1 > 0}: Gamma(a+b) Gamma(-b) / Gamma(1+a)."""
    return np.exp(loggamma(a + b) + loggamma(-b) - loggamma(1.0 + a))


def _box_from_cumulants(q: Callable[[np.ndarray, np.ndarray], np.ndarray], R1: float, R2: float) -> Tuple[float, float]:
    h = 1e-3
    sizes = []
    for axis in range(2):
        e = np.array([h, 0.0]) if axis == 0 else np.array([0.0, h])
        pts = [np.log(np.real(q(np.array([R1 + s * e[0]]), np.array([R2 + s * e[1]])))[0]) for s in (-1.0, 0.0, 1.0)]
        var = max((pts[0] - 2.0 * pts[1] + pts[2]) / (h * h), 1e-10)
        sizes.append(float(np.clip(12.0 / np.sqrt(var), 20.0, 4000.0)))
    return sizes[0], sizes[1]


def digital_2d_kernel(
    mgfs: Sequence[Callable[[np.ndarray, np.ndarray], np.ndarray]],
    coefficients: Sequence[float],
    R: Tuple[float, float] = DEFAULT_DAMPING[DIGITAL2D],
    quad: QuadratureConfig | None = None,
    report: Optional[List[QuadDiagnostics]] = None,
) -> float:
    """
    sum_i c_i E[e^{W_i} 1{e^{Y1} - e^{Y2} - 1 > 0}] from
    q_i(z1, z2) = E[e^{W_i + z1 Y1 + z2 Y2}].
    """
    quad = quad or QuadratureConfig()
    coefficients = [float(c) for c in coefficients]
    if len(coefficients) != len(mgfs):
        raise InvariantViolation("digital kernel needs one coefficient per mgf")
    if not any(coefficients):
        return 0.0
    R1, R2 = R
    DampedTransform((R1, R2), mgfs, DIGITAL2D)

    def combined(z1: np.ndarray, z2: np.ndarray) -> np.ndarray:
        out = np.zeros(np.broadcast(z1, z2).shape, dtype=complex)
        for c, q in zip(coefficients, mgfs):
            if c:
                out = out + c * np.asarray(q(z1, z2))
        return out

    def first(z1: np.ndarray, z2: np.ndarray) -> np.ndarray:
        return np.asarray(mgfs[0](z1, z2))

    if not np.all(np.isfinite(combined(np.array([R1 + 0j]), np.array([R2 + 0j])))):
        raise DampingInfeasible(f"moment generating functions infinite at damping {R}")

    x, w = _legendre(quad.nodes_2d)

    def box_integral(U1: float, U2: float) -> float:
        # Hermitian symmetry: integrate u2 >= 0 and double the real part
        e1 = np.linspace(-U1, U1, quad.panels_2d + 1)
        e2 = np.linspace(0.0, U2, quad.panels_2d + 1)
        u1 = np.concatenate([0.5 * (b - a) * x + 0.5 * (a + b) for a, b in zip(e1, e1[1:])])
        w1 = np.concatenate([0.5 * (b - a) * w for a, b in zip(e1, e1[1:])])
        u2 = np.concatenate([0.5 * (b - a) * x + 0.5 * (a + b) for a, b in zip(e2, e2[1:])])
        w2 = np.concatenate([0.5 * (b - a) * w for a, b in zip(e2, e2[1:])])
        A = R1 + 1j * u1[:, None]
        B = R2 + 1j * u2[None, :]
        vals = digital_transform(A, B) * combined(A, B)
        if not np.all(np.isfinite(vals)):
            raise DomainError("digital integrand not finite")
        return 2.0 * float(np.real(w1 @ vals @ w2)) / (2.0 * np.pi) ** 2

    U1, U2 = _box_from_cumulants(first, R1, R2)
    value = box_integral(U1, U2)
    for _ in range(4):
        wider = box_integral(1.5 * U1, 1.5 * U2)
        err = abs(wider - value)
        U1, U2, value = 1.5 * U1, 1.5 * U2, wider
        if err <= max(quad.abs_tol * 100.0, quad.rel_tol * abs(value)):
            if report is not None:
                report.append(QuadDiagnostics(max(U1, U2), 2 * quad.panels_2d, err, (R1, R2)))
            return value
    raise QuadratureNoConvergence(f"2-d digital kernel did not settle (last change {err:.3g})")
