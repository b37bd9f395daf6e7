"""Small models and markets shared by the test modules."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from core.additive_process import WeightVectors, gaussian_spec, nig_spec
from core.market_data import DiscountCurve, KnotCurve, StepCurve, il_curve_from_zc_rates
from core.rpks import B_L_KNOTS, B_R_KNOTS, RpksParams, build_params

PILLARS = (0.25, 0.5, 1.0, 2.0, 3.0, 5.0, 7.0, 10.0, 12.0, 15.0, 20.0, 30.0)
NOMINAL_RATE = 0.02
ZC_RATE = 0.022
LIBOR_SPREAD = 0.0015
RATES = (1e-4, 1.2e-4, 1.4e-4, 1.5e-4, 1.6e-4, 1.6e-4, 1.7e-4, 1.8e-4)


def flat_curve(rate: float, name: str, pillars: Sequence[float] = PILLARS) -> DiscountCurve:
    p = np.asarray(pillars)
    return DiscountCurve(tuple(p), tuple(np.exp(-rate * p)), name)


def curves():
    nominal = flat_curve(NOMINAL_RATE, "nominal")
    zc = KnotCurve.constant(ZC_RATE, PILLARS, "zc rates")
    libor = flat_curve(NOMINAL_RATE + LIBOR_SPREAD, "libor")
    return nominal, il_curve_from_zc_rates(nominal, zc), libor


def _params(spec, b_r: float, b_l: float) -> RpksParams:
    nominal, il, libor = curves()
    return build_params(
        spec,
        nominal,
        il,
        b_r=KnotCurve.constant(b_r, B_R_KNOTS, "b_r"),
        libor=libor,
        b_l=StepCurve(B_L_KNOTS, (b_l,) * (len(B_L_KNOTS) - 1)),
    )


def gaussian_params(
    b: float = 30.0, a_R: float = 0.25, a_L: float = 1.3, rates=RATES, b_r: float = 0.9, b_l: float = 0.0
) -> RpksParams:
    return _params(gaussian_spec(rates, weights=WeightVectors(b, a_R, a_L)), b_r, b_l)


def nig_params(
    nu: float = 15.0, theta: float = -0.5, b: float = 30.0, a_R: float = 0.25, a_L: float = 1.3,
    rates=RATES, b_r: float = 0.9, b_l: float = 0.0,
) -> RpksParams:
    return _params(nig_spec(nu, theta, rates, weights=WeightVectors(b, a_R, a_L)), b_r, b_l)
