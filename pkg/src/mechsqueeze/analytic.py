"""Closed-form optimal detuning and squeezed variance.

Valid in the strong-conditioning limit z >> gamma^2, where every rate is
measured in units of sqrt(gamma^2 + z). There the optimum depends on the
normalized nonlinearity chi' alone and bounds the exact optimum from below.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

from .errors import NegativeRadicand, ParameterError

SQRT3 = math.sqrt(3.0)


@dataclass(frozen=True)
class AnalyticOptimum:
    delta_offset_prime: float
    v_ratio: float
    g_value: complex


def cube_root_term(chi_prime: float) -> complex:
    """Principal cube root of 27 chi'^3 + 6 sqrt(3) i sqrt(27 chi'^4 + 36 chi'^2 + 16)."""
    c = chi_prime
    arg = complex(27 * c**3, 6 * SQRT3 * math.sqrt(27 * c**4 + 36 * c**2 + 16))
    r, phi = cmath.polar(arg)
    return cmath.rect(r ** (1.0 / 3.0), phi / 3.0)


def optimal_offset(chi_prime: float) -> float:
    """Optimal ``(delta - chi) / sqrt(gamma^2 + z)`` in the strong-conditioning limit."""
    g = cube_root_term(chi_prime)
    return (g.real + SQRT3 * g.imag - 3 * chi_prime) / 6


def variance_ratio(offset: float) -> float:
    """Optimal V_X / V_0 as a function of the normalized detuning offset."""
    radicand = 2 + 3 * offset**2 - 1 / offset**2
    if radicand < 0:
        raise NegativeRadicand(f"variance radicand {radicand:.3e} < 0 at offset {offset:.6g}")
    return 0.5 * math.sqrt(radicand)


def analytic_optimum(chi_prime: float) -> AnalyticOptimum:
    if not chi_prime >= 0:
        raise ParameterError(f"chi_prime must be >= 0, got {chi_prime}")
    g = cube_root_term(chi_prime)
    offset = (g.real + SQRT3 * g.imag - 3 * chi_prime) / 6
    return AnalyticOptimum(delta_offset_prime=offset, v_ratio=variance_ratio(offset), g_value=g)


def analytic_vx(chi_prime: float, v0: float) -> float:
    """Strong-conditioning estimate of the optimally detuned V_X."""
    if not v0 > 0:
        raise ParameterError(f"v0 must be > 0, got {v0}")
    return v0 * analytic_optimum(chi_prime).v_ratio


def no_measurement_optimum(chi_over_gamma: float) -> AnalyticOptimum:
    """Exact optimum without measurement.

    The optimal detuning is delta = chi + gamma, where the squeezed variance
    is (chi + 2 gamma) / (2 (chi + gamma)) times the thermal variance,
    falling to one half as chi grows.
    """
    c = chi_over_gamma
    if not c >= 0:
        raise ParameterError(f"chi_over_gamma must be >= 0, got {c}")
    return AnalyticOptimum(delta_offset_prime=1.0, v_ratio=(c + 2) / (2 * (c + 1)), g_value=complex("nan"))
