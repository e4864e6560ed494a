"""Numerical optimization of the conditional squeezed variance.

The objective is V_X in the theta = pi/4 frame. The detuning search is a
coarse log-spaced scan followed by bounded Brent refinement (golden section
with parabolic steps); the measurement-strength search nests it inside a
log-grid scan over mu.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import partial

import numpy as np
from scipy.optimize import minimize_scalar

from ._parallel import pmap
from .errors import NoConvergence, NoStableDetuning
from .model import DEFAULT_THETA, SystemParams, derived, is_stable, to_db, validate
from .steadystate import CovarianceState, conditional_steady_state

PRESCAN_POINTS = 64


@dataclass(frozen=True)
class OptimizationResult:
    delta_opt: float
    v_x_opt: float
    v_db: float
    evaluations: int
    bracket: tuple[float, float]
    mu_opt: float | None = None
    flat: bool = False
    covariance: CovarianceState | None = field(default=None, repr=False, compare=False)
    warnings: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        out = {
            "delta_opt": self.delta_opt,
            "mu_opt": self.mu_opt,
            "v_x_opt": self.v_x_opt,
            "v_db": self.v_db,
            "evaluations": self.evaluations,
            "bracket": list(self.bracket),
            "flat": self.flat,
            "warnings": list(self.warnings),
        }
        if self.covariance is not None:
            out["v_y"] = self.covariance.v_y
            out["c"] = self.covariance.c
        return out


def stability_edge(params: SystemParams) -> float:
    """Smallest detuning magnitude that keeps the system below threshold."""
    return math.sqrt(max(0.0, params.chi**2 - params.gamma**2))


class _Objective:
    """V_X as a function of detuning, counting evaluations."""

    def __init__(self, params: SystemParams):
        self.params = params.replace(theta=DEFAULT_THETA)
        self.evaluations = 0
        self.cache: dict[float, CovarianceState] = {}

    def covariance(self, delta: float) -> CovarianceState:
        cov = self.cache.get(delta)
        if cov is None:
            self.evaluations += 1
            cov = conditional_steady_state(self.params.replace(delta=delta))
            self.cache[delta] = cov
        return cov

    def __call__(self, delta: float) -> float:
        return self.covariance(float(delta)).v_x


def optimal_detuning(params: SystemParams, xtol: float = 1e-9) -> OptimizationResult:
    """Minimize the conditional V_X over detuning; ``params.delta`` is ignored.

    The search runs over delta above the stability edge
    sqrt(max(0, chi^2 - gamma^2)).
    """
    validate(params)
    g = params.gamma
    scale = math.sqrt(g * g + derived(params).z)
    edge = stability_edge(params)
    margin = 1e-9 * g
    # At chi == gamma, delta^2 must clear the rounding of gamma^2 to register.
    while not is_stable(params.replace(delta=edge + margin)):
        margin *= 10
        if margin > g:
            raise NoStableDetuning(f"no stable detuning found above {edge}")
    lo = edge + margin
    hi = params.chi + 50 * scale
    f = _Objective(params)

    offsets = np.geomspace(1e-6 * scale, hi - lo, PRESCAN_POINTS - 1)
    grid = [lo] + list(lo + offsets)
    values = [f(x) for x in grid]
    spread = (max(values) - min(values)) / min(values)
    if spread <= 1e-12:
        mid = 0.5 * (grid[0] + grid[-1])
        cov = f.covariance(mid)
        return OptimizationResult(
            delta_opt=mid, v_x_opt=cov.v_x, v_db=to_db(cov.v_x), evaluations=f.evaluations,
            bracket=(grid[0], grid[-1]), mu_opt=None, flat=True, covariance=cov,
            warnings=("flat objective",),
        )

    for _ in range(60):
        if values[-1] > values[-2]:
            break
        grid.append(lo + 2 * (grid[-1] - lo))
        values.append(f(grid[-1]))
    else:
        raise NoConvergence("objective kept decreasing while expanding the detuning bracket")

    warnings = []
    v_arr = np.asarray(values)
    interior_minima = [
        i for i in range(1, len(values) - 1) if values[i] < values[i - 1] and values[i] <= values[i + 1]
    ]
    if len(interior_minima) > 1:
        warnings.append(f"prescan found {len(interior_minima)} local minima; refining the lowest")

    i = int(np.argmin(v_arr))
    a, b = grid[max(i - 1, 0)], grid[min(i + 1, len(grid) - 1)]
    res = minimize_scalar(f, bounds=(a, b), method="bounded", options={"xatol": xtol * max(abs(grid[i]), g)})
    x = float(res.x)
    if f(x) > values[i]:
        x = grid[i]
    cov = f.covariance(x)

    h = 1e-4 * (b - a)
    if x - h > lo:
        curvature = f(x + h) - 2 * cov.v_x + f(x - h)
        if curvature < -1e-12 * cov.v_x:
            raise NoConvergence(f"refined point is not a minimum (curvature {curvature:.3e})", curvature, f.evaluations)

    return OptimizationResult(
        delta_opt=x,
        v_x_opt=cov.v_x,
        v_db=to_db(cov.v_x),
        evaluations=f.evaluations,
        bracket=(a, b),
        covariance=cov,
        warnings=tuple(warnings),
    )


def _optimal_vx_at_mu(params: SystemParams, mu: float) -> float:
    return optimal_detuning(params.replace(mu=float(mu))).v_x_opt


def optimal_measurement(
    params: SystemParams,
    mu_range: tuple[float, float] = (0.01, 10.0),
    points_per_decade: int = 50,
    jobs: int | None = None,
) -> OptimizationResult:
    """Jointly optimize measurement strength and detuning for maximal squeezing.

    ``params.mu`` and ``params.delta`` are ignored. The mu axis is scanned on
    a log grid, then the best cell is refined with bounded Brent in log(mu).
    """
    validate(params)
    mu_lo, mu_hi = mu_range
    if not 0 < mu_lo < mu_hi:
        raise ValueError(f"mu_range must satisfy 0 < lo < hi, got {mu_range}")
    decades = math.log10(mu_hi / mu_lo)
    n = max(3, int(math.ceil(points_per_decade * decades)) + 1)
    mus = np.geomspace(mu_lo, mu_hi, n)
    values = pmap(partial(_optimal_vx_at_mu, params), mus, jobs)
    evaluations = n
    i = int(np.argmin(values))
    best_mu = mus[i]
    if 0 < i < n - 1:
        res = minimize_scalar(
            lambda lm: _optimal_vx_at_mu(params, 10.0**lm),
            bounds=(math.log10(mus[i - 1]), math.log10(mus[i + 1])),
            method="bounded",
            options={"xatol": 1e-6},
        )
        evaluations += res.nfev
        if res.fun <= values[i]:
            best_mu = 10.0 ** float(res.x)
    inner = optimal_detuning(params.replace(mu=float(best_mu)))
    return OptimizationResult(
        delta_opt=inner.delta_opt,
        v_x_opt=inner.v_x_opt,
        v_db=inner.v_db,
        evaluations=evaluations + 1,
        bracket=(float(mus[max(i - 1, 0)]), float(mus[min(i + 1, n - 1)])),
        mu_opt=float(best_mu),
        flat=inner.flat,
        covariance=inner.covariance,
        warnings=inner.warnings,
    )
