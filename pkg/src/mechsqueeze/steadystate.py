"""Steady-state conditional and unconditional quadrature covariances.

The conditional covariance V obeys the Riccati equation

    dV/dt = A V + V A^T + D I - k V^2,      k = 4 eta mu,

whose stationary point is found from the three scalar steady-state
conditions for (V_X, V_Y, C). Everything is computed in the
frame where the drive phase is pi/4; other phases are a rigid rotation of
the result.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_continuous_lyapunov
from scipy.optimize import brentq

from .errors import NoConvergence, PositivityLost, UnstableParameters
from .model import DEFAULT_THETA, SystemParams, derived, is_stable, validate

#: Below this value of eta*mu/gamma the conditioning term is dropped.
DEGENERATE_RATE = 1e-12


@dataclass(frozen=True)
class SolverInfo:
    method: str
    iterations: int = 0
    residual: float = 0.0


@dataclass(frozen=True)
class CovarianceState:
    """Symmetric quadrature covariance ``[[v_x, c], [c, v_y]]``."""

    v_x: float
    v_y: float
    c: float
    info: SolverInfo | None = field(default=None, compare=False, repr=False)

    @classmethod
    def from_matrix(cls, m, info=None) -> "CovarianceState":
        m = np.asarray(m, dtype=float)
        return cls(float(m[0, 0]), float(m[1, 1]), float(0.5 * (m[0, 1] + m[1, 0])), info)

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[self.v_x, self.c], [self.c, self.v_y]])

    @property
    def det(self) -> float:
        return self.v_x * self.v_y - self.c * self.c

    def is_positive_definite(self) -> bool:
        return self.v_x > 0 and self.v_y > 0 and self.det > 0

    def rotated(self, angle: float) -> "CovarianceState":
        """Covariance of the quadratures rotated by ``angle`` (R V R^T)."""
        if angle == 0.0:
            return self
        r = rotation(angle)
        return CovarianceState.from_matrix(r @ self.matrix @ r.T, self.info)


@dataclass(frozen=True)
class DriftDiffusion:
    a: np.ndarray
    d: float
    k_gain: float


def rotation(angle: float) -> np.ndarray:
    cs, sn = math.cos(angle), math.sin(angle)
    return np.array([[cs, -sn], [sn, cs]])


def frame_angle(params: SystemParams) -> float:
    """Rotation taking the theta = pi/4 solution to the frame of ``params.theta``."""
    return DEFAULT_THETA - params.theta


def drift_matrix(params: SystemParams) -> DriftDiffusion:
    """Drift, diffusion and conditioning gain in the theta = pi/4 frame."""
    g, chi, dl = params.gamma, params.chi, params.delta
    a = np.array([[-g, chi - dl], [chi + dl, -g]])
    return DriftDiffusion(a=a, d=derived(params).diffusion, k_gain=4 * params.eta * params.mu)


def riccati_rhs(dd: DriftDiffusion, v: np.ndarray) -> np.ndarray:
    av = dd.a @ v
    return av + av.T + dd.d * np.eye(2) - dd.k_gain * (v @ v)


def riccati_residual(params: SystemParams, cov: CovarianceState) -> float:
    """Relative Frobenius norm of the Riccati right-hand side at ``cov``.

    ``cov`` is interpreted in the frame of ``params.theta``.
    """
    dd = drift_matrix(params)
    v = cov.rotated(-frame_angle(params)).matrix
    av = dd.a @ v
    scale = np.linalg.norm(av + av.T) + dd.d * math.sqrt(2) + dd.k_gain * np.linalg.norm(v @ v)
    return float(np.linalg.norm(riccati_rhs(dd, v)) / scale)


def equation_residuals(params: SystemParams, cov: CovarianceState) -> tuple[float, float, float]:
    """Relative residuals of the closed-form steady-state conditions for V_X, V_Y and C.

    Uses the square-root form directly, so it is only meaningful for
    eta * mu > 0. ``cov`` is interpreted in the frame of ``params.theta``.
    """
    cov = cov.rotated(-frame_angle(params))
    g, chi, dl = params.gamma, params.chi, params.delta
    k = 4 * params.eta * params.mu
    z = derived(params).z
    vx, vy, c = cov.v_x, cov.v_y, cov.c
    fx = (math.sqrt(g * g + z - 2 * k * c * (dl - chi) - (k * c) ** 2) - g) / k
    fy = (math.sqrt(g * g + z + 2 * k * c * (dl + chi) - (k * c) ** 2) - g) / k
    fc = (chi * (vy + vx) - dl * (vy - vx)) / (k * (vy + vx) + 2 * g)
    return (abs(vx - fx) / vx, abs(vy - fy) / vy, abs(c - fc) / max(abs(c), vx, vy))


def _require_stable(params: SystemParams) -> None:
    validate(params)
    if not is_stable(params):
        raise UnstableParameters(
            f"unstable: chi^2 >= delta^2 + gamma^2 ({params.chi**2:.6g} >= {params.delta**2 + params.gamma**2:.6g})"
        )


def lyapunov_steady_state(params: SystemParams) -> CovarianceState:
    """Unconditional steady state: solves A V + V A^T + D I = 0."""
    _require_stable(params)
    dd = drift_matrix(params)
    v = solve_continuous_lyapunov(dd.a, -dd.d * np.eye(2))
    cov = CovarianceState.from_matrix(v, SolverInfo("lyapunov"))
    return cov.rotated(frame_angle(params))


def _quadratic_interval(k: float, b: float, d: float) -> tuple[float, float]:
    """Interval where -k C^2 + b C + d > 0 (k, d > 0), roots taken without cancellation."""
    s = math.sqrt(b * b + 4 * k * d)
    q = 0.5 * (b + math.copysign(s, b)) if b else s / 2
    r1, r2 = -d / q, q / k
    return (min(r1, r2), max(r1, r2))


def _variances_given_c(params: SystemParams, c: float) -> tuple[float, float]:
    g, chi, dl = params.gamma, params.chi, params.delta
    k = 4 * params.eta * params.mu
    d = derived(params).diffusion
    num_x = d - 2 * c * (dl - chi) - k * c * c
    num_y = d + 2 * c * (dl + chi) - k * c * c
    # (sqrt(gamma^2 + z + ...) - gamma) / k rearranged as num / (sqrt(...) + gamma): exact as k -> 0.
    return (
        num_x / (math.sqrt(g * g + k * num_x) + g),
        num_y / (math.sqrt(g * g + k * num_y) + g),
    )


def _covariance_mismatch(c: float, params: SystemParams) -> float:
    vx, vy = _variances_given_c(params, c)
    k = 4 * params.eta * params.mu
    return c * (k * (vx + vy) + 2 * params.gamma) - params.chi * (vx + vy) + params.delta * (vy - vx)


def _solve_reduced(params: SystemParams, max_iter: int):
    """Solve the three steady-state conditions as one bracketed equation in C.

    For fixed C the V_X and V_Y conditions are explicit, leaving the C
    condition as a scalar root. The bracket is the range of C for which both
    variances are positive, so the square-root radicands never go negative.
    """
    k = 4 * params.eta * params.mu
    d = derived(params).diffusion
    x_lo, x_hi = _quadratic_interval(k, -2 * (params.delta - params.chi), d)
    y_lo, y_hi = _quadratic_interval(k, 2 * (params.delta + params.chi), d)
    lo, hi = max(x_lo, y_lo), min(x_hi, y_hi)
    lo += 1e-14 * (hi - lo)
    hi -= 1e-14 * (hi - lo)
    f_lo, f_hi = _covariance_mismatch(lo, params), _covariance_mismatch(hi, params)
    if not (f_lo <= 0.0 <= f_hi):
        raise NoConvergence("covariance condition is not bracketed", min(abs(f_lo), abs(f_hi)), 0)
    try:
        c, res = brentq(
            _covariance_mismatch, lo, hi, args=(params,), xtol=1e-300, rtol=1e-15,
            maxiter=max_iter, full_output=True, disp=False,
        )
    except ValueError as exc:
        raise NoConvergence(str(exc)) from None
    if not res.converged:
        raise NoConvergence("scalar root search did not converge", math.nan, res.iterations)
    vx, vy = _variances_given_c(params, c)
    return (vx, vy, c), res.iterations


def conditional_steady_state(
    params: SystemParams,
    max_iter: int = 500,
    fallback: bool = True,
) -> CovarianceState:
    """Steady-state covariance conditioned on the measurement record.

    Parameters
    ----------
    params : SystemParams
        Must be below threshold.
    max_iter : int
        Iteration cap for the root search before falling back to
        integrating the Riccati ODE.
    fallback : bool
        Integrate the Riccati ODE to steady state if the root search fails.

    Returns
    -------
    CovarianceState
        In the frame of ``params.theta``; ``info`` records the method used
        and the relative Riccati residual.
    """
    _require_stable(params)
    if params.eta * params.mu < DEGENERATE_RATE * params.gamma:
        return lyapunov_steady_state(params)

    base = params.replace(theta=DEFAULT_THETA)
    try:
        (vx, vy, c), iters = _solve_reduced(base, max_iter)
        method = "scalar_root"
    except NoConvergence:
        if not fallback:
            raise
        from .dynamics import relax_riccati

        start = CovarianceState(v0(params), v0(params), 0.0)
        cov = relax_riccati(base, start)
        vx, vy, c, iters = cov.v_x, cov.v_y, cov.c, cov.info.iterations
        method = "riccati_ode"
    cov = CovarianceState(vx, vy, c)
    if not cov.is_positive_definite():
        raise PositivityLost(f"steady state is not positive definite: {cov}")
    info = SolverInfo(method, iters, riccati_residual(base, cov))
    return CovarianceState(vx, vy, c, info).rotated(frame_angle(params))


def v0(params: SystemParams) -> float:
    """Pump-off conditional variance ``(sqrt(gamma^2 + z) - gamma) / (4 eta mu)``."""
    validate(params)
    dq = derived(params)
    # Same value, arranged to stay exact as eta*mu -> 0 (tends to N + 1/2).
    return dq.diffusion / (math.sqrt(params.gamma**2 + dq.z) + params.gamma)


def bae_variance(params: SystemParams) -> float:
    """Conditional variance of a back-action-evading measurement (no back-action phonons)."""
    validate(params)
    g = params.gamma
    d_bare = 2 * g * (params.n_thermal + 0.5)
    z_bare = 8 * params.eta * params.mu * g * (params.n_thermal + 0.5)
    return d_bare / (math.sqrt(g * g + z_bare) + g)


def bae_threshold_n(params: SystemParams) -> float:
    """Bath occupation below which back-action evasion squeezes below zero point.

    Closed form of ``bae_variance == 1/2``: N = eta * mu / (2 gamma).
    """
    validate(params)
    return params.eta * params.mu / (2 * params.gamma)


def unconditional_steady_state(params: SystemParams, feedback_gain: float = 0.0) -> CovarianceState:
    """Unconditional covariance with isotropic feedback ``-g <x>`` on the estimate.

    Sum of the conditional covariance and the stationary spread of the
    conditional means, the latter from

        (A - g I) E + E (A - g I)^T + 4 eta mu V_c^2 = 0.
    """
    _require_stable(params)
    if feedback_gain < 0:
        raise ValueError(f"feedback_gain must be >= 0, got {feedback_gain}")
    base = params.replace(theta=DEFAULT_THETA)
    vc = conditional_steady_state(base)
    dd = drift_matrix(base)
    if dd.k_gain == 0.0:
        return vc.rotated(frame_angle(params))
    m = vc.matrix
    e = solve_continuous_lyapunov(dd.a - feedback_gain * np.eye(2), -dd.k_gain * (m @ m))
    total = CovarianceState.from_matrix(m + e, SolverInfo("lyapunov", vc.info.iterations, vc.info.residual))
    return total.rotated(frame_angle(params))


def mean_excess_covariance(params: SystemParams, feedback_gain: float = 0.0) -> CovarianceState:
    """Stationary covariance of the conditional means, E[<x><x>^T]."""
    unc = unconditional_steady_state(params, feedback_gain)
    vc = conditional_steady_state(params)
    return CovarianceState.from_matrix(unc.matrix - vc.matrix)


def principal_variances(cov: CovarianceState) -> tuple[float, float, float]:
    """Minor and major variances and the minor-axis angle in (-pi/2, pi/2]."""
    vx, vy, c = cov.v_x, cov.v_y, cov.c
    mean = 0.5 * (vx + vy)
    half = math.hypot(0.5 * (vx - vy), c)
    v_min, v_max = mean - half, mean + half
    if half == 0.0:
        return v_min, v_max, 0.0
    # Major axis at 0.5*atan2(2c, vx - vy); minor is perpendicular.
    angle = 0.5 * math.atan2(2 * c, vx - vy) + math.pi / 2
    if angle > math.pi / 2:
        angle -= math.pi
    return v_min, v_max, angle
