"""Time-domain evolution of the conditional Gaussian state.

The conditional covariance follows a deterministic Riccati ODE (RK4). The
conditional means follow

    d<x> = (A - g I) <x> dt + 2 sqrt(eta mu) V dW,

integrated with Euler-Maruyama on the same grid. The measurement record is
normalized so that ``dr = <x> dt + dW / (2 sqrt(eta mu))``; filtering a
record therefore applies the gain ``4 eta mu V`` to the innovation
``dr - <x> dt``. Work is done in the frame of ``params.theta``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import NoConvergence, NonFiniteState, ParamsMismatch, PositivityLost, StepTooLarge
from .model import SystemParams
from .steadystate import (
    CovarianceState,
    SolverInfo,
    _require_stable,
    conditional_steady_state,
    drift_matrix,
    frame_angle,
    rotation,
    unconditional_steady_state,
)

#: Largest allowed dt times the fastest rate in the model.
STEP_GUARD = 0.01


def max_step(params: SystemParams) -> float:
    return STEP_GUARD / max(params.gamma, params.chi, abs(params.delta), params.mu)


def default_step(params: SystemParams, t_final: float) -> float:
    """Largest step within the guard that divides ``t_final`` evenly."""
    return t_final / math.ceil(t_final / max_step(params) - 1e-9)


def check_step(params: SystemParams, dt: float) -> None:
    if not dt > 0:
        raise StepTooLarge(f"dt must be > 0, got {dt}")
    limit = max_step(params)
    if dt > limit * (1 + 1e-12):
        raise StepTooLarge(f"dt={dt:g} exceeds the step guard {limit:g}")


def frame_drift(params: SystemParams) -> np.ndarray:
    """Mean-value drift matrix in the frame of ``params.theta``."""
    r = rotation(frame_angle(params))
    return r @ drift_matrix(params).a @ r.T


def _n_steps(t_final: float, dt: float) -> int:
    n = int(round(t_final / dt))
    if n < 1 or abs(n * dt - t_final) > 1e-9 * max(t_final, dt):
        raise ValueError(f"t_final={t_final} is not a positive multiple of dt={dt}")
    return n


def _riccati_field(a, d, k):
    (a11, a12), (a21, a22) = a.tolist()
    tr = a11 + a22

    def rhs(vx, vy, c):
        return (
            2 * (a11 * vx + a12 * c) + d - k * (vx * vx + c * c),
            2 * (a21 * c + a22 * vy) + d - k * (vy * vy + c * c),
            tr * c + a12 * vy + a21 * vx - k * c * (vx + vy),
        )

    return rhs


def _rk4_run(rhs, state, dt, n, out=None, offset=0):
    vx, vy, c = state
    h2 = 0.5 * dt
    h6 = dt / 6.0
    for i in range(n):
        k1 = rhs(vx, vy, c)
        k2 = rhs(vx + h2 * k1[0], vy + h2 * k1[1], c + h2 * k1[2])
        k3 = rhs(vx + h2 * k2[0], vy + h2 * k2[1], c + h2 * k2[2])
        k4 = rhs(vx + dt * k3[0], vy + dt * k3[1], c + dt * k3[2])
        vx += h6 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
        vy += h6 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
        c += h6 * (k1[2] + 2 * k2[2] + 2 * k3[2] + k4[2])
        if not (vx > 0 and vy > 0 and vx * vy - c * c > 0):
            raise PositivityLost(
                f"covariance lost positive definiteness at step {offset + i + 1} "
                f"(v_x={vx:.3e}, v_y={vy:.3e}, c={c:.3e}); reduce dt"
            )
        if out is not None:
            out[offset + i + 1] = (vx, vy, c)
    return vx, vy, c


def integrate_riccati(
    params: SystemParams, v_init: CovarianceState, t_final: float, dt: float
) -> tuple[np.ndarray, np.ndarray]:
    """Integrate dV/dt = A V + V A^T + D I - 4 eta mu V^2 with classical RK4.

    Returns ``(times, covs)`` where ``covs[i] = (v_x, v_y, c)`` at
    ``times[i]``.
    """
    _require_stable(params)
    check_step(params, dt)
    n = _n_steps(t_final, dt)
    dd = drift_matrix(params)
    rhs = _riccati_field(frame_drift(params), dd.d, dd.k_gain)
    covs = np.empty((n + 1, 3))
    covs[0] = (v_init.v_x, v_init.v_y, v_init.c)
    _rk4_run(rhs, tuple(covs[0]), dt, n, out=covs)
    return dt * np.arange(n + 1), covs


def slowest_rate(params: SystemParams) -> float:
    """Slowest decay rate of the conditioned mean dynamics, min(-Re eig(A - 4 eta mu V))."""
    dd = drift_matrix(params)
    v = conditional_steady_state(params.replace(theta=math.pi / 4)).matrix
    return float(np.min(-np.linalg.eigvals(dd.a - dd.k_gain * v).real))


def relax_riccati(
    params: SystemParams,
    v_init: CovarianceState,
    tol: float = 1e-12,
    dt: float | None = None,
    max_time: float | None = None,
) -> CovarianceState:
    """Integrate the Riccati ODE until the relative rate of change drops below ``tol``."""
    _require_stable(params)
    dt = max_step(params) if dt is None else dt
    check_step(params, dt)
    g = params.gamma
    max_time = 1e4 / g if max_time is None else max_time
    dd = drift_matrix(params)
    a = frame_drift(params)
    rhs = _riccati_field(a, dd.d, dd.k_gain)
    chunk = max(1, int(round(1.0 / (g * dt))))
    state = (v_init.v_x, v_init.v_y, v_init.c)
    steps = 0
    rate = math.inf
    while steps * dt < max_time:
        state = _rk4_run(rhs, state, dt, chunk, offset=steps)
        steps += chunk
        vx, vy, c = state
        v = np.array([[vx, c], [c, vy]])
        av = a @ v
        scale = np.linalg.norm(av + av.T) + dd.d * math.sqrt(2) + dd.k_gain * np.linalg.norm(v @ v)
        dvx, dvy, dc = rhs(vx, vy, c)
        rate = math.sqrt(dvx * dvx + dvy * dvy + 2 * dc * dc) / scale
        if rate <= tol:
            return CovarianceState(vx, vy, c, SolverInfo("riccati_ode", steps, rate))
    raise NoConvergence("Riccati integration did not settle", rate, steps)


@dataclass
class TrajectoryRecord:
    """One simulated conditional trajectory and its measurement record.

    ``record[i]`` holds the (x, y) record increments over
    ``[times[i], times[i+1]]``; it is ``None`` without measurement.
    """

    times: np.ndarray
    means: np.ndarray
    covariances: np.ndarray
    record: np.ndarray | None
    seed: int | None
    feedback_gain: float
    params: SystemParams = field(repr=False)

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0])

    @property
    def record_x(self):
        return None if self.record is None else self.record[:, 0]

    @property
    def record_y(self):
        return None if self.record is None else self.record[:, 1]

    def covariance(self, i: int) -> CovarianceState:
        return CovarianceState(*map(float, self.covariances[i]))

    def to_dict(self) -> dict:
        return {
            "params": self.params.to_dict(),
            "seed": self.seed,
            "feedback_gain": self.feedback_gain,
            "dt": self.dt,
            "times": self.times.tolist(),
            "means": self.means.tolist(),
            "covariances": self.covariances.tolist(),
            "record": None if self.record is None else self.record.tolist(),
        }


def _measurement_scale(params: SystemParams) -> float:
    return 2.0 * math.sqrt(params.eta * params.mu)


def simulate_trajectory(
    params: SystemParams,
    v_init: CovarianceState | None = None,
    t_final: float = 10.0,
    dt: float | None = None,
    seed: int | None = 0,
    feedback_gain: float = 0.0,
    mean_init=(0.0, 0.0),
) -> TrajectoryRecord:
    """Simulate one conditional trajectory with its measurement record.

    ``v_init`` defaults to the conditional steady state; ``dt`` defaults to
    the step guard. Increments come from ``numpy.random.default_rng(seed)``
    (PCG64), two standard normals per step scaled by sqrt(dt).
    """
    _require_stable(params)
    dt = default_step(params, t_final) if dt is None else dt
    if v_init is None:
        v_init = conditional_steady_state(params)
    times, covs = integrate_riccati(params, v_init, t_final, dt)
    n = len(times) - 1
    s = _measurement_scale(params)
    fb = frame_drift(params) - feedback_gain * np.eye(2)
    (b11, b12), (b21, b22) = fb.tolist()

    means = np.empty((n + 1, 2))
    means[0] = mean_init
    if s > 0:
        rng = np.random.default_rng(seed)
        dw = rng.standard_normal((n, 2)) * math.sqrt(dt)
        record = np.empty((n, 2))
    else:
        dw = np.zeros((n, 2))
        record = None
    x, y = float(means[0, 0]), float(means[0, 1])
    for i in range(n):
        vx, vy, c = covs[i]
        wx, wy = dw[i]
        if record is not None:
            record[i] = (x * dt + wx / s, y * dt + wy / s)
        x, y = (
            x + (b11 * x + b12 * y) * dt + s * (vx * wx + c * wy),
            y + (b21 * x + b22 * y) * dt + s * (c * wx + vy * wy),
        )
        means[i + 1] = (x, y)
    if not np.all(np.isfinite(means)):
        raise NonFiniteState("conditional means became non-finite")
    return TrajectoryRecord(times, means, covs, record, seed, float(feedback_gain), params)


def refilter(record: TrajectoryRecord, params: SystemParams, v_init: CovarianceState | None = None) -> np.ndarray:
    """Run the conditional-mean filter over a stored measurement record.

    Filtering with the parameters that generated the record reproduces the
    stored means. ``params`` may differ in the model (chi, delta, ...), but
    the measurement scaling eta * mu must match the record's.
    """
    if record.record is None:
        raise ParamsMismatch("trajectory has no measurement record")
    if not math.isclose(params.eta * params.mu, record.params.eta * record.params.mu, rel_tol=1e-12):
        raise ParamsMismatch(
            f"eta*mu={params.eta * params.mu:g} does not match the record's "
            f"{record.params.eta * record.params.mu:g}"
        )
    if v_init is None:
        v_init = record.covariance(0)
    dt = record.dt
    _, covs = integrate_riccati(params, v_init, float(record.times[-1]), dt)
    if len(covs) != len(record.times):
        raise ParamsMismatch("time grid does not match the record")
    k = 4 * params.eta * params.mu
    fb = frame_drift(params) - record.feedback_gain * np.eye(2)
    (b11, b12), (b21, b22) = fb.tolist()
    n = len(record.record)
    means = np.empty((n + 1, 2))
    means[0] = record.means[0]
    x, y = float(means[0, 0]), float(means[0, 1])
    for i in range(n):
        vx, vy, c = covs[i]
        rx, ry = record.record[i]
        ix, iy = rx - x * dt, ry - y * dt
        x, y = (
            x + (b11 * x + b12 * y) * dt + k * (vx * ix + c * iy),
            y + (b21 * x + b22 * y) * dt + k * (c * ix + vy * iy),
        )
        means[i + 1] = (x, y)
    return means


@dataclass
class EnsembleSummary:
    """Ensemble statistics of the conditional means at the final time."""

    n_trajectories: int
    t_final: float
    dt: float
    seed: int | None
    feedback_gain: float
    final_means: np.ndarray = field(repr=False)
    second_moment: np.ndarray
    standard_error: np.ndarray
    conditional: np.ndarray
    predicted: np.ndarray

    @property
    def unconditional(self) -> np.ndarray:
        """Ensemble estimate of E[<x><x>^T] + V."""
        return self.second_moment + self.conditional

    @property
    def z_scores(self) -> np.ndarray:
        return (self.unconditional - self.predicted) / self.standard_error

    def to_dict(self) -> dict:
        return {
            "n_trajectories": self.n_trajectories,
            "t_final": self.t_final,
            "dt": self.dt,
            "seed": self.seed,
            "feedback_gain": self.feedback_gain,
            "mean_second_moment": self.second_moment.tolist(),
            "standard_error": self.standard_error.tolist(),
            "conditional_covariance": self.conditional.tolist(),
            "unconditional_estimate": self.unconditional.tolist(),
            "unconditional_predicted": self.predicted.tolist(),
            "z_scores": self.z_scores.tolist(),
        }


def simulate_ensemble(
    params: SystemParams,
    n_trajectories: int,
    t_final: float = 10.0,
    dt: float | None = None,
    seed: int | None = 0,
    feedback_gain: float = 0.0,
    v_init: CovarianceState | None = None,
    mean_init=(0.0, 0.0),
    increments: np.ndarray | None = None,
) -> EnsembleSummary:
    """Vectorized Euler-Maruyama over many independent trajectories.

    Only terminal means are kept. ``increments``, if given, supplies the
    Wiener increments directly with shape (n_steps, n_trajectories, 2); this
    allows runs at different dt to share one Brownian path.
    """
    _require_stable(params)
    dt = default_step(params, t_final) if dt is None else dt
    if v_init is None:
        v_init = conditional_steady_state(params)
    times, covs = integrate_riccati(params, v_init, t_final, dt)
    n = len(times) - 1
    s = _measurement_scale(params)
    step = np.eye(2) + dt * (frame_drift(params) - feedback_gain * np.eye(2))
    if increments is not None and increments.shape != (n, n_trajectories, 2):
        raise ValueError(f"increments must have shape {(n, n_trajectories, 2)}, got {increments.shape}")
    rng = np.random.default_rng(seed)
    sqrt_dt = math.sqrt(dt)
    m = np.tile(np.asarray(mean_init, dtype=float), (n_trajectories, 1))
    for i in range(n):
        vx, vy, c = covs[i]
        gain = s * np.array([[vx, c], [c, vy]])
        dw = increments[i] if increments is not None else rng.standard_normal((n_trajectories, 2)) * sqrt_dt
        m = m @ step.T + dw @ gain
    if not np.all(np.isfinite(m)):
        raise NonFiniteState("ensemble means became non-finite")

    products = m[:, :, None] * m[:, None, :]
    second = products.mean(axis=0)
    stderr = products.std(axis=0, ddof=1) / math.sqrt(n_trajectories)
    vx, vy, c = covs[-1]
    conditional = np.array([[vx, c], [c, vy]])
    predicted = unconditional_steady_state(params, feedback_gain).matrix
    return EnsembleSummary(
        n_trajectories=n_trajectories,
        t_final=float(times[-1]),
        dt=dt,
        seed=seed,
        feedback_gain=float(feedback_gain),
        final_means=m,
        second_moment=second,
        standard_error=stderr,
        conditional=conditional,
        predicted=predicted,
    )


def thermal_state(params: SystemParams) -> CovarianceState:
    """Uncorrelated bath state with V_X = V_Y = N + 1/2."""
    v = params.n_thermal + 0.5
    return CovarianceState(v, v, 0.0)
