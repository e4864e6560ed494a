"""Model parameters, validation and derived quantities.

All rates (gamma, chi, delta, mu) share one unit; results only depend on
their ratios to gamma, so the conventional choice is gamma = 1.
"""

from __future__ import annotations

import dataclasses
import math
import warnings
from dataclasses import dataclass

from .errors import (
    EfficiencyOutOfRange,
    InvalidParameters,
    NegativeRate,
    NonPositiveGamma,
    NonPositiveVariance,
    ParameterError,
)

#: Ground-state quadrature variance.
ZERO_POINT = 0.5

#: Drive phase for which the squeezed axis lies close to X.
DEFAULT_THETA = math.pi / 4

PARAM_NAMES = ("gamma", "chi", "delta", "theta", "mu", "eta", "n_thermal")


@dataclass(frozen=True)
class SystemParams:
    """Rotating-frame model of a parametrically driven, measured oscillator.

    Attributes
    ----------
    gamma : float
        Mechanical amplitude damping rate.
    chi : float
        Parametric nonlinearity, ``omega_m * k_r / (2 k_0)``.
    delta : float
        Pump half-detuning; the drive sits at ``2 (omega_m + delta)``.
    theta : float
        Drive phase relative to the lock-in reference, radians.
    mu : float
        Measurement strength.
    eta : float
        Detection efficiency in [0, 1].
    n_thermal : float
        Mean bath phonon number (real valued).
    """

    gamma: float = 1.0
    chi: float = 0.0
    delta: float = 0.0
    theta: float = DEFAULT_THETA
    mu: float = 0.0
    eta: float = 1.0
    n_thermal: float = 0.0

    def replace(self, **changes) -> "SystemParams":
        return dataclasses.replace(self, **changes)

    def normalized(self) -> "SystemParams":
        """Same physics with every rate expressed in units of gamma."""
        g = self.gamma
        return self.replace(gamma=1.0, chi=self.chi / g, delta=self.delta / g, mu=self.mu / g)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "SystemParams":
        data = dict(data)
        if "n" in data:
            data["n_thermal"] = data.pop("n")
        unknown = set(data) - set(PARAM_NAMES)
        if unknown:
            raise ParameterError(f"unknown parameter(s): {', '.join(sorted(unknown))}")
        return cls(**{k: float(v) for k, v in data.items()})

    @property
    def measurement_rate(self) -> float:
        """Effective conditioning rate eta * mu."""
        return self.eta * self.mu


@dataclass(frozen=True)
class PhysicalParams:
    """Device-level description mapped onto the normalized model.

    ``omega_m`` is the mechanical angular frequency, ``quality`` the
    mechanical Q (``omega_m / gamma``) and ``spring_mod_ratio`` the relative
    spring-constant modulation depth ``k_r / k_0``.
    """

    omega_m: float
    quality: float
    spring_mod_ratio: float

    def __post_init__(self):
        problems = []
        if not self.omega_m > 0:
            problems.append(f"omega_m must be > 0, got {self.omega_m}")
        if not self.quality > 0:
            problems.append(f"quality must be > 0, got {self.quality}")
        if self.spring_mod_ratio < 0:
            problems.append(f"spring_mod_ratio must be >= 0, got {self.spring_mod_ratio}")
        if problems:
            raise InvalidParameters("; ".join(problems), problems)
        if self.spring_mod_ratio > 0.1:
            warnings.warn(
                f"k_r/k_0 = {self.spring_mod_ratio:g} is not small; the rotating-wave model may not apply",
                stacklevel=2,
            )
        if self.chi / self.omega_m > 0.1:
            warnings.warn(
                f"chi/omega_m = {self.chi / self.omega_m:g} exceeds 0.1; rotating-wave approximation is doubtful",
                stacklevel=2,
            )

    @property
    def gamma(self) -> float:
        return self.omega_m / self.quality

    @property
    def chi(self) -> float:
        return 0.5 * self.omega_m * self.spring_mod_ratio

    def to_system(self, delta=0.0, mu=0.0, eta=1.0, n_thermal=0.0, theta=DEFAULT_THETA) -> SystemParams:
        """Normalized parameters (gamma = 1); ``delta`` and ``mu`` are in units of gamma."""
        return SystemParams(
            gamma=1.0,
            chi=self.chi / self.gamma,
            delta=delta,
            theta=theta,
            mu=mu,
            eta=eta,
            n_thermal=n_thermal,
        )


@dataclass(frozen=True)
class DerivedQuantities:
    z: float
    n_ba: float
    chi_prime: float
    diffusion: float


def validate(params: SystemParams) -> SystemParams:
    """Check the admissible parameter ranges and return ``params`` unchanged.

    Raises the specific :class:`ParameterError` subclass when one constraint
    fails, or :class:`InvalidParameters` listing all of them otherwise.
    """
    found = []
    if not (params.gamma > 0 and math.isfinite(params.gamma)):
        found.append((NonPositiveGamma, f"gamma must be positive and finite, got {params.gamma}"))
    if not 0.0 <= params.eta <= 1.0:
        found.append((EfficiencyOutOfRange, f"eta must lie in [0, 1], got {params.eta}"))
    for name in ("mu", "chi", "n_thermal"):
        value = getattr(params, name)
        if not value >= 0:
            found.append((NegativeRate, f"{name} must be >= 0, got {value}"))
    for name in ("delta", "theta"):
        value = getattr(params, name)
        if not math.isfinite(value):
            found.append((ParameterError, f"{name} must be finite, got {value}"))
    if not found:
        return params
    messages = [msg for _, msg in found]
    if len(found) == 1:
        cls, msg = found[0]
        raise cls(msg, messages)
    raise InvalidParameters("; ".join(messages), messages)


def is_stable(params: SystemParams) -> bool:
    """Below-threshold condition chi^2 < delta^2 + gamma^2 (strict)."""
    return params.chi**2 < params.delta**2 + params.gamma**2


def drift_eigenvalues(params: SystemParams) -> tuple[complex, complex]:
    """Eigenvalues ``-gamma +/- sqrt(chi^2 - delta^2)`` of the mean-value drift."""
    root = complex(params.chi**2 - params.delta**2) ** 0.5
    return (-params.gamma + root, -params.gamma - root)


def derived(params: SystemParams) -> DerivedQuantities:
    g = params.gamma
    n_ba = params.mu / (2 * g)
    z = 8 * params.eta * params.mu * g * (params.n_thermal + n_ba + 0.5)
    return DerivedQuantities(
        z=z,
        n_ba=n_ba,
        chi_prime=params.chi / math.sqrt(g * g + z),
        diffusion=2 * g * (params.n_thermal + 0.5) + params.mu,
    )


def chi_prime_estimate(physical: PhysicalParams, n_thermal: float, eta: float, mu_over_gamma: float) -> float:
    """High-temperature, negligible-back-action estimate of the normalized nonlinearity.

    Diagnostic only; the exact ``derived(params).chi_prime`` is used for all
    computation.
    """
    return physical.quality * physical.spring_mod_ratio / (4 * math.sqrt(2 * n_thermal * eta * mu_over_gamma))


def to_db(variance: float) -> float:
    """Squeezing in dB relative to the zero-point variance; positive means squeezed."""
    if not variance > 0:
        raise NonPositiveVariance(f"variance must be > 0, got {variance}")
    return -10.0 * math.log10(variance / ZERO_POINT)


def from_db(db: float) -> float:
    return ZERO_POINT * 10.0 ** (-db / 10.0)
