"""Exception hierarchy.

Each family carries the process exit code the CLI maps it to.
"""


class SqueezeError(Exception):
    exit_code = 1


class ParameterError(SqueezeError, ValueError):
    """A parameter lies outside its admissible range."""

    exit_code = 1

    def __init__(self, message, violations=None):
        super().__init__(message)
        self.violations = list(violations) if violations else [message]


class NonPositiveGamma(ParameterError):
    pass


class EfficiencyOutOfRange(ParameterError):
    pass


class NegativeRate(ParameterError):
    pass


class InvalidParameters(ParameterError):
    """Several constraints violated at once; see ``violations``."""


class NonPositiveVariance(ParameterError):
    pass


class StepTooLarge(ParameterError):
    pass


class ParamsMismatch(ParameterError):
    pass


class PhysicsDomainError(SqueezeError):
    exit_code = 2


class UnstableParameters(PhysicsDomainError):
    pass


class NoStableDetuning(PhysicsDomainError):
    pass


class NumericalError(SqueezeError):
    exit_code = 3


class NoConvergence(NumericalError):
    def __init__(self, message, residual=float("nan"), iterations=0):
        super().__init__(f"{message} (residual={residual:.3e}, iterations={iterations})")
        self.residual = residual
        self.iterations = iterations


class PositivityLost(NumericalError):
    pass


class NonFiniteState(NumericalError):
    pass


class NegativeRadicand(NumericalError):
    pass
