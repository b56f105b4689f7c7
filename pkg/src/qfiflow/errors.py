"""Exception hierarchy shared by the engine and the CLI."""


class QfiFlowError(Exception):
    """Base class for every error raised by this package."""


class DimensionMismatch(QfiFlowError, ValueError):
    pass


class NonHermitian(QfiFlowError, ValueError):
    pass


class ConvergenceFailure(QfiFlowError, ArithmeticError):
    pass


# eigensolver failure surfaced through the SLD path
EighFailure = ConvergenceFailure


class InvariantViolation(QfiFlowError):
    """A state left the physical set (trace, Hermiticity or positivity drift)."""

    def __init__(self, message, t=None):
        if t is not None:
            message = f"{message} (t={t:.17g})"
        super().__init__(message)
        self.t = t


class RateSingularity(QfiFlowError, ArithmeticError):
    """A time-dependent decay rate was evaluated inside its divergence guard."""

    def __init__(self, message, t=None):
        super().__init__(message)
        self.t = t


class StepSizeUnderflow(QfiFlowError):
    """The integrator could not advance; usually a rate singularity in the step."""

    def __init__(self, message, t=None):
        if t is not None:
            message = f"{message} (t={t:.17g})"
        super().__init__(message)
        self.t = t


class SupportInconsistency(QfiFlowError):
    """The parameter derivative has weight outside the support of the state."""


class NonpositiveQfi(QfiFlowError, ValueError):
    pass


class ConfigError(QfiFlowError):
    """Invalid scenario configuration; ``violations`` lists every problem found."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class SchemaError(ConfigError):
    pass


class RangeError(ConfigError):
    pass
