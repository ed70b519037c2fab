"""Exception hierarchy shared by the numerical modules and the CLI."""


class CrimeDelayError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(CrimeDelayError, ValueError):
    """Invalid parameters, history, or scenario configuration."""


class DomainError(CrimeDelayError, ValueError):
    """A function was evaluated outside its domain."""


class NumericalFault(CrimeDelayError, ArithmeticError):
    """A computation produced non-finite values or failed a runtime invariant."""


class BlowUpError(NumericalFault):
    pass


class PositivityError(NumericalFault):
    pass


class ConvergenceError(NumericalFault):
    pass


class NotEquilibriumError(NumericalFault):
    pass


class DegenerateCertificateError(NumericalFault):
    pass


class InconsistencyError(NumericalFault):
    """Crossing data failed verification against the characteristic function."""
