class PseudoparaError(Exception):
    """Base class for package errors."""


class PreconditionError(PseudoparaError, ValueError):
    """An operation was called outside its stated preconditions."""


class ConfigError(PseudoparaError, ValueError):
    """A configuration file or experiment description is invalid."""


class SolverOverflowError(PseudoparaError, FloatingPointError):
    """The state sup-norm crossed the configured ceiling."""
