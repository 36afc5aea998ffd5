"""
Exception hierarchy shared by every gslacsim app.

Management commands map these onto process exit codes (see apps/cli/base.py).
"""


class GslacError(Exception):
    """Base class for all domain errors."""


class ValidationError(GslacError, ValueError):
    """A domain value violates its invariants (negative field, aliasing, ...)."""


class ConfigurationError(GslacError):
    """A run configuration or preset document is malformed."""


class DataFileError(GslacError):
    """A trace, preset or config file cannot be read or written."""


class NumericalError(GslacError):
    """A numerical procedure failed or its input is degenerate."""


class NonHermitianError(NumericalError):
    """Matrix handed to the eigensolver is not Hermitian."""


class NoCrossingError(NumericalError):
    """Field range does not bracket a level anti-crossing."""


class NoFeatureError(NumericalError):
    """Trace carries no resolvable lineshape feature."""


class SingularRateModelError(NumericalError):
    """Rate equations have no unique steady state."""


class NonIdentifiableError(NumericalError):
    """Data cannot determine the requested model parameters."""
