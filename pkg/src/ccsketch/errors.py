"""Exception and warning types raised across the package."""


class ConfigurationError(ValueError):
    """Invalid sketch or estimator parameters (k, alpha, delta, ...)."""


class ModelViolationError(ValueError):
    """Input violates the strict-Turnstile assumption at read time."""


class StreamCorruptionError(IndexError):
    """A stream update addressed a coordinate outside the declared domain."""


class IncompatibleSketchError(ValueError):
    """Two sketches with different (k, seed, params, d) cannot be combined."""


class ConvergenceError(ArithmeticError):
    """A series or quadrature failed to converge within its safeguards."""


class RegimeError(ValueError):
    """A bound was requested outside the parameter regime where it applies."""


class CorpusFormatError(ValueError):
    """Malformed vector file."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class NumericalInstabilityWarning(RuntimeWarning):
    """An estimator is being used in a regime where it is known to be unstable."""
