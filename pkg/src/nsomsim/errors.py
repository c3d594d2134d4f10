"""Exception hierarchy shared by all nsomsim modules."""


class NsomError(Exception):
    """Base class for all nsomsim errors."""


class NumericalError(NsomError):
    """Base class for failures of a numerical evaluation."""


class SingularPoint(NumericalError, ValueError):
    """Observation point coincides (within tolerance) with a source."""


class NonConverged(NumericalError):
    """A quadrature failed its convergence check."""


class InvalidGeometry(NsomError, ValueError):
    pass


class NegativeTime(NsomError, ValueError):
    pass


class InvalidPopulation(NsomError, ValueError):
    pass


class UnresolvedPeaks(NsomError):
    """Fewer than two peaks were found where two were required."""


class ConfigError(NsomError):
    pass


class ParseError(ConfigError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ValidationError(ConfigError, ValueError):
    pass
