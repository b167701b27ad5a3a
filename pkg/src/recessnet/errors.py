"""Exception hierarchy shared by every subsystem.

The CLI maps the three top-level families onto exit codes (configuration 2,
data 3, numerical 4); everything else is a plain structural bug.
"""


class RecessnetError(Exception):
    """Base class for all package errors."""


class ConfigError(RecessnetError):
    """Invalid run configuration or parameter value."""


class ParameterError(ConfigError, ValueError):
    pass


class DataError(RecessnetError):
    """Input data is malformed, inconsistent or insufficient."""


class ParseError(DataError):
    def __init__(self, path, line, message):
        self.path = str(path)
        self.line = line
        super().__init__(f"{path}:{line}: {message}")


class SchemaError(DataError):
    pass


class DomainError(DataError, ValueError):
    """A transform received values outside its mathematical domain."""


class InsufficientDataError(DataError, ValueError):
    pass


class ExtrapolationError(DataError, ValueError):
    pass


class UnimputableColumnError(DataError, ValueError):
    pass


class ConstantColumnError(DataError, ValueError):
    pass


class InconsistentAnnouncementsError(DataError, ValueError):
    pass


class VintageGapError(DataError, LookupError):
    pass


class UndefinedMetricError(DataError, ValueError):
    """A curve or correlation is undefined for the given inputs."""


class StructuralError(RecessnetError, ValueError):
    """Shape mismatch or misuse of an object (e.g. a stale forward cache)."""


class NumericalError(RecessnetError):
    pass


class DivergedTrainingError(NumericalError):
    def __init__(self, message, epoch=None, history=None):
        super().__init__(message)
        self.epoch = epoch
        self.history = history if history is not None else []


class SearchFailedError(NumericalError):
    def __init__(self, message, trials=None):
        super().__init__(message)
        self.trials = trials if trials is not None else []


class RankDeficiencyError(NumericalError):
    pass


class DegenerateTargetError(DataError, ValueError):
    """Targets contain a single class where two are required."""
