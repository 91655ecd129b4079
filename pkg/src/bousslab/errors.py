"""Exception hierarchy for the simulation lab."""


class BousslabError(Exception):
    """Base class for all package errors."""


class ConfigurationError(BousslabError):
    """Invalid or inconsistent configuration input."""


class HistoryUnderrunError(BousslabError):
    """A delayed-trace query fell before the buffered history span."""


class NumericalError(BousslabError):
    """Linear-algebra breakdown (singular closure, failed factorization)."""


class NonlinearDivergenceError(BousslabError):
    """Picard iteration failed to converge, or the state blew up.

    Diagnostic for leaving the small-data regime; carries the step index
    and time at which the run died.
    """

    def __init__(self, message, t=None, step=None):
        super().__init__(message)
        self.t = t
        self.step = step


class CertificationError(BousslabError):
    """Decay certification refused (domain length out of range)."""


class InadmissibleGainsError(BousslabError):
    """Feedback gains violate the admissibility constraint."""


class InconsistentParametersError(BousslabError):
    """The rate-optimization bracket has the wrong signs for these parameters."""
