"""Exception hierarchy.

Each error family carries a distinct command-line exit code so that the CLI can
map failures without string matching.
"""


class IstError(Exception):
    """Base class. ``where`` names the originating ``module.operation``."""

    exit_code = 1

    def __init__(self, message, where=None):
        super().__init__(message)
        self.where = where

    def __str__(self):
        msg = super().__str__()
        return f"{self.where}: {msg}" if self.where else msg


class ConfigError(IstError, ValueError):
    exit_code = 2


class DomainTruncationError(IstError, ValueError):
    """Field not decayed at the box edges, or a kernel tail not resolved."""

    exit_code = 3


class TruncationError(DomainTruncationError):
    pass


class SingularWavenumberError(IstError, ValueError):
    exit_code = 4


class SpectralSingularityError(IstError, ArithmeticError):
    exit_code = 4


class DegeneracyError(IstError, ValueError):
    exit_code = 4


class InconclusiveOrderError(IstError, ArithmeticError):
    exit_code = 4


class ContourError(IstError, ArithmeticError):
    """Contour passes too close to a zero; retry with a perturbed rectangle."""

    exit_code = 4


class SpectralCountError(IstError, ArithmeticError):
    exit_code = 4


class IllConditionedError(IstError, ArithmeticError):
    exit_code = 5


class ConsistencyError(IstError, ArithmeticError):
    exit_code = 5


class EvolutionRangeError(IstError, OverflowError):
    exit_code = 5


class CalibrationMissingError(IstError, LookupError):
    exit_code = 5


class BlowUpError(IstError, FloatingPointError):
    exit_code = 6


class InsufficientDataError(IstError, ValueError):
    exit_code = 2


class IncompatibleError(IstError, ValueError):
    exit_code = 8


class SingularityError(IstError, ValueError):
    exit_code = 4


#: exit code used by ``compare`` when metrics exceed tolerances
EXIT_TOLERANCE = 7
