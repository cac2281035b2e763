"""Exception hierarchy shared by all modules."""


class NetworkError(Exception):
    """Base class for every error raised by this package."""


class DivisionByZero(NetworkError, ZeroDivisionError):
    pass


class DimensionMismatch(NetworkError, ValueError):
    pass


class SingularMatrix(NetworkError, ArithmeticError):
    pass


class RankDeficient(NetworkError, ArithmeticError):
    pass


class PoleAtPoint(NetworkError, ArithmeticError):
    """A denominator vanishes (numerically) at an evaluation point."""


class DegreeOverflow(NetworkError, OverflowError):
    """A reduced numerator or denominator exceeds the configured degree ceiling."""


class InvalidTransformation(NetworkError, ValueError):
    pass


class SelfLoopSingular(NetworkError, ArithmeticError):
    """Self-loop removal would divide by ``1 - G_jj`` with ``G_jj == 1``."""


class NoFeasibleSelection(NetworkError):
    pass


class ModelFormatError(NetworkError, ValueError):
    """Malformed model file or partition specification."""
