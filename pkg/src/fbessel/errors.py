"""Exception hierarchy shared by all modules.

Each class carries the process exit status the command line maps it to.
"""


class FbesselError(Exception):
    """Base class for package errors."""

    exit_code = 3


class ConfigError(FbesselError, ValueError):
    """Invalid parameter or configuration entry.

    Parameters
    ----------
    message : str
        Human-readable description.
    field : str, optional
        Name of the offending configuration field.
    """

    exit_code = 2

    def __init__(self, message, field=None):
        super().__init__(message if field is None else f"{field}: {message}")
        self.field = field


class ConsistencyError(FbesselError, ArithmeticError):
    """A numerical invariant that theory guarantees was violated."""

    exit_code = 3


class EmbeddingError(ConsistencyError):
    """Circulant embedding produced a materially negative eigenvalue."""


class NotPositiveDefiniteError(ConsistencyError):
    """Covariance matrix failed the Cholesky factorization."""


class DegeneratePathError(FbesselError):
    """A Bessel path hit zero at an interior grid node."""

    exit_code = 3
