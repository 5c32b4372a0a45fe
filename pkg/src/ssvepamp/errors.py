"""Exception hierarchy.

Each class carries the process exit code the CLI uses when the error
escapes a subcommand.
"""


class SsvepError(Exception):
    exit_code = 1


class ConfigurationError(SsvepError, ValueError):
    """Invalid parameters, band edges, grids or unknown identifiers."""

    exit_code = 2


class DataError(SsvepError, ValueError):
    """Malformed, non-finite or mis-shaped input data."""

    exit_code = 3


class NumericError(SsvepError, ArithmeticError):
    exit_code = 4


class DegenerateInputError(NumericError):
    """Input without usable variance (e.g. an all-zero window)."""


class ConvergenceWarning(UserWarning):
    pass


class StorageError(DataError):
    """Output location missing or not writable."""
