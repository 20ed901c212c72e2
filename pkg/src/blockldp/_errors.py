"""Shared exception types.

The CLI maps these onto its exit-code contract: UsageError -> 2,
DataError and NumericalError -> 3, OSError -> 4.
"""


class UsageError(ValueError):
    """A parameter, flag or specification string is invalid."""


class DataError(ValueError):
    """An input stream is malformed, truncated or insufficient."""


class NumericalError(RuntimeError):
    """An iterative numerical procedure failed to converge."""
