"""Error taxonomy shared by all modules.

The CLI maps these onto exit codes: invalid arguments (ValueError and
subclasses) exit 2, resource limits exit 3.
"""


class ResourceLimitError(RuntimeError):
    """Raised when a computation would exceed a documented size cap."""


class UnsupportedError(ValueError):
    """Raised for parameter combinations the implementation deliberately
    does not cover (e.g. normalizations that are undefined there)."""
