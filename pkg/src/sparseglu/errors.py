"""Exception hierarchy shared across the package.

CLI exit codes map onto these: ConfigError -> 2, FormatError / DataError -> 3,
InvariantError -> 4.
"""


class SparsegluError(Exception):
    """Base class for all package errors."""


class ShapeError(SparsegluError):
    """Dimension mismatch between tensors/vectors/masks."""


class InputError(SparsegluError):
    """Invalid argument values (NaN inputs, out-of-range thresholds, ...)."""


class ConfigError(SparsegluError):
    """Invalid configuration (manifest fields, CLI flags)."""


class FormatError(SparsegluError):
    """Malformed on-disk data. Carries the byte offset where parsing failed."""

    def __init__(self, message: str, offset: int | None = None):
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class InvariantError(SparsegluError):
    """An internal invariant was violated; indicates a bug, not bad input."""
