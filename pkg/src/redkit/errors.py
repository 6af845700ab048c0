"""Exception hierarchy shared across the package.

Two broad classes exist so callers (and the CLI exit-code mapping) can tell
bad inputs apart from failures that happen mid-computation: ``InputError``
maps to exit code 1, ``ComputationError`` to exit code 2.
"""


class RedkitError(Exception):
    """Base class for all errors raised by this package."""


class InputError(RedkitError):
    """Invalid input data, arguments, or configuration."""


class ComputationError(RedkitError):
    """A computation failed after inputs were accepted."""


class BackendError(ComputationError):
    """A compression backend is unavailable or its subprocess failed."""


class UndefinedDistanceError(InputError):
    """A frequency-based distance is undefined for the given terms."""


class KgParseError(InputError):
    """Malformed binary knowledge-graph encoding."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset


class EditApplyError(InputError):
    """An edit operation is invalid for the current graph state."""

    def __init__(self, message: str, op_index: int):
        super().__init__(message)
        self.op_index = op_index


class FitError(ComputationError):
    """Regression fit could not be carried out (degenerate design)."""


class DivergenceError(ComputationError):
    """Network training produced a non-finite loss or failed to converge."""
