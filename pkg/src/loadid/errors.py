"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: validation problems exit 2, I/O and
parse problems exit 3, numerical failures exit 4.
"""


class LoadIdError(Exception):
    """Base class for all errors raised by this package."""


class InvalidParameterError(LoadIdError):
    """A model parameter violates its physical constraints."""


class InvalidInputError(LoadIdError):
    """An operation was called with inputs outside its contract."""


class InvalidConfigError(LoadIdError):
    """An optimizer or scenario configuration is inconsistent."""


class InfeasibleOperatingPointError(LoadIdError):
    """No steady state exists for the demanded operating point."""


class SimulationDivergedError(LoadIdError):
    """The trajectory left the finite range during integration."""

    def __init__(self, time_index: int):
        super().__init__(f"non-finite state at sample index {time_index}")
        self.time_index = time_index


class ParseError(LoadIdError):
    """A file could not be parsed; carries the offending line number."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class IncompatibleLibraryError(LoadIdError):
    """Source-task records do not share a common grid descriptor."""
