"""Exception hierarchy shared by all pipeline stages.

Each class carries the process exit code the CLI maps it to:
2 = validation, 3 = infeasible, 4 = I/O.
"""


class SliceforgeError(Exception):
    exit_code = 1

    def __init__(self, message, hint=None):
        super().__init__(message)
        self.hint = hint


class ValidationError(SliceforgeError):
    """Bad input data, header, config, or artifact schema."""

    exit_code = 2


class IngestError(ValidationError):
    """Raw volume or mesh content does not match its descriptor."""


class InfeasibleError(SliceforgeError):
    """No assembly order or packing exists under the hard constraints."""

    exit_code = 3


class IOFailure(SliceforgeError):
    """File missing or unreadable."""

    exit_code = 4
