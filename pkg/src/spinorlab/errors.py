"""Exception hierarchy shared by every module.

Each class carries the process exit code the command line maps it to.
"""


class SpinorLabError(Exception):
    exit_code = 1


class ConfigError(SpinorLabError):
    """Malformed or unknown configuration input."""

    exit_code = 1


class PreconditionError(SpinorLabError, ValueError):
    """A numeric input violates an operation's precondition."""

    exit_code = 2


class DegenerateConfigurationError(PreconditionError):
    pass


class ConvergenceError(SpinorLabError):
    exit_code = 3


class OutputError(SpinorLabError, OSError):
    exit_code = 4
