"""Exception hierarchy shared by the pipeline stages.

The CLI maps each family onto an exit code, so stages raise these rather
than returning status values.
"""


class HashjackError(Exception):
    """Base class for all toolkit errors."""

    exit_code = 1


class ConfigError(HashjackError):
    """Invalid configuration (exit code 1)."""


class InputError(HashjackError):
    """Missing or unreadable input file (exit code 2)."""

    exit_code = 2


class AnalysisError(HashjackError):
    """A core analytic stage could not produce a result (exit code 3)."""

    exit_code = 3
