"""Exception hierarchy shared across the package.

The CLI maps these onto process exit codes: configuration problems exit
with 2, data problems with 3, numerical or constraint failures with 4.
"""


class GroupEpiError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(GroupEpiError, ValueError):
    """A configuration value is missing, malformed, or out of range."""


class DataError(GroupEpiError, ValueError):
    """An input file or in-memory dataset is malformed or inconsistent."""


class ConstraintError(GroupEpiError, ValueError):
    """A numerical invariant or parameter ordering constraint failed."""


class InitializationError(ConstraintError):
    """Rejection sampling during chain initialization exhausted its budget."""


class MetricUndefinedError(DataError):
    """A requested metric is undefined for the given inputs."""
