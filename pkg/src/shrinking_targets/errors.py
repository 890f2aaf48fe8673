"""Exception hierarchy shared by every module.

The CLI maps each class onto a fixed exit code, so library code should raise
the most specific class that applies.
"""


class LabError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(LabError, ValueError):
    """An argument or generated value violates its contract."""


class ConfigError(ValidationError):
    """A config file or spec string is malformed or has unknown keys."""


class ResourceCapError(LabError):
    """A safety cap (table depth, arc count, search width) was exceeded."""


class PrecisionError(LabError):
    """Certified arithmetic could not decide a comparison within the caps."""


class ConstructionError(LabError):
    """A constructive procedure (e.g. the greedy theta builder) failed."""


class InternalConsistencyError(LabError):
    """A property guaranteed by theory failed; indicates a bug."""
