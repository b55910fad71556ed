"""Exception hierarchy shared by all exemplar modules."""


class ExemplarError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(ExemplarError):
    """A configuration value violates its documented constraint."""


class DimensionError(ExemplarError):
    """Array shapes or declared dimensions do not chain."""


class ModelFormatError(ExemplarError):
    """A model file does not parse as the documented text format."""


class CapabilityError(ExemplarError):
    """An operation needs a capability the given component lacks,
    e.g. analytic gradients from a subprocess-backed model."""


class PluginError(ExemplarError):
    """A plugin child process failed: died, timed out, or reported an error."""


class ProtocolError(PluginError):
    """A plugin response violates the wire protocol contract."""


class BenchError(ExemplarError):
    """A benchmark batch aborted; ``partial`` holds results gathered so far."""

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial
