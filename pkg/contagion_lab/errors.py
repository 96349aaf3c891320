class ConfigurationError(ValueError):
    """Parameters that no model, run or bound formula accepts."""


class InvalidClusterError(ValueError):
    pass


class GraphFormatError(ValueError):
    """A serialized graph that cannot be decoded."""


class LengthMismatchError(GraphFormatError):
    pass


class TargetRangeError(GraphFormatError):
    pass


class TraceCorruptionError(ValueError):
    """A trace that could not have been produced on the graph it is paired with."""


class PreconditionError(ValueError):
    pass


class UnsupportedError(ValueError):
    pass


class FitError(ValueError):
    pass


class SchemaError(ValueError):
    pass


class SweepIOError(IOError):
    def __init__(self, message, manifest_path=None):
        super().__init__(message)
        self.manifest_path = manifest_path
