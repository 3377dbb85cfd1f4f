"""Exception hierarchy for the engine.

Everything raised on purpose derives from EngineError so callers (and the
CLI) can catch one type and report the message.
"""


class EngineError(Exception):
    """Base class for all errors raised by this package."""


class TensorError(EngineError):
    """Bad shapes or non-finite values in a tensor operation."""


class ManifestError(EngineError):
    """Invalid network manifest or weight blob."""


class GraphError(EngineError):
    """Misuse of forward/backward on a loaded network."""


class UnknownLayerError(GraphError):
    """A layer name that does not exist in the network."""

    def __init__(self, name: str, available):
        self.layer = name
        self.available = tuple(available)
        listing = ", ".join(self.available)
        super().__init__(f"unknown layer '{name}'; available layers: {listing}")


class ObjectiveError(EngineError):
    """Invalid objective construction or evaluation."""


class OptimizerError(EngineError):
    """Invalid run configuration or a diverged optimization."""


class ImageError(EngineError):
    """Unreadable, unsupported, or malformed image data."""
