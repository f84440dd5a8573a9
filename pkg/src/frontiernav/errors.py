"""Exception types raised across the package."""


class FrontierNavError(Exception):
    """Base class for every error raised by frontiernav."""


class InvalidInputError(FrontierNavError, ValueError):
    pass


class ConfigurationError(FrontierNavError, ValueError):
    pass


class GenerationError(FrontierNavError, RuntimeError):
    pass


class InvalidPoseError(FrontierNavError, ValueError):
    pass


class EpisodeTerminatedError(FrontierNavError, RuntimeError):
    pass


class DegenerateGeometryError(FrontierNavError, ValueError):
    pass


class ResponseParseError(FrontierNavError, ValueError):
    """A model reply contained no usable JSON object."""


class AggregationError(FrontierNavError, ValueError):
    pass


class PlotInputError(FrontierNavError, ValueError):
    """Event log and world file do not describe the same episode."""


class EndpointError(FrontierNavError, RuntimeError):
    """The remote model endpoint could not be reached after all retries."""
