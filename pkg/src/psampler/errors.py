"""Exception types shared across the sampler modules."""


class SamplerError(Exception):
    """Base class for all errors raised by psampler."""


class BehindCamera(SamplerError, ValueError):
    """A point has non-positive depth in the camera frame."""


class InvalidDepth(SamplerError, ValueError):
    """An image-space depth is not strictly positive."""


class NoIntersection(SamplerError):
    """The central camera ray does not hit the scene boundary."""


class DegenerateDistribution(SamplerError):
    """A probability grid carries zero total mass."""


class ConfigError(SamplerError):
    """Malformed run configuration, scene description or camera rig."""


class EmptyGridWarning(UserWarning):
    """No projected scene mass landed inside a camera frustum."""
