"""Exception types shared across the package."""


class GrassnavError(Exception):
    """Base class for all package-specific errors."""


class OutOfBoundsError(GrassnavError):
    """A world point or cell index is not covered by the grid."""


class DimensionMismatchError(GrassnavError):
    """Paired images do not have identical dimensions."""


class WrongFrameError(GrassnavError):
    """A point cloud is not in the coordinate frame the operation requires."""


class StaleStampError(GrassnavError):
    """A message arrived with a stamp older than its channel's newest stamp."""


class SensorOutsideWorldError(GrassnavError):
    """The simulated sensor pose lies outside the world extent."""


class SensorOutsideWindowError(GrassnavError):
    """The sensor cell is not inside the local costmap window."""


class NoPathError(GrassnavError):
    """The goal is unreachable on the given costmap."""


class InvalidEndpointError(GrassnavError):
    """Plan start or goal is blocked or out of bounds."""


class InvalidScenarioError(GrassnavError):
    """A scenario file or object failed validation."""
