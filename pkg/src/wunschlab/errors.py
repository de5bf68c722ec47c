"""Exception types raised by the library.

Blowup of a geodesic is *not* an error; it is reported through status codes on
trajectories and reports.
"""


class WunschLabError(Exception):
    pass


class GridMismatch(WunschLabError, ValueError):
    pass


class DegenerateMeanError(WunschLabError, ValueError):
    """A degenerate inertia operator was asked to invert data with nonzero mean."""


class DegenerateKindError(WunschLabError, ValueError):
    """The operation needs a non-degenerate inertia operator."""


class NotADiffeo(WunschLabError, ValueError):
    pass


class NonFiniteState(WunschLabError, FloatingPointError):
    pass


class MeanNotZero(WunschLabError, ValueError):
    pass


class ConstantField(WunschLabError, ValueError):
    pass


class NotMonotone(WunschLabError, ValueError):
    pass


class EndpointNotZero(WunschLabError, ValueError):
    pass


class SupportOverflow(WunschLabError, ValueError):
    pass


class DependentPlane(WunschLabError, ValueError):
    pass


class OrderViolation(WunschLabError, ValueError):
    pass


class HorizonExceeded(WunschLabError, RuntimeError):
    pass


class ConfigError(WunschLabError, ValueError):
    pass
