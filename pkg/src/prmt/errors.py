"""Exception types raised across the package."""


class PrmtError(Exception):
    """Base class for all errors raised by :mod:`prmt`."""


class InvalidParams(PrmtError, ValueError):
    pass


class QuadratureNotConverged(PrmtError, ArithmeticError):
    pass


class NotConverged(PrmtError, ArithmeticError):
    pass


class BvpNotConverged(NotConverged):
    pass


class SeriesNotConverged(NotConverged):
    pass


class ConfluentParameters(PrmtError, ValueError):
    """Spike parameters are too close for a distinct-parameter formula."""


class SingularSystem(PrmtError, ArithmeticError):
    pass


class SingularCoefficient(PrmtError, ArithmeticError):
    """A coefficient denominator of a second-order ODE vanishes."""
