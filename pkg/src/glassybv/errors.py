"""Exception types raised across the package."""


class GlassyBVError(Exception):
    """Base class for all package errors."""


class ZeroVector(GlassyBVError, ValueError):
    pass


class LengthMismatch(GlassyBVError, ValueError):
    pass


class InvalidParameter(GlassyBVError, ValueError):
    pass


class Unreachable(GlassyBVError, ValueError):
    """Requested scaled strength lies outside what a family can attain."""


class RejectionStall(GlassyBVError, RuntimeError):
    pass


class AllZero(GlassyBVError, RuntimeError):
    """Every sampled success probability was exactly zero."""


class SingularJacobian(GlassyBVError, RuntimeError):
    pass


class NotConverged(GlassyBVError, RuntimeError):
    pass


class DegenerateParam(UserWarning):
    """Warning category: a parameter value hits a degenerate limit with a fallback."""
