"""Exception types shared across the package.

All domain errors derive from DletError so service and CLI layers can map
them to client-facing failures without pattern matching on messages.
"""


class DletError(Exception):
    """Base class for all package-specific errors."""


class UnsupportedOrderError(DletError, ValueError):
    """Requested wavelet order is outside the supported table."""


class LengthError(DletError, ValueError):
    """Sample vector length incompatible with the requested transform."""


class ConvergenceError(DletError, RuntimeError):
    """An iterative construction failed to converge."""


class GridTooSmallError(DletError, ValueError):
    """Requested grid does not cover support growth; message states the
    extent that would be required."""


class HorizonError(DletError, ValueError):
    """A scaled evaluation time falls beyond the cached time horizon."""


class IndexRangeError(DletError, ValueError):
    """A requested translation or level index is outside the built range."""
