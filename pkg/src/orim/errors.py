"""Exception types raised across the package.

Validation problems derive from :class:`ValueError` so callers that only care
about "bad input" can catch that; the CLI maps them to exit code 1.
"""


class OrimError(Exception):
    """Base class for all package errors."""


class InvalidSizeError(OrimError, ValueError):
    pass


class DomainError(OrimError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class CappedOrderError(OrimError, ValueError):
    def __init__(self, family, p_max, cap):
        super().__init__(
            f"p_max={p_max} exceeds the double-precision stability cap "
            f"of {cap} for {family}"
        )
        self.family = family
        self.p_max = p_max
        self.cap = cap


class DimensionError(OrimError, ValueError):
    pass


class GroupMismatchError(DimensionError):
    pass


class IDXFormatError(OrimError, ValueError):
    pass


class TruncatedFileError(IDXFormatError):
    def __init__(self, path, expected, actual):
        super().__init__(
            f"{path}: truncated IDX payload, expected {expected} bytes "
            f"but found {actual}"
        )
        self.expected = expected
        self.actual = actual


class PairingError(IDXFormatError):
    pass


class MissingCacheError(OrimError, RuntimeError):
    """backward() called without a preceding forward()."""


class DivergenceError(OrimError, RuntimeError):
    pass
