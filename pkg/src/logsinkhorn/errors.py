"""Exception and warning types shared across the package."""


class LogSinkhornError(Exception):
    """Base class for all errors raised by this package."""


class EmptyInput(LogSinkhornError, ValueError):
    """An input vector or collection was empty where data is required."""


class NonFiniteInput(LogSinkhornError, ValueError):
    """An input contained NaN or infinite entries."""


class ZeroWeight(LogSinkhornError, ValueError):
    """A distribution weight was not strictly positive.

    Log-domain updates add ``log(weight)`` terms, so zero or negative
    weights would inject non-finite values into every downstream
    reduction. Constructors reject them outright.
    """


class DimensionMismatch(LogSinkhornError, ValueError):
    """Array shapes or declared dimensions do not agree."""


class NegativeOrNonFiniteEntry(LogSinkhornError, ValueError):
    """A cost entry was negative, NaN, or infinite."""


class EmptyView(LogSinkhornError, ValueError):
    """A reduction was requested over an empty view."""


class NonFiniteResult(LogSinkhornError):
    """A computation produced NaN or infinite values where finite ones
    are required (e.g. when materializing a transport plan)."""


class ZeroRowMass(LogSinkhornError):
    """A transport-plan row had zero total mass.

    Cannot occur for plans produced by the entropic solver, whose
    entries are strictly positive; the check is defensive.
    """


class FileFormatError(LogSinkhornError):
    """A file did not conform to its declared on-disk format."""


class DegenerateRange(UserWarning):
    """Warning issued when a constant cost matrix is rescaled.

    A constant matrix has zero value range, so no affine map can reach
    the requested maximum; the rescaled result is all zeros.
    """
