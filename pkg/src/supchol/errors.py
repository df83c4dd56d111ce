"""Exception hierarchy shared by every supchol module."""


class SupcholError(Exception):
    """Base class for all library errors."""


class ParseError(SupcholError):
    pass


class UnsupportedFormat(SupcholError):
    pass


class DimensionError(SupcholError, ValueError):
    pass


class ValidationError(SupcholError, ValueError):
    pass


class NotPositiveDefinite(SupcholError, ArithmeticError):
    """A nonpositive pivot was met.

    ``column`` is 1-based, like LAPACK's ``info``. When raised by a sparse
    driver it is the global column of the permuted matrix; ``original`` is
    filled in by callers that know the fill-reducing permutation.
    """

    def __init__(self, column, original=None):
        self.column = column
        self.original = original
        super().__init__(self._message())

    def _message(self):
        msg = f"matrix is not positive definite: nonpositive pivot at column {self.column}"
        if self.original is not None:
            msg += f" (original column {self.original})"
        return msg

    def with_original(self, original):
        return NotPositiveDefinite(self.column, original)


class SingularBlock(SupcholError, ArithmeticError):
    pass


class SingularFactor(SupcholError, ArithmeticError):
    pass


class DeviceMemoryExceeded(SupcholError, MemoryError):
    """Device allocation would exceed ``device_memory_limit``."""

    def __init__(self, supernode, requested, resident, limit, what="update matrix"):
        self.supernode = supernode
        self.requested = requested
        self.resident = resident
        self.limit = limit
        self.what = what
        super().__init__(
            f"supernode {supernode + 1}: {what} of {requested} bytes does not fit on "
            f"device ({resident} bytes resident, limit {limit})"
        )
