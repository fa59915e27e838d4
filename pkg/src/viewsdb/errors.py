"""Exception hierarchy for viewsdb."""


class ViewsError(Exception):
    """Base class for every error raised by this package."""


class EncodingError(ViewsError, ValueError):
    pass


class SchemeError(ViewsError):
    """An array or field is not present in the database's allocation scheme."""


class AddressError(ViewsError, IndexError):
    pass


class NotAllocatedError(ViewsError):
    pass


class NotHeadnodeError(ViewsError):
    pass


class TargetError(ViewsError):
    """A stored pointer would violate the target rules of its field."""


class InvalidQueryError(ViewsError):
    pass


class StaleCursorError(ViewsError):
    """The fabric was written to after the cursor was created."""


class CorruptStructureError(ViewsError):
    pass


class CapacityError(ViewsError):
    """Not enough free rows.  ``required`` and ``available`` are row counts."""

    def __init__(self, message, required=None, available=None):
        super().__init__(message)
        self.required = required
        self.available = available

    @property
    def shortfall(self):
        if self.required is None or self.available is None:
            return None
        return max(0, self.required - self.available)


class FormatError(ViewsError):
    """Malformed binary image."""


class TruncationError(FormatError):
    pass


class ParseError(ViewsError):
    """Text-format diagnostic carrying a 1-based line and column."""

    def __init__(self, message, line, column):
        super().__init__(f"{line}:{column}: {message}")
        self.message = message
        self.line = line
        self.column = column
