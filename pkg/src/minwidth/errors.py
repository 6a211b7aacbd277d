"""Exception types shared across the package."""


class MinWidthError(Exception):
    """Base class for all package errors."""


class StructuralError(MinWidthError):
    """Shapes, widths or layer chaining are inconsistent."""


class DomainError(MinWidthError):
    """A mathematical precondition on the inputs is violated."""


class ParseError(MinWidthError):
    """A serialized document is malformed.

    ``field`` names the offending entry, e.g. ``layers[2].bias``.
    """

    def __init__(self, field, message):
        self.field = field
        super().__init__(f"{field}: {message}")


class MonotonicityError(DomainError):
    """A map that must be strictly increasing is not."""


class FitError(MinWidthError):
    """A numerical fit did not reach the requested loss threshold."""


class BudgetError(MinWidthError):
    """A measured error exceeds the requested budget."""


class GeometryError(MinWidthError):
    """No valid geometric placement exists (e.g. ball does not fit)."""


class PreconditionError(MinWidthError):
    """A certificate or diagnostic does not apply to the given network."""
