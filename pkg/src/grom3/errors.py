"""Exception types raised across the package."""


class Grom3Error(Exception):
    """Base class for all package errors."""


class ColumnMismatch(Grom3Error, ValueError):
    pass


class DimGuard(Grom3Error, ValueError):
    """A tensor would exceed the configured size guard."""


class CategoryOutOfRange(Grom3Error, ValueError):
    pass


class SameVariable(Grom3Error, ValueError):
    pass


class UnknownScenario(Grom3Error, KeyError):
    pass


class GroupTooSmall(Grom3Error, ValueError):
    pass


class NotDirichletConsistent(Grom3Error, ValueError):
    pass


class DegenerateMembership(Grom3Error, RuntimeWarning):
    """Membership weights hit exactly zero and had to be clamped."""


class ShapeMismatch(Grom3Error, ValueError):
    pass


class LengthMismatch(Grom3Error, ValueError):
    pass


class TooFewSamples(Grom3Error, ValueError):
    pass


class AllDiscarded(Grom3Error, RuntimeError):
    """Every candidate in a model-selection scan had empty groups."""


class ParseError(Grom3Error, ValueError):
    def __init__(self, message, row=None, column=None):
        loc = []
        if row is not None:
            loc.append(f"row {row}")
        if column is not None:
            loc.append(f"column {column}")
        if loc:
            message = f"{message} ({', '.join(loc)})"
        super().__init__(message)
        self.row = row
        self.column = column


class EmptyAfterFiltering(Grom3Error, ValueError):
    pass


class SchemaError(Grom3Error, ValueError):
    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field
