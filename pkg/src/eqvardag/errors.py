"""Exception hierarchy.

Every error raised on purpose by the package derives from
:class:`EqvarError`, so callers (and the command line front end) can map
families of failures to exit codes.
"""


class EqvarError(Exception):
    """Base class for all package errors."""


class InvalidInputError(EqvarError, ValueError):
    """Malformed graph, spec, dataset or argument."""


class ParseError(InvalidInputError):
    """A data file could not be parsed.

    ``row`` and ``column`` are 1-based positions in the file when known.
    """

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


class NumericalError(EqvarError, ArithmeticError):
    """Numerically degenerate input (singular blocks, collinear data)."""


class DegenerateCovarianceError(NumericalError):
    pass


class CollinearDataError(NumericalError):
    def __init__(self, message, columns=()):
        super().__init__(message)
        self.columns = tuple(columns)


class InsufficientSampleError(NumericalError):
    pass


class ResourceCapError(EqvarError):
    """Refused because the request exceeds a configured size cap."""


class IncompleteTableError(EqvarError, KeyError):
    def __str__(self):
        return str(self.args[0]) if self.args else ""


class IncompatibleScoreError(InvalidInputError):
    """Two scores computed under different (n, p, g) cannot be compared."""


class DeltaStarUndefinedError(EqvarError):
    """The minimum defining the separation gap ranges over an empty set.

    Happens exactly when the true graph is empty: every DAG is then a
    supergraph of it.
    """
