"""Exception types shared across the package.

The hierarchy maps onto the command-line exit codes: input problems
(bad values, malformed files) exit with 2, numerical degeneracy exits
with 3. Library callers can catch ``AustenError`` to get everything.
"""

from __future__ import annotations


class AustenError(Exception):
    """Base class for all errors raised by this package."""


class InputValidationError(AustenError, ValueError):
    """An argument or data value violates a documented precondition."""


class SchemaError(InputValidationError):
    """A file does not match its expected schema.

    Carries file / row / column coordinates so messages point at the
    offending cell. ``row`` is 1-based counting the header as row 1;
    ``column`` is the column name when known.
    """

    def __init__(self, message: str, *, path: str | None = None,
                 row: int | None = None, column: str | None = None):
        self.path = path
        self.row = row
        self.column = column
        loc = []
        if path is not None:
            loc.append(str(path))
        if row is not None:
            loc.append(f"row {row}")
        if column is not None:
            loc.append(f"column {column!r}")
        prefix = ": ".join([", ".join(loc)]) + ": " if loc else ""
        super().__init__(prefix + message)


class DegenerateDataError(AustenError, ValueError):
    """Data admits no answer: zero variance, a missing treatment arm,
    an all-infeasible grid, or a denominator that is exactly zero."""


class NumericalError(AustenError, ArithmeticError):
    """A numerical routine failed to reach its documented accuracy
    (non-convergence, overflow)."""


class ConvergenceWarning(UserWarning):
    """An iterative fit stopped at its iteration cap; results are the
    last iterate, not a converged solution."""
