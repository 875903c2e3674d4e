"""Shared exception types for the salp package."""

from __future__ import annotations


class SalpError(Exception):
    """Base class for all errors raised by this package."""


class StructureError(SalpError):
    """An operation was handed structurally invalid input.

    Examples: mismatched variable orders, a non-univariate polynomial where a
    univariate one is required, a sample point missing an assignment.
    """


class ParseError(SalpError):
    """Raised by the text parsers (polynomials, systems, loop programs)."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        if line is not None:
            message = f"line {line}, column {column}: {message}"
        super().__init__(message)
        self.line = line
        self.column = column


class PrecisionExhausted(SalpError):
    """Sign determination could not be certified within the refinement budget.

    Only reachable for sample points with two or more algebraic coordinates
    whose iterated-resultant certificate degenerates; rational and
    single-algebraic evaluation is always exact.
    """


class BudgetExceeded(SalpError):
    """A configured guardrail (projection set size, variable count, ...) tripped."""


class NoScheduleError(SalpError):
    """No schedule point satisfies the validity region under the given policy."""


class TransformFailed(SalpError):
    """The loop transform produced no usable section-only tree."""


class IntegerValidityFailed(SalpError):
    """An integer-level transform check failed; carries the counterexamples."""

    def __init__(self, message: str, counterexamples: list | None = None):
        super().__init__(message)
        self.counterexamples = counterexamples or []
