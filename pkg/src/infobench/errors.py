"""Exception types shared across the package.

Two top-level families map onto the CLI exit-code contract:
``InputError`` (bad or incomplete input data, exit code 2) and
``DomainError`` (mathematically undefined request, exit code 1).
"""

from __future__ import annotations


class InfobenchError(Exception):
    """Base class for all package errors."""


class InputError(InfobenchError):
    """Malformed, missing, or inconsistent input data."""


class ParseError(InputError):
    """A playthrough file failed to parse.

    Carries the 1-based line number of the offending row (the header
    counts as line 1).
    """

    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


class CompletenessError(InputError):
    """A performance table is missing (agent, problem) coverage."""

    def __init__(self, message: str, missing: tuple = ()):
        super().__init__(message)
        self.missing = tuple(missing)


class DomainError(InfobenchError):
    """The requested quantity is undefined for this input."""
