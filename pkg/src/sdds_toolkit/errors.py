"""Exception types shared across the package.

Every error raised while reading a file carries enough location
information (line/column for text, byte offset for binary) to point a
user at the exact spot in the input.
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class ParseDiagnostic:
    """A located complaint about header text."""

    line: int
    column: int
    message: str

    def __str__(self) -> str:
        return f"line {self.line}, column {self.column}: {self.message}"


class SddsError(Exception):
    """Base class for all errors raised by this package."""


class HeaderError(SddsError):
    """Header text could not be parsed; carries a ParseDiagnostic."""

    def __init__(self, diagnostic: ParseDiagnostic):
        super().__init__(str(diagnostic))
        self.diagnostic = diagnostic


class DataError(SddsError):
    """Page data (ASCII or binary) is malformed or inconsistent.

    ``line`` is set for ASCII input, ``offset`` for binary input.
    """

    def __init__(self, message: str, *, line: int | None = None,
                 offset: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        elif offset is not None:
            message = f"{message} at offset {offset}"
        super().__init__(message)
        self.line = line
        self.offset = offset


class ExprError(SddsError):
    """An expression failed to parse or type-check; ``offset`` is the
    byte position in the source string."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"offset {offset}: {message}")
        self.offset = offset
