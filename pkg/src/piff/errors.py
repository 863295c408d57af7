"""Exception types and diagnostics shared across the toolchain."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class Diagnostic:
    line: int
    col: int
    message: str
    severity: str = "error"

    def format(self, filename: str = "<input>") -> str:
        return f"{filename}:{self.line}:{self.col}: {self.severity}: {self.message}"


class PiffError(Exception):
    """Base class for all toolchain errors."""


class LexError(PiffError):
    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{line}:{col}: {message}")
        self.diagnostic = Diagnostic(line, col, message)


class ParseError(PiffError):
    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{line}:{col}: {message}")
        self.diagnostic = Diagnostic(line, col, message)


class ModelError(PiffError):
    """Raised by validation; carries every diagnostic found."""

    def __init__(self, diagnostics: list[Diagnostic]):
        self.diagnostics = list(diagnostics)
        head = diagnostics[0].message if diagnostics else "invalid model"
        more = f" (+{len(diagnostics) - 1} more)" if len(diagnostics) > 1 else ""
        super().__init__(head + more)


class EvaluationError(PiffError):
    """Store-level evaluation failed (missing case row, bad operand, ...)."""


class SemanticError(PiffError):
    pass


class TranslationError(PiffError):
    pass


class DegreeError(PiffError):
    """A product would exceed polynomial degree 2."""


class DomainError(PiffError, ValueError):
    """An occupancy vector is off the unit simplex."""


class BuildError(PiffError):
    pass


class NotLumpableError(PiffError):
    def __init__(self, message: str, pair: tuple | None = None):
        super().__init__(message)
        self.pair = pair


class NumericError(PiffError):
    pass


class LabelError(PiffError):
    """A label definition is malformed or not constant on a block."""


class FormatError(PiffError):
    """An interchange file (matrix JSON, CSV, init spec) is malformed."""
