from __future__ import annotations


class Diagnostic(Exception):
    """A parse-time problem anchored at a source position."""

    kind = "error"

    def __init__(self, message: str, line: int = 1, col: int = 1, origin: str = "<string>"):
        super().__init__(message)
        self.message = message
        self.line = line
        self.col = col
        self.origin = origin

    def format(self) -> str:
        return f"{self.origin}:{self.line}:{self.col}: {self.kind}: {self.message}"

    def __str__(self) -> str:
        return self.format()


class LexError(Diagnostic):
    pass


class DslSyntaxError(Diagnostic):
    pass


class UnknownIdentifier(Diagnostic):
    pass


class MissingReturnPath(Diagnostic):
    pass


class ForbiddenConstruct(Diagnostic):
    pass


class RuntimeNumericError(ArithmeticError):
    """Raised for division by zero, ln of non-positive values and overflow."""
