"""The closed controller language: parsing, interpretation and printing."""

from pathlib import Path

from .ast import HeuristicProgram
from .errors import (
    Diagnostic,
    DslSyntaxError,
    ForbiddenConstruct,
    LexError,
    MissingReturnPath,
    RuntimeNumericError,
    UnknownIdentifier,
)
from .interp import ActionTriple, bind_inputs, coerce, evaluate, evaluate_raw, free_inputs, output_dependencies
from .parser import BUILTINS, SourceUnit, parse, tokenize
from .printer import pretty

__all__ = [
    "ActionTriple",
    "BUILTINS",
    "Diagnostic",
    "DslSyntaxError",
    "ForbiddenConstruct",
    "HeuristicProgram",
    "LexError",
    "MissingReturnPath",
    "RuntimeNumericError",
    "SourceUnit",
    "UnknownIdentifier",
    "bind_inputs",
    "coerce",
    "evaluate",
    "evaluate_raw",
    "free_inputs",
    "load",
    "output_dependencies",
    "parse",
    "pretty",
    "tokenize",
]


def load(path) -> HeuristicProgram:
    """Parse a ``.heur`` file."""
    path = Path(path)
    return parse(SourceUnit(path.read_text(encoding="utf-8"), str(path)))
