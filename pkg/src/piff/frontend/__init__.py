"""Lexing, parsing, pretty-printing and validation of `.piff` models."""

from dataclasses import replace
from fractions import Fraction
from typing import Mapping, Optional

from piff.frontend import ast
from piff.frontend.lexer import Token, tokenize
from piff.frontend.parser import parse_model, parse_source
from piff.frontend.printer import format_expr, format_model
from piff.frontend.validate import CheckedModel, validate_model


def override_consts(model: ast.Model, values: Mapping[str, object]) -> ast.Model:
    """Replace the defining expressions of the named constants.

    Values may be rationals (or strings such as ``"4/5"``) or enum names.
    """
    known = {c.name for c in model.consts}
    missing = sorted(set(values) - known)
    if missing:
        raise KeyError(f"no constant named {', '.join(missing)}")
    consts = []
    for c in model.consts:
        if c.name in values:
            v = values[c.name]
            try:
                expr = ast.Num(str(Fraction(v)))
            except (TypeError, ValueError):
                expr = ast.Name(str(v))
            c = replace(c, expr=expr)
        consts.append(c)
    return replace(model, consts=tuple(consts))


def load_model(source: str, consts: Optional[Mapping[str, object]] = None) -> CheckedModel:
    """Tokenize, parse and validate *source* in one step, optionally overriding constants."""
    model = parse_model(tokenize(source))
    if consts:
        model = override_consts(model, consts)
    return validate_model(model)


__all__ = [
    "CheckedModel", "Token", "format_expr", "format_model", "load_model", "override_consts",
    "parse_model", "parse_source", "tokenize", "validate_model",
]
