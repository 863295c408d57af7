"""Tokenizer for `.piff` model sources."""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from piff.errors import LexError

KEYWORDS = frozenset(
    {
        "attype", "enum", "const", "attribute", "func", "endfunc", "case", "of",
        "update", "endupdate", "with", "state", "rest", "init", "my", "true",
        "false", "frc", "float",
    }
)

# Longest symbols first so that `::` wins over `:`.
SYMBOLS = (
    ":=", "::", "<=", ">=", "!=", "<>",
    "(", ")", "[", "]", "{", "}", ",", ";", ":", ".", "+", "-", "*", "/",
    "=", "<", ">", "!", "&", "|",
)

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<comment>//[^\n]*)
  | (?P<num>\d+(?:\.\d+)?)
  | (?P<id>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<sym>"""
    + "|".join(re.escape(s) for s in SYMBOLS)
    + r""")
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str  # "kw", "id", "num", "sym"
    text: str
    line: int = field(default=0, compare=False)
    col: int = field(default=0, compare=False)

    def __repr__(self) -> str:
        return f"{self.kind}:{self.text}"


def tokenize(source: str) -> list[Token]:
    """Split *source* into tokens; numbers keep their literal text."""
    tokens: list[Token] = []
    pos = 0
    line, line_start = 1, 0
    while pos < len(source):
        m = _TOKEN_RE.match(source, pos)
        if m is None:
            raise LexError(f"illegal character {source[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        text = m.group()
        col = pos - line_start + 1
        if kind == "id":
            tokens.append(Token("kw" if text in KEYWORDS else "id", text, line, col))
        elif kind in ("num", "sym"):
            tokens.append(Token(kind, text, line, col))
        newlines = text.count("\n")
        if newlines:
            line += newlines
            line_start = pos + text.rindex("\n") + 1
        pos = m.end()
    return tokens
