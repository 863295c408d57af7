"""Label files: atomic propositions defined over component states.

One definition per line, ``name := predicate``; ``//`` starts a comment.
Predicates combine ``state in {S, I}``, ``loc in {A, C}``, ``loc = A``,
``loc != B``, ``true`` and ``false`` with ``and``, ``or``, ``not`` and
parentheses. The pseudo-attribute ``msg`` is the label of the message in
the outbox (``none`` if empty).
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Union

from piff.errors import LabelError, ParseError
from piff.idtmc import LabelMap, PolyMatrix


@dataclass(frozen=True)
class In:
    attr: str
    values: frozenset


@dataclass(frozen=True)
class Const:
    value: bool


@dataclass(frozen=True)
class Not:
    arg: "Pred"


@dataclass(frozen=True)
class Bin:
    op: str  # "and" | "or"
    left: "Pred"
    right: "Pred"


Pred = Union[In, Const, Not, Bin]


@dataclass(frozen=True)
class LabelDef:
    name: str
    pred: Pred
    line: int = 0


_TOK = re.compile(r"\s*(?:(:=|!=|[{}(),=&|!])|([A-Za-z_][A-Za-z0-9_]*))")
_WORDS = {"and": "&", "or": "|", "not": "!"}


def _tokens(text: str, line: int):
    pos = 0
    out = []
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOK.match(text, pos)
        if m is None or m.end() == pos:
            raise ParseError(f"unexpected character {text[pos:].lstrip()[:1]!r}", line, pos + 1)
        sym, word = m.group(1), m.group(2)
        col = m.start(1 if sym else 2) + 1
        if word in _WORDS:
            out.append(("sym", _WORDS[word], col))
        elif sym:
            out.append(("sym", sym, col))
        else:
            out.append(("id", word, col))
        pos = m.end()
    out.append(("eof", "", len(text) + 1))
    return out


class _P:
    def __init__(self, toks, line):
        self.toks, self.i, self.line = toks, 0, line

    def peek(self):
        return self.toks[self.i]

    def take(self, text=None, kind=None):
        t = self.toks[self.i]
        if (text is not None and t[1] != text) or (kind is not None and t[0] != kind):
            want = repr(text) if text is not None else kind
            raise ParseError(f"expected {want}, found {t[1] or 'end of line'!r}", self.line, t[2])
        self.i += 1
        return t

    def disj(self):
        e = self.conj()
        while self.peek()[1] == "|":
            self.take()
            e = Bin("or", e, self.conj())
        return e

    def conj(self):
        e = self.neg()
        while self.peek()[1] == "&":
            self.take()
            e = Bin("and", e, self.neg())
        return e

    def neg(self):
        if self.peek()[1] == "!":
            self.take()
            return Not(self.neg())
        return self.atom()

    def atom(self):
        t = self.peek()
        if t[1] == "(":
            self.take()
            e = self.disj()
            self.take(")")
            return e
        name = self.take(kind="id")[1]
        if name in ("true", "false"):
            return Const(name == "true")
        op = self.peek()[1]
        if op == "in":
            self.take()
            self.take("{")
            vals = [self.take(kind="id")[1]]
            while self.peek()[1] == ",":
                self.take()
                vals.append(self.take(kind="id")[1])
            self.take("}")
            return In(name, frozenset(vals))
        if op in ("=", "!="):
            self.take()
            v = self.take(kind="id")[1]
            e = In(name, frozenset([v]))
            return e if op == "=" else Not(e)
        raise ParseError(f"expected 'in', '=' or '!=' after {name!r}", self.line, self.peek()[2])


def parse_predicate(text: str, line: int = 1) -> Pred:
    p = _P(_tokens(text, line), line)
    e = p.disj()
    p.take(kind="eof")
    return e


def parse_label_file(text: str) -> list[LabelDef]:
    defs: list[LabelDef] = []
    seen = set()
    for n, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("//", 1)[0].strip()
        if not line:
            continue
        if ":=" not in line:
            raise ParseError("expected 'name := predicate'", n, 1)
        name, body = (x.strip() for x in line.split(":=", 1))
        if not re.fullmatch(r"[A-Za-z_][A-Za-z0-9_]*", name):
            raise ParseError(f"invalid label name {name!r}", n, 1)
        if name in seen:
            raise ParseError(f"label {name} defined twice", n, 1)
        seen.add(name)
        defs.append(LabelDef(name, parse_predicate(body, n), n))
    return defs


def message_of(origin: dict) -> str:
    """The label of the message in the outbox, or ``none`` when it is empty."""
    digest = origin.get("outbox", "eps")
    return "none" if digest == "eps" else digest.rsplit("|", 1)[-1]


def evaluate(pred: Pred, origin: dict) -> bool:
    """Decide *pred* on one component state ``{"state": C, "store": {...}}``."""
    if isinstance(pred, Const):
        return pred.value
    if isinstance(pred, Not):
        return not evaluate(pred.arg, origin)
    if isinstance(pred, Bin):
        # both sides are evaluated so unknown attributes never go unnoticed
        left, right = evaluate(pred.left, origin), evaluate(pred.right, origin)
        return (left and right) if pred.op == "and" else (left or right)
    if pred.attr == "state":
        return origin["state"] in pred.values
    if pred.attr == "msg":
        return message_of(origin) in pred.values
    store = origin.get("store", {})
    if pred.attr not in store:
        raise LabelError(f"unknown attribute '{pred.attr}' in label predicate")
    return store[pred.attr] in pred.values


def assign_labels(M: PolyMatrix, defs: list[LabelDef]) -> LabelMap:
    """Label every state of *M*; a label must hold on all or none of a state's origins.

    States without origin information are treated as component states whose
    agent state is the flat state name itself and whose store is empty.
    """
    labels: LabelMap = {}
    for z in M.states:
        origins = M.origin.get(z) or [{"state": z, "store": {}}]
        names = []
        for d in defs:
            vals = {evaluate(d.pred, o) for o in origins}
            if len(vals) > 1:
                raise LabelError(f"label {d.name} is not constant on state {z}")
            if vals.pop():
                names.append(d.name)
        labels[z] = tuple(sorted(names))
    return labels
