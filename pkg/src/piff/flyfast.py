"""Flat agent specifications in FlyFast concrete syntax.

A :class:`FlatSpec` is a list of named states, one probability definition per
action name, per-state equations of ``(action, target)`` summands and an
optional initial population. Probability definitions are :class:`ProbExpr`
values: sums of ``coef * F_1 * ... * F_k`` with every ``F`` a sum of
``frc(state)`` terms and ``k <= 2``.

Text layout::

    const H = 0.6;                      // optional, reader only
    action xi: 3/5*(frc(a)+frc(b));
    state a{xi.b + zeta.a}
    init{a*10 + b*5};
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Optional

from piff.errors import BuildError, DegreeError, Diagnostic, LexError, ParseError
from piff.poly import QuadForm, RawPoly

Factor = tuple[str, ...]
Term = tuple[Fraction, tuple[Factor, ...]]


@dataclass(frozen=True)
class ProbExpr:
    terms: tuple[Term, ...] = ()

    @staticmethod
    def const(c) -> "ProbExpr":
        c = Fraction(c)
        return ProbExpr(((c, ()),) if c else ())

    @staticmethod
    def frc(names: Iterable[str]) -> "ProbExpr":
        names = tuple(names)
        return ProbExpr(((Fraction(1), (names,)),) if names else ())

    @property
    def degree(self) -> int:
        return max((len(f) for _, f in self.terms), default=0)

    def __add__(self, other: "ProbExpr") -> "ProbExpr":
        return ProbExpr(self.terms + other.terms).simplify()

    def __neg__(self) -> "ProbExpr":
        return ProbExpr(tuple((-c, f) for c, f in self.terms))

    def __sub__(self, other: "ProbExpr") -> "ProbExpr":
        return self + (-other)

    def scale(self, k) -> "ProbExpr":
        k = Fraction(k)
        return ProbExpr(tuple((c * k, f) for c, f in self.terms)).simplify()

    def __mul__(self, other: "ProbExpr") -> "ProbExpr":
        out = []
        for c1, f1 in self.terms:
            for c2, f2 in other.terms:
                if len(f1) + len(f2) > 2:
                    raise DegreeError("product of occupancy terms exceeds degree 2")
                out.append((c1 * c2, f1 + f2))
        return ProbExpr(tuple(out)).simplify()

    def simplify(self) -> "ProbExpr":
        acc: dict[tuple[Factor, ...], Fraction] = {}
        for c, f in self.terms:
            if any(len(x) == 0 for x in f):
                continue  # an empty frc sum is 0
            key = tuple(sorted(f))
            acc[key] = acc.get(key, Fraction(0)) + c
        return ProbExpr(tuple((c, f) for f, c in acc.items() if c != 0))

    def restrict(self, keep) -> "ProbExpr":
        """Drop frc references to states outside *keep*."""
        return ProbExpr(tuple(
            (c, tuple(tuple(n for n in fac if n in keep) for fac in f)) for c, f in self.terms
        )).simplify()

    def names(self) -> set[str]:
        return {n for _, f in self.terms for fac in f for n in fac}

    def to_raw(self, index: Mapping[str, int], S: int, *, where: str = "") -> RawPoly:
        total = RawPoly(S)
        for c, f in self.terms:
            t = RawPoly(S, c)
            for fac in f:
                try:
                    idx = [index[n] for n in fac]
                except KeyError as exc:
                    raise BuildError(f"frc of unknown state '{exc.args[0]}'{where}") from None
                t = t * RawPoly.frc_sum(S, idx)
            total = total + t
        return total


def form_to_prob(f: QuadForm, names: list[str]) -> ProbExpr:
    """Write a canonical form as a FlyFast probability expression.

    The diagonal part becomes a constant plus grouped ``c*(frc(..)+..)``
    terms; cross terms sharing a coefficient are factored into products of
    frc sums whenever their index pairs form a rectangle.
    """
    aff_c, lin = _affine_part(f)
    out = list(ProbExpr.const(aff_c).terms)
    by_coef: dict[Fraction, list[int]] = {}
    for i, c in sorted(lin.items()):
        by_coef.setdefault(c, []).append(i)
    for c, idx in by_coef.items():
        out.append((c, (tuple(names[i] for i in idx),)))
    cross: dict[Fraction, dict[int, list[int]]] = {}
    for (i, j), c in sorted(f.cross.items()):
        cross.setdefault(c, {}).setdefault(i, []).append(j)
    for c, rows in cross.items():
        groups: dict[tuple[int, ...], list[int]] = {}
        for i, js in rows.items():
            groups.setdefault(tuple(js), []).append(i)
        for js, is_ in groups.items():
            out.append((c, (tuple(names[i] for i in is_), tuple(names[j] for j in js))))
    return ProbExpr(tuple(out))


def _affine_part(f: QuadForm) -> tuple[Fraction, dict[int, Fraction]]:
    aff = QuadForm.from_basis(f.S, f.diag, {}).as_affine()
    assert aff is not None
    return aff


def _num(c: Fraction) -> str:
    return str(c)


def _factor(fac: Factor) -> str:
    body = "+".join(f"frc({n})" for n in fac)
    return f"({body})" if len(fac) > 1 else body


def format_prob(e: ProbExpr) -> str:
    if not e.terms:
        return "0"
    # group linear terms sharing a coefficient: c*(frc(a)+frc(b))
    parts: list[str] = []
    pending: dict[Fraction, list[str]] = {}
    for c, f in e.terms:
        if len(f) == 1:
            pending.setdefault(c, []).extend(f[0])
    done_linear: set[Fraction] = set()
    for c, f in e.terms:
        if len(f) == 1:
            if c in done_linear:
                continue
            done_linear.add(c)
            text = _factor(tuple(pending[c]))
        else:
            text = "*".join(_factor(x) for x in f)
        if not f:
            parts.append((c, _num(abs(c))))
        elif abs(c) == 1:
            parts.append((c, text))
        else:
            parts.append((c, f"{_num(abs(c))}*{text}"))
    out = ""
    for i, (c, text) in enumerate(parts):
        if i == 0:
            out = ("-" if c < 0 else "") + text
        else:
            out += (" - " if c < 0 else " + ") + text
    return out


@dataclass
class FlatSpec:
    states: list[str]
    actions: dict[str, ProbExpr]
    equations: dict[str, list[tuple[str, str]]]
    init: dict[str, int] = field(default_factory=dict)

    def check(self) -> list[str]:
        """Static FlyFast constraints; returns a list of problems."""
        problems = []
        known = set(self.states)
        for z in self.states:
            seen = set()
            for xi, tgt in self.equations.get(z, []):
                if xi not in self.actions:
                    problems.append(f"state {z}: action {xi} has no probability definition")
                if tgt not in known:
                    problems.append(f"state {z}: unknown target {tgt}")
                if (xi, tgt) in seen:
                    problems.append(f"state {z}: summand {xi}.{tgt} repeated")
                seen.add((xi, tgt))
        for xi, e in self.actions.items():
            for n in e.names():
                if n not in known:
                    problems.append(f"action {xi}: frc of unknown state {n}")
        for z in self.init:
            if z not in known:
                problems.append(f"init: unknown state {z}")
        return problems

    def format(self, header: Optional[str] = None) -> str:
        lines = []
        if header:
            lines.extend(f"// {h}" for h in header.splitlines())
        for xi, e in self.actions.items():
            lines.append(f"action {xi}: {format_prob(e)};")
        lines.append("")
        for z in self.states:
            body = " + ".join(f"{xi}.{t}" for xi, t in self.equations.get(z, []))
            lines.append(f"state {z}{{{body}}}")
        if self.init:
            lines.append("")
            body = " + ".join(f"{z}*{n}" for z, n in self.init.items())
            lines.append(f"init{{{body}}};")
        return "\n".join(lines) + "\n"


# -- reader ------------------------------------------------------------------

_TOKEN = re.compile(r"""
    (?P<ws>[ \t\r]+|//[^\n]*)
  | (?P<nl>\n)
  | (?P<num>\d+(?:\.\d+)?)
  | (?P<id>[A-Za-z_][A-Za-z0-9_]*(?:[@\#][A-Za-z0-9_=,|@\#]*)?)
  | (?P<sym>[{}();:+\-*/.=])
""", re.VERBOSE)


def _lex(text: str):
    pos, line, col = 0, 1, 1
    out = []
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise LexError(f"illegal character {text[pos]!r}", line, col)
        kind = m.lastgroup
        if kind == "nl":
            line, col = line + 1, 1
        else:
            if kind != "ws":
                out.append((kind, m.group(), line, col))
            col += m.end() - m.start()
        pos = m.end()
    out.append(("eof", "", line, col))
    return out


class _Reader:
    def __init__(self, text: str):
        self.toks = _lex(text)
        self.i = 0
        self.consts: dict[str, ProbExpr] = {}

    def peek(self):
        return self.toks[self.i]

    def next(self):
        t = self.toks[self.i]
        self.i += 1
        return t

    def fail(self, msg, tok=None):
        _, text, line, col = tok or self.peek()
        raise ParseError(f"{msg}, found {text or 'end of input'!r}", line, col)

    def expect(self, text):
        t = self.peek()
        if t[1] != text:
            self.fail(f"expected '{text}'")
        return self.next()

    def ident(self):
        t = self.peek()
        if t[0] != "id":
            self.fail("expected identifier")
        return self.next()[1]

    def run(self) -> FlatSpec:
        actions: dict[str, ProbExpr] = {}
        equations: dict[str, list[tuple[str, str]]] = {}
        states: list[str] = []
        init: dict[str, int] = {}
        while self.peek()[0] != "eof":
            kw = self.peek()
            if kw[1] == "const":
                self.next()
                name = self.ident()
                self.expect("=")
                self.consts[name] = self.expr()
                if self.consts[name].degree:
                    self.fail(f"constant {name} must not depend on frc", kw)
                self.expect(";")
            elif kw[1] == "action":
                self.next()
                name = self.ident()
                self.expect(":")
                if name in actions:
                    self.fail(f"action {name} defined twice", kw)
                actions[name] = self.expr()
                self.expect(";")
            elif kw[1] == "state":
                self.next()
                name = self.ident()
                if name in equations:
                    self.fail(f"state {name} defined twice", kw)
                self.expect("{")
                summands = []
                if self.peek()[1] != "}":
                    while True:
                        xi = self.ident()
                        self.expect(".")
                        summands.append((xi, self.ident()))
                        if self.peek()[1] != "+":
                            break
                        self.next()
                self.expect("}")
                states.append(name)
                equations[name] = summands
            elif kw[1] == "init":
                self.next()
                self.expect("{")
                while True:
                    z = self.ident()
                    n = 1
                    if self.peek()[1] == "*":
                        self.next()
                        t = self.next()
                        if t[0] != "num" or "." in t[1]:
                            self.fail("expected integer multiplicity", t)
                        n = int(t[1])
                    init[z] = init.get(z, 0) + n
                    if self.peek()[1] != "+":
                        break
                    self.next()
                self.expect("}")
                if self.peek()[1] == ";":
                    self.next()
            else:
                self.fail("expected 'const', 'action', 'state' or 'init'")
        return FlatSpec(states, actions, equations, init)

    # expr := term (('+'|'-') term)* ; term := unary (('*'|'/') unary)*
    def expr(self) -> ProbExpr:
        e = self.term()
        while self.peek()[1] in ("+", "-"):
            op = self.next()[1]
            r = self.term()
            e = e + r if op == "+" else e - r
        return e

    def term(self) -> ProbExpr:
        e = self.unary()
        while self.peek()[1] in ("*", "/"):
            op = self.next()
            r = self.unary()
            if op[1] == "*":
                try:
                    e = e * r
                except DegreeError as exc:
                    raise ParseError(str(exc), op[2], op[3]) from None
            else:
                if r.degree or not r.terms:
                    self.fail("division by a non-constant or zero expression", op)
                e = e.scale(1 / r.terms[0][0])
        return e

    def unary(self) -> ProbExpr:
        t = self.peek()
        if t[1] == "-":
            self.next()
            return -self.unary()
        if t[1] == "(":
            self.next()
            e = self.expr()
            self.expect(")")
            return _merge_sum(e)
        if t[0] == "num":
            self.next()
            return ProbExpr.const(Fraction(t[1]))
        if t[0] == "id" and t[1] == "frc":
            self.next()
            self.expect("(")
            name = self.ident()
            self.expect(")")
            return ProbExpr.frc([name])
        if t[0] == "id":
            self.next()
            if t[1] not in self.consts:
                self.fail(f"unknown constant '{t[1]}'", t)
            return self.consts[t[1]]
        self.fail("expected expression")


def _merge_sum(e: ProbExpr) -> ProbExpr:
    """Fold a parenthesized ``frc(a)+frc(b)`` into a single factor."""
    if len(e.terms) > 1 and all(c == 1 and len(f) == 1 for c, f in e.terms):
        return ProbExpr(((Fraction(1), (tuple(n for _, f in e.terms for n in f[0]),)),))
    return e


def parse_flyfast(text: str) -> FlatSpec:
    """Read FlyFast text; constants declared with ``const`` are inlined."""
    return _Reader(text).run()


def diagnostic(exc: ParseError | LexError) -> Diagnostic:
    return exc.diagnostic
