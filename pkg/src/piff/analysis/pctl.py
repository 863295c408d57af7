"""Bounded PCTL over the time-inhomogeneous chain induced by the mean field.

Grammar (``!`` binds tighter than ``&``, which binds tighter than ``|``)::

    f ::= true | false | AP | !f | f & f | f | f | (f)
        | P op p [X f] | P op p [f U<=k f]          op in < <= > >=

Satisfaction is time dependent: the matrix used at step t is K(mu(t)).
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from decimal import Decimal
from fractions import Fraction
from typing import Optional, Sequence, Union

import numpy as np

from piff.analysis.meanfield import as_distribution
from piff.errors import ParseError
from piff.idtmc import LabelMap, PolyMatrix
from piff import kernels

# tolerance applied when comparing a computed probability with its bound
BOUND_TOL = 1e-12


@dataclass(frozen=True)
class Atom:
    name: str


@dataclass(frozen=True)
class Bool:
    value: bool


@dataclass(frozen=True)
class Neg:
    arg: "Formula"


@dataclass(frozen=True)
class Conj:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Disj:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Next:
    arg: "Formula"


@dataclass(frozen=True)
class Until:
    left: "Formula"
    right: "Formula"
    bound: int


@dataclass(frozen=True)
class Prob:
    op: str
    p: Fraction
    path: Union[Next, Until]


Formula = Union[Atom, Bool, Neg, Conj, Disj, Prob]


def format_formula(f) -> str:
    if isinstance(f, Atom):
        return f.name
    if isinstance(f, Bool):
        return "true" if f.value else "false"
    if isinstance(f, Neg):
        return f"!{_wrap(f.arg)}"
    if isinstance(f, Conj):
        return f"{_wrap(f.left)} & {_wrap(f.right)}"
    if isinstance(f, Disj):
        return f"{_wrap(f.left)} | {_wrap(f.right)}"
    if isinstance(f, Prob):
        if isinstance(f.path, Next):
            body = f"X {format_formula(f.path.arg)}"
        else:
            body = f"{format_formula(f.path.left)} U<={f.path.bound} {format_formula(f.path.right)}"
        return f"P{f.op}{_bound(f.p)} [{body}]"
    raise TypeError(f)


def _bound(p: Fraction) -> str:
    d = p.denominator
    while d % 2 == 0:
        d //= 2
    while d % 5 == 0:
        d //= 5
    if d != 1:
        return str(p)
    text = str(Decimal(p.numerator) / Decimal(p.denominator))
    return text.rstrip("0").rstrip(".") if "." in text else text


def _wrap(f) -> str:
    s = format_formula(f)
    return f"({s})" if isinstance(f, (Conj, Disj)) else s


def depth(f) -> int:
    if isinstance(f, (Atom, Bool)):
        return 0
    if isinstance(f, Neg):
        return 1 + depth(f.arg)
    if isinstance(f, (Conj, Disj)):
        return 1 + max(depth(f.left), depth(f.right))
    if isinstance(f.path, Next):
        return 1 + depth(f.path.arg)
    return 1 + max(depth(f.path.left), depth(f.path.right))


# -- parser --------------------------------------------------------------------

_TOK = re.compile(r"\s*(?:(?P<op><=|>=|<|>)|(?P<num>\d+(?:\.\d+)?(?:/\d+)?)|"
                  r"(?P<id>[A-Za-z_][A-Za-z0-9_]*)|(?P<sym>[!&|()\[\]]))")


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.toks = []
        pos = 0
        while pos < len(text):
            if text[pos:].strip() == "":
                break
            m = _TOK.match(text, pos)
            if m is None or m.end() == pos:
                raise ParseError(f"unexpected character {text[pos:].lstrip()[:1]!r}", 1, pos + 1)
            start = m.start(m.lastgroup)
            self.toks.append((m.lastgroup, m.group(m.lastgroup), start + 1))
            pos = m.end()
        self.toks.append(("eof", "", len(text) + 1))
        self.i = 0

    def peek(self):
        return self.toks[self.i]

    def take(self):
        t = self.toks[self.i]
        self.i += 1
        return t

    def fail(self, what):
        _, text, col = self.peek()
        raise ParseError(f"expected {what}, found {text or 'end of input'!r}", 1, col)

    def expect(self, text):
        if self.peek()[1] != text:
            self.fail(f"'{text}'")
        return self.take()

    def parse(self):
        f = self.disj()
        if self.peek()[0] != "eof":
            self.fail("end of formula")
        return f

    def disj(self):
        f = self.conj()
        while self.peek()[1] == "|":
            self.take()
            f = Disj(f, self.conj())
        return f

    def conj(self):
        f = self.unary()
        while self.peek()[1] == "&":
            self.take()
            f = Conj(f, self.unary())
        return f

    def unary(self):
        kind, text, _ = self.peek()
        if text == "!":
            self.take()
            return Neg(self.unary())
        if text == "(":
            self.take()
            f = self.disj()
            self.expect(")")
            return f
        if kind == "id" and text == "P":
            return self.prob()
        if kind == "id":
            self.take()
            if text in ("true", "false"):
                return Bool(text == "true")
            return Atom(text)
        self.fail("a formula")

    def prob(self):
        self.take()
        if self.peek()[0] != "op":
            self.fail("a comparison (<, <=, >, >=)")
        op = self.take()[1]
        if self.peek()[0] != "num":
            self.fail("a probability bound")
        p = Fraction(self.take()[1])
        if not 0 <= p <= 1:
            raise ParseError(f"probability bound {p} outside [0, 1]", 1, self.toks[self.i - 1][2])
        self.expect("[")
        if self.peek()[1] == "X":
            self.take()
            path = Next(self.disj())
        else:
            left = self.disj()
            if self.peek()[1] != "U":
                self.fail("'U<=k' or ']'")
            self.take()
            if self.peek()[1] != "<=":
                self.fail("'<=' after U")
            self.take()
            k = self.take()
            if k[0] != "num" or not k[1].isdigit():
                self.i -= 1
                self.fail("a step bound")
            path = Until(left, self.disj(), int(k[1]))
        self.expect("]")
        return Prob(op, p, path)


def parse_pctl(text: str):
    return _Parser(text).parse()


def atoms(f) -> set[str]:
    if isinstance(f, Atom):
        return {f.name}
    if isinstance(f, Bool):
        return set()
    if isinstance(f, Neg):
        return atoms(f.arg)
    if isinstance(f, (Conj, Disj)):
        return atoms(f.left) | atoms(f.right)
    if isinstance(f.path, Next):
        return atoms(f.path.arg)
    return atoms(f.path.left) | atoms(f.path.right)


def compare(value: float, op: str, p: Fraction) -> bool:
    b = float(p)
    if op == "<=":
        return value <= b + BOUND_TOL
    if op == ">=":
        return value >= b - BOUND_TOL
    if op == "<":
        return value < b - BOUND_TOL
    return value > b + BOUND_TOL


# -- checking ------------------------------------------------------------------


def _matvec(K: np.ndarray, v: np.ndarray) -> np.ndarray:
    # fsum is correctly rounded, so the result does not depend on summation order
    return np.array([math.fsum(K[i] * v) for i in range(K.shape[0])])


@dataclass
class Verdict:
    state: str
    time: int
    formula: str
    verdict: bool
    probability: Optional[float]

    def to_json(self) -> dict:
        return {"state": self.state, "time": self.time, "formula": self.formula,
                "verdict": self.verdict, "probability": self.probability}


class Checker:
    """On-the-fly checker with memo tables keyed by (formula node, time).

    Each memo entry holds a whole vector over states, so a lookup for
    (node, state, time) is an index into the cached vector. The mean-field
    trajectory and the matrices K(mu(t)) are extended lazily.
    """

    def __init__(self, M: PolyMatrix, labels: Optional[LabelMap], mu0: Sequence):
        self.M = M
        self.labels = M.labels if labels is None else labels
        self.traj = [as_distribution(mu0, M.S)]
        self._K: dict[int, np.ndarray] = {}
        self._sat: dict[tuple, np.ndarray] = {}
        self._prob: dict[tuple, np.ndarray] = {}
        self._terms = M.compiled()

    def mu(self, t: int) -> np.ndarray:
        if t >= len(self.traj):
            need = t - len(self.traj) + 1
            more = kernels.meanfield_run(*self._terms, self.traj[-1], max(need, len(self.traj)))
            self.traj.extend(more[1:])
        return self.traj[t]

    def K(self, t: int) -> np.ndarray:
        if t not in self._K:
            self._K[t] = kernels.eval_matrix(*self._terms, self.mu(t), self.M.S)
        return self._K[t]

    def atom(self, name: str) -> np.ndarray:
        return np.array([name in self.labels.get(z, ()) for z in self.M.states], dtype=bool)

    def sat(self, f, t: int) -> np.ndarray:
        key = (f, t)
        if key in self._sat:
            return self._sat[key]
        if isinstance(f, Atom):
            v = self.atom(f.name)
        elif isinstance(f, Bool):
            v = np.full(self.M.S, f.value, dtype=bool)
        elif isinstance(f, Neg):
            v = ~self.sat(f.arg, t)
        elif isinstance(f, Conj):
            v = self.sat(f.left, t) & self.sat(f.right, t)
        elif isinstance(f, Disj):
            v = self.sat(f.left, t) | self.sat(f.right, t)
        else:
            pr = self.prob(f.path, t)
            v = np.array([compare(x, f.op, f.p) for x in pr], dtype=bool)
        self._sat[key] = v
        return v

    def prob(self, path, t: int) -> np.ndarray:
        if isinstance(path, Next):
            key = (path, t)
            if key not in self._prob:
                self._prob[key] = _matvec(self.K(t), self.sat(path.arg, t + 1).astype(np.float64))
            return self._prob[key]
        return self.until(path, t, path.bound)

    def until(self, path: Until, t: int, k: int) -> np.ndarray:
        key = (path, t, k)
        if key in self._prob:
            return self._prob[key]
        # iterate from the deepest layer up so recursion depth stays flat
        todo = [j for j in range(k + 1) if (path, t + k - j, j) not in self._prob]
        for j in todo:
            tt = t + k - j
            s2 = self.sat(path.right, tt)
            s1 = self.sat(path.left, tt)
            if j == 0:
                v = s2.astype(np.float64)
            else:
                nxt = self._prob[(path, tt + 1, j - 1)]
                v = np.where(s2, 1.0, np.where(s1, _matvec(self.K(tt), nxt), 0.0))
            self._prob[(path, tt, j)] = v
        return self._prob[key]

    def check(self, state: str, t: int, f) -> Verdict:
        idx = self.M.index()
        if state not in idx:
            raise KeyError(f"unknown state {state!r}")
        i = idx[state]
        prob = float(self.prob(f.path, t)[i]) if isinstance(f, Prob) else None
        return Verdict(state, t, format_formula(f), bool(self.sat(f, t)[i]), prob)


def check_pctl(M: PolyMatrix, labels: Optional[LabelMap], mu0: Sequence, state: str, t0: int,
               formula) -> Verdict:
    if isinstance(formula, str):
        formula = parse_pctl(formula)
    return Checker(M, labels, mu0).check(state, t0, formula)


def check_pctl_naive(M: PolyMatrix, labels: Optional[LabelMap], mu0: Sequence, state: str,
                     t0: int, formula) -> Verdict:
    """Direct per-state recursion with no memo tables; exponential in the bound."""
    if isinstance(formula, str):
        formula = parse_pctl(formula)
    ch = Checker(M, labels, mu0)
    labels = ch.labels
    states = M.states

    def K(t):
        return kernels.eval_matrix(*ch._terms, ch.mu(t), M.S)

    def sat(f, z, t) -> bool:
        if isinstance(f, Atom):
            return f.name in labels.get(states[z], ())
        if isinstance(f, Bool):
            return f.value
        if isinstance(f, Neg):
            return not sat(f.arg, z, t)
        if isinstance(f, Conj):
            return sat(f.left, z, t) and sat(f.right, z, t)
        if isinstance(f, Disj):
            return sat(f.left, z, t) or sat(f.right, z, t)
        return compare(prob(f.path, z, t), f.op, f.p)

    def prob(path, z, t) -> float:
        if isinstance(path, Next):
            row = K(t)[z]
            return math.fsum(row[j] for j in range(M.S) if row[j] and sat(path.arg, j, t + 1))
        return until(path, z, t, path.bound)

    def until(path, z, t, k) -> float:
        if sat(path.right, z, t):
            return 1.0
        if not sat(path.left, z, t) or k == 0:
            return 0.0
        row = K(t)[z]
        return math.fsum(row[j] * until(path, j, t + 1, k - 1) for j in range(M.S) if row[j])

    i = M.index()[state]
    p = prob(formula.path, i, t0) if isinstance(formula, Prob) else None
    return Verdict(state, t0, format_formula(formula), sat(formula, i, t0), p)
