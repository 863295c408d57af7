"""AST node types for model sources.

Nodes are frozen dataclasses. Source positions are carried on declarations
and summands but excluded from equality, so a pretty-printed and re-parsed
model compares equal to the original.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Union

Pos = tuple[int, int]
_NOPOS: Pos = (0, 0)


def _pos():
    return field(default=_NOPOS, compare=False, repr=False)


# -- expressions -----------------------------------------------------------


@dataclass(frozen=True)
class Num:
    text: str

    @property
    def value(self) -> Fraction:
        return Fraction(self.text)


@dataclass(frozen=True)
class Name:
    """Identifier: constant, enum value, parameter or bare attribute."""

    id: str


@dataclass(frozen=True)
class My:
    attr: str


@dataclass(frozen=True)
class Call:
    fn: str
    args: tuple


@dataclass(frozen=True)
class BoolLit:
    value: bool


@dataclass(frozen=True)
class Cmp:
    op: str  # = != < <= > >=
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Not:
    arg: "Expr"


@dataclass(frozen=True)
class And:
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Or:
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class BinOp:
    op: str  # + - * /
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Frc:
    """`frc(C)` when *state* is set, `frc(pred)` otherwise."""

    state: Optional[str] = None
    pred: Optional["Expr"] = None


Expr = Union[Num, Name, My, Call, BoolLit, Cmp, Not, And, Or, BinOp, Frc]


# -- declarations ----------------------------------------------------------


@dataclass(frozen=True)
class AttType:
    name: str
    values: tuple[str, ...]
    pos: Pos = _pos()


@dataclass(frozen=True)
class ConstDef:
    name: str
    expr: Expr
    pos: Pos = _pos()


@dataclass(frozen=True)
class AttributeDecl:
    name: str
    type: str
    pos: Pos = _pos()


@dataclass(frozen=True)
class Param:
    name: str
    type: str


@dataclass(frozen=True)
class CaseRow:
    keys: tuple[str, ...]
    expr: Expr


@dataclass(frozen=True)
class CaseTable:
    scrutinee: tuple[str, ...]
    rows: tuple[CaseRow, ...]


@dataclass(frozen=True)
class FuncDef:
    name: str
    params: tuple[Param, ...]
    result: str  # attype name or "float"
    body: Union[Expr, CaseTable]
    pos: Pos = _pos()

    @property
    def is_prob(self) -> bool:
        return self.result == "float"


@dataclass(frozen=True)
class Assign:
    attr: str
    expr: Expr


@dataclass(frozen=True)
class UpdateBranch:
    assigns: tuple[Assign, ...]
    prob: Expr


@dataclass(frozen=True)
class UpdateDef:
    name: str
    branches: tuple[UpdateBranch, ...]
    pos: Pos = _pos()


@dataclass(frozen=True)
class Action:
    kind: str  # "out" or "in"
    label: str
    pred: Expr
    update: str
    annotation: Optional[int] = None


@dataclass(frozen=True)
class Summand:
    guard: Expr
    prob: Optional[Expr]  # None for rest
    action: Action
    target: str
    rest: bool = False
    pos: Pos = _pos()


@dataclass(frozen=True)
class StateEq:
    name: str
    summands: tuple[Summand, ...]
    pos: Pos = _pos()


@dataclass(frozen=True)
class InitEntry:
    state: str
    store: tuple[tuple[str, str], ...]
    count: int = 1
    pos: Pos = _pos()


@dataclass(frozen=True)
class Model:
    attypes: tuple[AttType, ...] = ()
    consts: tuple[ConstDef, ...] = ()
    attributes: tuple[AttributeDecl, ...] = ()
    funcs: tuple[FuncDef, ...] = ()
    updates: tuple[UpdateDef, ...] = ()
    states: tuple[StateEq, ...] = ()
    init_n: Optional[int] = None
    init: tuple[InitEntry, ...] = ()

    @property
    def attr_funcs(self) -> dict[str, FuncDef]:
        return {f.name: f for f in self.funcs if not f.is_prob}

    @property
    def prob_funcs(self) -> dict[str, FuncDef]:
        return {f.name: f for f in self.funcs if f.is_prob}

    def actions(self):
        """Yield (state, summand index, action) in source order."""
        for eq in self.states:
            for k, s in enumerate(eq.summands):
                yield eq.name, k, s.action


def walk(expr):
    """Pre-order traversal over an expression tree."""
    yield expr
    if isinstance(expr, (Cmp, And, Or, BinOp)):
        yield from walk(expr.left)
        yield from walk(expr.right)
    elif isinstance(expr, Not):
        yield from walk(expr.arg)
    elif isinstance(expr, Call):
        for a in expr.args:
            yield from walk(a)
    elif isinstance(expr, Frc) and expr.pred is not None:
        yield from walk(expr.pred)
