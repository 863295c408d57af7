"""Stores, outboxes, component states and store-level interpretation.

Three interpretation functions drive the translation:

* :func:`eval_local` evaluates attribute, probability and boolean expressions
  in the owner's store. Applied to a predicate it *actualizes* it: ``my.a``
  becomes the local value while bare attribute names stay symbolic.
* :func:`sat_remote` decides a closed predicate against another component's
  store, resolving bare attribute names there.
* :func:`eval_update` turns a store update into a distribution over stores.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import TYPE_CHECKING, NamedTuple, Optional, Union

from piff.errors import EvaluationError, SemanticError
from piff.frontend import ast

if TYPE_CHECKING:
    from piff.frontend.validate import CheckedModel

# Ordered (attribute, value) pairs, attribute declaration order.
Store = tuple[tuple[str, str], ...]
Value = Union[Fraction, str, bool]

_MAX_DEPTH = 200


@dataclass(frozen=True)
class Outbox:
    """Last output of a component: sender store, actualized predicate, label."""

    sender: Store
    pred: ast.Expr
    label: str


class ComponentState(NamedTuple):
    agent: str
    store: Store
    outbox: Optional[Outbox]  # None is the empty outbox


def store_str(store: Store) -> str:
    return ",".join(f"{a}={v}" for a, v in store)


def enumerate_stores(model: "CheckedModel") -> list[Store]:
    names = list(model.attributes)
    domains = [model.attypes[model.attributes[a]] for a in names]
    return [tuple(zip(names, combo)) for combo in itertools.product(*domains)]


# -- expression evaluation -------------------------------------------------


def _lit(v) -> ast.Expr:
    if isinstance(v, bool):
        return ast.BoolLit(v)
    if isinstance(v, Fraction):
        return ast.Num(str(v))
    if isinstance(v, str):
        return ast.Name(v)
    return v  # already an expression


def _is_ground(v) -> bool:
    return isinstance(v, (bool, Fraction, str))


class _Eval:
    def __init__(self, model: "CheckedModel", my: Optional[dict], bare: Optional[dict]):
        self.m = model
        self.my = my
        self.bare = bare

    def __call__(self, e, env=None, depth=0):
        if depth > _MAX_DEPTH:
            raise EvaluationError("evaluation depth exceeded (recursive function?)")
        m = self.m
        if isinstance(e, ast.Num):
            return e.value
        if isinstance(e, ast.BoolLit):
            return e.value
        if isinstance(e, ast.Name):
            if env and e.id in env:
                return env[e.id]
            if e.id in m.consts:
                return m.consts[e.id]
            if e.id in m.enum_type:
                return e.id
            if e.id in m.attributes:
                return e if self.bare is None else self.bare[e.id]
            raise EvaluationError(f"unknown name '{e.id}'")
        if isinstance(e, ast.My):
            if self.my is None:
                raise EvaluationError(f"my.{e.attr} used in a closed context")
            return self.my[e.attr]
        if isinstance(e, ast.Call):
            args = [self(a, env, depth + 1) for a in e.args]
            if not all(_is_ground(a) for a in args):
                return ast.Call(e.fn, tuple(_lit(a) for a in args))
            return self.apply(e.fn, args, depth)
        if isinstance(e, ast.BinOp):
            left, right = self(e.left, env, depth + 1), self(e.right, env, depth + 1)
            if not (_is_ground(left) and _is_ground(right)):
                return ast.BinOp(e.op, _lit(left), _lit(right))
            return _arith(e.op, left, right)
        if isinstance(e, ast.Cmp):
            left, right = self(e.left, env, depth + 1), self(e.right, env, depth + 1)
            if not (_is_ground(left) and _is_ground(right)):
                return ast.Cmp(e.op, _lit(left), _lit(right))
            return self.compare(e.op, left, right)
        if isinstance(e, ast.Not):
            v = self(e.arg, env, depth + 1)
            return (not v) if isinstance(v, bool) else ast.Not(v)
        if isinstance(e, ast.And):
            left, right = self(e.left, env, depth + 1), self(e.right, env, depth + 1)
            if left is False or right is False:
                return False
            if left is True:
                return right
            if right is True:
                return left
            return ast.And(left, right)
        if isinstance(e, ast.Or):
            left, right = self(e.left, env, depth + 1), self(e.right, env, depth + 1)
            if left is True or right is True:
                return True
            if left is False:
                return right
            if right is False:
                return left
            return ast.Or(left, right)
        if isinstance(e, ast.Frc):
            raise EvaluationError("frc(...) depends on the occupancy measure, not on a store")
        raise EvaluationError(f"cannot evaluate {e!r}")

    def apply(self, fn: str, args: list, depth: int):
        f = self.m.funcs.get(fn)
        if f is None:
            raise EvaluationError(f"unknown function '{fn}'")
        if len(args) != len(f.params):
            raise EvaluationError(f"function {fn} expects {len(f.params)} arguments")
        env = {p.name: a for p, a in zip(f.params, args)}
        if isinstance(f.body, ast.CaseTable):
            key = tuple(env[s] for s in f.body.scrutinee)
            row = self.m.case_index[fn].get(key)
            if row is None:
                shown = key[0] if len(key) == 1 else key
                raise EvaluationError(f"function {fn}: no case for {shown}")
            return self(row, env, depth + 1)
        return self(f.body, env, depth + 1)

    def compare(self, op: str, a, b) -> bool:
        if isinstance(a, str) and isinstance(b, str):
            ta, tb = self.m.enum_type.get(a), self.m.enum_type.get(b)
            if ta != tb:
                raise EvaluationError(f"cannot compare {a} and {b} of different types")
            a, b = self.m.enum_index[a], self.m.enum_index[b]
        elif isinstance(a, bool) or isinstance(b, bool):
            if op not in ("=", "!="):
                raise EvaluationError("booleans only support = and !=")
        elif not (isinstance(a, Fraction) and isinstance(b, Fraction)):
            raise EvaluationError(f"cannot compare {a!r} and {b!r}")
        return {
            "=": a == b, "!=": a != b, "<": a < b,
            "<=": a <= b, ">": a > b, ">=": a >= b,
        }[op]


def _arith(op: str, a, b) -> Fraction:
    if not (isinstance(a, Fraction) and isinstance(b, Fraction)) or isinstance(a, bool) or isinstance(b, bool):
        raise EvaluationError(f"arithmetic on non-numeric operands {a!r} {op} {b!r}")
    if op == "+":
        return a + b
    if op == "-":
        return a - b
    if op == "*":
        return a * b
    if b == 0:
        raise EvaluationError("division by zero")
    return a / b


def eval_local(expr: ast.Expr, store: Store, model: "CheckedModel", env: Optional[dict] = None):
    """Evaluate *expr* in the owner's *store*.

    Ground expressions yield a Fraction, an enum value (str) or a bool.
    Predicates mentioning bare attribute names come back as a closed
    predicate: ``my.a`` replaced by its value, ground sub-terms folded.
    """
    return _Eval(model, dict(store), None)(expr, env)


def sat_remote(pred: ast.Expr | bool, store: Store, model: "CheckedModel") -> bool:
    """Decide closed predicate *pred* against a partner's *store*."""
    if isinstance(pred, bool):  # eval_local folds ground predicates to a bool
        return pred
    v = _Eval(model, None, dict(store))(pred)
    if not isinstance(v, bool):
        raise EvaluationError("predicate did not evaluate to a truth value")
    return v


def eval_update(model: "CheckedModel", name: str, store: Store) -> dict[Store, Fraction]:
    """Distribution over next stores produced by update *name* from *store*."""
    upd = model.updates.get(name)
    if upd is None:
        raise EvaluationError(f"unknown update '{name}'")
    ev = _Eval(model, dict(store), None)
    acc: dict[Store, Fraction] = {}
    total = Fraction(0)
    for branch in upd.branches:
        p = ev(branch.prob)
        if not isinstance(p, Fraction) or isinstance(p, bool):
            raise EvaluationError(f"update {name}: branch probability is not numeric")
        new = dict(store)
        for a in branch.assigns:
            v = ev(a.expr)
            if not isinstance(v, str) or v not in model.attypes[model.attributes[a.attr]]:
                raise EvaluationError(f"update {name}: value {v!r} not valid for attribute {a.attr}")
            new[a.attr] = v
        target = tuple((a, new[a]) for a, _ in store)
        acc[target] = acc.get(target, Fraction(0)) + p
        total += p
    if total != 1:
        raise SemanticError(f"update {name} at store [{store_str(store)}]: probabilities sum to {total}, not 1")
    order = model.store_order
    return {s: acc[s] for s in sorted(acc, key=order.__getitem__) if acc[s] != 0}


# -- component states ------------------------------------------------------


def output_occurrences(model: "CheckedModel") -> list[tuple[str, ast.Expr]]:
    """Distinct (label, predicate) pairs of output actions, in source order."""
    seen: dict[tuple[str, ast.Expr], None] = {}
    for _, _, act in model.ast.actions():
        if act.kind == "out":
            seen.setdefault((act.label, act.pred), None)
    return list(seen)


def enumerate_outboxes(model: "CheckedModel") -> list[Optional[Outbox]]:
    boxes: dict[Outbox, None] = {}
    occurrences = output_occurrences(model)
    for store in enumerate_stores(model):
        for label, pred in occurrences:
            boxes.setdefault(Outbox(store, _lit(eval_local(pred, store, model)), label), None)
    return [None, *boxes]


def enumerate_component_states(model: "CheckedModel") -> list[ComponentState]:
    stores = enumerate_stores(model)
    outboxes = enumerate_outboxes(model)
    return [
        ComponentState(c, g, o)
        for c in model.states
        for g in stores
        for o in outboxes
    ]
