"""Translate a validated PiFF model into a flat FlyFast agent specification.

The work happens per source pair (agent state, store): every summand of the
agent's equation is interpreted at that store and produces one probability
definition per successor store of its update. The resulting summands are
copied onto each flat state sharing the pair, whatever its outbox.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Optional

from piff import semantics
from piff.errors import TranslationError
from piff.flyfast import FlatSpec, ProbExpr
from piff.frontend import ast
from piff.frontend.printer import format_expr
from piff.frontend.validate import CheckedModel, init_store
from piff.semantics import ComponentState, Outbox, Store


# -- annotation ----------------------------------------------------------------


def annotate_actions(model: CheckedModel) -> CheckedModel:
    """Number every action occurrence 1, 2, ... in source order."""
    k = 0
    states = []
    for eq in model.ast.states:
        summands = []
        for s in eq.summands:
            k += 1
            summands.append(replace(s, action=replace(s.action, annotation=k)))
        states.append(replace(eq, summands=tuple(summands)))
    return model.with_ast(replace(model.ast, states=tuple(states)))


def _annotated(model: CheckedModel) -> bool:
    return all(a.annotation is not None for _, _, a in model.ast.actions())


# -- naming ----------------------------------------------------------------------


def pred_digest(pred: ast.Expr) -> str:
    if isinstance(pred, ast.BoolLit):
        return "true" if pred.value else "false"
    return "p" + hashlib.sha1(format_expr(pred).encode()).hexdigest()[:8]


def outbox_digest(o: Optional[Outbox]) -> str:
    if o is None:
        return "eps"
    return f"{semantics.store_str(o.sender)}|{pred_digest(o.pred)}|{o.label}"


class StateEncoder:
    """Injective naming of component states, ``C@store@outbox``."""

    def __init__(self, omega: list[ComponentState]):
        self.omega = list(omega)
        self.name_of: dict[ComponentState, str] = {}
        self.state_of: dict[str, ComponentState] = {}
        for cs in self.omega:
            name = self.encode(cs)
            if name in self.state_of:
                raise TranslationError(f"state naming is not injective: {name}")
            self.name_of[cs] = name
            self.state_of[name] = cs

    @staticmethod
    def encode(cs: ComponentState) -> str:
        return f"{cs.agent}@{semantics.store_str(cs.store)}@{outbox_digest(cs.outbox)}"

    def __getitem__(self, cs: ComponentState) -> str:
        return self.name_of[cs]

    def __len__(self) -> int:
        return len(self.omega)


def action_name(agent: str, store: Store, action: ast.Action, target: str) -> str:
    kind = "" if action.kind == "out" else "?"
    return f"{agent}@{semantics.store_str(store)}#{action.label}{kind}#{action.annotation}#{target}"


# -- probability expressions -------------------------------------------------


class _Context:
    def __init__(self, model: CheckedModel):
        self.model = model
        self.omega = semantics.enumerate_component_states(model)
        self.enc = StateEncoder(self.omega)
        self.by_agent: dict[str, list[str]] = {}
        for cs in self.omega:
            self.by_agent.setdefault(cs.agent, []).append(self.enc[cs])


def translate_prob_expr(p: ast.Expr, store: Store, ctx: "_Context") -> ProbExpr:
    """``I_P``: constants become rationals, frc terms become sums of flat states."""
    model = ctx.model
    if isinstance(p, ast.Frc):
        if p.state is not None:
            return ProbExpr.frc(ctx.by_agent.get(p.state, []))
        local = semantics._lit(semantics.eval_local(p.pred, store, model))
        return ProbExpr.frc(
            ctx.enc[cs] for cs in ctx.omega if semantics.sat_remote(local, cs.store, model)
        )
    if isinstance(p, ast.BinOp) and p.op == "*":
        return translate_prob_expr(p.left, store, ctx) * translate_prob_expr(p.right, store, ctx)
    if isinstance(p, ast.BinOp) and p.op == "+":
        return translate_prob_expr(p.left, store, ctx) + translate_prob_expr(p.right, store, ctx)
    v = semantics.eval_local(p, store, model)
    if not isinstance(v, Fraction) or isinstance(v, bool):
        raise TranslationError(f"probability {format_expr(p)} is not numeric at [{semantics.store_str(store)}]")
    return ProbExpr.const(v)


def _partners(ctx: "_Context", action: ast.Action, store: Store) -> list[str]:
    model = ctx.model
    local = semantics._lit(semantics.eval_local(action.pred, store, model))
    out = []
    for cs in ctx.omega:
        o = cs.outbox
        if o is None or o.label != action.label:
            continue
        if semantics.sat_remote(o.pred, store, model) and semantics.sat_remote(local, o.sender, model):
            out.append(ctx.enc[cs])
    return out


# -- steps -------------------------------------------------------------------

Emitted = list[tuple[str, ProbExpr, str]]


def _output_target(model, summand, store, succ) -> ComponentState:
    a = summand.action
    pred = semantics._lit(semantics.eval_local(a.pred, store, model))
    return ComponentState(summand.target, succ, Outbox(store, pred, a.label))


def translate_output_step(summand: ast.Summand, agent: str, store: Store, ctx: "_Context") -> tuple[Emitted, ProbExpr]:
    """Step 1; returns the emitted triples and the summand's non-update factor q."""
    model = ctx.model
    if semantics.eval_local(summand.guard, store, model) is not True:
        return [], ProbExpr()
    q = translate_prob_expr(summand.prob, store, ctx)
    out = []
    for succ, r in semantics.eval_update(model, summand.action.update, store).items():
        target = ctx.enc[_output_target(model, summand, store, succ)]
        out.append((action_name(agent, store, summand.action, target), q.scale(r), target))
    return out, q


def translate_input_step(summand: ast.Summand, agent: str, store: Store, ctx: "_Context") -> tuple[Emitted, ProbExpr]:
    """Step 2: like step 1, weighted by the fraction of matching senders."""
    model = ctx.model
    if semantics.eval_local(summand.guard, store, model) is not True:
        return [], ProbExpr()
    q = translate_prob_expr(summand.prob, store, ctx) * ProbExpr.frc(_partners(ctx, summand.action, store))
    out = []
    for succ, r in semantics.eval_update(model, summand.action.update, store).items():
        target = ctx.enc[ComponentState(summand.target, succ, None)]
        out.append((action_name(agent, store, summand.action, target), q.scale(r), target))
    return out, q


def translate_rest_step(summand: ast.Summand, agent: str, store: Store, qs: list[ProbExpr],
                        ctx: "_Context") -> Emitted:
    """Step 3: the rest summand fires with ``1 - sum(q)`` over the other summands."""
    model = ctx.model
    q_rest = ProbExpr.const(1)
    for q in qs:
        q_rest = q_rest - q
    out = []
    for succ, r in semantics.eval_update(model, summand.action.update, store).items():
        target = ctx.enc[_output_target(model, summand, store, succ)]
        out.append((action_name(agent, store, summand.action, target), q_rest.scale(r), target))
    return out


def translate_pair(agent: str, store: Store, ctx: "_Context") -> Emitted:
    eq = ctx.model.equations[agent]
    emitted: Emitted = []
    qs: list[ProbExpr] = []
    rest = None
    for s in eq.summands:
        if s.rest:
            rest = s
            continue
        step = translate_output_step if s.action.kind == "out" else translate_input_step
        triples, q = step(s, agent, store, ctx)
        emitted.extend(triples)
        if triples or q.terms:
            qs.append(q)
    if rest is not None:
        emitted.extend(translate_rest_step(rest, agent, store, qs, ctx))
    return emitted


# -- whole model -------------------------------------------------------------


@dataclass
class Translation:
    spec: FlatSpec
    encoder: StateEncoder
    origin: dict[str, ComponentState]

    def origin_json(self) -> dict:
        return {z: {"state": cs.agent, "store": dict(cs.store), "outbox": outbox_digest(cs.outbox)}
                for z, cs in self.origin.items()}


def translate(model: CheckedModel, prune: bool = False) -> Translation:
    """Build the flat specification; with *prune*, keep only states reachable from init."""
    if not _annotated(model):
        model = annotate_actions(model)
    ctx = _Context(model)
    enc = ctx.enc
    actions: dict[str, ProbExpr] = {}
    per_pair: dict[tuple[str, Store], list[tuple[str, str]]] = {}
    for agent in model.states:
        for store in semantics.enumerate_stores(model):
            summands = []
            for xi, e, target in translate_pair(agent, store, ctx):
                if xi in actions:
                    raise TranslationError(f"action {xi} defined twice")
                actions[xi] = e
                summands.append((xi, target))
            per_pair[(agent, store)] = summands

    states = [enc[cs] for cs in ctx.omega]
    equations = {enc[cs]: list(per_pair[(cs.agent, cs.store)]) for cs in ctx.omega}

    init: dict[str, int] = {}
    for entry in model.init_entries:
        if entry.state not in model.equations:
            raise TranslationError(f"init references undeclared state '{entry.state}'")
        cs = ComponentState(entry.state, init_store(model, entry), None)
        if cs not in enc.name_of:
            raise TranslationError(f"init references unknown component state {cs}")
        init[enc[cs]] = init.get(enc[cs], 0) + entry.count

    spec = simplify(FlatSpec(states, actions, equations, init))
    if prune:
        spec = prune_spec(spec)
    origin = {z: enc.state_of[z] for z in spec.states}
    return Translation(spec, enc, origin)


def simplify(spec: FlatSpec, keep: Optional[set[str]] = None) -> FlatSpec:
    """Drop frc terms outside *keep* and every definition that is identically zero."""
    from piff.poly import RawPoly  # local: only needed here

    keep = set(spec.states) if keep is None else keep
    index = {z: i for i, z in enumerate(z for z in spec.states if z in keep)}
    S = len(index)
    actions = {}
    for xi, e in spec.actions.items():
        e2 = e.restrict(keep)
        raw = e2.to_raw(index, S, where=f" in action {xi}") if e2.terms else RawPoly(S)
        if not raw.vanishes_on_simplex():
            actions[xi] = e2
    states = [z for z in spec.states if z in keep]
    equations = {z: [(xi, t) for xi, t in spec.equations[z] if xi in actions and t in keep]
                 for z in states}
    used = {xi for z in states for xi, _ in equations[z]}
    actions = {xi: e for xi, e in actions.items() if xi in used}
    init = {z: n for z, n in spec.init.items() if z in keep}
    return FlatSpec(states, actions, equations, init)


def prune_spec(spec: FlatSpec) -> FlatSpec:
    """Restrict to states reachable from init, iterating until nothing changes."""
    while True:
        seen = set(spec.init)
        todo = list(spec.init)
        while todo:
            z = todo.pop()
            for _, t in spec.equations[z]:
                if t not in seen:
                    seen.add(t)
                    todo.append(t)
        if seen == set(spec.states):
            return spec
        spec = simplify(spec, seen)
