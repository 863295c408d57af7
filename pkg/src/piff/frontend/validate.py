"""Static checks turning a parsed :class:`Model` into a :class:`CheckedModel`."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from piff import semantics
from piff.errors import Diagnostic, EvaluationError, ModelError, SemanticError
from piff.frontend import ast

NUM, BOOL = "num", "bool"


@dataclass(frozen=True)
class ProbForm:
    """Restricted transition probability: ``coef`` or ``coef * frc(...)``."""

    coef: ast.Expr
    frc: Optional[ast.Frc]


class CheckedModel:
    """A validated model together with its resolved symbol tables."""

    def __init__(self, model: ast.Model):
        self.ast = model
        self.attypes: dict[str, tuple[str, ...]] = {}
        self.enum_type: dict[str, str] = {}
        self.enum_index: dict[str, int] = {}
        self.attributes: dict[str, str] = {}
        self.consts: dict[str, object] = {}
        self.funcs: dict[str, ast.FuncDef] = {}
        self.case_index: dict[str, dict[tuple, ast.Expr]] = {}
        self.updates: dict[str, ast.UpdateDef] = {}
        self.states: tuple[str, ...] = ()
        self.equations: dict[str, ast.StateEq] = {}
        self.prob_forms: dict[tuple[str, int], ProbForm] = {}
        self.store_order: dict = {}

    def with_ast(self, model: ast.Model) -> "CheckedModel":
        """Copy of this model with a structurally equivalent AST (annotations)."""
        new = CheckedModel.__new__(CheckedModel)
        new.__dict__.update(self.__dict__)
        new.ast = model
        new.equations = {eq.name: eq for eq in model.states}
        return new

    @property
    def init_entries(self) -> tuple[ast.InitEntry, ...]:
        return self.ast.init


class _Checker:
    def __init__(self, model: ast.Model):
        self.model = model
        self.cm = CheckedModel(model)
        self.diags: list[Diagnostic] = []

    def err(self, pos, msg: str):
        line, col = pos if pos else (0, 0)
        self.diags.append(Diagnostic(line, col, msg))

    # -- typing ---------------------------------------------------------------

    def type_of(self, e, pos, env=None, *, my=True, bare=False) -> Optional[str]:
        """Static type of *e*: NUM, BOOL or ``enum:<T>``; None after reporting."""
        cm = self.cm
        if isinstance(e, ast.Num):
            return NUM
        if isinstance(e, ast.BoolLit):
            return BOOL
        if isinstance(e, ast.Name):
            if env and e.id in env:
                return env[e.id]
            if e.id in cm.consts:
                v = cm.consts[e.id]
                return f"enum:{cm.enum_type[v]}" if isinstance(v, str) else NUM
            if e.id in cm.enum_type:
                return f"enum:{cm.enum_type[e.id]}"
            if e.id in cm.attributes:
                if not bare:
                    self.err(pos, f"bare attribute '{e.id}' only allowed in predicates (use my.{e.id})")
                    return None
                return f"enum:{cm.attributes[e.id]}"
            self.err(pos, f"undeclared name '{e.id}'")
            return None
        if isinstance(e, ast.My):
            if not my:
                self.err(pos, f"my.{e.attr} not allowed here")
                return None
            if e.attr not in cm.attributes:
                self.err(pos, f"undeclared attribute '{e.attr}'")
                return None
            return f"enum:{cm.attributes[e.attr]}"
        if isinstance(e, ast.Call):
            f = cm.funcs.get(e.fn)
            if f is None:
                self.err(pos, f"undeclared function '{e.fn}'")
                return None
            if len(e.args) != len(f.params):
                self.err(pos, f"function {e.fn} expects {len(f.params)} arguments, got {len(e.args)}")
                return None
            for a, p in zip(e.args, f.params):
                t = self.type_of(a, pos, env, my=my, bare=bare)
                if t is not None and t != f"enum:{p.type}":
                    self.err(pos, f"argument of {e.fn} has type {_show(t)}, expected {p.type}")
            return NUM if f.is_prob else f"enum:{f.result}"
        if isinstance(e, ast.BinOp):
            ok = True
            for side in (e.left, e.right):
                t = self.type_of(side, pos, env, my=my, bare=bare)
                if t is not None and t != NUM:
                    self.err(pos, f"operator '{e.op}' needs numeric operands")
                    ok = False
            return NUM if ok else None
        if isinstance(e, ast.Cmp):
            lt = self.type_of(e.left, pos, env, my=my, bare=bare)
            rt = self.type_of(e.right, pos, env, my=my, bare=bare)
            if lt is not None and rt is not None and lt != rt:
                self.err(pos, f"cannot compare {_show(lt)} with {_show(rt)}")
            return BOOL
        if isinstance(e, ast.Not):
            self.expect_bool(e.arg, pos, env, my=my, bare=bare)
            return BOOL
        if isinstance(e, (ast.And, ast.Or)):
            self.expect_bool(e.left, pos, env, my=my, bare=bare)
            self.expect_bool(e.right, pos, env, my=my, bare=bare)
            return BOOL
        if isinstance(e, ast.Frc):
            self.err(pos, "frc(...) not allowed here")
            return None
        self.err(pos, f"unexpected expression {e!r}")
        return None

    def expect_bool(self, e, pos, env=None, **kw):
        t = self.type_of(e, pos, env, **kw)
        if t is not None and t != BOOL:
            self.err(pos, "expected a boolean expression")

    # -- passes ---------------------------------------------------------------

    def run(self) -> CheckedModel:
        m, cm = self.model, self.cm
        self.check_types()
        self.check_consts()
        for a in m.attributes:
            if a.name in cm.attributes:
                self.err(a.pos, f"duplicate attribute '{a.name}'")
            elif a.name in cm.consts or a.name in cm.enum_type:
                self.err(a.pos, f"attribute '{a.name}' clashes with a constant or enum value")
            elif a.type not in cm.attypes:
                self.err(a.pos, f"undeclared type '{a.type}' for attribute '{a.name}'")
            else:
                cm.attributes[a.name] = a.type
        self.check_funcs()
        for u in m.updates:
            if u.name in cm.updates:
                self.err(u.pos, f"duplicate update '{u.name}'")
            cm.updates[u.name] = u
        for eq in m.states:
            if eq.name in cm.equations:
                self.err(eq.pos, f"duplicate state '{eq.name}'")
            cm.equations[eq.name] = eq
        cm.states = tuple(cm.equations)
        if self.diags:
            raise ModelError(self.diags)
        stores = semantics.enumerate_stores(cm)
        cm.store_order = {s: i for i, s in enumerate(stores)}
        self.check_updates(stores)
        self.check_states(stores)
        self.check_init()
        if self.diags:
            raise ModelError(self.diags)
        return cm

    def check_types(self):
        cm = self.cm
        for t in self.model.attypes:
            if t.name in cm.attypes:
                self.err(t.pos, f"duplicate attribute type '{t.name}'")
                continue
            if not t.values:
                self.err(t.pos, f"attribute type '{t.name}' has no values")
            if len(set(t.values)) != len(t.values):
                self.err(t.pos, f"attribute type '{t.name}' lists a value twice")
            cm.attypes[t.name] = t.values
            for i, v in enumerate(t.values):
                if v in cm.enum_type and cm.enum_type[v] != t.name:
                    self.err(t.pos, f"enum value '{v}' already belongs to type '{cm.enum_type[v]}'")
                    continue
                cm.enum_type.setdefault(v, t.name)
                cm.enum_index.setdefault(v, i)

    def check_consts(self):
        cm = self.cm
        for c in self.model.consts:
            if c.name in cm.consts:
                self.err(c.pos, f"duplicate constant '{c.name}'")
                continue
            if c.name in cm.enum_type:
                self.err(c.pos, f"constant '{c.name}' clashes with an enum value")
                continue
            if any(isinstance(n, (ast.My, ast.Frc, ast.Call)) for n in ast.walk(c.expr)):
                self.err(c.pos, f"constant '{c.name}' must be a closed arithmetic expression")
                continue
            try:
                v = semantics._Eval(cm, None, None)(c.expr)
            except EvaluationError as exc:
                self.err(c.pos, f"constant '{c.name}': {exc}")
                continue
            if isinstance(v, bool) or not isinstance(v, (Fraction, str)):
                self.err(c.pos, f"constant '{c.name}' must be a number or an enum value")
                continue
            cm.consts[c.name] = v

    def check_funcs(self):
        cm = self.cm
        for f in self.model.funcs:
            if f.name in cm.funcs:
                self.err(f.pos, f"duplicate function '{f.name}'")
                continue
            cm.funcs[f.name] = f
        for f in self.model.funcs:
            if cm.funcs.get(f.name) is not f:
                continue
            env = {}
            for p in f.params:
                if p.type not in cm.attypes:
                    self.err(f.pos, f"function {f.name}: undeclared parameter type '{p.type}'")
                if p.name in env:
                    self.err(f.pos, f"function {f.name}: duplicate parameter '{p.name}'")
                env[p.name] = f"enum:{p.type}"
            if f.result != "float" and f.result not in cm.attypes:
                self.err(f.pos, f"function {f.name}: undeclared result type '{f.result}'")
                continue
            want = NUM if f.is_prob else f"enum:{f.result}"
            bodies = []
            if isinstance(f.body, ast.CaseTable):
                table: dict[tuple, ast.Expr] = {}
                scr = f.body.scrutinee
                ptypes = {p.name: p.type for p in f.params}
                if any(s not in ptypes for s in scr) or len(set(scr)) != len(scr):
                    self.err(f.pos, f"function {f.name}: case must range over distinct parameters")
                    continue
                for row in f.body.rows:
                    if len(row.keys) != len(scr):
                        self.err(f.pos, f"function {f.name}: case row {row.keys} has wrong arity")
                        continue
                    for s, k in zip(scr, row.keys):
                        if k not in cm.attypes.get(ptypes[s], ()):
                            self.err(f.pos, f"function {f.name}: '{k}' is not a value of {ptypes[s]}")
                    if row.keys in table:
                        self.err(f.pos, f"function {f.name}: duplicate case row {row.keys}")
                    table[row.keys] = row.expr
                    bodies.append(row.expr)
                cm.case_index[f.name] = table
            else:
                bodies.append(f.body)
            for b in bodies:
                t = self.type_of(b, f.pos, env, my=False)
                if t is not None and t != want:
                    self.err(f.pos, f"function {f.name}: body has type {_show(t)}, expected {_show(want)}")
        self.check_recursion()

    def check_recursion(self):
        cm = self.cm
        calls = {}
        for name, f in cm.funcs.items():
            exprs = [r.expr for r in f.body.rows] if isinstance(f.body, ast.CaseTable) else [f.body]
            calls[name] = {n.fn for e in exprs for n in ast.walk(e) if isinstance(n, ast.Call)}
        state: dict[str, int] = {}

        def visit(n):
            state[n] = 1
            for c in sorted(calls.get(n, ())):
                if state.get(c) == 1:
                    return c
                if c in calls and c not in state:
                    hit = visit(c)
                    if hit:
                        return hit
            state[n] = 2
            return None

        for name in calls:
            if name not in state:
                hit = visit(name)
                if hit:
                    self.err(cm.funcs[hit].pos, f"recursive function definition involving '{hit}'")

    def check_updates(self, stores):
        cm = self.cm
        for u in self.model.updates:
            for b in u.branches:
                seen = set()
                for a in b.assigns:
                    if a.attr not in cm.attributes:
                        self.err(u.pos, f"update {u.name}: undeclared attribute '{a.attr}'")
                        continue
                    if a.attr in seen:
                        self.err(u.pos, f"update {u.name}: attribute '{a.attr}' assigned twice")
                    seen.add(a.attr)
                    t = self.type_of(a.expr, u.pos)
                    if t is not None and t != f"enum:{cm.attributes[a.attr]}":
                        self.err(u.pos, f"update {u.name}: value for {a.attr} has type {_show(t)}")
                t = self.type_of(b.prob, u.pos)
                if t is not None and t != NUM:
                    self.err(u.pos, f"update {u.name}: branch probability must be numeric")
        if self.diags:
            return
        for u in self.model.updates:
            for g in stores:
                try:
                    semantics.eval_update(cm, u.name, g)
                except (EvaluationError, SemanticError) as exc:
                    self.err(u.pos, str(exc))
                    continue
                ev = semantics._Eval(cm, dict(g), None)
                for b in u.branches:
                    p = ev(b.prob)
                    if p < 0 or p > 1:
                        self.err(u.pos, f"update {u.name} at store [{semantics.store_str(g)}]: "
                                        f"branch probability {p} outside [0,1]")

    def check_states(self, stores):
        cm = self.cm
        for eq in self.model.states:
            rests = [s for s in eq.summands if s.rest]
            if len(rests) > 1:
                self.err(eq.pos, f"state {eq.name}: more than one rest summand")
            for k, s in enumerate(eq.summands):
                pos = s.pos or eq.pos
                if s.target not in cm.equations:
                    self.err(pos, f"state {eq.name}: undeclared target state '{s.target}'")
                if s.action.update not in cm.updates:
                    self.err(pos, f"state {eq.name}: undeclared update '{s.action.update}'")
                if s.rest and s.action.kind != "out":
                    self.err(pos, f"state {eq.name}: rest summand must use an output action")
                if any(isinstance(n, ast.Frc) for n in ast.walk(s.guard)):
                    self.err(pos, f"state {eq.name}: guard depends on occupancy (frc in guard)")
                else:
                    self.expect_bool(s.guard, pos)
                if any(isinstance(n, ast.Frc) for n in ast.walk(s.action.pred)):
                    self.err(pos, f"state {eq.name}: action predicate may not use frc")
                else:
                    self.expect_bool(s.action.pred, pos, bare=True)
                if not s.rest:
                    form = self.prob_form(s.prob, pos, eq.name)
                    if form is not None:
                        cm.prob_forms[(eq.name, k)] = form
        if self.diags:
            return
        # store-level checks of the restricted probabilities
        for eq in self.model.states:
            for g in stores:
                const_total = Fraction(0)
                for k, s in enumerate(eq.summands):
                    pos = s.pos or eq.pos
                    try:
                        guard = semantics.eval_local(s.guard, g, cm)
                        if s.rest:
                            continue
                        coef = semantics.eval_local(cm.prob_forms[(eq.name, k)].coef, g, cm)
                    except EvaluationError as exc:
                        self.err(pos, f"state {eq.name} at store [{semantics.store_str(g)}]: {exc}")
                        continue
                    if not isinstance(coef, Fraction) or coef < 0 or coef > 1:
                        self.err(pos, f"state {eq.name} at store [{semantics.store_str(g)}]: "
                                      f"probability {coef} outside [0,1]")
                        continue
                    if guard is True and cm.prob_forms[(eq.name, k)].frc is None:
                        const_total += coef
                if const_total > 1:
                    self.err(eq.pos, f"state {eq.name} at store [{semantics.store_str(g)}]: "
                                     f"constant probabilities sum to {const_total} > 1")

    def prob_form(self, p, pos, state) -> Optional[ProbForm]:
        def coef_ok(e) -> bool:
            if isinstance(e, ast.Num):
                return True
            if isinstance(e, ast.Name):
                return isinstance(self.cm.consts.get(e.id), Fraction)
            if isinstance(e, ast.Call):
                f = self.cm.funcs.get(e.fn)
                if f is not None and f.is_prob:
                    self.type_of(e, pos)
                    return True
            if isinstance(e, ast.BinOp) and e.op in ("+", "-", "*", "/"):
                return coef_ok(e.left) and coef_ok(e.right)
            return False

        def frc_ok(f: ast.Frc) -> bool:
            if f.state is not None:
                if f.state not in self.cm.equations:
                    self.err(pos, f"state {state}: frc of undeclared state '{f.state}'")
                return True
            self.expect_bool(f.pred, pos, bare=True)
            return True

        if isinstance(p, ast.Frc):
            frc_ok(p)
            return ProbForm(ast.Num("1"), p)
        if coef_ok(p):
            return ProbForm(p, None)
        if isinstance(p, ast.BinOp) and p.op == "*":
            for c, f in ((p.left, p.right), (p.right, p.left)):
                if isinstance(f, ast.Frc) and coef_ok(c):
                    frc_ok(f)
                    return ProbForm(c, f)
        self.err(pos, f"state {state}: probability outside the restricted form "
                      "'e', 'e * frc(C)' or 'e * frc(pred)'")
        return None

    def check_init(self):
        cm = self.cm
        total = 0
        for e in self.model.init:
            if e.state not in cm.equations:
                self.err(e.pos, f"init: undeclared state '{e.state}'")
            given = dict(e.store)
            if len(given) != len(e.store):
                self.err(e.pos, "init: attribute given twice")
            if set(given) != set(cm.attributes):
                self.err(e.pos, f"init: store must assign exactly the attributes {sorted(cm.attributes)}")
            for a, v in given.items():
                if a in cm.attributes and v not in cm.attypes[cm.attributes[a]]:
                    self.err(e.pos, f"init: '{v}' is not a value of {cm.attributes[a]}")
            if e.count < 0:
                self.err(e.pos, "init: negative multiplicity")
            total += e.count
        n = self.model.init_n
        if n is not None and self.model.init and total != n:
            self.err(self.model.init[0].pos, f"init: multiplicities sum to {total}, but N = {n}")


def _show(t: str) -> str:
    return t[5:] if t.startswith("enum:") else t


def validate_model(model: ast.Model) -> CheckedModel:
    """Check *model*; raise :class:`ModelError` listing every violation."""
    return _Checker(model).run()


def init_store(cm: CheckedModel, entry: ast.InitEntry):
    given = dict(entry.store)
    return tuple((a, given[a]) for a in cm.attributes)
