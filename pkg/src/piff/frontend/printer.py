"""Pretty-printer emitting canonical `.piff` source."""

from __future__ import annotations

from piff.frontend import ast

_COMPOUND_ARITH = (ast.BinOp,)
_COMPOUND_BOOL = (ast.And, ast.Or)


def format_expr(e: ast.Expr) -> str:
    if isinstance(e, ast.Num):
        return e.text
    if isinstance(e, ast.Name):
        return e.id
    if isinstance(e, ast.My):
        return f"my.{e.attr}"
    if isinstance(e, ast.BoolLit):
        return "true" if e.value else "false"
    if isinstance(e, ast.Call):
        return f"{e.fn}({', '.join(format_expr(a) for a in e.args)})"
    if isinstance(e, ast.Frc):
        return f"frc({e.state if e.state is not None else format_expr(e.pred)})"
    if isinstance(e, ast.BinOp):
        return f"{_wrap(e.left, _COMPOUND_ARITH)} {e.op} {_wrap(e.right, _COMPOUND_ARITH)}"
    if isinstance(e, ast.Cmp):
        return f"{_wrap(e.left, _COMPOUND_ARITH)} {e.op} {_wrap(e.right, _COMPOUND_ARITH)}"
    if isinstance(e, ast.Not):
        return f"!{_wrap(e.arg, _COMPOUND_BOOL + (ast.Cmp,))}"
    if isinstance(e, ast.And):
        return f"{_wrap(e.left, _COMPOUND_BOOL)} & {_wrap(e.right, _COMPOUND_BOOL)}"
    if isinstance(e, ast.Or):
        return f"{_wrap(e.left, _COMPOUND_BOOL)} | {_wrap(e.right, _COMPOUND_BOOL)}"
    raise TypeError(f"not an expression: {e!r}")


def _wrap(e, kinds) -> str:
    s = format_expr(e)
    return f"({s})" if isinstance(e, kinds) else s


def format_action(a: ast.Action) -> str:
    marker = "<>" if a.kind == "out" else "()"
    return f"{a.label}*[{format_expr(a.pred)}]{marker} {a.update}"


def format_summand(s: ast.Summand) -> str:
    if s.rest:
        head = "rest"
    else:
        head = f"[{format_expr(s.guard)}] {format_expr(s.prob)}"
    return f"{head} :: {format_action(s.action)} . {s.target}"


def _format_keys(keys: tuple[str, ...]) -> str:
    return keys[0] if len(keys) == 1 else f"({', '.join(keys)})"


def format_model(m: ast.Model) -> str:
    out: list[str] = []
    for t in m.attypes:
        out.append(f"attype {t.name} enum {', '.join(t.values)};")
    for c in m.consts:
        out.append(f"const {c.name} = {format_expr(c.expr)};")
    for a in m.attributes:
        out.append(f"attribute {a.name} : {a.type};")
    for f in m.funcs:
        params = ", ".join(f"{p.name}:{p.type}" for p in f.params)
        if isinstance(f.body, ast.CaseTable):
            rows = "; ".join(f"{_format_keys(r.keys)}: {format_expr(r.expr)}" for r in f.body.rows)
            body = f"case {_format_keys(f.body.scrutinee)} of {rows}"
        else:
            body = format_expr(f.body)
        out.append(f"func {f.name}({params}): {f.result}; {body} endfunc;")
    for u in m.updates:
        out.append(f"update {u.name}")
        lines = []
        for b in u.branches:
            assigns = ", ".join(f"my.{a.attr} := {format_expr(a.expr)}" for a in b.assigns)
            lines.append(f"  {assigns + ' ' if assigns else ''}with {format_expr(b.prob)}")
        out.append(";\n".join(lines))
        out.append("endupdate")
    for eq in m.states:
        body = "\n  + ".join(format_summand(s) for s in eq.summands)
        out.append(f"state {eq.name} {{\n    {body}\n}}")
    if m.init_n is not None or m.init:
        out.append("init")
        if m.init_n is not None:
            out.append(f"  N = {m.init_n};")
        for e in m.init:
            store = "".join(f", {a}={v}" for a, v in e.store)
            out.append(f"  ({e.state}{store}) * {e.count};")
    return "\n".join(out) + "\n"
