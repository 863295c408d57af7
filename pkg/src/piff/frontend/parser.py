"""Recursive-descent parser producing a :class:`~piff.frontend.ast.Model`."""

from __future__ import annotations

from piff.errors import ParseError
from piff.frontend import ast
from piff.frontend.lexer import Token, tokenize

CMP_OPS = ("=", "!=", "<", "<=", ">", ">=")


class Parser:
    def __init__(self, tokens: list[Token]):
        self.toks = list(tokens)
        self.i = 0

    # -- token helpers ------------------------------------------------------

    def peek(self, offset: int = 0) -> Token | None:
        j = self.i + offset
        return self.toks[j] if j < len(self.toks) else None

    def at(self, text: str, offset: int = 0) -> bool:
        t = self.peek(offset)
        return t is not None and t.kind in ("kw", "sym") and t.text == text

    def at_kind(self, kind: str, offset: int = 0) -> bool:
        t = self.peek(offset)
        return t is not None and t.kind == kind

    def error(self, expected: str) -> ParseError:
        t = self.peek()
        if t is None:
            last = self.toks[-1] if self.toks else None
            line, col = (last.line, last.col + len(last.text)) if last else (1, 1)
            return ParseError(f"expected {expected}, found end of input", line, col)
        return ParseError(f"expected {expected}, found {t.text!r}", t.line, t.col)

    def expect(self, text: str) -> Token:
        if not self.at(text):
            raise self.error(repr(text))
        return self.advance()

    def expect_id(self, what: str = "identifier") -> str:
        if not self.at_kind("id"):
            raise self.error(what)
        return self.advance().text

    def expect_int(self) -> int:
        t = self.peek()
        if t is None or t.kind != "num" or "." in t.text:
            raise self.error("integer")
        self.advance()
        return int(t.text)

    def advance(self) -> Token:
        t = self.toks[self.i]
        self.i += 1
        return t

    def accept(self, text: str) -> bool:
        if self.at(text):
            self.i += 1
            return True
        return False

    def pos(self) -> tuple[int, int]:
        t = self.peek()
        return (t.line, t.col) if t else (0, 0)

    # -- declarations -------------------------------------------------------

    def parse_model(self) -> ast.Model:
        attypes, consts, attrs, funcs, updates, states = [], [], [], [], [], []
        init_n, init = None, []
        while self.peek() is not None:
            if self.at("attype"):
                attypes.append(self.parse_attype())
            elif self.at("const"):
                consts.append(self.parse_const())
            elif self.at("attribute"):
                attrs.append(self.parse_attribute())
            elif self.at("func"):
                funcs.append(self.parse_func())
            elif self.at("update"):
                updates.append(self.parse_update())
            elif self.at("state"):
                states.append(self.parse_state())
            elif self.at("init"):
                n, entries = self.parse_init()
                if n is not None:
                    init_n = n
                init.extend(entries)
            else:
                raise self.error("declaration")
        return ast.Model(
            attypes=tuple(attypes),
            consts=tuple(consts),
            attributes=tuple(attrs),
            funcs=tuple(funcs),
            updates=tuple(updates),
            states=tuple(states),
            init_n=init_n,
            init=tuple(init),
        )

    def parse_attype(self) -> ast.AttType:
        pos = self.pos()
        self.expect("attype")
        name = self.expect_id("type name")
        self.expect("enum")
        values = [self.expect_id("enum value")]
        while self.accept(","):
            values.append(self.expect_id("enum value"))
        self.expect(";")
        return ast.AttType(name, tuple(values), pos)

    def parse_const(self) -> ast.ConstDef:
        pos = self.pos()
        self.expect("const")
        name = self.expect_id("constant name")
        self.expect("=")
        expr = self.parse_arith()
        self.expect(";")
        return ast.ConstDef(name, expr, pos)

    def parse_attribute(self) -> ast.AttributeDecl:
        pos = self.pos()
        self.expect("attribute")
        name = self.expect_id("attribute name")
        self.expect(":")
        typ = self.expect_id("type name")
        self.expect(";")
        return ast.AttributeDecl(name, typ, pos)

    def parse_func(self) -> ast.FuncDef:
        pos = self.pos()
        self.expect("func")
        name = self.expect_id("function name")
        self.expect("(")
        params = []
        if not self.at(")"):
            params.append(self.parse_param())
            while self.accept(","):
                params.append(self.parse_param())
        self.expect(")")
        self.expect(":")
        if self.accept("float"):
            result = "float"
        else:
            result = self.expect_id("result type")
        self.expect(";")
        if self.at("case"):
            body = self.parse_case()
        else:
            body = self.parse_arith()
            self.accept(";")
        self.expect("endfunc")
        self.accept(";")
        return ast.FuncDef(name, tuple(params), result, body, pos)

    def parse_param(self) -> ast.Param:
        name = self.expect_id("parameter name")
        self.expect(":")
        return ast.Param(name, self.expect_id("parameter type"))

    def parse_case(self) -> ast.CaseTable:
        self.expect("case")
        scrutinee = self.parse_id_tuple()
        self.expect("of")
        rows = []
        while not self.at("endfunc"):
            keys = self.parse_id_tuple()
            self.expect(":")
            rows.append(ast.CaseRow(keys, self.parse_arith()))
            if not self.accept(";"):
                break
        if not rows:
            raise self.error("case row")
        return ast.CaseTable(scrutinee, tuple(rows))

    def parse_id_tuple(self) -> tuple[str, ...]:
        if self.accept("("):
            ids = [self.expect_id()]
            while self.accept(","):
                ids.append(self.expect_id())
            self.expect(")")
            return tuple(ids)
        return (self.expect_id(),)

    def parse_update(self) -> ast.UpdateDef:
        pos = self.pos()
        self.expect("update")
        name = self.expect_id("update name")
        branches = []
        while not self.at("endupdate"):
            branches.append(self.parse_branch())
            if not self.accept(";"):
                break
        if not branches:
            raise self.error("update branch")
        self.expect("endupdate")
        self.accept(";")
        return ast.UpdateDef(name, tuple(branches), pos)

    def parse_branch(self) -> ast.UpdateBranch:
        assigns = []
        if not self.at("with"):
            assigns.append(self.parse_assign())
            while self.accept(","):
                assigns.append(self.parse_assign())
        self.expect("with")
        return ast.UpdateBranch(tuple(assigns), self.parse_arith())

    def parse_assign(self) -> ast.Assign:
        self.expect("my")
        self.expect(".")
        attr = self.expect_id("attribute name")
        self.expect(":=")
        return ast.Assign(attr, self.parse_arith())

    def parse_state(self) -> ast.StateEq:
        pos = self.pos()
        self.expect("state")
        name = self.expect_id("state name")
        self.expect("{")
        if self.at("}"):
            raise self.error("summand (a state needs at least one)")
        summands = [self.parse_summand()]
        while self.accept("+"):
            summands.append(self.parse_summand())
        self.expect("}")
        self.accept(";")
        return ast.StateEq(name, tuple(summands), pos)

    def parse_summand(self) -> ast.Summand:
        pos = self.pos()
        if self.accept("rest"):
            guard, prob, rest = ast.BoolLit(True), None, True
        else:
            guard = ast.BoolLit(True)
            if self.accept("["):
                guard = self.parse_bool()
                self.expect("]")
            prob, rest = self.parse_arith(), False
        self.expect("::")
        action = self.parse_action()
        self.expect(".")
        target = self.expect_id("target state")
        return ast.Summand(guard, prob, action, target, rest, pos)

    def parse_action(self) -> ast.Action:
        label = self.expect_id("action label")
        self.expect("*")
        self.expect("[")
        pred = self.parse_bool()
        self.expect("]")
        if self.accept("<>"):
            kind = "out"
        elif self.at("(") and self.at(")", 1):
            self.i += 2
            kind = "in"
        else:
            raise self.error("'<>' or '()'")
        update = self.expect_id("update name")
        return ast.Action(kind, label, pred, update)

    def parse_init(self):
        self.expect("init")
        n = None
        if self.at_kind("id") and self.at("=", 1):
            if self.peek().text != "N":
                raise self.error("'N'")
            self.i += 2
            n = self.expect_int()
            self.expect(";")
        entries = []
        while self.at("("):
            pos = self.pos()
            self.advance()
            state = self.expect_id("state name")
            store = []
            while self.accept(","):
                attr = self.expect_id("attribute name")
                self.expect("=")
                store.append((attr, self.expect_id("attribute value")))
            self.expect(")")
            count = 1
            if self.accept("*"):
                count = self.expect_int()
            self.expect(";")
            entries.append(ast.InitEntry(state, tuple(store), count, pos))
        return n, entries

    # -- boolean expressions ------------------------------------------------

    def parse_bool(self) -> ast.Expr:
        left = self.parse_and()
        while self.accept("|"):
            left = ast.Or(left, self.parse_and())
        return left

    def parse_and(self) -> ast.Expr:
        left = self.parse_not()
        while self.accept("&"):
            left = ast.And(left, self.parse_not())
        return left

    def parse_not(self) -> ast.Expr:
        if self.accept("!"):
            return ast.Not(self.parse_not())
        return self.parse_bool_atom()

    def parse_bool_atom(self) -> ast.Expr:
        if self.accept("true"):
            return ast.BoolLit(True)
        if self.accept("false"):
            return ast.BoolLit(False)
        if self.at("("):
            save = self.i
            try:
                self.advance()
                inner = self.parse_bool()
                self.expect(")")
                nxt = self.peek()
                if nxt is None or nxt.text not in CMP_OPS + ("+", "-", "*", "/"):
                    return inner
            except ParseError:
                pass
            self.i = save
        left = self.parse_arith()
        t = self.peek()
        if t is None or t.kind != "sym" or t.text not in CMP_OPS:
            raise self.error("comparison operator")
        self.advance()
        return ast.Cmp(t.text, left, self.parse_arith())

    # -- arithmetic / attribute expressions ---------------------------------

    def parse_arith(self) -> ast.Expr:
        left = self.parse_term()
        while self.at("+") or self.at("-"):
            op = self.advance().text
            left = ast.BinOp(op, left, self.parse_term())
        return left

    def parse_term(self) -> ast.Expr:
        left = self.parse_factor()
        while self.at("*") or self.at("/"):
            # `label*[` inside an action never reaches here: actions are parsed separately
            op = self.advance().text
            left = ast.BinOp(op, left, self.parse_factor())
        return left

    def parse_factor(self) -> ast.Expr:
        t = self.peek()
        if t is None:
            raise self.error("expression")
        if t.kind == "num":
            self.advance()
            return ast.Num(t.text)
        if self.accept("my"):
            self.expect(".")
            return ast.My(self.expect_id("attribute name"))
        if self.accept("frc"):
            self.expect("(")
            if self.at_kind("id") and self.at(")", 1):
                node = ast.Frc(state=self.advance().text)
            else:
                node = ast.Frc(pred=self.parse_bool())
            self.expect(")")
            return node
        if t.kind == "id":
            self.advance()
            if self.accept("("):
                args = []
                if not self.at(")"):
                    args.append(self.parse_arith())
                    while self.accept(","):
                        args.append(self.parse_arith())
                self.expect(")")
                return ast.Call(t.text, tuple(args))
            return ast.Name(t.text)
        if self.accept("("):
            inner = self.parse_arith()
            self.expect(")")
            return inner
        raise self.error("expression")


def parse_model(tokens: list[Token]) -> ast.Model:
    return Parser(tokens).parse_model()


def parse_source(source: str) -> ast.Model:
    return parse_model(tokenize(source))


def parse_bool_expr(source: str) -> ast.Expr:
    p = Parser(tokenize(source))
    e = p.parse_bool()
    if p.peek() is not None:
        raise p.error("end of input")
    return e


def parse_arith_expr(source: str) -> ast.Expr:
    p = Parser(tokenize(source))
    e = p.parse_arith()
    if p.peek() is not None:
        raise p.error("end of input")
    return e
