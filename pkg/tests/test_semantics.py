from __future__ import annotations

from fractions import Fraction as F

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import model_text
from piff.frontend import ast, load_model
from piff.frontend.parser import parse_bool_expr
from piff.semantics import (enumerate_component_states, enumerate_outboxes, enumerate_stores,
                            eval_local, eval_update, sat_remote)

SI = load_model(model_text("si.piff"))
STORES = enumerate_stores(SI)

TWO_ATTRS = """
attype T enum X, Y;
attype U enum P, Q, R;
attribute a : T;
attribute b : U;
update Same my.a := my.a with 1 endupdate
update Split
  my.b := P with 0.3;
  my.b := P with 0.7
endupdate
state C { [true] 1 :: go*[a = my.a]<> Same . C }
init N = 1; (C, a=X, b=P) * 1;
"""


def loc(v):
    return (("loc", v),)


def test_store_counts():
    assert STORES == [loc(v) for v in "ABCD"]
    assert enumerate_stores(load_model(model_text("sir.piff"))) == [()]
    two = enumerate_stores(load_model(TWO_ATTRS))
    assert len(two) == 6
    assert two[:3] == [(("a", "X"), ("b", "P")), (("a", "X"), ("b", "Q")), (("a", "X"), ("b", "R"))]


def test_eval_local_examples():
    assert eval_local(ast.Call("pW", (ast.My("loc"),)), loc("A"), SI) == F(1, 5)
    assert eval_local(parse_bool_expr("my.loc = A"), loc("A"), SI) is True
    closed = eval_local(parse_bool_expr("loc = my.loc"), loc("B"), SI)
    assert closed == parse_bool_expr("loc = B")


def test_actualization_is_idempotent():
    closed = eval_local(parse_bool_expr("loc = my.loc | !(loc = A)"), loc("C"), SI)
    for g in STORES:
        assert eval_local(closed, g, SI) == closed


def test_sat_remote_examples():
    assert sat_remote(parse_bool_expr("loc = B"), loc("B"), SI)
    assert not sat_remote(parse_bool_expr("loc = B"), loc("C"), SI)
    for g in STORES:
        assert not sat_remote(ast.BoolLit(False), g, SI)
        assert not sat_remote(parse_bool_expr("loc = B & !(loc = B)"), g, SI)


def test_jump_at_A():
    assert eval_update(SI, "Jump", loc("A")) == {loc("A"): F(3, 5), loc("B"): F(1, 5), loc("D"): F(1, 5)}


def test_identity_and_accumulating_updates():
    m = load_model(TWO_ATTRS)
    g = (("a", "Y"), ("b", "R"))
    assert eval_update(m, "Same", g) == {g: 1}
    assert eval_update(m, "Split", g) == {(("a", "Y"), ("b", "P")): 1}


@pytest.mark.parametrize("name", ["si", "rumor", "sir"])
def test_updates_are_distributions(name):
    m = load_model(model_text(f"{name}.piff"))
    for upd in m.updates:
        for g in enumerate_stores(m):
            dist = eval_update(m, upd, g)
            assert all(isinstance(p, F) and p > 0 for p in dist.values())
            assert sum(dist.values()) == 1


def test_si_component_states():
    boxes = enumerate_outboxes(SI)
    assert boxes[0] is None and len(boxes) == 13
    assert {b.label for b in boxes[1:]} == {"inf", "nsc", "rec"}
    assert all(b.pred == ast.BoolLit(False) for b in boxes[1:])
    omega = enumerate_component_states(SI)
    assert len(omega) == 104
    assert len(set(omega)) == 104
    assert omega == enumerate_component_states(load_model(model_text("si.piff")))


def test_no_output_actions_gives_only_empty_outbox():
    src = """
    state C { [true] 1 :: hear*[true]() Nop . C }
    update Nop with 1 endupdate
    init N = 1; (C) * 1;
    """
    m = load_model(src)
    assert enumerate_outboxes(m) == [None]


def test_single_output_gives_two_component_states():
    src = """
    state C { [true] 1 :: go*[false]<> Nop . C }
    update Nop with 1 endupdate
    init N = 1; (C) * 1;
    """
    assert len(enumerate_component_states(load_model(src))) == 2


@settings(max_examples=100, deadline=None)
@given(st.sampled_from(["loc = my.loc", "!(loc = my.loc) & loc != A", "loc = A | loc = my.loc", "true", "false"]),
       st.sampled_from("ABCD"), st.sampled_from("ABCD"))
def test_remote_satisfaction_total(text, own, other):
    closed = eval_local(parse_bool_expr(text), loc(own), SI)
    a = sat_remote(closed, loc(other), SI)
    assert a is sat_remote(closed, loc(other), SI)
    assert isinstance(a, bool)
