from __future__ import annotations

import itertools
import random
from fractions import Fraction as F

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import model_text
from oracles import (SI4, SI8, expected_ptm, expected_rptm, naive_bisimulation, random_dense,
                     random_lumpable, random_simplex_point)
from piff.bisim import (Partition, initial_partition, is_bisimulation, quotient_model, refine_partition,
                        rewrite_in_classes)
from piff.errors import NotLumpableError
from piff.idtmc import PolyMatrix, check_stochasticity, eval_matrix_exact
from piff.labels import assign_labels, parse_label_file
from piff.pipeline import compile_source, reduce_with
from piff.poly import QuadForm, canonicalize

H, II, IR = F(3, 5), F(4, 5), F(1, 5)
HL = {"SA": ("Sh",), "SC": ("Sh",), "SB": ("Sl",), "SD": ("Sl",),
      "IA": ("Ih",), "IC": ("Ih",), "IB": ("Il",), "ID": ("Il",)}
LOC = {z: ("h",) if z[1] in "AC" else ("l",) for z in SI8}


def from_dense(names, entries, labels=None) -> PolyMatrix:
    idx = {z: i for i, z in enumerate(names)}
    forms = {(idx[r], idx[c]): canonicalize(d.c, d.h, d.q, d.S) for (r, c), d in entries.items()}
    return PolyMatrix(list(names), {k: f for k, f in forms.items() if not f.is_zero()},
                      labels=dict(labels or {}))


PTM = from_dense(SI8, expected_ptm(H, II, IR))


def named(P, M):
    return P.named(M.states)


def test_initial_partition_examples():
    assert named(initial_partition(SI8, HL), PTM) == [["SA", "SC"], ["SB", "SD"], ["IA", "IC"], ["IB", "ID"]]
    assert len(initial_partition(SI8, {})) == 1
    assert len(initial_partition(SI8, {z: (z,) for z in SI8})) == 8


def test_refinement_on_the_8_state_matrix():
    assert named(refine_partition(PTM, HL), PTM) == [["SA", "SC"], ["SB", "SD"], ["IA", "IC"], ["IB", "ID"]]
    P2 = refine_partition(PTM, LOC)
    assert named(P2, PTM) == [["SA", "SC", "IA", "IC"], ["SB", "SD", "IB", "ID"]]


def test_identity_collapses_to_one_block():
    S = 4
    M = PolyMatrix([f"z{i}" for i in range(S)], {(i, i): QuadForm.one(S) for i in range(S)})
    assert len(refine_partition(M, {})) == 1


def test_rewrite_examples():
    P = refine_partition(PTM, HL)
    phi_I = canonicalize(0, {i: 1 for i in range(4, 8)}, {}, 8)
    # blocks are ordered SA/SC, SB/SD, IA/IC, IB/ID
    assert rewrite_in_classes(phi_I, P) == canonicalize(0, {2: 1, 3: 1}, {}, 4)
    with pytest.raises(NotLumpableError):
        rewrite_in_classes(canonicalize(0, {0: 1}, {}, 8), P)
    assert rewrite_in_classes(QuadForm.constant(F(2, 7), 8), P) == QuadForm.constant(F(2, 7), 4)


def test_rewrite_reports_cross_coefficients():
    P = Partition.from_blocks([[0, 1], [2]])
    f = QuadForm(3, {(0, 2): 1})  # m0*m2 without m1*m2
    with pytest.raises(NotLumpableError) as exc:
        rewrite_in_classes(f, P)
    assert exc.value.pair is not None
    g = QuadForm(3, {(0, 2): 1, (1, 2): 1})
    assert rewrite_in_classes(g, P) == QuadForm(2, {(0, 1): 1})


def test_quotient_examples():
    q4 = quotient_model(PTM, refine_partition(PTM, HL), HL)
    want = from_dense(SI4, expected_rptm(H, II, IR))
    assert q4.matrix.states == ["QSh", "QSl", "QIh", "QIl"]
    assert q4.matrix.entries == want.entries
    assert check_stochasticity(q4.matrix) == []
    q2 = quotient_model(PTM, refine_partition(PTM, LOC), LOC)
    assert q2.matrix.states == ["Qh", "Ql"]
    for i in range(2):
        assert q2.matrix.entry(i, 0) == QuadForm.constant(H, 2)
        assert q2.matrix.entry(i, 1) == QuadForm.constant(1 - H, 2)
    discrete = Partition.from_blocks([[i] for i in range(8)])
    q8 = quotient_model(PTM, discrete, {z: (z,) for z in SI8}, prefix="")
    assert q8.matrix.states == SI8 and q8.matrix.entries == PTM.entries


def test_state_map_and_labels(si8):
    q = quotient_model(PTM, refine_partition(PTM, HL), HL)
    assert q.state_map["SC"] == "QSh" and q.state_map["ID"] == "QIl"
    assert q.matrix.labels == {"QSh": ("Sh",), "QSl": ("Sl",), "QIh": ("Ih",), "QIl": ("Il",)}
    assert q.partition_json(PTM.states)["blocks"][0] == {"name": "QSh", "members": ["SA", "SC"]}


def test_full_pipeline_reduces_to_the_figures(si8, si4, si2):
    assert si8.matrix.states == SI8 and len(si4.partition) == 4 and len(si2.partition) == 2
    # reducing twice changes nothing
    again = reduce_with(si4.matrix, model_text("si_hl.lbl"))
    assert again.matrix.entries == si4.matrix.entries and len(again.partition) == 4


@pytest.mark.parametrize("name", ["rumor", "sir"])
def test_outbox_blind_labels_are_not_lumpable(name):
    _, _, M = compile_source(model_text(f"{name}.piff"))
    text = "\n".join(l for l in model_text(f"{name}.lbl").splitlines() if "msg" not in l)
    with pytest.raises(NotLumpableError, match="differ"):
        reduce_with(M, text)
    q = reduce_with(M, model_text(f"{name}.lbl"))
    assert check_stochasticity(q.matrix) == []


# -- properties ---------------------------------------------------------------------


def _coarsest(M: PolyMatrix, P: Partition, labels) -> bool:
    for a, b in itertools.combinations(range(len(P)), 2):
        merged = [blk for k, blk in enumerate(P.blocks) if k not in (a, b)]
        merged.append(P.blocks[a] + P.blocks[b])
        if is_bisimulation(M, Partition.from_blocks(merged), labels):
            return False
    return True


def _random_matrix(rng: random.Random, S: int) -> tuple[PolyMatrix, dict, list]:
    # entries drawn from a small pool so that equal class sums actually occur
    pool = [random_dense(rng, S, 0.4) for _ in range(3)]
    entries = {}
    for i in range(S):
        for j in range(S):
            if rng.random() < 0.5:
                entries[(i, j)] = rng.choice(pool)
    labels = [rng.choice("ab") for _ in range(S)]
    names = [f"z{i}" for i in range(S)]
    lab = {names[i]: (labels[i],) for i in range(S)}
    forms = {k: canonicalize(d.c, d.h, d.q, S) for k, d in entries.items()}
    M = PolyMatrix(names, {k: f for k, f in forms.items() if not f.is_zero()}, labels=lab)
    return M, entries, labels


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 10**9), st.integers(1, 6))
def test_refinement_matches_oracle_on_arbitrary_matrices(seed, S):
    rng = random.Random(seed)
    M, entries, labels = _random_matrix(rng, S)
    P = refine_partition(M)
    canon = {k: d.canonical() for k, d in entries.items()}
    assert {frozenset(b) for b in P.blocks} == naive_bisimulation(S, canon, labels)
    assert is_bisimulation(M, P)
    assert _coarsest(M, P, M.labels)
    for b in P.blocks:
        assert len({M.labels[M.states[z]] for z in b}) == 1


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**9))
def test_quotient_commutes_with_one_step_exactly(seed):
    rng = random.Random(seed)
    S = rng.randint(2, 6)
    blocks, entries = random_lumpable(rng, S, rng.randint(1, S))
    names = [f"z{i}" for i in range(S)]
    M = PolyMatrix(names, {k: canonicalize(d.c, d.h, d.q, S) for k, d in entries.items()})
    P = Partition.from_blocks(blocks)
    Q = quotient_model(M, P, {}).matrix
    assert check_stochasticity(Q) == []
    for _ in range(3):
        mu = random_simplex_point(rng, S)
        K = eval_matrix_exact(M, mu)
        nxt = [sum(mu[i] * K[i][j] for i in range(S)) for j in range(S)]
        agg = [sum(mu[i] for i in b) for b in P.blocks]
        KQ = eval_matrix_exact(Q, agg)
        red = [sum(agg[a] * KQ[a][b] for a in range(len(agg))) for b in range(len(agg))]
        assert [sum(nxt[i] for i in b) for b in P.blocks] == red


def test_planted_partition_is_found():
    rng = random.Random(99)
    hits = 0
    for _ in range(50):
        S = rng.randint(2, 6)
        blocks, entries = random_lumpable(rng, S, rng.randint(1, S))
        labels = {f"z{z}": (f"b{n}",) for n, b in enumerate(blocks) for z in b}
        M = PolyMatrix([f"z{i}" for i in range(S)],
                       {k: canonicalize(d.c, d.h, d.q, S) for k, d in entries.items()}, labels=labels)
        P = refine_partition(M)
        # the planted partition is a bisimulation, so refinement cannot split it
        assert {frozenset(b) for b in P.blocks} == {frozenset(b) for b in blocks}
        hits += len(blocks) < S
    assert hits > 10


def test_labels_from_file_match_hand_labels(si_full):
    labels = assign_labels(si_full, parse_label_file(model_text("si_hl.lbl")))
    q = reduce_with(si_full, model_text("si_hl.lbl"))
    for z, blk in q.state_map.items():
        assert labels[z] == q.matrix.labels[blk]
