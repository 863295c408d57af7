from __future__ import annotations

import random
from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import SI4, expected_rptm, exact_meanfield, random_lumpable, random_simplex_point
from piff.analysis import (Checker, aggregate_trajectory, fast_simulation, meanfield_trajectory,
                           parse_pctl, point_mass)
from piff.analysis.pctl import (Atom, Bool, Conj, Disj, Neg, Next, Prob, Until, check_pctl,
                                check_pctl_naive, compare, depth, format_formula)
from piff.bisim import Partition, quotient_model
from piff.errors import DomainError, NumericError, ParseError
from piff.idtmc import PolyMatrix
from piff.poly import QuadForm, canonicalize


def rptm(ii=F(4, 5), ir=F(1, 5)) -> PolyMatrix:
    idx = {z: i for i, z in enumerate(SI4)}
    ent = {(idx[r], idx[c]): canonicalize(d.c, d.h, d.q, d.S) for (r, c), d in expected_rptm(F(3, 5), ii, ir).items()}
    labels = {"QSh": ("Sh",), "QSl": ("Sl",), "QIh": ("Ih",), "QIl": ("Il",)}
    return PolyMatrix(list(SI4), ent, labels=labels)


def identity(S=3) -> PolyMatrix:
    return PolyMatrix([f"z{i}" for i in range(S)], {(i, i): QuadForm.one(S) for i in range(S)})


R = rptm()


def test_meanfield_examples():
    traj = meanfield_trajectory(R, [1, 0, 0, 0], 2)
    np.testing.assert_allclose(traj[1], [0.6, 0.4, 0, 0], atol=1e-15)
    np.testing.assert_allclose(traj[2], traj[1], atol=1e-15)
    traj = meanfield_trajectory(R, [0.5, 0, 0.5, 0], 1)
    assert np.abs(traj[1] - [0.21, 0.14, 0.39, 0.26]).max() <= 1e-12
    mu0 = [0.2, 0.3, 0.5]
    assert (meanfield_trajectory(identity(), mu0, 10) == mu0).all()


def test_meanfield_matches_exact_rationals():
    mu0 = [F(1, 2), 0, F(1, 2), 0]
    idx = {z: i for i, z in enumerate(SI4)}
    dense = {(idx[r], idx[c]): d for (r, c), d in expected_rptm(F(3, 5), F(4, 5), F(1, 5)).items()}
    exact = exact_meanfield(4, dense, mu0, 8)
    traj = meanfield_trajectory(R, mu0, 8)
    assert np.abs(traj - np.array(exact, dtype=float)).max() < 1e-14


def test_meanfield_rejects_bad_input():
    with pytest.raises(DomainError):
        meanfield_trajectory(R, [0.5, 0.5, 0.5, 0], 3)
    with pytest.raises(DomainError):
        meanfield_trajectory(R, [1, 0, 0], 3)
    with pytest.raises(ValueError):
        meanfield_trajectory(R, [1, 0, 0, 0], -1)


def test_drift_beyond_tolerance_is_an_error():
    # a row summing to 1.1 pushes mass off the simplex
    S = 2
    M = PolyMatrix(["a", "b"], {(0, 0): QuadForm.constant(F(11, 10), S), (1, 1): QuadForm.one(S)})
    with pytest.raises(NumericError):
        meanfield_trajectory(M, [1, 0], 1)


def test_fast_simulation_examples():
    h = fast_simulation(R, [1, 0, 0, 0], point_mass(R, "QSh"), 1)
    np.testing.assert_allclose(h[1], [0.6, 0.4, 0, 0], atol=1e-15)
    mu0 = [0.5, 0, 0.5, 0]
    np.testing.assert_allclose(fast_simulation(R, mu0, mu0, 30), meanfield_trajectory(R, mu0, 30), atol=1e-15)
    h0 = [0, 1, 0]
    assert (fast_simulation(identity(), [0.2, 0.3, 0.5], h0, 5) == h0).all()
    with pytest.raises(DomainError):
        point_mass(R, "nowhere")


def test_simplex_invariant_over_long_runs(si_full):
    from piff.formats import init_distribution
    mu0 = init_distribution(si_full)
    traj = meanfield_trajectory(si_full, mu0, 200)
    assert np.abs(traj.sum(axis=1) - 1).max() <= 1e-12
    h = fast_simulation(si_full, mu0, point_mass(si_full, si_full.states[0]), 200)
    assert np.abs(h.sum(axis=1) - 1).max() <= 1e-12
    assert traj.min() >= 0 and h.min() >= 0


def test_aggregate_trajectory():
    traj = np.array([[0.1, 0.2, 0.7], [0.3, 0.3, 0.4]])
    np.testing.assert_allclose(aggregate_trajectory(traj, [(0, 2), (1,)]), [[0.8, 0.2], [0.7, 0.3]])


# -- PCTL syntax ---------------------------------------------------------------------


def test_parse_examples():
    assert parse_pctl("P<=0.4 [X Ih]") == Prob("<=", F(2, 5), Next(Atom("Ih")))
    f = parse_pctl("P>=0.9 [true U<=10 Il]")
    assert f == Prob(">=", F(9, 10), Until(Bool(True), Atom("Il"), 10))
    with pytest.raises(ParseError) as exc:
        parse_pctl("P<0.5 [X]")
    assert exc.value.diagnostic.col == 9


def test_parse_precedence_and_printing():
    f = parse_pctl("!a & b | c")
    assert f == Disj(Conj(Neg(Atom("a")), Atom("b")), Atom("c"))
    for text in ["P<=0.4 [X Ih]", "!(a & b)", "P>0.35 [(Sh | Sl) U<=5 Il]", "P>=1/3 [X P<0.5 [X a]]"]:
        g = parse_pctl(text)
        assert parse_pctl(format_formula(g)) == g
    assert depth(parse_pctl("P>=0.1 [Sl U<=2 P>=0.5 [X Sh | Ih]]")) == 3


@pytest.mark.parametrize("text", ["P<=1.5 [X a]", "P<=0.4 [a U b]", "a &", "P=0.3 [X a]", "(a"])
def test_parse_errors(text):
    with pytest.raises(ParseError):
        parse_pctl(text)


def test_compare_tolerance():
    assert compare(0.3 + 1e-15, "<=", F(3, 10))
    assert not compare(0.3, "<", F(3, 10))
    assert compare(0.3 - 1e-15, ">=", F(3, 10))
    assert compare(0.31, ">", F(3, 10))


# -- PCTL checking -------------------------------------------------------------------

MU0 = [F(1, 2), 0, F(1, 2), 0]


def test_next_probability_example():
    v = check_pctl(R, None, MU0, "QSh", 0, "P<=0.4 [X Ih]")
    assert abs(v.probability - 0.30) <= 1e-12 and v.verdict
    assert v.to_json() == {"state": "QSh", "time": 0, "formula": "P<=0.4 [X Ih]",
                           "verdict": True, "probability": v.probability}


def test_trivial_cases():
    ch = Checker(R, None, MU0)
    for z in SI4:
        for t in (0, 4):
            assert ch.check(z, t, parse_pctl("P>=0 [X Sh]")).verdict
    f = parse_pctl("P>=1 [Sh U<=0 Ih]")
    for t in range(5):
        assert ch.check("QIh", t, f).verdict
        assert not ch.check("QSh", t, f).verdict


def test_until_by_hand():
    # from QSh, reaching Ih within 1 step: Sh at t=0, then K(mu0)[QSh, QIh]
    ch = Checker(R, None, MU0)
    p1 = ch.check("QSh", 0, parse_pctl("P>=0 [Sh U<=1 Ih]")).probability
    assert p1 == pytest.approx(0.3, abs=1e-15)
    p0 = ch.check("QSl", 0, parse_pctl("P>=0 [Sh U<=1 Ih]")).probability
    assert p0 == 0.0


@pytest.mark.parametrize("text", ["P>=0 [true U<=K Ih]", "P>=0 [!Il U<=K Il]", "P>=0 [(Sh | Sl) U<=K P>0.5 [X Ih]]"])
def test_until_monotone_in_bound(text):
    ch = Checker(R, None, MU0)
    for t in (0, 2):
        probs = [ch.prob(parse_pctl(text.replace("K", str(k))).path, t) for k in range(15)]
        for a, b in zip(probs, probs[1:]):
            assert (b >= a - 1e-15).all()


FORMULAS = ["P<=0.4 [X Ih]", "P>=0.5 [Sh U<=4 Ih]", "!P>0.2 [X Il] & Sh",
            "P<0.9 [true U<=6 P>=0.5 [X Ih]]", "P>0.1 [X P>=0.3 [Sl U<=3 Il]]", "Ih | P<=0.7 [X Sh | Sl]"]


@pytest.mark.parametrize("text", FORMULAS)
def test_memo_equals_naive(text):
    for z in SI4:
        for t in (0, 1, 5):
            a = check_pctl(R, None, MU0, z, t, text)
            b = check_pctl_naive(R, None, MU0, z, t, text)
            assert a.verdict == b.verdict
            assert a.probability == b.probability


def test_shared_checker_equals_fresh_checkers():
    shared = Checker(R, None, MU0)
    for text in FORMULAS:
        f = parse_pctl(text)
        for z in SI4:
            for t in (3, 0, 7):
                assert shared.check(z, t, f) == Checker(R, None, MU0).check(z, t, f)


def test_unknown_state():
    with pytest.raises(KeyError):
        check_pctl(R, None, MU0, "nowhere", 0, "Sh")


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**9))
def test_pctl_preserved_on_random_lumpable(seed):
    rng = random.Random(seed)
    S = rng.randint(2, 6)
    blocks, entries = random_lumpable(rng, S, rng.randint(1, S))
    names = [f"z{i}" for i in range(S)]
    block_of = {z: n for n, b in enumerate(blocks) for z in b}
    props = ["p", "q"]
    chosen = {n: tuple(p for p in props if rng.random() < 0.5) for n in range(len(blocks))}
    labels = {names[z]: chosen[block_of[z]] for z in range(S)}
    M = PolyMatrix(names, {k: canonicalize(d.c, d.h, d.q, S) for k, d in entries.items()}, labels=labels)
    P = Partition.from_blocks(blocks)
    q = quotient_model(M, P, labels)
    mu = random_simplex_point(rng, S)
    mu_q = [sum(mu[i] for i in b) for b in P.blocks]
    cf, cq = Checker(M, labels, mu), Checker(q.matrix, q.matrix.labels, mu_q)
    for text in ["P>=0.5 [X p]", "P<0.4 [p U<=5 q]", "!q & P>0.2 [true U<=3 P>=0.5 [X p]]"]:
        f = parse_pctl(text)
        for t in (0, 2):
            for z in range(S):
                vf = cf.check(names[z], t, f)
                vq = cq.check(q.state_map[names[z]], t, f)
                assert vf.verdict == vq.verdict
                if vf.probability is not None:
                    assert abs(vf.probability - vq.probability) <= 1e-12
