"""Independent reference implementations used by the tests.

Nothing here imports the package's polynomial or bisimulation code: the
dense polynomial below homogenizes with the textbook expansion, the
bisimulation oracle splits blocks by brute-force pairwise comparison, and
the mean-field oracle runs in exact rationals.
"""

from __future__ import annotations

import itertools
import random
from fractions import Fraction as F
from typing import Optional, Sequence

Pair = tuple[int, int]


class Dense:
    """``c + sum h_i m_i + sum_{i<=j} q_ij m_i m_j`` with exact coefficients."""

    def __init__(self, S: int, c=0, h: Optional[dict] = None, q: Optional[dict] = None):
        self.S = S
        self.c = F(c)
        self.h = {i: F(v) for i, v in (h or {}).items() if v}
        self.q: dict[Pair, F] = {}
        for (i, j), v in (q or {}).items():
            k = (min(i, j), max(i, j))
            self.q[k] = self.q.get(k, F(0)) + F(v)

    def __add__(self, other: "Dense") -> "Dense":
        h = dict(self.h)
        for i, v in other.h.items():
            h[i] = h.get(i, F(0)) + v
        q = dict(self.q)
        for k, v in other.q.items():
            q[k] = q.get(k, F(0)) + v
        return Dense(self.S, self.c + other.c, h, q)

    def scale(self, k) -> "Dense":
        k = F(k)
        return Dense(self.S, self.c * k, {i: v * k for i, v in self.h.items()},
                     {p: v * k for p, v in self.q.items()})

    def __call__(self, m: Sequence) -> F:
        total = self.c + sum((v * m[i] for i, v in self.h.items()), F(0))
        return total + sum((v * m[i] * m[j] for (i, j), v in self.q.items()), F(0))

    def canonical(self) -> dict[Pair, F]:
        """Multiply the constant by (sum m)^2 and the linear part by (sum m)."""
        u: dict[Pair, F] = {}

        def add(i, j, v):
            k = (min(i, j), max(i, j))
            u[k] = u.get(k, F(0)) + v

        for i in range(self.S):
            for j in range(i, self.S):
                add(i, j, self.c if i == j else 2 * self.c)
        for i, v in self.h.items():
            for j in range(self.S):
                add(i, j, v)
        for k, v in self.q.items():
            add(*k, v)
        return {k: v for k, v in u.items() if v}


def canonical_sum(forms: Sequence[dict], S: int = 0) -> dict[Pair, F]:
    out: dict[Pair, F] = {}
    for f in forms:
        for k, v in f.items():
            out[k] = out.get(k, F(0)) + v
    return {k: v for k, v in out.items() if v}


def eval_canonical(u: dict[Pair, F], m: Sequence) -> F:
    return sum((v * m[i] * m[j] for (i, j), v in u.items()), F(0))


def random_rational(rng: random.Random, lo: int = -4, hi: int = 4, den: int = 6) -> F:
    return F(rng.randint(lo * den, hi * den), rng.randint(1, den))


def random_dense(rng: random.Random, S: int, density: float = 0.5) -> Dense:
    c = random_rational(rng) if rng.random() < density else 0
    h = {i: random_rational(rng) for i in range(S) if rng.random() < density}
    q = {(i, j): random_rational(rng) for i in range(S) for j in range(i, S) if rng.random() < density}
    return Dense(S, c, h, q)


def random_simplex_point(rng: random.Random, S: int, den: int = 97) -> list[F]:
    cuts = sorted(rng.randint(0, den) for _ in range(S - 1))
    edges = [0, *cuts, den]
    return [F(edges[k + 1] - edges[k], den) for k in range(S)]


def appendix_points(S: int) -> list[list[F]]:
    """Unit vectors and pairwise midpoints."""
    pts = []
    for i in range(S):
        e = [F(0)] * S
        e[i] = F(1)
        pts.append(e)
    for i, j in itertools.combinations(range(S), 2):
        e = [F(0)] * S
        e[i] = e[j] = F(1, 2)
        pts.append(e)
    return pts


# -- bisimulation ---------------------------------------------------------------


def naive_bisimulation(S: int, entries: dict[Pair, dict], labels: Sequence) -> set[frozenset]:
    """Coarsest label-respecting partition with equal class sums, by plain fixpoint.

    *entries* maps (row, col) to canonical coefficient dicts.
    """
    blocks: list[list[int]] = []
    by_label: dict = {}
    for z in range(S):
        by_label.setdefault(labels[z], []).append(z)
    blocks = list(by_label.values())

    def class_sum(z, Q):
        return canonical_sum([entries[(z, j)] for j in Q if (z, j) in entries])

    while True:
        new = []
        for b in blocks:
            groups: list[list[int]] = []
            for z in b:
                for g in groups:
                    w = g[0]
                    if all(class_sum(z, Q) == class_sum(w, Q) for Q in blocks):
                        g.append(z)
                        break
                else:
                    groups.append([z])
            new.extend(groups)
        if len(new) == len(blocks):
            return {frozenset(b) for b in new}
        blocks = new


def _stochastic_row(rng: random.Random, k: int, den: int = 5) -> list[F]:
    # random rational distribution over k columns, with some zeros
    weights = [rng.choice([0, 0, 1, 2, 3]) for _ in range(k)]
    if not any(weights):
        weights[rng.randrange(k)] = 1
    total = sum(weights)
    return [F(w, total) for w in weights]


def random_lumpable(rng: random.Random, S: int, k: int):
    """A planted lumpable matrix.

    Returns ``(blocks, dense_entries)`` where entries are :class:`Dense`
    polynomials over S variables. Each reduced entry is
    ``sum_{R,R'} M_R M_R' P^{RR'}_{BQ}`` with stochastic ``P`` (so rows sum to
    ``(sum M)^2 = 1``); full entries split it with fixed weights per (z, Q).
    """
    states = list(range(S))
    rng.shuffle(states)
    cuts = sorted(rng.sample(range(1, S), k - 1)) if k > 1 else []
    blocks = [sorted(states[a:b]) for a, b in zip([0, *cuts], [*cuts, S])]
    block_of = {z: n for n, b in enumerate(blocks) for z in b}
    kind = {B: rng.choice(["const", "linear", "quad"]) for B in range(k)}
    P: dict[tuple, list[F]] = {}
    for B in range(k):
        if kind[B] == "const":
            row = _stochastic_row(rng, k)
            for R in range(k):
                for R2 in range(k):
                    P[(B, R, R2)] = row
        elif kind[B] == "linear":
            for R in range(k):
                row = _stochastic_row(rng, k)
                for R2 in range(k):
                    P[(B, R, R2)] = row
        else:
            for R in range(k):
                for R2 in range(k):
                    P[(B, R, R2)] = _stochastic_row(rng, k)
    entries: dict[Pair, Dense] = {}
    for z in range(S):
        B = block_of[z]
        for Q in range(k):
            q: dict[Pair, F] = {}
            for R in range(k):
                for R2 in range(k):
                    p = P[(B, R, R2)][Q]
                    if not p:
                        continue
                    for i in blocks[R]:
                        for j in blocks[R2]:
                            key = (min(i, j), max(i, j))
                            q[key] = q.get(key, F(0)) + p
            if not q:
                continue
            split = _stochastic_row(rng, len(blocks[Q]))
            for w, j in zip(split, blocks[Q]):
                if w:
                    entries[(z, j)] = Dense(S, 0, {}, {kk: v * w for kk, v in q.items()})
    return blocks, entries


# -- dynamics -------------------------------------------------------------------


def exact_meanfield(S: int, entries: dict[Pair, Dense], mu0: Sequence, T: int) -> list[list[F]]:
    mu = [F(x) for x in mu0]
    out = [mu]
    for _ in range(T):
        nxt = [F(0)] * S
        for (i, j), p in entries.items():
            if mu[i]:
                nxt[j] += mu[i] * p(mu)
        mu = nxt
        out.append(mu)
    return out


# -- the running example -------------------------------------------------------

SI8 = ["SA", "SB", "SC", "SD", "IA", "IB", "IC", "ID"]


def expected_ptm(H, ii, ir) -> dict[tuple[str, str], Dense]:
    """The 8-state matrix of the SI example, with phi_S and phi_I as linear forms."""
    H, ii, ir = F(H), F(ii), F(ir)
    L = 1 - H
    phi_S = {i: F(1) for i in range(4)}
    phi_I = {i: F(1) for i in range(4, 8)}
    # jump probabilities between locations, row = from, col = to
    jump = {
        "A": {"A": H, "B": L / 2, "D": L / 2},
        "B": {"A": H / 2, "B": L, "C": H / 2},
        "C": {"B": L / 2, "C": H, "D": L / 2},
        "D": {"A": H / 2, "C": H / 2, "D": L},
    }
    out: dict[tuple[str, str], Dense] = {}
    for src in SI8:
        x, y = src[0], src[1]
        for y2, p in jump[y].items():
            if x == "S":
                out[(src, "S" + y2)] = Dense(8, 0, {i: p * v for i, v in phi_S.items()})
                out[(src, "I" + y2)] = Dense(8, 0, {i: p * v for i, v in phi_I.items()})
            else:
                out[(src, "S" + y2)] = Dense(8, p * ir)
                out[(src, "I" + y2)] = Dense(8, p * ii)
    return out


SI4 = ["QSh", "QSl", "QIh", "QIl"]


def expected_rptm(H, ii, ir) -> dict[tuple[str, str], Dense]:
    H, ii, ir = F(H), F(ii), F(ir)
    L = 1 - H
    phi_S = {0: F(1), 1: F(1)}
    phi_I = {2: F(1), 3: F(1)}
    out = {}
    for src in ("QSh", "QSl"):
        out[(src, "QSh")] = Dense(4, 0, {i: H for i in phi_S})
        out[(src, "QSl")] = Dense(4, 0, {i: L for i in phi_S})
        out[(src, "QIh")] = Dense(4, 0, {i: H for i in phi_I})
        out[(src, "QIl")] = Dense(4, 0, {i: L for i in phi_I})
    for src in ("QIh", "QIl"):
        out[(src, "QSh")] = Dense(4, H * ir)
        out[(src, "QSl")] = Dense(4, L * ir)
        out[(src, "QIh")] = Dense(4, H * ii)
        out[(src, "QIl")] = Dense(4, L * ii)
    return out
