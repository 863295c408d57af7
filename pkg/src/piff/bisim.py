"""Probabilistic bisimulation on IDTMC matrices and the induced quotient.

Two states are bisimilar when they carry the same labels and, for every
class Q, their cumulative transition polynomials into Q agree on the whole
simplex. Polynomials are compared exactly through their canonical forms.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Optional, Sequence

from piff.errors import NotLumpableError
from piff.idtmc import LabelMap, PolyMatrix
from piff.poly import QuadForm, sum_forms


@dataclass(frozen=True)
class Partition:
    """Blocks of state indices, each sorted, ordered by smallest member."""

    blocks: tuple[tuple[int, ...], ...]

    @staticmethod
    def from_blocks(blocks: Iterable[Iterable[int]]) -> "Partition":
        bs = [tuple(sorted(b)) for b in blocks]
        if any(not b for b in bs):
            raise ValueError("partition blocks must be nonempty")
        return Partition(tuple(sorted(bs)))

    def block_of(self) -> dict[int, int]:
        return {z: k for k, b in enumerate(self.blocks) for z in b}

    def __len__(self) -> int:
        return len(self.blocks)

    def named(self, states: Sequence[str]) -> list[list[str]]:
        return [[states[i] for i in b] for b in self.blocks]

    def validate(self, S: int):
        seen = [z for b in self.blocks for z in b]
        if sorted(seen) != list(range(S)):
            raise ValueError("blocks must be disjoint and cover every state")


def _label_key(labels: LabelMap, z: str) -> tuple[str, ...]:
    return tuple(sorted(labels.get(z, ())))


def initial_partition(states: Sequence[str], labels: LabelMap) -> Partition:
    """Group states by their label sets."""
    groups: dict[tuple[str, ...], list[int]] = {}
    for i, z in enumerate(states):
        groups.setdefault(_label_key(labels, z), []).append(i)
    return Partition.from_blocks(groups.values())


def _signature(rows: list[dict[int, QuadForm]], z: int, splitter: frozenset, S: int) -> QuadForm:
    return sum_forms((f for j, f in sorted(rows[z].items()) if j in splitter), S)


def refine_partition(M: PolyMatrix, labels: Optional[LabelMap] = None,
                     initial: Optional[Partition] = None) -> Partition:
    """Coarsest bisimulation refining the label partition (or *initial*).

    Splitters are taken from a priority queue ordered by block id (smallest
    member); states inside a block are kept sorted, so the result does not
    depend on dictionary or hash ordering.
    """
    labels = M.labels if labels is None else labels
    P = initial if initial is not None else initial_partition(M.states, labels)
    S = M.S
    rows = M.rows()
    # predecessors: which rows have an entry into column j
    preds: list[set[int]] = [set() for _ in range(S)]
    for (i, j) in M.entries:
        preds[j].add(i)

    blocks: list[tuple[int, ...]] = list(P.blocks)
    block_of = {z: k for k, b in enumerate(blocks) for z in b}
    heap = [(b[0], b) for b in blocks]
    heapq.heapify(heap)
    queued = {b for b in blocks}
    while heap:
        _, splitter = heapq.heappop(heap)
        queued.discard(splitter)
        members = frozenset(splitter)
        touched = sorted({block_of[i] for j in splitter for i in preds[j]})
        for k in touched:
            b = blocks[k]
            if len(b) == 1:
                continue
            groups: dict[QuadForm, list[int]] = {}
            for z in b:
                groups.setdefault(_signature(rows, z, members, S), []).append(z)
            if len(groups) == 1:
                continue
            pieces = sorted(tuple(g) for g in groups.values())
            blocks[k] = pieces[0]
            for z in pieces[0]:
                block_of[z] = k
            for piece in pieces[1:]:
                blocks.append(piece)
                for z in piece:
                    block_of[z] = len(blocks) - 1
            if b in queued:
                queued.discard(b)  # stale entry; pieces replace it below
            for piece in pieces:
                if piece not in queued:
                    queued.add(piece)
                    heapq.heappush(heap, (piece[0], piece))
    return Partition.from_blocks(blocks)


def is_bisimulation(M: PolyMatrix, P: Partition, labels: Optional[LabelMap] = None) -> bool:
    """Check the defining condition directly for every pair, block and class."""
    labels = M.labels if labels is None else labels
    rows = M.rows()
    S = M.S
    for b in P.blocks:
        keys = {_label_key(labels, M.states[z]) for z in b}
        if len(keys) > 1:
            return False
        for Q in P.blocks:
            members = frozenset(Q)
            if len({_signature(rows, z, members, S) for z in b}) > 1:
                return False
    return True


def rewrite_in_classes(p: QuadForm, P: Partition, names: Optional[Sequence[str]] = None) -> QuadForm:
    """Express *p* over block aggregates ``M_Q = sum_{i in Q} m_i``.

    In canonical coefficients: all ``u_ij`` between two different blocks must
    coincide, and inside a block ``u_ii = c`` and ``u_ij = 2c``. In the stored
    basis this means the diagonal part is constant per block, the cross part
    vanishes inside blocks and is constant on each pair of blocks.
    """
    name = (lambda i: names[i]) if names is not None else (lambda i: f"m{i + 1}")
    block_of = P.block_of()
    nb = len(P)
    alpha: dict[int, Fraction] = {}
    for k, b in enumerate(P.blocks):
        vals = [p[(i, i)] for i in b]
        for i, v in zip(b[1:], vals[1:]):
            if v != vals[0]:
                raise NotLumpableError(
                    f"coefficients of {name(b[0])}^2 ({vals[0]}) and {name(i)}^2 ({v}) differ inside one class",
                    ((b[0], b[0]), (i, i)))
        if vals[0]:
            alpha[k] = vals[0]
    beta: dict[tuple[int, int], Fraction] = {}
    first: dict[tuple[int, int], tuple[int, int]] = {}
    counts: dict[tuple[int, int], int] = {}
    cross = p.cross
    for (i, j), c in cross.items():
        bi, bj = block_of[i], block_of[j]
        if bi == bj:
            b = P.blocks[bi]
            raise NotLumpableError(
                f"coefficient of {name(i)}*{name(j)} ({p[(i, j)]}) is not twice that of "
                f"{name(b[0])}^2 ({p[(b[0], b[0])]}) inside one class", ((i, j), (b[0], b[0])))
        key = (min(bi, bj), max(bi, bj))
        if key not in beta:
            beta[key], first[key] = c, (i, j)
        elif beta[key] != c:
            fi, fj = first[key]
            raise NotLumpableError(
                f"coefficients of {name(fi)}*{name(fj)} ({p[(fi, fj)]}) and {name(i)}*{name(j)} "
                f"({p[(i, j)]}) differ across the same pair of classes", ((fi, fj), (i, j)))
        counts[key] = counts.get(key, 0) + 1
    for key, n in counts.items():
        size = len(P.blocks[key[0]]) * len(P.blocks[key[1]])
        if n != size:
            bi, bj = (P.blocks[key[0]], P.blocks[key[1]])
            fi, fj = first[key]
            missing = next((min(x, y), max(x, y)) for x in bi for y in bj if (min(x, y), max(x, y)) not in cross)
            raise NotLumpableError(
                f"coefficients of {name(fi)}*{name(fj)} ({p[(fi, fj)]}) and {name(missing[0])}*{name(missing[1])} "
                f"({p[missing]}) differ across the same pair of classes", ((fi, fj), missing))
    return QuadForm.from_basis(nb, alpha, beta)


def aggregate(P: Partition, m: Sequence) -> list:
    """Block occupancy ``M_Q = sum_{i in Q} m_i``."""
    return [sum((m[i] for i in b), type(m[b[0]])(0)) for b in P.blocks]


def block_names(P: Partition, states: Sequence[str], labels: LabelMap, prefix: str = "Q") -> list[str]:
    """Prefix plus the block's label names; ``_k`` suffixes separate clashes."""
    bases = []
    for b in P.blocks:
        key = _label_key(labels, states[b[0]])
        base = prefix + "_".join(key) if key else (prefix or "Q") + "blk"
        bases.append(base)
    names = []
    for k, base in enumerate(bases):
        if bases.count(base) > 1:
            names.append(f"{base}_{bases[:k + 1].count(base)}")
        else:
            names.append(base)
    return names


@dataclass
class Quotient:
    matrix: PolyMatrix
    partition: Partition
    state_map: dict[str, str]  # original state -> block name

    def partition_json(self, original: Sequence[str]) -> dict:
        return {"blocks": [{"name": n, "members": [original[i] for i in b]}
                           for n, b in zip(self.matrix.states, self.partition.blocks)]}


def quotient_model(M: PolyMatrix, P: Partition, labels: Optional[LabelMap] = None,
                   names: Optional[Sequence[str]] = None, prefix: str = "Q") -> Quotient:
    """Reduced matrix over blocks, using each block's smallest member as representative."""
    labels = M.labels if labels is None else labels
    P.validate(M.S)
    if names is None:
        names = block_names(P, M.states, labels, prefix)
    rows = M.rows()
    S = M.S
    entries: dict[tuple[int, int], QuadForm] = {}
    for kb, b in enumerate(P.blocks):
        rep = b[0]
        for kq, Q in enumerate(P.blocks):
            f = _signature(rows, rep, frozenset(Q), S)
            if f.is_zero():
                continue
            try:
                g = rewrite_in_classes(f, P, M.states)
            except NotLumpableError as exc:
                raise NotLumpableError(f"entry {names[kb]} -> {names[kq]}: {exc}", exc.pair) from None
            if not g.is_zero():
                entries[(kb, kq)] = g
    red_labels = {n: _label_key(labels, M.states[b[0]]) for n, b in zip(names, P.blocks)}
    origin: dict[str, list[dict]] = {}
    blocks: dict[str, list[str]] = {}
    for n, b in zip(names, P.blocks):
        members = [M.states[i] for i in b]
        blocks[n] = members
        origin[n] = [o for z in members for o in M.origin.get(z, [])]
    state_map = {M.states[i]: n for n, b in zip(names, P.blocks) for i in b}
    init: dict[str, int] = {}
    for z, count in M.init.items():
        init[state_map[z]] = init.get(state_map[z], 0) + count
    init = {n: init[n] for n in names if n in init}
    reduced = PolyMatrix(list(names), entries, None, red_labels, origin, blocks, init)
    return Quotient(reduced, P, state_map)


def reduce(M: PolyMatrix, labels: Optional[LabelMap] = None, prefix: str = "Q") -> Quotient:
    labels = M.labels if labels is None else labels
    return quotient_model(M, refine_partition(M, labels), labels, prefix=prefix)
