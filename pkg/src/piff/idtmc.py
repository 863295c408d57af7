"""The IDTMC transition matrix function K(m) as a matrix of quadratic forms."""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Optional

import numpy as np

from piff import kernels
from piff.errors import BuildError, DomainError, NumericError
from piff.flyfast import FlatSpec, form_to_prob
from piff.poly import QuadForm, RawPoly, separating_points, sum_forms

LabelMap = dict[str, tuple[str, ...]]


@dataclass
class PolyMatrix:
    """Sparse S x S matrix of :class:`QuadForm` entries over S occupancy variables.

    ``raw`` optionally keeps the un-homogenized entries; they are shorter and
    make numeric evaluation cheaper, and they are what the nonnegativity
    check inspects first. ``origin`` maps each state to the component
    states (agent state, store, outbox digest) it stands for.
    """

    states: list[str]
    entries: dict[tuple[int, int], QuadForm]
    raw: Optional[dict[tuple[int, int], RawPoly]] = None
    labels: LabelMap = field(default_factory=dict)
    origin: dict[str, list[dict]] = field(default_factory=dict)
    blocks: dict[str, list[str]] = field(default_factory=dict)
    init: dict[str, int] = field(default_factory=dict)
    _compiled: Optional[tuple] = field(default=None, repr=False, compare=False)

    @property
    def S(self) -> int:
        return len(self.states)

    def index(self) -> dict[str, int]:
        return {z: i for i, z in enumerate(self.states)}

    def entry(self, i: int, j: int) -> QuadForm:
        return self.entries.get((i, j)) or QuadForm.zero(self.S)

    def row(self, i: int) -> dict[int, QuadForm]:
        return {j: f for (r, j), f in self.entries.items() if r == i}

    def rows(self) -> list[dict[int, QuadForm]]:
        out: list[dict[int, QuadForm]] = [{} for _ in range(self.S)]
        for (i, j), f in self.entries.items():
            out[i][j] = f
        return out

    def with_labels(self, labels: LabelMap) -> "PolyMatrix":
        return PolyMatrix(self.states, self.entries, self.raw, dict(labels), self.origin,
                          self.blocks, self.init)

    def compiled(self):
        """Term arrays ``(rows, cols, vi, vj, coef)`` for the numeric kernels."""
        if self._compiled is None:
            rows, cols, vi, vj, coef = [], [], [], [], []
            for (i, j) in sorted(self.entries):
                if self.raw is not None and (i, j) in self.raw:
                    terms = self.raw[(i, j)].terms()
                else:
                    terms = _basis_terms(self.entries[(i, j)])
                for a, b, c in terms:
                    rows.append(i)
                    cols.append(j)
                    vi.append(a)
                    vj.append(b)
                    coef.append(float(c))
            ints = lambda xs: np.asarray(xs, dtype=np.int_).reshape(-1)
            self._compiled = (ints(rows), ints(cols), ints(vi), ints(vj),
                              np.asarray(coef, dtype=np.float64).reshape(-1))
        return self._compiled


def _basis_terms(f: QuadForm):
    # on the simplex (sum_i a_i m_i) * sum(m) is just sum_i a_i m_i
    S = f.S
    for i, c in f.diag.items():
        yield i, S, c
    for (i, j), c in f.cross.items():
        yield i, j, c


def build_matrix(spec: FlatSpec) -> PolyMatrix:
    """Accumulate every summand's probability definition into its (source, target) entry."""
    index = {z: i for i, z in enumerate(spec.states)}
    S = len(spec.states)
    raw: dict[tuple[int, int], RawPoly] = {}
    for z in spec.states:
        i = index[z]
        for xi, target in spec.equations.get(z, []):
            if xi not in spec.actions:
                raise BuildError(f"state {z}: action {xi} has no probability definition")
            if target not in index:
                raise BuildError(f"state {z}: unknown target state {target}")
            p = spec.actions[xi].to_raw(index, S, where=f" in action {xi}")
            k = (i, index[target])
            raw[k] = raw[k] + p if k in raw else p
    entries = {}
    kept_raw = {}
    for k, p in raw.items():
        f = p.homogenize()
        if not f.is_zero():
            entries[k] = f
            kept_raw[k] = p
    return PolyMatrix(list(spec.states), entries, kept_raw, init=dict(spec.init))


def matrix_to_flatspec(M: PolyMatrix, sep: str = "_to_") -> FlatSpec:
    """One action per nonzero entry, named ``<row><sep><col>``."""
    actions = {}
    equations: dict[str, list[tuple[str, str]]] = {z: [] for z in M.states}
    for (i, j) in sorted(M.entries):
        xi = f"{M.states[i]}{sep}{M.states[j]}"
        actions[xi] = form_to_prob(M.entries[(i, j)], M.states)
        equations[M.states[i]].append((xi, M.states[j]))
    return FlatSpec(list(M.states), actions, equations, dict(M.init))


@dataclass(frozen=True)
class RowDiagnostic:
    state: str
    kind: str  # "sum" or "negative"
    detail: str

    def __str__(self) -> str:
        return f"row {self.state}: {self.detail}"


def _row_sum(rows: dict[int, QuadForm], S: int) -> QuadForm:
    return sum_forms(rows.values(), S)


def check_stochasticity(M: PolyMatrix, *, samples: int = 200, seed: int = 0) -> list[RowDiagnostic]:
    """Rows must sum to the constant-1 form and entries must be nonnegative on the simplex."""
    S = M.S
    one = QuadForm.one(S)
    diags = []
    rows = M.rows()
    pts = None
    for i, z in enumerate(M.states):
        total = _row_sum(rows[i], S)
        if total != one:
            deficit = one - total
            diags.append(RowDiagnostic(z, "sum", f"row sum differs from 1 by {_describe(deficit, M.states)}"))
        for j, f in rows[i].items():
            if M.raw is not None and (i, j) in M.raw and M.raw[(i, j)].nonnegative_coeffs():
                continue
            if f.min_coeff() >= 0:
                continue
            if pts is None:
                pts = _sample_points(S, samples, seed)
            vals = _eval_many(f, pts)
            if vals.min() < -1e-12:
                diags.append(RowDiagnostic(z, "negative",
                                           f"entry to {M.states[j]} is negative at some occupancy vector "
                                           f"(min sampled value {vals.min():.3g})"))
    return diags


def _describe(f: QuadForm, names: list[str]) -> str:
    aff = f.as_affine()
    if aff is not None:
        c, h = aff
        parts = [str(c)] if c or not h else []
        parts += [f"{v}*m[{names[i]}]" for i, v in sorted(h.items())]
        return " + ".join(parts)
    return " + ".join(f"{c}*m[{names[i]}]*m[{names[j]}]" for (i, j), c in f.items())


def _sample_points(S: int, n: int, seed: int) -> np.ndarray:
    pts = [np.array([float(x) for x in p]) for p in separating_points(S)]
    rng = np.random.default_rng(seed)
    pts.extend(rng.dirichlet(np.ones(S), size=n))
    return np.array(pts)


def _eval_many(f: QuadForm, pts: np.ndarray) -> np.ndarray:
    out = np.zeros(len(pts))
    for i, c in f.diag.items():
        out += float(c) * pts[:, i]
    out *= pts.sum(axis=1)
    for (i, j), c in f.cross.items():
        out += float(c) * pts[:, i] * pts[:, j]
    return out


def _as_simplex(M: PolyMatrix, m) -> np.ndarray:
    v = np.asarray([float(x) for x in m], dtype=np.float64)
    if v.shape != (M.S,):
        raise DomainError(f"occupancy vector has length {v.size}, expected {M.S}")
    if (v < -1e-9).any() or abs(v.sum() - 1.0) > 1e-9:
        raise DomainError("occupancy vector is not on the unit simplex")
    return v


def eval_matrix(M: PolyMatrix, m) -> np.ndarray:
    """Numeric K(m); rows are checked to sum to 1."""
    v = _as_simplex(M, m)
    rows, cols, vi, vj, coef = M.compiled()
    K = kernels.eval_matrix(rows, cols, vi, vj, coef, v, M.S)
    sums = K.sum(axis=1)
    if M.S and np.abs(sums - 1.0).max() > 1e-9:
        bad = int(np.argmax(np.abs(sums - 1.0)))
        raise NumericError(f"row {M.states[bad]} of K(m) sums to {sums[bad]!r}")
    return K


def eval_matrix_exact(M: PolyMatrix, m) -> list[list[Fraction]]:
    S = M.S
    K = [[Fraction(0)] * S for _ in range(S)]
    for (i, j), f in M.entries.items():
        K[i][j] = f(m)
    return K


def class_row_sum(M: PolyMatrix, z, Q: Iterable) -> QuadForm:
    """``K(m)_{z,Q}``: the canonical sum of row *z* over the column set *Q*."""
    index = M.index()
    i = index[z] if isinstance(z, str) else int(z)
    cols = {index[q] if isinstance(q, str) else int(q) for q in Q}
    return sum_forms((M.entries[(i, j)] for j in sorted(cols) if (i, j) in M.entries), M.S)


def random_simplex_point(S: int, rng: random.Random, denom: int = 97) -> list[Fraction]:
    """A random rational point on the simplex (exact arithmetic)."""
    cuts = sorted(rng.randint(0, denom) for _ in range(S - 1))
    edges = [0, *cuts, denom]
    return [Fraction(edges[k + 1] - edges[k], denom) for k in range(S)]
