"""Exact degree-2 polynomials over occupancy variables m_1..m_S.

Two representations live here:

* :class:`RawPoly` keeps a constant, a linear and a quadratic part plus a
  nominal degree tag. It is what translation produces and what the FlyFast
  reader evaluates to; multiplication refuses to go past degree 2.
* :class:`QuadForm` is the fully homogenized canonical form. Because every
  point of interest satisfies ``sum(m) == 1`` the constant ``c`` is rewritten
  as ``c * (sum m)**2`` and a linear term ``h_i m_i`` as ``h_i m_i * sum m``.
  Two homogeneous quadratics agree on the simplex exactly when their
  coefficients agree, so equality is a dictionary comparison.

Indices are 0-based in memory and 1-based in the JSON serialization.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Mapping, Optional, Sequence, Union

from piff.errors import DegreeError, DomainError

Rational = Union[int, Fraction]
Pair = tuple[int, int]

SIMPLEX_TOL = 1e-9


def _frac(x) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(x)


def _key(i: int, j: int) -> Pair:
    return (i, j) if i <= j else (j, i)


class QuadForm:
    """Homogeneous quadratic form ``sum_{i<=j} u_ij m_i m_j`` in canonical form.

    Storage uses an equivalent sparse basis: ``a_i = u_ii`` and, for i < j,
    ``q_ij = u_ij - a_i - a_j``, so that the form reads
    ``(sum_i a_i m_i) * (sum_j m_j) + sum_{i<j} q_ij m_i m_j``. The map
    between ``u`` and ``(a, q)`` is a bijection, hence comparing ``(a, q)`` is
    comparing canonical coefficients, while constants and linear terms stay
    O(S) in size instead of O(S^2).
    """

    __slots__ = ("S", "_a", "_q", "_key", "_hash", "_u")

    def __init__(self, S: int, coeffs: Optional[Mapping[Pair, Rational]] = None):
        if S < 0:
            raise ValueError("dimension must be nonnegative")
        u: dict[Pair, Fraction] = {}
        for (i, j), c in (coeffs or {}).items():
            if not (0 <= i < S and 0 <= j < S):
                raise DomainError(f"monomial index ({i}, {j}) outside dimension {S}")
            k = _key(i, j)
            u[k] = u.get(k, Fraction(0)) + _frac(c)
        a = {i: u[(i, i)] for i in range(S) if u.get((i, i))}
        q: dict[Pair, Fraction] = {}
        if a:
            for i in range(S):
                ai = a.get(i, 0)
                for j in range(i + 1, S):
                    v = u.get((i, j), 0) - ai - a.get(j, 0)
                    if v:
                        q[(i, j)] = v
        else:
            q = {k: v for k, v in u.items() if k[0] != k[1] and v}
        self._init(S, a, q)

    def _init(self, S, a, q):
        self.S = S
        self._a = {i: v for i, v in sorted(a.items()) if v}
        self._q = {k: v for k, v in sorted(q.items()) if v}
        self._key = (S, tuple(self._a.items()), tuple(self._q.items()))
        self._hash = None
        self._u = None

    # -- constructors ------------------------------------------------------

    @classmethod
    def from_basis(cls, S: int, a: Mapping[int, Fraction], q: Mapping[Pair, Fraction]) -> "QuadForm":
        """Build from the ``(a, q)`` basis; *q* keys must satisfy i < j."""
        self = cls.__new__(cls)
        self._init(S, a, q)
        return self

    @classmethod
    def zero(cls, S: int) -> "QuadForm":
        return cls.from_basis(S, {}, {})

    @classmethod
    def constant(cls, c: Rational, S: int) -> "QuadForm":
        c = _frac(c)
        return cls.from_basis(S, {i: c for i in range(S)}, {})

    @classmethod
    def one(cls, S: int) -> "QuadForm":
        return cls.constant(1, S)

    # -- access ------------------------------------------------------------

    @property
    def diag(self) -> dict[int, Fraction]:
        return dict(self._a)

    @property
    def cross(self) -> dict[Pair, Fraction]:
        return dict(self._q)

    def _canonical_u(self) -> dict[Pair, Fraction]:
        if self._u is None:
            a, q, S = self._a, self._q, self.S
            u: dict[Pair, Fraction] = {}
            for i, v in a.items():
                u[(i, i)] = v
            if a:
                for i in range(S):
                    ai = a.get(i, 0)
                    for j in range(i + 1, S):
                        v = ai + a.get(j, 0) + q.get((i, j), 0)
                        if v:
                            u[(i, j)] = v
            else:
                u.update(q)
            self._u = dict(sorted(u.items()))
        return self._u

    @property
    def coeffs(self) -> dict[Pair, Fraction]:
        """Canonical coefficients ``u_ij`` (i <= j), zeros omitted."""
        return dict(self._canonical_u())

    def items(self):
        return tuple(self._canonical_u().items())

    def __getitem__(self, key: Pair) -> Fraction:
        i, j = _key(*key)
        if i == j:
            return self._a.get(i, Fraction(0))
        return self._a.get(i, 0) + self._a.get(j, 0) + self._q.get((i, j), Fraction(0))

    def is_zero(self) -> bool:
        return not self._a and not self._q

    def __eq__(self, other) -> bool:
        if not isinstance(other, QuadForm):
            return NotImplemented
        return self._key == other._key

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(self._key)
        return self._hash

    def __repr__(self) -> str:
        if self.S <= 8:
            body = " + ".join(f"{c}*m{i + 1}*m{j + 1}" for (i, j), c in self.items()) or "0"
            return f"QuadForm[{self.S}]({body})"
        return f"QuadForm[{self.S}](a={self._a}, q={self._q})"

    # -- arithmetic --------------------------------------------------------

    def _check(self, other: "QuadForm"):
        if not isinstance(other, QuadForm):
            raise TypeError(f"expected QuadForm, got {type(other).__name__}")
        if other.S != self.S:
            raise DomainError(f"dimension mismatch: {self.S} vs {other.S}")

    def __add__(self, other: "QuadForm") -> "QuadForm":
        self._check(other)
        return sum_forms((self, other), self.S)

    def __sub__(self, other: "QuadForm") -> "QuadForm":
        return self + other.scale(-1)

    def __neg__(self) -> "QuadForm":
        return self.scale(-1)

    def scale(self, c: Rational) -> "QuadForm":
        c = _frac(c)
        return QuadForm.from_basis(self.S, {i: v * c for i, v in self._a.items()},
                                   {k: v * c for k, v in self._q.items()})

    def min_coeff(self) -> Fraction:
        """Smallest canonical coefficient (0 counts when some u_ij is absent)."""
        a, S = self._a, self.S
        best = min(a.values(), default=Fraction(0))
        if len(a) < S:
            best = min(best, Fraction(0))
        if not self._q:
            # off-diagonal u_ij = a_i + a_j: the two smallest diagonal values decide
            diag = sorted(a.get(i, Fraction(0)) for i in range(S))
            if S >= 2:
                best = min(best, diag[0] + diag[1])
            return best
        items = self.items()
        if len(items) < S * (S + 1) // 2:
            best = min(best, Fraction(0))
        return min(best, min((c for _, c in items), default=Fraction(0)))

    # -- evaluation --------------------------------------------------------

    def __call__(self, m: Sequence):
        return poly_eval(self, m)

    # -- (de)serialization -------------------------------------------------

    def to_json(self) -> dict:
        return {"S": self.S, "quad": [[i + 1, j + 1, str(c)] for (i, j), c in self.items()]}

    @classmethod
    def from_json(cls, obj: Mapping) -> "QuadForm":
        S = int(obj["S"])
        u = {}
        for i, j, c in obj.get("quad", []):
            i, j = int(i) - 1, int(j) - 1
            if i > j:
                raise DomainError(f"serialized monomial ({i + 1}, {j + 1}) must have i <= j")
            k = (i, j)
            if k in u:
                raise DomainError(f"serialized monomial ({i + 1}, {j + 1}) repeated")
            u[k] = Fraction(c)
        return cls(S, u)

    # -- structural views ----------------------------------------------------

    def as_affine(self) -> Optional[tuple[Fraction, dict[int, Fraction]]]:
        """Return ``(c, h)`` with ``self == c + sum h_i m_i`` on the simplex, if affine.

        The form is affine exactly when its cross part vanishes. The constant
        is the most frequent diagonal value, which keeps the linear part sparse.
        """
        if self._q:
            return None
        if self.S == 0:
            return Fraction(0), {}
        counts: dict[Fraction, int] = {}
        for i in range(self.S):
            d = self._a.get(i, Fraction(0))
            counts[d] = counts.get(d, 0) + 1
        best = max(counts.values())
        c = Fraction(0) if counts.get(Fraction(0), 0) == best else \
            min(v for v, n in counts.items() if n == best)
        h = {}
        for i in range(self.S):
            d = self._a.get(i, Fraction(0))
            if d != c:
                h[i] = d - c
        return c, h


def sum_forms(forms: Iterable[QuadForm], S: int) -> QuadForm:
    """Sum many forms of dimension *S* in one pass."""
    a: dict[int, Fraction] = {}
    q: dict[Pair, Fraction] = {}
    for f in forms:
        if f.S != S:
            raise DomainError(f"dimension mismatch: {f.S} vs {S}")
        for i, v in f._a.items():
            a[i] = a[i] + v if i in a else v
        for k, v in f._q.items():
            q[k] = q[k] + v if k in q else v
    return QuadForm.from_basis(S, a, q)


class RawPoly:
    """Degree-tagged polynomial ``const + sum lin_i m_i + sum quad_ij m_i m_j``.

    ``deg`` is the nominal degree accumulated through construction: a sum of
    frc terms counts as degree 1 even when it is empty, so a product of three
    such sums is rejected regardless of the actual coefficients.
    """

    __slots__ = ("S", "const", "lin", "quad", "deg")

    def __init__(self, S: int, const: Rational = 0, lin: Optional[Mapping[int, Rational]] = None,
                 quad: Optional[Mapping[Pair, Rational]] = None, deg: Optional[int] = None):
        self.S = S
        self.const = _frac(const)
        self.lin = {i: _frac(c) for i, c in (lin or {}).items() if c != 0}
        q: dict[Pair, Fraction] = {}
        for (i, j), c in (quad or {}).items():
            k = _key(i, j)
            q[k] = q.get(k, Fraction(0)) + _frac(c)
        self.quad = {k: c for k, c in q.items() if c != 0}
        actual = 2 if self.quad else 1 if self.lin else 0
        self.deg = actual if deg is None else max(deg, actual)
        if self.deg > 2:
            raise DegreeError(f"polynomial degree {self.deg} exceeds 2")

    @classmethod
    def frc_sum(cls, S: int, indices: Iterable[int]) -> "RawPoly":
        lin: dict[int, Fraction] = {}
        for i in indices:
            lin[i] = lin.get(i, Fraction(0)) + 1
        return cls(S, 0, lin, None, deg=1)

    @classmethod
    def constant(cls, S: int, c: Rational) -> "RawPoly":
        return cls(S, c)

    def __add__(self, other: "RawPoly") -> "RawPoly":
        lin = dict(self.lin)
        for i, c in other.lin.items():
            lin[i] = lin.get(i, Fraction(0)) + c
        quad = dict(self.quad)
        for k, c in other.quad.items():
            quad[k] = quad.get(k, Fraction(0)) + c
        return RawPoly(self.S, self.const + other.const, lin, quad, max(self.deg, other.deg))

    def __neg__(self) -> "RawPoly":
        return self.scale(-1)

    def __sub__(self, other: "RawPoly") -> "RawPoly":
        return self + (-other)

    def scale(self, c: Rational) -> "RawPoly":
        c = _frac(c)
        return RawPoly(self.S, self.const * c, {i: v * c for i, v in self.lin.items()},
                       {k: v * c for k, v in self.quad.items()}, self.deg)

    def __mul__(self, other: "RawPoly") -> "RawPoly":
        if self.deg + other.deg > 2:
            raise DegreeError(f"product of degree {self.deg} and degree {other.deg} terms exceeds 2")
        const = self.const * other.const
        lin: dict[int, Fraction] = {}
        quad: dict[Pair, Fraction] = {}
        for a, b in ((self, other), (other, self)):
            for i, c in a.lin.items():
                lin[i] = lin.get(i, Fraction(0)) + c * b.const
            for k, c in a.quad.items():
                quad[k] = quad.get(k, Fraction(0)) + c * b.const
        for i, c in self.lin.items():
            for j, d in other.lin.items():
                k = _key(i, j)
                quad[k] = quad.get(k, Fraction(0)) + c * d
        return RawPoly(self.S, const, lin, quad, self.deg + other.deg)

    def homogenize(self) -> QuadForm:
        return canonicalize(self.const, self.lin, self.quad, self.S)

    def vanishes_on_simplex(self) -> bool:
        """``True`` when the polynomial is identically zero on the simplex."""
        return self.homogenize().is_zero()

    def nonnegative_coeffs(self) -> bool:
        return self.const >= 0 and all(c >= 0 for c in self.lin.values()) and \
            all(c >= 0 for c in self.quad.values())

    def is_zero(self) -> bool:
        return self.const == 0 and not self.lin and not self.quad

    def terms(self):
        """Yield ``(vi, vj, coef)`` with index ``S`` standing for the constant 1."""
        S = self.S
        if self.const:
            yield S, S, self.const
        for i in sorted(self.lin):
            yield i, S, self.lin[i]
        for (i, j) in sorted(self.quad):
            yield i, j, self.quad[(i, j)]

    def to_json(self) -> dict:
        return {
            "const": str(self.const),
            "lin": [[i + 1, str(c)] for i, c in sorted(self.lin.items())],
            "quad": [[i + 1, j + 1, str(c)] for (i, j), c in sorted(self.quad.items())],
        }

    @classmethod
    def from_json(cls, obj: Mapping, S: int) -> "RawPoly":
        return cls(S, Fraction(obj.get("const", "0")),
                   {int(i) - 1: Fraction(c) for i, c in obj.get("lin", [])},
                   {(int(i) - 1, int(j) - 1): Fraction(c) for i, j, c in obj.get("quad", [])})

    def __repr__(self) -> str:
        return f"RawPoly[{self.S}](const={self.const}, lin={self.lin}, quad={self.quad}, deg={self.deg})"


def _as_map(x, S: int, pairs: bool) -> dict:
    if x is None:
        return {}
    if isinstance(x, Mapping):
        return dict(x)
    x = list(x)
    if not x:
        return {}
    if pairs:
        return {(int(i), int(j)): c for i, j, c in x}
    if len(x) != S:
        raise DomainError(f"linear coefficient list has length {len(x)}, expected {S}")
    return dict(enumerate(x))


def canonicalize(constant: Rational, linear, quad, S: int) -> QuadForm:
    """Homogenize ``constant + linear . m + quad`` into a :class:`QuadForm`.

    *linear* is a length-S sequence or an index mapping; *quad* a mapping of
    ``(i, j)`` pairs or an iterable of ``(i, j, c)`` triples (0-based).
    The constant contributes ``c`` to every ``u_ii`` and ``2c`` to every
    ``u_ij``; a linear term ``h_i`` contributes ``h_i`` to ``u_ii`` and to each
    ``u_ij``. In the stored basis both only touch the diagonal part.
    """
    c = _frac(constant)
    a: dict[int, Fraction] = {}
    if c:
        a = {i: c for i in range(S)}
    for i, h in _as_map(linear, S, False).items():
        if not 0 <= i < S:
            raise DomainError(f"linear index {i} outside dimension {S}")
        if h:
            a[i] = a.get(i, Fraction(0)) + _frac(h)
    q: dict[Pair, Fraction] = {}
    diag: dict[int, Fraction] = {}
    for (i, j), v in _as_map(quad, S, True).items():
        if not (0 <= i < S and 0 <= j < S):
            raise DomainError(f"monomial index ({i}, {j}) outside dimension {S}")
        v = _frac(v)
        if i == j:
            diag[i] = diag.get(i, Fraction(0)) + v
        else:
            k = _key(i, j)
            q[k] = q.get(k, Fraction(0)) + v
    # m_i^2 = m_i * sum(m) - sum_{j != i} m_i m_j
    for i, v in diag.items():
        if v:
            a[i] = a.get(i, Fraction(0)) + v
            for j in range(S):
                if j != i:
                    k = _key(i, j)
                    q[k] = q.get(k, Fraction(0)) - v
    return QuadForm.from_basis(S, a, q)


def _degree(x) -> int:
    if isinstance(x, RawPoly):
        return x.deg
    return 0


def poly_arith(op: str, a, b, *, context: str = ""):
    """Exact ``add``, ``mul`` or ``scale`` on polynomials.

    ``add`` accepts two QuadForms or two RawPolys. ``scale`` multiplies by a
    rational. ``mul`` needs degree information and therefore RawPoly
    operands; the result is returned homogenized.
    """
    where = f" in {context}" if context else ""
    if op == "add":
        if isinstance(a, RawPoly) and isinstance(b, RawPoly):
            return (a + b).homogenize()
        return a + b
    if op == "scale":
        if isinstance(a, RawPoly):
            return a.scale(b).homogenize()
        return a.scale(b)
    if op == "mul":
        if isinstance(a, QuadForm) or isinstance(b, QuadForm):
            da = 2 if isinstance(a, QuadForm) and not a.is_zero() else _degree(a)
            db = 2 if isinstance(b, QuadForm) and not b.is_zero() else _degree(b)
            if da + db > 2:
                raise DegreeError(f"product of degree {da} and degree {db} terms exceeds 2{where}")
            if isinstance(a, QuadForm):
                a, b = b, a
            # a is a constant-degree RawPoly or rational here, b a QuadForm
            c = a.const if isinstance(a, RawPoly) else _frac(a)
            return b.scale(c)
        if not isinstance(a, RawPoly):
            a = RawPoly(b.S, a)
        if not isinstance(b, RawPoly):
            b = RawPoly(a.S, b)
        try:
            return (a * b).homogenize()
        except DegreeError as exc:
            raise DegreeError(f"{exc}{where}") from None
    raise ValueError(f"unknown operation '{op}'")


def _simplex_check(m: Sequence, S: int):
    if len(m) != S:
        raise DomainError(f"occupancy vector has length {len(m)}, expected {S}")
    exact = all(isinstance(x, (int, Fraction)) for x in m)
    if exact:
        if any(x < 0 for x in m) or sum(m) != 1:
            raise DomainError("occupancy vector is not on the unit simplex")
        return [Fraction(x) for x in m]
    vals = [float(x) for x in m]
    if any(x < -SIMPLEX_TOL for x in vals) or abs(sum(vals) - 1.0) > SIMPLEX_TOL:
        raise DomainError("occupancy vector is not on the unit simplex")
    return vals


def poly_eval(a: QuadForm, m: Sequence, *, check: bool = True):
    """Evaluate *a* at *m*; exact when *m* holds rationals, float otherwise."""
    if check:
        m = _simplex_check(m, a.S)
    exact = all(isinstance(x, (int, Fraction)) for x in m)
    conv = (lambda c: c) if exact else float
    total_m = sum(m)
    lin = sum((conv(c) * m[i] for i, c in a._a.items()), Fraction(0) if exact else 0.0)
    cross = sum((conv(c) * m[i] * m[j] for (i, j), c in a._q.items()), Fraction(0) if exact else 0.0)
    return lin * total_m + cross


def equal_on_simplex(a: QuadForm, b: QuadForm) -> bool:
    """Decide ``a(m) == b(m)`` for every m on the simplex (coefficient equality)."""
    if a.S != b.S:
        raise DomainError(f"dimension mismatch: {a.S} vs {b.S}")
    return a == b


def separating_points(S: int) -> list[list[Fraction]]:
    """Unit vectors and pairwise midpoints: a separating set for quadratic forms."""
    pts = []
    for i in range(S):
        e = [Fraction(0)] * S
        e[i] = Fraction(1)
        pts.append(e)
    half = Fraction(1, 2)
    for i in range(S):
        for j in range(i + 1, S):
            e = [Fraction(0)] * S
            e[i] = e[j] = half
            pts.append(e)
    return pts


def recover_coefficients(values_unit: Sequence[Fraction], values_mid: Mapping[Pair, Fraction],
                         S: int) -> QuadForm:
    """Rebuild a form from its values at :func:`separating_points`.

    ``a(e_i) = u_ii`` and ``a((e_i + e_j)/2) = (u_ii + u_jj + u_ij) / 4``.
    """
    u = {(i, i): values_unit[i] for i in range(S)}
    for (i, j), v in values_mid.items():
        u[(i, j)] = 4 * v - values_unit[i] - values_unit[j]
    return QuadForm(S, u)
