"""Quaternion algebras over totally real fields and their orders.

Orders are Z-lattices of rank 4n given by an explicit basis of quaternions.
Integer structure constants are cached so that the hot paths (reduced norms,
products, the local splitting) never touch field arithmetic.
"""

from __future__ import annotations

import itertools
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Sequence

from . import lattice as lat
from .field import (
    FieldElement,
    IdealData,
    NumberField,
    PrimeIdeal,
    _factor_int,
)


class QuaternionError(ValueError):
    pass


class QuaternionAlgebra:
    """B = (a, b / F) with i^2 = a, j^2 = b, ij = -ji."""

    def __init__(self, field: NumberField, a, b):
        self.field = field
        self.a = field(a)
        self.b = field(b)
        if self.a.is_zero() or self.b.is_zero():
            raise QuaternionError("a and b must be nonzero")

    def __repr__(self) -> str:
        return f"QuaternionAlgebra({self.a!r}, {self.b!r} / {self.field!r})"

    def __eq__(self, other) -> bool:
        return isinstance(other, QuaternionAlgebra) and (self.field, self.a, self.b) == (other.field, other.a, other.b)

    def __hash__(self) -> int:
        return hash((self.field, self.a, self.b))

    def __call__(self, coords) -> "Quaternion":
        if isinstance(coords, Quaternion):
            return coords
        return Quaternion(self, tuple(self.field(c) for c in coords))

    def one(self) -> "Quaternion":
        F = self.field
        return Quaternion(self, (F.one, F.zero, F.zero, F.zero))

    def gens(self) -> tuple["Quaternion", "Quaternion", "Quaternion"]:
        F = self.field
        o, z = F.one, F.zero
        return (Quaternion(self, (z, o, z, z)), Quaternion(self, (z, z, o, z)), Quaternion(self, (z, z, z, o)))

    def scalar(self, x) -> "Quaternion":
        F = self.field
        return Quaternion(self, (F(x), F.zero, F.zero, F.zero))

    @cached_property
    def is_definite(self) -> bool:
        return self.a.is_totally_negative() and self.b.is_totally_negative()

    def ramified_real_places(self) -> list[int]:
        sa, sb = self.a.signs(), self.b.signs()
        return [k for k in range(self.field.n) if sa[k] < 0 and sb[k] < 0]

    @cached_property
    def ram_finite(self) -> tuple[PrimeIdeal, ...]:
        F = self.field
        if not (self.a.is_integral() and self.b.is_integral()):
            raise QuaternionError("ramification needs integral a and b")
        primes = set()
        for x in (F(2), self.a, self.b):
            for p, _ in _factor_int(abs(int(x.norm()))):
                primes.add(p)
        out = []
        for p in sorted(primes):
            for q in F.primes_above(p):
                if hilbert_symbol(self.a, self.b, q) == -1:
                    out.append(q)
        out.sort()
        if (len(out) + len(self.ramified_real_places())) % 2:
            raise QuaternionError("ramification set has odd cardinality (internal error)")
        return tuple(out)

    @cached_property
    def discriminant(self) -> IdealData:
        return IdealData.from_factors(self.field, [(q, 1) for q in self.ram_finite])


class Quaternion:
    __slots__ = ("algebra", "coords")

    def __init__(self, algebra: QuaternionAlgebra, coords: tuple):
        self.algebra = algebra
        self.coords = coords

    def __add__(self, y: "Quaternion") -> "Quaternion":
        return Quaternion(self.algebra, tuple(s + t for s, t in zip(self.coords, y.coords)))

    def __sub__(self, y: "Quaternion") -> "Quaternion":
        return Quaternion(self.algebra, tuple(s - t for s, t in zip(self.coords, y.coords)))

    def __neg__(self) -> "Quaternion":
        return Quaternion(self.algebra, tuple(-s for s in self.coords))

    def __mul__(self, y) -> "Quaternion":
        if not isinstance(y, Quaternion):
            c = self.algebra.field(y) if not isinstance(y, (int, Fraction)) else y
            return Quaternion(self.algebra, tuple(s * c for s in self.coords))
        a, b = self.algebra.a, self.algebra.b
        x0, x1, x2, x3 = self.coords
        y0, y1, y2, y3 = y.coords
        ab = a * b
        return Quaternion(
            self.algebra,
            (
                x0 * y0 + a * (x1 * y1) + b * (x2 * y2) - ab * (x3 * y3),
                x0 * y1 + x1 * y0 - b * (x2 * y3) + b * (x3 * y2),
                x0 * y2 + x2 * y0 + a * (x1 * y3) - a * (x3 * y1),
                x0 * y3 + x3 * y0 + x1 * y2 - x2 * y1,
            ),
        )

    def __rmul__(self, c) -> "Quaternion":
        return self * c

    def __eq__(self, y) -> bool:
        return isinstance(y, Quaternion) and self.coords == y.coords

    def __hash__(self) -> int:
        return hash(self.coords)

    def __repr__(self) -> str:
        return "Quaternion(" + ", ".join(repr(c) for c in self.coords) + ")"

    def conj(self) -> "Quaternion":
        x0, x1, x2, x3 = self.coords
        return Quaternion(self.algebra, (x0, -x1, -x2, -x3))

    def nrd(self) -> FieldElement:
        a, b = self.algebra.a, self.algebra.b
        x0, x1, x2, x3 = self.coords
        return x0 * x0 - a * (x1 * x1) - b * (x2 * x2) + a * b * (x3 * x3)

    def trd(self) -> FieldElement:
        return self.coords[0] * 2

    def inner(self, y: "Quaternion") -> FieldElement:
        """trd(self * conj(y)), the polar form of twice the reduced norm."""
        a, b = self.algebra.a, self.algebra.b
        x0, x1, x2, x3 = self.coords
        y0, y1, y2, y3 = y.coords
        return (x0 * y0 - a * (x1 * y1) - b * (x2 * y2) + a * b * (x3 * y3)) * 2

    conj_mul_trd = inner

    def is_zero(self) -> bool:
        return all(c.is_zero() for c in self.coords)

    def flat(self) -> list[Fraction]:
        return [c for x in self.coords for c in x.coords]

    def to_json(self) -> list:
        return [x.to_json() for x in self.coords]


# ---------------------------------------------------------------- Hilbert symbols


def hilbert_symbol(a: FieldElement, b: FieldElement, q: PrimeIdeal) -> int:
    """+1 if (a, b / F) splits at the finite prime q, else -1."""
    F = q.field
    a, b = F(a), F(b)
    if a.is_zero() or b.is_zero():
        raise QuaternionError("Hilbert symbol of zero")
    if q.p != 2:
        return _hilbert_odd(a, b, q)
    return _hilbert_dyadic(a, b, q)


def _hilbert_odd(a: FieldElement, b: FieldElement, q: PrimeIdeal) -> int:
    al, be = q.valuation(a), q.valuation(b)
    ua, ub = q.unit_residue(a), q.unit_residue(b)
    u = q.rmul(q.rpow(ua, be % (q.norm - 1)), q.rpow(q.rinv(ub), al % (q.norm - 1)))
    if (al * be) % 2:
        u = q.reduce([-c for c in u])
    return 1 if q.is_square_residue(u) else -1


def _strip_squares(x: FieldElement, q: PrimeIdeal) -> FieldElement:
    """Multiply by squares so that v_q(x) is 0 or 1 and x stays integral."""
    F = q.field
    x = x * (x.denominator() ** 2)
    v = q.valuation(x)
    if v >= 2:
        s = F(q._beta) / q.p
        x = x * (s ** (2 * (v // 2)))
    if not x.is_integral():
        raise QuaternionError("square stripping left a non-integral element (internal)")
    return x


def _hilbert_dyadic(a: FieldElement, b: FieldElement, q: PrimeIdeal) -> int:
    a, b = _strip_squares(a, q), _strip_squares(b, q)
    va, vb = q.valuation(a), q.valuation(b)
    if va == 1 and vb == 1:
        b = _strip_squares(-(a * b), q)
        vb = q.valuation(b)
    if vb == 1:
        a, b = b, a
    # now b is a unit; look for a primitive solution of a x^2 + b y^2 = z^2
    # with y or z a unit, modulo q^(2e+3)
    K = 2 * q.e + 3
    ai, bi = a.int_coords(), b.int_coords()
    reps = list(q.residue_reps(K))
    squares = {q.rmul(w, w, K) for w in reps}
    b_squares = {q.rmul(bi, s, K) for s in squares}
    one = q.reduce(q.field.one.int_coords(), K)
    for x in reps:
        ax2 = q.rmul(ai, q.rmul(x, x, K), K)
        if q.reduce([u - v for u, v in zip(one, ax2)], K) in b_squares:
            return 1
        if q.reduce([u + v for u, v in zip(ax2, bi)], K) in squares:
            return 1
    return -1


def hilbert_symbol_real(a: FieldElement, b: FieldElement, k: int) -> int:
    sa, sb = a.signs(), b.signs()
    return -1 if sa[k] < 0 and sb[k] < 0 else 1


# ---------------------------------------------------------------- orders


class QuatOrder:
    """An order given by a Z-basis of 4n quaternions, with cached integer structure constants."""

    def __init__(self, algebra: QuaternionAlgebra, zbasis: Sequence[Quaternion], check: bool = True):
        self.algebra = algebra
        F = algebra.field
        self.n = F.n
        self.zbasis = tuple(zbasis)
        if len(self.zbasis) != 4 * self.n:
            raise QuaternionError(f"an order needs {4 * self.n} basis elements, got {len(self.zbasis)}")
        self._flat = [q.flat() for q in self.zbasis]
        try:
            self._inv = lat.inverse(self._flat)
        except lat.LatticeError as exc:
            raise QuaternionError("order basis is not linearly independent") from exc
        table = []
        for x in self.zbasis:
            row = []
            for y in self.zbasis:
                c = self.rational_coords(x * y)
                if any(t.denominator != 1 for t in c):
                    raise QuaternionError("basis is not closed under multiplication")
                row.append(tuple(int(t) for t in c))
            table.append(tuple(row))
        self.mult_table = tuple(table)
        one = self.rational_coords(algebra.one())
        if any(t.denominator != 1 for t in one):
            raise QuaternionError("order does not contain 1")
        self.one_coords = tuple(int(t) for t in one)
        n4 = len(self.zbasis)
        forms = [[[0] * n4 for _ in range(n4)] for _ in range(self.n)]
        for i in range(n4):
            for j in range(i, n4):
                t = self.zbasis[i].inner(self.zbasis[j])
                if not t.is_integral():
                    raise QuaternionError("reduced trace form is not integral")
                for k, c in enumerate(t.int_coords()):
                    forms[k][i][j] = forms[k][j][i] = c
        self.nrd_forms = tuple(tuple(tuple(r) for r in f) for f in forms)
        self.trd_coords = tuple(self.zbasis[i].trd().int_coords() for i in range(n4))
        if check:
            for i in range(n4):
                if any(self.nrd_forms[k][i][i] % 2 for k in range(self.n)):
                    raise QuaternionError("reduced norm is not integral")

    def __repr__(self) -> str:
        return f"QuatOrder(rank {len(self.zbasis)} in {self.algebra!r})"

    def __eq__(self, other) -> bool:
        return isinstance(other, QuatOrder) and self.algebra == other.algebra and self.hnf_key() == other.hnf_key()

    def __hash__(self) -> int:
        return hash(self.hnf_key())

    def hnf_key(self) -> tuple:
        den = 1
        for row in self._flat:
            for c in row:
                den = den * c.denominator // _gcd(den, c.denominator)
        h = lat.hnf([[int(c * den) for c in row] for row in self._flat])
        return (den, tuple(tuple(r) for r in h))

    # coordinates -----------------------------------------------------------

    def rational_coords(self, q: Quaternion) -> list[Fraction]:
        v = q.flat()
        n4 = len(v)
        inv = self._inv
        return [sum(v[i] * inv[i][j] for i in range(n4) if v[i]) for j in range(n4)]

    def coords_of(self, q: Quaternion) -> tuple[int, ...]:
        c = self.rational_coords(q)
        if any(t.denominator != 1 for t in c):
            raise QuaternionError("element is not in the order")
        return tuple(int(t) for t in c)

    def __contains__(self, q: Quaternion) -> bool:
        return all(t.denominator == 1 for t in self.rational_coords(q))

    def element(self, coords: Sequence) -> Quaternion:
        B = self.algebra
        F = B.field
        acc = [Fraction(0)] * (4 * self.n)
        for c, row in zip(coords, self._flat):
            if c:
                for k, x in enumerate(row):
                    if x:
                        acc[k] += c * x
        n = self.n
        return Quaternion(B, tuple(F(acc[l * n : (l + 1) * n]) for l in range(4)))

    def mul(self, x: Sequence[int], y: Sequence[int]) -> list[int]:
        n4 = len(self.zbasis)
        out = [0] * n4
        t = self.mult_table
        for i, xi in enumerate(x):
            if xi:
                ti = t[i]
                for j, yj in enumerate(y):
                    if yj:
                        c = xi * yj
                        for k, m in enumerate(ti[j]):
                            if m:
                                out[k] += c * m
        return out

    @cached_property
    def conj_matrix(self) -> tuple[tuple[int, ...], ...]:
        return tuple(self.coords_of(q.conj()) for q in self.zbasis)

    def conj(self, x: Sequence[int]) -> list[int]:
        return lat.vec_mat(x, self.conj_matrix)

    def nrd(self, x: Sequence[int]) -> FieldElement:
        """Reduced norm of the element with integer coordinates x."""
        F = self.algebra.field
        return F(tuple(Fraction(lat.quad_form(f, x), 2) for f in self.nrd_forms))

    def trace_gram(self, c: FieldElement) -> list[list[int]]:
        """Integer Gram G with x G x^T == 2 Tr_{F/Q}(c * nrd(x)) for c in O_F."""
        F = self.algebra.field
        weights = []
        for k in range(self.n):
            w = (F.basis_elements()[k] * c).trace()
            if w.denominator != 1:
                raise QuaternionError("trace weight is not integral")
            weights.append(int(w))
        n4 = len(self.zbasis)
        return [[sum(w * f[i][j] for w, f in zip(weights, self.nrd_forms)) for j in range(n4)] for i in range(n4)]

    @cached_property
    def gram(self) -> list[list[FieldElement]]:
        return [[x.inner(y) for y in self.zbasis] for x in self.zbasis]

    def right_mul_matrix(self, w: Sequence[int]) -> list[list[int]]:
        """Matrix of z -> z w in order coordinates (rows indexed by z's basis)."""
        n4 = len(self.zbasis)
        t = self.mult_table
        return [[sum(w[j] * t[i][j][l] for j in range(n4) if w[j]) for l in range(n4)] for i in range(n4)]

    def left_mul_matrix(self, w: Sequence[int]) -> list[list[int]]:
        """Matrix of z -> w z in order coordinates."""
        n4 = len(self.zbasis)
        t = self.mult_table
        return [[sum(w[i] * t[i][j][l] for i in range(n4) if w[i]) for l in range(n4)] for j in range(n4)]

    def sublattice(self, rows: Iterable[Sequence[int]], scale: Fraction = Fraction(1)) -> "QuatOrder":
        """Order spanned by scale * (rows in current coordinates)."""
        h = lat.hnf(rows)
        if len(h) != len(self.zbasis):
            raise QuaternionError("sublattice is not of full rank")
        basis = [self.element([Fraction(c) * scale for c in r]) for r in h]
        return QuatOrder(self.algebra, basis)

    def index_in(self, other: "QuatOrder") -> Fraction:
        """[other : self] as a rational number."""
        m = [other.rational_coords(q) for q in self.zbasis]
        return abs(lat.det(m))

    @cached_property
    def discriminant(self) -> IdealData:
        return reduced_discriminant(self)

    def to_json(self) -> list:
        return [q.to_json() for q in self.zbasis]


def _gcd(a: int, b: int) -> int:
    while b:
        a, b = b, a % b
    return abs(a)


def standard_order(B: QuaternionAlgebra) -> QuatOrder:
    """O_F<1, i, j, ij> (requires integral a, b)."""
    if not (B.a.is_integral() and B.b.is_integral()):
        raise QuaternionError("standard order needs integral a and b")
    F = B.field
    basis = []
    for l in range(4):
        for w in F.basis_elements():
            coords = [F.zero] * 4
            coords[l] = w
            basis.append(Quaternion(B, tuple(coords)))
    return QuatOrder(B, basis)


def order_from_basis(B: QuaternionAlgebra, basis: Sequence) -> QuatOrder:
    """Order from explicit quaternion coordinate data (verified, not trusted)."""
    quats = [B(q) if not isinstance(q, Quaternion) else q for q in basis]
    return QuatOrder(B, quats)


# ---------------------------------------------------------------- discriminants


def _wedge(rows: Sequence[Quaternion]) -> FieldElement:
    F = rows[0].algebra.field
    m = [[x for x in q.coords] for q in rows]
    total = F.zero
    for perm in itertools.permutations(range(4)):
        sign = _perm_sign(perm)
        term = m[0][perm[0]] * m[1][perm[1]] * m[2][perm[2]] * m[3][perm[3]]
        if not term.is_zero():
            total = total + term if sign > 0 else total - term
    return total


def _perm_sign(perm: Sequence[int]) -> int:
    sign = 1
    p = list(perm)
    for i in range(len(p)):
        while p[i] != i:
            j = p[i]
            p[i], p[j] = p[j], p[i]
            sign = -sign
    return sign


def reduced_discriminant(O: QuatOrder) -> IdealData:
    """The reduced discriminant of O as a factored ideal of O_F.

    disc(O) = (4ab)^2 W^2 where W is the O_F-module spanned by the
    coordinate determinants of 4-subsets of the Z-basis, so valuations are
    read off from v(4ab) + min v(wedge).
    """
    B = O.algebra
    F = B.field
    std_index = abs(lat.det(O._flat))  # = N(W)
    norm_4ab = abs((B.a * B.b * 4).norm())
    total = std_index * norm_4ab
    primes = set()
    for x in (total.numerator, total.denominator):
        for p, _ in _factor_int(x):
            primes.add(p)
    wedges = None
    facs = []
    for p in sorted(primes):
        for q in F.primes_above(p):
            if wedges is None:
                wedges = [w for w in (_wedge(S) for S in itertools.combinations(O.zbasis, 4)) if not w.is_zero()]
            v = q.valuation(B.a * B.b * 4) + min(q.valuation(w) for w in wedges)
            if v < 0:
                raise QuaternionError("not an order / corrupted basis")
            if v:
                facs.append((q, v))
    data = IdealData.from_factors(F, facs)
    if Fraction(data.norm) != total:
        raise QuaternionError("discriminant norm mismatch: not an order / corrupted basis")
    return data


# ---------------------------------------------------------------- maximal orders


def _functionals_mod_q(q: PrimeIdeal) -> list[list[int]]:
    """Columns c with t in q  <=>  t . c == 0 mod p for t in O_F."""
    p = q.p
    h = [[x % p for x in r] for r in q.hnf]
    return lat.kernel_mod_p(lat.transpose(h), p) if h else []


def _in_q_matrix(O: QuatOrder, q: PrimeIdeal, values: Sequence[Sequence[int]]) -> list[list[int]]:
    # values[i] = coords over omega of a linear function of basis element i
    funcs = _functionals_mod_q(q)
    return [[sum(v[k] * c[k] for k in range(len(v))) % q.p for c in funcs] for v in values]


def _radical_ideal(O: QuatOrder, q: PrimeIdeal) -> list[list[int]]:
    """Basis (order coordinates) of the two-sided ideal lifting the radical of O/qO."""
    p = q.p
    n4 = len(O.zbasis)
    cols = []
    F = O.algebra.field
    for j in range(n4):
        vals = []
        for i in range(n4):
            t = O.mult_table[i][j]
            tr = [0] * F.n
            for l, c in enumerate(t):
                if c:
                    for k, x in enumerate(O.trd_coords[l]):
                        tr[k] += c * x
            vals.append(tr)
        cols.append(_in_q_matrix(O, q, vals))
    big = [[c for col in cols for c in col[i]] for i in range(n4)]
    ker = lat.kernel_mod_p(big, p) if big and big[0] else [[int(i == j) for j in range(n4)] for i in range(n4)]
    if p == 2:
        ker = _char2_nilpotent_part(O, q, ker)
    rows = [list(r) for r in ker] + [[p * int(i == j) for j in range(n4)] for i in range(n4)]
    return lat.hnf(rows)


def _char2_nilpotent_part(O: QuatOrder, q: PrimeIdeal, ker: list[list[int]]) -> list[list[int]]:
    # on the trace kernel nrd is additive and Frobenius-semilinear; keep the part with nrd in q
    p = q.p
    F = O.algebra.field
    vals = [O.nrd(r).int_coords() for r in ker]
    funcs = _functionals_mod_q(q)
    mat = [[sum(v[k] * c[k] for k in range(F.n)) % p for c in funcs] for v in vals]
    if not mat or not mat[0]:
        return ker
    sub = lat.kernel_mod_p(mat, p)
    return [[sum(s[i] * ker[i][j] for i in range(len(ker))) % p for j in range(len(ker[0]))] for s in sub]


def _order_of_ideal(O: QuatOrder, J: list[list[int]], p: int, side: str) -> list[list[int]]:
    """Basis (p * coordinates) of {y : yJ in J} ('left') or {y : Jy in J} ('right').

    Uses pO in J, so the order lies in p^-1 O and the condition is taken mod p^2.
    """
    from .padic import left_kernel_mod

    n4 = len(O.zbasis)
    mod = p * p
    pJ = [[p * x for x in r] for r in J]
    hinv = lat.inverse(pJ)
    hinv_d = [[int(x * mod) for x in r] for r in hinv]
    if any(Fraction(x) * mod != int(Fraction(x) * mod) for r in hinv for x in r):
        raise QuaternionError("ideal does not contain p^2 O (internal)")
    blocks = []
    for jrow in J:
        m = O.right_mul_matrix(jrow) if side == "left" else O.left_mul_matrix(jrow)
        blocks.append(lat.mat_mul(m, hinv_d))
    big = [[x for b in blocks for x in b[i]] for i in range(n4)]
    ker = left_kernel_mod(big, p, 2)
    return lat.hnf_mod(ker, mod, n4)


def maximal_order(O0: QuatOrder, max_steps: int | None = None) -> QuatOrder:
    """A maximal order containing O0, by repeated radical idealizers."""
    B = O0.algebra
    target = B.discriminant
    O = O0
    steps = 0
    if max_steps is None:
        max_steps = 8 * O0.n * (1 + sum(e for _, e in O0.discriminant.factors))
    while True:
        disc = O.discriminant
        excess = [q for q, e in disc.factors if e > target.valuation(q)]
        if not excess:
            return O
        progressed = False
        for q in excess:
            O2 = _enlarge_at(O, q)
            if O2 is not None:
                O = O2
                progressed = True
                break
        steps += 1
        if not progressed or steps > max_steps:
            raise QuaternionError("maximal order computation did not terminate")


def _enlarge_at(O: QuatOrder, q: PrimeIdeal) -> QuatOrder | None:
    p = q.p
    J = _radical_ideal(O, q)
    for side in ("left", "right"):
        rows = _order_of_ideal(O, J, p, side)
        if abs(lat.det(rows)) < p ** len(O.zbasis):
            return O.sublattice(rows, Fraction(1, p))
    # hereditary but not maximal: use a one-sided ideal through a zero divisor
    x = next(_zero_divisors(O, q, J), None)
    if x is None:
        return None
    rows = [list(r) for r in J]
    for b in range(len(O.zbasis)):
        e = [int(i == b) for i in range(len(O.zbasis))]
        rows.append(O.mul(x, e))
    I = lat.hnf_mod(rows, p, len(O.zbasis))
    best = None
    for side in ("left", "right"):
        r = _order_of_ideal(O, I, p, side)
        d = abs(lat.det(r))
        if d < p ** len(O.zbasis) and (best is None or d < best[0]):
            best = (d, r)
    if best is None:
        return None
    return O.sublattice(best[1], Fraction(1, p))


# ---------------------------------------------------------------- Eichler orders


def eichler_order(Rmax: QuatOrder, N_plus: IdealData, splittings: dict | None = None) -> QuatOrder:
    """The Eichler order of level N_plus inside Rmax.

    At each degree-one prime q^e of the level the order is cut out by the
    congruence 'lower-left entry of the local splitting is 0 mod q^e'.  Other
    primes go through a chain of adjacent maximal orders.
    """
    from .field import site_from_prime
    from .padic import build_splitting, left_kernel_mod

    if not N_plus.factors:
        return Rmax
    B = Rmax.algebra
    n4 = len(Rmax.zbasis)
    current = [[int(i == j) for j in range(n4)] for i in range(n4)]
    for q, e in N_plus.factors:
        if q in B.ram_finite:
            raise QuaternionError("level must be coprime to the discriminant")
        if q.is_degree_one():
            site = site_from_prime(q)
            sm = (splittings or {}).get(q) or build_splitting(Rmax, site, max(e, 1))
            mod = q.p ** e
            col = [[m[2] % mod] for m in sm.images]
            ker = left_kernel_mod(col, q.p, e)
            sub = lat.hnf_mod(ker, mod, n4)
        else:
            sub = _eichler_chain(Rmax, q, e)
        current = lat.intersect(current, sub)
    R = Rmax.sublattice(current)
    expected = Rmax.discriminant * N_plus
    if R.discriminant != expected:
        raise QuaternionError("Eichler order has the wrong discriminant")
    return R


def _eichler_chain(Rmax: QuatOrder, q: PrimeIdeal, e: int) -> list[list[int]]:
    """Rmax-coordinates of Rmax ∩ O_e for a non-backtracking chain Rmax = O_0, ..., O_e."""
    p = q.p
    prev = None
    cur = Rmax
    for _ in range(e):
        J = _radical_ideal(cur, q)
        found = None
        for x in _zero_divisors(cur, q, J):
            rows = [list(r) for r in J]
            for b in range(len(cur.zbasis)):
                rows.append(cur.mul([int(i == b) for i in range(len(cur.zbasis))], x))
            I = lat.hnf_mod(rows, p, len(cur.zbasis))
            r = _order_of_ideal(cur, I, p, "right")
            # adjacent maximal orders have the same covolume; only identity matters
            nxt = cur.sublattice(r, Fraction(1, p))
            if nxt == cur or (prev is not None and nxt == prev):
                continue
            found = nxt
            break
        if found is None:
            raise QuaternionError("could not extend the chain of maximal orders")
        prev, cur = cur, found
    # intersection Rmax ∩ cur, in Rmax coordinates
    den = 1
    cur_rows = [Rmax.rational_coords(qq) for qq in cur.zbasis]
    for r in cur_rows:
        for c in r:
            den = den * c.denominator // _gcd(den, c.denominator)
    scaled = [[int(c * den) for c in r] for r in cur_rows]
    ident = [[den * int(i == j) for j in range(len(r))] for i, r in enumerate(cur_rows)]
    inter = lat.intersect(ident, scaled)
    return [[c // den for c in r] for r in inter]


def _zero_divisors(O: QuatOrder, q: PrimeIdeal, J: list[list[int]]):
    """Elements outside J with nrd in q (deterministic order)."""
    F = O.algebra.field
    n4 = len(O.zbasis)
    basis = [[int(i == j) for j in range(n4)] for i in range(n4)]
    scal = [list(O.coords_of(O.algebra.scalar(w))) for w in F.basis_elements()]
    cands = list(basis) + [[a + b for a, b in zip(x, y)] for x, y in itertools.combinations(basis, 2)]
    for x in cands:
        for lam in q.residue_reps():
            shift = lat.vec_mat(list(lam), scal)
            y = [a - s for a, s in zip(x, shift)]
            if lat.in_row_span(J, y):
                continue
            if q.contains(O.nrd(y)):
                yield y


# ---------------------------------------------------------------- algebra search


def algebra_from_discriminant(F: NumberField, N_minus: IdealData, max_height_exp: int = 8) -> QuaternionAlgebra:
    """A totally definite algebra ramified exactly at the primes of N_minus.

    Deterministic search over totally negative a, b: a among short elements of
    O_F, b among short elements of the product of the odd primes of N_minus
    not dividing a (an odd prime can only ramify if it divides a or b).
    """
    if not N_minus.is_squarefree():
        raise QuaternionError("discriminant must be squarefree")
    if (N_minus.num_factors() + F.n) % 2:
        raise QuaternionError("parity: a definite algebra needs #primes + [F:Q] even")
    target = tuple(sorted(N_minus.primes()))
    odd = [q for q in target if q.p != 2]
    tried = set()
    for h in range(1, max_height_exp + 1):
        bound = F.n * 2 ** h
        for a in _short_totally_negative(F, F.unit_ideal, bound):
            missing = [q for q in odd if not q.contains(a)]
            I = F.unit_ideal
            for q in missing:
                I = I * q.ideal
            bbound = bound * max(1, round(I.norm ** (2 / F.n)))
            for b in _short_totally_negative(F, I, bbound):
                key = (a.coords, b.coords)
                if key in tried:
                    continue
                tried.add(key)
                B = QuaternionAlgebra(F, a, b)
                if _ramification_matches(B, target):
                    return B
    raise QuaternionError(f"no presentation found up to height 2^{max_height_exp}")


def _ramification_matches(B: QuaternionAlgebra, target: tuple) -> bool:
    F = B.field
    for q in target:
        if hilbert_symbol(B.a, B.b, q) != -1:
            return False
    primes = set()
    for x in (F(2), B.a, B.b):
        for p, _ in _factor_int(abs(int(x.norm()))):
            primes.add(p)
    for p in sorted(primes):
        for q in F.primes_above(p):
            if q in target:
                continue
            if hilbert_symbol(B.a, B.b, q) == -1:
                return False
    return True


def _short_totally_negative(F: NumberField, I, bound: int) -> list[FieldElement]:
    basis = [list(r) for r in I.hnf]
    gram = lat.mat_mul(lat.mat_mul(basis, [list(r) for r in F.trace_matrix]), lat.transpose(basis))
    out = []
    for y in lat.short_vectors_reduced(gram, bound):
        x = F(lat.vec_mat(y, basis))
        if x.is_totally_positive():
            x = -x
        if x.is_totally_negative():
            out.append(x)
    out.sort(key=lambda x: (int((x * x).trace()), abs(x.norm()), x.coords))
    return out
