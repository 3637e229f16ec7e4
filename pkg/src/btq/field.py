"""Exact arithmetic in totally real number fields.

Elements are rational coordinate vectors over a fixed integral basis.  The
module also provides prime ideals (with residue maps and valuations), ideal
arithmetic on Hermite bases, degree-one prime sites, ideal enumeration by
norm, lower bounds for the Dedekind zeta value at 2, and automorphisms.
"""

from __future__ import annotations

import itertools
import json
import math
import os
from dataclasses import dataclass, field as dc_field
from fractions import Fraction
from functools import cached_property, total_ordering
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import flint

from . import lattice as lat


class FieldError(ValueError):
    pass


class NeedsPrimeData(FieldError):
    """An index divisor was hit and the field table carries no data for it."""


def parse_rational(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x.strip())
    raise FieldError(f"cannot parse rational from {x!r}")


def format_rational(x: Fraction) -> str | int:
    x = Fraction(x)
    return x.numerator if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


# ---------------------------------------------------------------- polynomials
# Dense coefficient lists, lowest degree first.


def _poly_trim(a: list) -> list:
    while a and a[-1] == 0:
        a.pop()
    return a


def _poly_mul(a: Sequence, b: Sequence) -> list:
    if not a or not b:
        return []
    out = [0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                out[i + j] += x * y
    return out


def _poly_divmod(a: Sequence, b: Sequence) -> tuple[list, list]:
    a = [Fraction(x) for x in a]
    _poly_trim(a)
    b = _poly_trim([Fraction(x) for x in b])
    if not b:
        raise ZeroDivisionError("polynomial division by zero")
    q = [Fraction(0)] * max(len(a) - len(b) + 1, 0)
    while len(a) >= len(b):
        c = a[-1] / b[-1]
        k = len(a) - len(b)
        q[k] = c
        for i, y in enumerate(b):
            a[i + k] -= c * y
        a.pop()
        _poly_trim(a)
    return q, a


def _poly_eval(a: Sequence, x):
    acc = 0
    for c in reversed(a):
        acc = acc * x + c
    return acc


def _poly_deriv(a: Sequence) -> list:
    return [i * c for i, c in enumerate(a)][1:]


def _sign(x) -> int:
    return (x > 0) - (x < 0)


def _sturm_chain(f: Sequence[int]) -> list[list[Fraction]]:
    chain = [[Fraction(c) for c in f], [Fraction(c) for c in _poly_deriv(f)]]
    while True:
        _, r = _poly_divmod(chain[-2], chain[-1])
        if not r:
            break
        chain.append([-c for c in r])
    return chain


def _sign_changes(chain: list, x: Fraction) -> int:
    signs = [_sign(_poly_eval(p, x)) for p in chain]
    signs = [s for s in signs if s]
    return sum(1 for s, t in zip(signs, signs[1:]) if s != t)


def _interval_eval(a: Sequence[Fraction], lo: Fraction, hi: Fraction) -> tuple[Fraction, Fraction]:
    # Horner in interval arithmetic on [lo, hi].
    clo = chi = Fraction(0)
    for c in reversed(a):
        prods = (clo * lo, clo * hi, chi * lo, chi * hi)
        clo, chi = min(prods) + c, max(prods) + c
    return clo, chi


# ---------------------------------------------------------------- number field


class NumberField:
    """A totally real number field given by a monic integer polynomial and an integral basis."""

    def __init__(
        self,
        poly: Sequence[int],
        integral_basis: Sequence[Sequence] | None = None,
        disc: int | None = None,
        automorphisms: Sequence[Sequence] | None = None,
        index_primes: Sequence[dict] | None = None,
        label: str = "",
    ):
        poly = [int(c) for c in poly]
        if len(poly) < 2 or poly[-1] != 1:
            raise FieldError("defining polynomial must be monic of degree >= 1")
        self.poly = tuple(poly)
        self.n = n = len(poly) - 1
        if integral_basis is None:
            integral_basis = [[int(i == j) for j in range(n)] for i in range(n)]
        w = [[parse_rational(c) for c in row] + [Fraction(0)] * (n - len(row)) for row in integral_basis]
        if len(w) != n or any(len(r) != n for r in w):
            raise FieldError("integral basis must have n elements of length <= n")
        self.omega = tuple(tuple(r) for r in w)
        try:
            self.omega_inv = tuple(tuple(r) for r in lat.inverse(w))
        except lat.LatticeError as exc:
            raise FieldError("integral basis is singular") from exc
        if flint.fmpz_poly(list(poly)).factor()[1][0][0].degree() != n:
            raise FieldError("defining polynomial is reducible")
        self._build_mult_table()
        self.label = label
        poly_disc = int(flint.fmpz_poly(list(poly)).discriminant()) if n > 1 else 1
        index_sq = Fraction(1) / lat.det(w) ** 2
        if index_sq.denominator != 1:
            raise FieldError("integral basis does not contain Z[theta]")
        self.index = math.isqrt(index_sq.numerator)
        if self.index ** 2 != index_sq:
            raise FieldError("integral basis index is not an integer")
        computed_disc = abs(lat.det(self.trace_matrix))
        if disc is not None and abs(int(disc)) != computed_disc:
            raise FieldError(f"stated discriminant {disc} differs from computed {computed_disc}")
        if computed_disc * self.index ** 2 != abs(poly_disc):
            raise FieldError("discriminant and index are inconsistent")
        self.disc = computed_disc
        self._index_primes: dict[int, list[dict]] = {}
        for entry in index_primes or []:
            self._index_primes[int(entry["p"])] = list(entry["factors"])
        self._roots: list[tuple[Fraction, Fraction]] | None = None
        if self.count_real_roots() != n:
            raise FieldError("field is not totally real")
        self.auts: list[Automorphism] = []
        for img in automorphisms or []:
            self.auts.append(Automorphism(self, self(img)))
        self._prime_cache: dict[int, list[PrimeIdeal]] = {}
        self._zeta_cache: dict[int, float] = {}

    # construction ---------------------------------------------------------

    @classmethod
    def from_table_entry(cls, entry: dict) -> "NumberField":
        return cls(
            poly=entry["poly"],
            integral_basis=entry.get("integral_basis"),
            disc=entry.get("disc"),
            automorphisms=entry.get("automorphisms"),
            index_primes=entry.get("index_primes"),
            label=entry.get("label", ""),
        )

    def _build_mult_table(self) -> None:
        n = self.n
        f = [Fraction(c) for c in self.poly]
        table = []
        for i in range(n):
            row = []
            for j in range(n):
                prod = _poly_mul(self.omega[i], self.omega[j])
                _, r = _poly_divmod(prod, f)
                coords = self._power_to_coords(r)
                if any(c.denominator != 1 for c in coords):
                    raise FieldError("integral basis is not closed under multiplication")
                row.append(tuple(int(c) for c in coords))
            table.append(tuple(row))
        self.mult = tuple(table)
        self.trace_omega = tuple(sum(self.mult[i][k][k] for k in range(n)) for i in range(n))
        self.trace_matrix = tuple(
            tuple(sum(self.mult[i][j][k] * self.trace_omega[k] for k in range(n)) for j in range(n)) for i in range(n)
        )

    def _power_to_coords(self, r: Sequence) -> list[Fraction]:
        n = self.n
        r = list(r) + [0] * (n - len(r))
        return [sum(Fraction(r[l]) * self.omega_inv[l][k] for l in range(n)) for k in range(n)]

    def to_table_entry(self) -> dict:
        return {
            "label": self.label,
            "poly": list(self.poly),
            "integral_basis": [[format_rational(c) for c in row] for row in self.omega],
            "disc": self.disc,
            "automorphisms": [[format_rational(c) for c in a.image.coords] for a in self.auts],
            "index_primes": [{"p": p, "factors": fs} for p, fs in sorted(self._index_primes.items())],
        }

    # elements -------------------------------------------------------------

    def __call__(self, x) -> "FieldElement":
        if isinstance(x, FieldElement):
            if x.field is not self:
                raise FieldError("element belongs to a different field")
            return x
        if isinstance(x, (int, Fraction)):
            return FieldElement(self, (Fraction(x),) + (Fraction(0),) * (self.n - 1)) if self._one_is_e0 else self.one * x
        if isinstance(x, str):
            return self(parse_rational(x))
        coords = tuple(parse_rational(c) for c in x)
        if len(coords) != self.n:
            raise FieldError(f"expected {self.n} coordinates, got {len(coords)}")
        return FieldElement(self, coords)

    @cached_property
    def _one_is_e0(self) -> bool:
        return self.omega[0] == (Fraction(1),) + (Fraction(0),) * (self.n - 1)

    @cached_property
    def one(self) -> "FieldElement":
        return FieldElement(self, tuple(self._power_to_coords([1])))

    @cached_property
    def zero(self) -> "FieldElement":
        return FieldElement(self, (Fraction(0),) * self.n)

    @cached_property
    def theta(self) -> "FieldElement":
        return self.from_power_basis([0, 1])

    def from_power_basis(self, coeffs: Sequence) -> "FieldElement":
        f = [Fraction(c) for c in self.poly]
        _, r = _poly_divmod([Fraction(c) for c in coeffs], f)
        return FieldElement(self, tuple(self._power_to_coords(r)))

    def to_power_basis(self, x: "FieldElement") -> list[Fraction]:
        n = self.n
        return [sum(x.coords[k] * self.omega[k][l] for k in range(n)) for l in range(n)]

    def basis_elements(self) -> list["FieldElement"]:
        return [FieldElement(self, tuple(Fraction(int(i == j)) for j in range(self.n))) for i in range(self.n)]

    def mul_coords(self, x: Sequence, y: Sequence) -> list:
        """Product of coordinate vectors (ints stay ints)."""
        n = self.n
        out = [0] * n
        mult = self.mult
        for i, xi in enumerate(x):
            if xi:
                row = mult[i]
                for j, yj in enumerate(y):
                    if yj:
                        c = xi * yj
                        for k, m in enumerate(row[j]):
                            if m:
                                out[k] += c * m
        return out

    def mul_matrix(self, x: "FieldElement") -> list[list[Fraction]]:
        """Row i holds the coordinates of omega_i * x."""
        return [self.mul_coords(e, x.coords) for e in lat.identity(self.n)]

    # real embeddings --------------------------------------------------------

    @cached_property
    def _sturm(self) -> list:
        return _sturm_chain(self.poly)

    def count_real_roots(self) -> int:
        bound = Fraction(1 + max(abs(c) for c in self.poly[:-1]))
        return _sign_changes(self._sturm, -bound) - _sign_changes(self._sturm, bound)

    def _isolate_roots(self) -> list[tuple[Fraction, Fraction]]:
        if self._roots is not None:
            return self._roots
        bound = Fraction(1 + max(abs(c) for c in self.poly[:-1]))
        out = []
        stack = [(-bound, bound)]
        while stack:
            lo, hi = stack.pop()
            k = _sign_changes(self._sturm, lo) - _sign_changes(self._sturm, hi)
            if k == 0:
                continue
            if k == 1:
                out.append((lo, hi))
                continue
            mid = (lo + hi) / 2
            stack.append((lo, mid))
            stack.append((mid, hi))
        out.sort()
        # for n >= 2 the roots are irrational, so no endpoint is ever a root
        self._roots = out
        return out

    def _bisect(self, lo: Fraction, hi: Fraction) -> tuple[Fraction, Fraction]:
        mid = (lo + hi) / 2
        if _sign(_poly_eval(self.poly, lo)) * _sign(_poly_eval(self.poly, mid)) < 0:
            return lo, mid
        return mid, hi

    def _refine(self, k: int) -> None:
        roots = self._isolate_roots()
        lo, hi = roots[k]
        roots[k] = self._bisect(lo, hi)

    def signs(self, x: "FieldElement") -> list[int]:
        """Exact signs of x at the real embeddings (ordered by increasing root)."""
        if x.is_zero():
            return [0] * self.n
        if self.n == 1:
            return [_sign(self.to_power_basis(x)[0])]
        g = self.to_power_basis(x)
        roots = self._isolate_roots()
        out = []
        for k in range(self.n):
            while True:
                lo, hi = roots[k]
                a, b = _interval_eval(g, lo, hi)
                if a > 0:
                    out.append(1)
                    break
                if b < 0:
                    out.append(-1)
                    break
                self._refine(k)
        return out

    def embeddings(self, x: "FieldElement", bits: int = 80) -> list[float]:
        g = self.to_power_basis(x)
        if self.n == 1:
            return [float(g[0])]
        roots = self._isolate_roots()
        out = []
        for k in range(self.n):
            while roots[k][1] - roots[k][0] > Fraction(1, 2 ** bits):
                self._refine(k)
            lo, hi = roots[k]
            out.append(float(_poly_eval(g, (lo + hi) / 2)))
        return out

    # primes ---------------------------------------------------------------

    def primes_above(self, p: int) -> list["PrimeIdeal"]:
        """All prime ideals above the rational prime p, in a deterministic order."""
        if p in self._prime_cache:
            return self._prime_cache[p]
        n = self.n
        out = []
        if self.index % p == 0:
            if p not in self._index_primes:
                raise NeedsPrimeData(f"prime {p} divides the index of Z[theta]: needs external prime data")
            for fac in self._index_primes[p]:
                gen = self(fac["gen"])
                out.append(PrimeIdeal(self, p, gen, int(fac["e"]), int(fac["f"])))
        else:
            _, facs = flint.nmod_poly(list(self.poly), p).factor()
            for g, e in facs:
                coeffs = [int(c) for c in g.coeffs()]
                gen = self.from_power_basis(coeffs)
                out.append(PrimeIdeal(self, p, gen, e, g.degree()))
        out.sort(key=lambda q: (q.f, q.e, q.hnf))
        if sum(q.e * q.f for q in out) != n:
            raise FieldError(f"inconsistent decomposition data for p={p}")
        self._prime_cache[p] = out
        return out

    def norms_above(self, p: int) -> list[int]:
        """Norms of the primes above p, without building the ideals."""
        if self.n == 1:
            return [p]
        if self.index % p == 0:
            return [q.norm for q in self.primes_above(p)]
        if self.n == 2 and p > 2:
            c0, c1 = self.poly[0], self.poly[1]
            disc = (c1 * c1 - 4 * c0) % p
            if disc == 0:
                return [p]
            return [p, p] if pow(disc, (p - 1) // 2, p) == 1 else [p * p]
        _, facs = flint.nmod_poly(list(self.poly), p).factor()
        return [p ** g.degree() for g, _ in facs]

    def prime_ideals_up_to(self, bound: int) -> list["PrimeIdeal"]:
        out = []
        for p in _primes_up_to(bound):
            out.extend(q for q in self.primes_above(p) if q.norm <= bound)
        out.sort(key=lambda q: (q.norm, q.p, q.hnf))
        return out

    def ideal(self, gens: Iterable) -> "Ideal":
        """Integral ideal generated by the given elements of O_F."""
        rows = []
        for g in gens:
            x = self(g)
            if not x.is_integral():
                raise FieldError("ideal generators must be integral")
            for e in lat.identity(self.n):
                rows.append([int(c) for c in self.mul_coords(e, x.coords)])
        return Ideal(self, lat.hnf(rows))

    @cached_property
    def unit_ideal(self) -> "Ideal":
        return Ideal(self, lat.identity(self.n))

    def __repr__(self) -> str:
        return f"NumberField({self.label or self.poly})"

    def __eq__(self, other) -> bool:
        return isinstance(other, NumberField) and self.poly == other.poly and self.omega == other.omega

    def __hash__(self) -> int:
        return hash((self.poly, self.omega))

    def __reduce__(self):
        return (NumberField.from_table_entry, (self.to_table_entry(),))


# ---------------------------------------------------------------- elements


@total_ordering
class FieldElement:
    __slots__ = ("field", "coords")

    def __init__(self, field: NumberField, coords: tuple):
        self.field = field
        self.coords = coords

    def _coerce(self, y) -> "FieldElement":
        if isinstance(y, FieldElement):
            return y
        return self.field(y)

    def __add__(self, y):
        y = self._coerce(y)
        return FieldElement(self.field, tuple(a + b for a, b in zip(self.coords, y.coords)))

    __radd__ = __add__

    def __neg__(self):
        return FieldElement(self.field, tuple(-a for a in self.coords))

    def __sub__(self, y):
        y = self._coerce(y)
        return FieldElement(self.field, tuple(a - b for a, b in zip(self.coords, y.coords)))

    def __rsub__(self, y):
        return self._coerce(y) - self

    def __mul__(self, y):
        if isinstance(y, (int, Fraction)):
            return FieldElement(self.field, tuple(a * y for a in self.coords))
        y = self._coerce(y)
        return FieldElement(self.field, tuple(Fraction(c) for c in self.field.mul_coords(self.coords, y.coords)))

    __rmul__ = __mul__

    def inverse(self) -> "FieldElement":
        if self.is_zero():
            raise ZeroDivisionError("inverse of zero in a number field")
        m = self.field.mul_matrix(self)
        one = self.field.one.coords
        return FieldElement(self.field, tuple(lat.solve_left(m, one)))

    def __truediv__(self, y):
        if isinstance(y, (int, Fraction)):
            if y == 0:
                raise ZeroDivisionError("division by zero")
            return FieldElement(self.field, tuple(a / y for a in self.coords))
        return self * self._coerce(y).inverse()

    def __rtruediv__(self, y):
        return self._coerce(y) * self.inverse()

    def __pow__(self, k: int):
        if k < 0:
            return self.inverse() ** (-k)
        result = self.field.one
        base = self
        while k:
            if k & 1:
                result = result * base
            k >>= 1
            if k:
                base = base * base
        return result

    def __eq__(self, y) -> bool:
        if isinstance(y, (int, Fraction)):
            y = self.field(y)
        if not isinstance(y, FieldElement):
            return NotImplemented
        return self.coords == y.coords

    def __lt__(self, y) -> bool:
        return self.coords < y.coords

    def __hash__(self) -> int:
        return hash(self.coords)

    def __repr__(self) -> str:
        return "[" + ", ".join(str(format_rational(c)) for c in self.coords) + "]"

    def is_zero(self) -> bool:
        return not any(self.coords)

    def is_integral(self) -> bool:
        return all(c.denominator == 1 for c in self.coords)

    def int_coords(self) -> tuple[int, ...]:
        if not self.is_integral():
            raise FieldError("element is not integral")
        return tuple(int(c) for c in self.coords)

    def norm(self) -> Fraction:
        return Fraction(lat.det(self.field.mul_matrix(self)))

    def trace(self) -> Fraction:
        return sum((c * t for c, t in zip(self.coords, self.field.trace_omega)), Fraction(0))

    def denominator(self) -> int:
        return math.lcm(*(c.denominator for c in self.coords))

    def signs(self) -> list[int]:
        return self.field.signs(self)

    def is_totally_positive(self) -> bool:
        return all(s > 0 for s in self.field.signs(self))

    def is_totally_negative(self) -> bool:
        return all(s < 0 for s in self.field.signs(self))

    def to_json(self) -> list:
        return [format_rational(c) for c in self.coords]


def norm_trace(x: FieldElement) -> tuple[Fraction, Fraction]:
    return x.norm(), x.trace()


def is_totally_positive(x: FieldElement) -> bool:
    if x.is_zero():
        raise FieldError("zero has no sign")
    return x.is_totally_positive()


# ---------------------------------------------------------------- ideals


class Ideal:
    """Integral ideal held by its row Hermite basis over the integral basis."""

    __slots__ = ("field", "hnf", "_factors")

    def __init__(self, field: NumberField, hnf_rows: Sequence[Sequence[int]]):
        self.field = field
        self.hnf = tuple(tuple(r) for r in hnf_rows)
        self._factors = None

    @property
    def norm(self) -> int:
        return abs(lat.det(self.hnf))

    def __mul__(self, other: "Ideal") -> "Ideal":
        F = self.field
        mod = self.norm * other.norm
        rows = [F.mul_coords(a, b) for a in self.hnf for b in other.hnf]
        return Ideal(F, lat.hnf_mod(rows, mod, F.n))

    def __pow__(self, k: int) -> "Ideal":
        out = self.field.unit_ideal
        for _ in range(k):
            out = out * self
        return out

    def __eq__(self, other) -> bool:
        return isinstance(other, Ideal) and self.hnf == other.hnf

    def __hash__(self) -> int:
        return hash(self.hnf)

    def __contains__(self, x) -> bool:
        x = self.field(x)
        if not x.is_integral():
            return False
        return lat.in_row_span(self.hnf, x.int_coords())

    def __repr__(self) -> str:
        return f"Ideal(norm={self.norm}, hnf={list(map(list, self.hnf))})"

    def factor(self) -> "IdealData":
        if self._factors is None:
            facs = []
            norm = self.norm
            for p, _ in _factor_int(norm):
                for q in self.field.primes_above(p):
                    v = q.ideal_valuation(self)
                    if v:
                        facs.append((q, v))
            data = IdealData.from_factors(self.field, facs)
            if data.norm != norm:
                raise FieldError("ideal factorization does not match its norm")
            self._factors = data
        return self._factors


@total_ordering
class PrimeIdeal:
    """A prime of O_F given by two generators (p, gen), with residue-field arithmetic."""

    def __init__(self, field: NumberField, p: int, gen: FieldElement, e: int, f: int):
        self.field = field
        self.p = p
        self.gen = gen
        self.e = e
        self.f = f
        self.norm = p ** f
        n = field.n
        rows = [[p * int(i == j) for j in range(n)] for i in range(n)]
        g = gen.int_coords()
        rows += [field.mul_coords(e_i, g) for e_i in lat.identity(n)]
        self.hnf = tuple(tuple(r) for r in lat.hnf(rows))
        if abs(lat.det(self.hnf)) != self.norm:
            raise FieldError(f"prime data for p={p} has wrong norm")
        self.ideal = Ideal(field, self.hnf)
        self._beta = self._anti_uniformizer()
        self._pow_cache: dict[int, tuple] = {1: self.hnf}

    def _anti_uniformizer(self) -> tuple[int, ...]:
        # beta in O_F with beta * gen in p O_F but beta not in p O_F
        F, p = self.field, self.p
        m = [F.mul_coords(e_i, self.gen.int_coords()) for e_i in lat.identity(F.n)]
        ker = lat.kernel_mod_p(m, p)
        if not ker:
            raise FieldError("prime equals p O_F; no anti-uniformizer needed")
        return tuple(ker[0])

    @property
    def key(self) -> tuple:
        return (self.norm, self.p, self.hnf)

    def __eq__(self, other) -> bool:
        return isinstance(other, PrimeIdeal) and self.p == other.p and self.hnf == other.hnf

    def __lt__(self, other) -> bool:
        return self.key < other.key

    def __hash__(self) -> int:
        return hash((self.p, self.hnf))

    def __repr__(self) -> str:
        return f"PrimeIdeal(p={self.p}, gen={self.gen!r}, e={self.e}, f={self.f})"

    def is_degree_one(self) -> bool:
        return self.e == 1 and self.f == 1

    def to_json(self) -> dict:
        return {"p": self.p, "gen": self.gen.to_json(), "e": self.e, "f": self.f}

    # valuations -------------------------------------------------------------

    def _int_valuation(self, y: Sequence[int]) -> int:
        p = self.p
        if not any(y):
            raise FieldError("valuation of zero")
        y = list(y)
        v = 0
        g = math.gcd(*y)
        while g % p == 0:
            g //= p
            y = [c // p for c in y]
            v += self.e
        F = self.field
        while True:
            z = F.mul_coords(y, self._beta)
            if any(c % p for c in z):
                return v
            y = [c // p for c in z]
            v += 1

    def valuation(self, x) -> int:
        x = self.field(x)
        if x.is_zero():
            raise FieldError("valuation of zero")
        d = x.denominator()
        y = [int(c * d) for c in x.coords]
        vd = 0
        while d % self.p == 0:
            d //= self.p
            vd += 1
        return self._int_valuation(y) - self.e * vd

    def ideal_valuation(self, I: Ideal) -> int:
        return min(self._int_valuation(r) for r in I.hnf if any(r))

    def contains(self, x) -> bool:
        x = self.field(x)
        return x.is_zero() or self.valuation(x) >= 1

    # residues ---------------------------------------------------------------

    def power_hnf(self, k: int) -> tuple:
        if k not in self._pow_cache:
            self._pow_cache[k] = (self.ideal ** k).hnf
        return self._pow_cache[k]

    def reduce(self, y: Sequence[int], k: int = 1) -> tuple[int, ...]:
        """Canonical representative of y in O_F / q^k."""
        h = self.power_hnf(k)
        y = list(y)
        for row in h:
            c = next(i for i, x in enumerate(row) if x)
            q = y[c] // row[c]
            if q:
                y = [a - q * b for a, b in zip(y, row)]
        return tuple(y)

    def residue_reps(self, k: int = 1) -> Iterator[tuple[int, ...]]:
        """All canonical representatives of O_F / q^k."""
        h = self.power_hnf(k)
        ranges = [range(row[i]) for i, row in enumerate(h)]
        for combo in itertools.product(*ranges):
            yield self.reduce(combo, k)

    def rmul(self, a: Sequence[int], b: Sequence[int], k: int = 1) -> tuple[int, ...]:
        return self.reduce(self.field.mul_coords(a, b), k)

    def rpow(self, a: Sequence[int], e: int, k: int = 1) -> tuple[int, ...]:
        result = self.reduce(self.field.one.int_coords(), k)
        base = self.reduce(a, k)
        while e:
            if e & 1:
                result = self.rmul(result, base, k)
            e >>= 1
            if e:
                base = self.rmul(base, base, k)
        return result

    def rinv(self, a: Sequence[int]) -> tuple[int, ...]:
        a = self.reduce(a)
        if not any(a):
            raise ZeroDivisionError("inverse of zero residue")
        return self.rpow(a, self.norm - 2)

    def _unit_part_int(self, y: Sequence[int]) -> tuple[int, ...]:
        # residue of y * (beta/p)^v(y) for y in O_F
        v = self._int_valuation(y)
        F, pv = self.field, self.p ** v
        z = list(y)
        for _ in range(v):
            z = F.mul_coords(z, self._beta)
        if any(c % pv for c in z):
            raise FieldError("unit part is not integral (internal)")
        return self.reduce([c // pv for c in z])

    def unit_residue(self, x) -> tuple[int, ...]:
        """Residue mod q of x * (beta/p)^v(x); a unit of the residue field."""
        x = self.field(x)
        d = x.denominator()
        y = [int(c * d) for c in x.coords]
        s = 0
        while d % self.p == 0:
            d //= self.p
            s += 1
        u = self._unit_part_int(y)
        if s:
            up = self._unit_part_int(self.field(self.p).int_coords())
            u = self.rmul(u, self.rinv(self.rpow(up, s)))
        if d != 1:
            u = self.rmul(u, self.rinv(self.field(d).int_coords()))
        return u

    def residue(self, x) -> tuple[int, ...]:
        """Reduction mod q of an element integral at q."""
        x = self.field(x)
        v = self.valuation(x) if not x.is_zero() else 1
        if v < 0:
            raise FieldError("element is not integral at the prime")
        if v > 0:
            return self.reduce([0] * self.field.n)
        return self.unit_residue(x)

    def is_square_residue(self, a: Sequence[int]) -> bool:
        a = self.reduce(a)
        if not any(a):
            return True
        if self.p == 2:
            return True
        one = self.reduce(self.field.one.int_coords())
        return self.rpow(a, (self.norm - 1) // 2) == one

    def residue_sqrt(self, a: Sequence[int]) -> tuple[int, ...] | None:
        """A square root in O_F/q, or None (Tonelli-Shanks; brute force in characteristic 2)."""
        a = self.reduce(a)
        if not any(a):
            return a
        q = self.norm
        if self.p == 2:
            return self.rpow(a, q // 2)
        if not self.is_square_residue(a):
            return None
        one = self.reduce(self.field.one.int_coords())
        s, t = 0, q - 1
        while t % 2 == 0:
            s += 1
            t //= 2
        z = next(r for r in self.residue_reps() if any(r) and not self.is_square_residue(r))
        m, c = s, self.rpow(z, t)
        tt, r = self.rpow(a, t), self.rpow(a, (t + 1) // 2)
        while tt != one:
            i, w = 0, tt
            while w != one:
                w = self.rmul(w, w)
                i += 1
            b = c
            for _ in range(m - i - 1):
                b = self.rmul(b, b)
            m, c = i, self.rmul(b, b)
            tt, r = self.rmul(tt, c), self.rmul(r, b)
        return r


@dataclass(frozen=True)
class IdealData:
    """Factored integral ideal."""

    factors: tuple[tuple[PrimeIdeal, int], ...]
    norm: int

    @classmethod
    def from_factors(cls, field: NumberField, facs: Iterable[tuple[PrimeIdeal, int]]) -> "IdealData":
        merged: dict[PrimeIdeal, int] = {}
        for q, e in facs:
            if e:
                merged[q] = merged.get(q, 0) + e
        items = tuple(sorted(merged.items(), key=lambda qe: qe[0].key))
        norm = 1
        for q, e in items:
            norm *= q.norm ** e
        return cls(items, norm)

    @classmethod
    def unit(cls) -> "IdealData":
        return cls((), 1)

    def primes(self) -> list[PrimeIdeal]:
        return [q for q, _ in self.factors]

    def is_squarefree(self) -> bool:
        return all(e == 1 for _, e in self.factors)

    def num_factors(self) -> int:
        return len(self.factors)

    def valuation(self, q: PrimeIdeal) -> int:
        return next((e for r, e in self.factors if r == q), 0)

    def coprime_to(self, other: "IdealData") -> bool:
        mine = set(self.primes())
        return not any(q in mine for q in other.primes())

    def __mul__(self, other: "IdealData") -> "IdealData":
        facs = list(self.factors) + list(other.factors)
        field = facs[0][0].field if facs else None
        return IdealData.from_factors(field, facs) if field is not None else IdealData.unit()

    def to_ideal(self, field: NumberField) -> Ideal:
        out = field.unit_ideal
        for q, e in self.factors:
            out = out * (q.ideal ** e)
        return out

    def phi(self) -> Fraction:
        """N(I) * prod (1 - 1/N(q))."""
        val = Fraction(self.norm)
        for q, _ in self.factors:
            val *= Fraction(q.norm - 1, q.norm)
        return val

    def psi(self) -> Fraction:
        """N(I) * prod (1 + 1/N(q))."""
        val = Fraction(self.norm)
        for q, _ in self.factors:
            val *= Fraction(q.norm + 1, q.norm)
        return val

    def sort_key(self) -> tuple:
        return (self.norm, tuple((q.key, e) for q, e in self.factors))

    def to_json(self) -> list:
        return [{"prime": q.to_json(), "exp": e} for q, e in self.factors]

    def __repr__(self) -> str:
        if not self.factors:
            return "(1)"
        return "*".join(f"P{q.norm}[{q.gen!r}]" + (f"^{e}" if e > 1 else "") for q, e in self.factors)


# ---------------------------------------------------------------- prime sites


@dataclass(frozen=True)
class PrimeSite:
    """A degree-one unramified prime with its residue root and principal power data.

    ``r`` is the residue of theta at the prime.  Embeddings into Z/p^N go
    through the images of the integral basis, which stays valid at index
    divisors where theta is not a simple root of f modulo p.
    """

    p: int
    r: int
    prime: PrimeIdeal = dc_field(compare=False, repr=False)
    d: int | None = None
    delta: FieldElement | None = dc_field(default=None, compare=False)
    _images: dict = dc_field(default_factory=dict, compare=False, repr=False)

    @property
    def norm(self) -> int:
        return self.p

    @property
    def field(self) -> NumberField:
        return self.prime.field

    @property
    def pi(self) -> FieldElement:
        return self.field(self.p)

    def with_generator(self, d: int, delta: FieldElement) -> "PrimeSite":
        return PrimeSite(self.p, self.r, self.prime, d, delta, self._images)

    def omega_images(self, N: int) -> tuple[int, ...]:
        """Images of the integral basis under O_F -> O_F/prime^N = Z/p^N."""
        for M in sorted(self._images):
            if M >= N:
                mod = self.p ** N
                return tuple(x % mod for x in self._images[M])
        imgs = _omega_images(self.prime, N)
        self._images[N] = imgs
        return imgs

    def embed(self, x: FieldElement, N: int) -> int:
        """Image of x (integral at the prime) in Z/p^N."""
        mod = self.p ** N
        imgs = self.omega_images(N)
        acc = 0
        for c, img in zip(self.field(x).coords, imgs):
            if c:
                den = c.denominator
                if den % self.p == 0:
                    raise FieldError("element is not integral at the prime")
                acc += c.numerator * pow(den, -1, mod) * img
        return acc % mod

    def to_json(self) -> dict:
        out = {"p": self.p, "r": self.r}
        if self.d is not None:
            out["d"] = self.d
            out["delta"] = self.delta.to_json()
        return out


def _omega_images(q: PrimeIdeal, N: int) -> tuple[int, ...]:
    # pick alpha in O_F with alpha - a in q for an integer a, and alpha a simple
    # root mod p of its characteristic polynomial; then lift and express omega_k in Z[alpha]
    from .padic import hensel_root

    F, p = q.field, q.p
    candidates = [F.theta] if F.theta.is_integral() else []
    basis = F.basis_elements()
    candidates += basis[1:]
    candidates += [b + c * basis[k] for c in range(1, 4) for b in basis[1:] for k in range(1, F.n)]
    for alpha in candidates:
        a_int = alpha.int_coords()
        mat = [F.mul_coords(e, a_int) for e in lat.identity(F.n)]
        charpoly = [int(c) for c in flint.fmpz_mat(mat).charpoly().coeffs()]
        g = flint.fmpz_poly(charpoly)
        if g.degree() != F.n or flint.fmpz_poly.gcd(g, g.derivative()).degree() > 0:
            continue
        # power basis of alpha in omega coordinates
        powers = [F.one]
        for _ in range(F.n - 1):
            powers.append(powers[-1] * alpha)
        pw = [list(x.coords) for x in powers]
        if lat.det(pw) == 0:
            continue
        inv = lat.inverse(pw)
        if any(c.denominator % p == 0 for row in inv for c in row):
            continue
        res = q.reduce(a_int)
        r = next((t for t in range(p) if q.reduce(F(t).int_coords()) == res), None)
        if r is None:
            continue
        if int(g(r)) % p or int(g.derivative()(r)) % p == 0:
            continue
        s = hensel_root(charpoly, r, p, N)
        mod = p ** N
        spow = [pow(s, l, mod) for l in range(F.n)]
        imgs = []
        for k in range(F.n):
            acc = 0
            for l in range(F.n):
                c = inv[k][l]
                if c:
                    acc += c.numerator * pow(c.denominator, -1, mod) * spow[l]
            imgs.append(acc % mod)
        return tuple(imgs)
    raise FieldError(f"no p-adic embedding found for the prime above {p}")


def split_prime(F: NumberField, p: int) -> list[PrimeSite]:
    """Degree-one unramified primes above p."""
    sites = []
    for q in F.primes_above(p):
        if not q.is_degree_one():
            continue
        r = _residue_root(F, q)
        sites.append(PrimeSite(p, r, q))
    sites.sort(key=lambda s: s.r)
    return sites


def _residue_root(F: NumberField, q: PrimeIdeal) -> int:
    res = q.reduce(F.theta.int_coords())
    for r in range(q.p):
        if q.reduce(F(r).int_coords()) == res:
            return r
    raise FieldError("no residue root found for degree-one prime")


def site_from_root(F: NumberField, p: int, r: int) -> PrimeSite:
    for s in split_prime(F, p):
        if s.r == r % p:
            return s
    raise FieldError(f"no degree-one unramified prime above {p} with theta = {r} mod p")


def site_from_prime(q: PrimeIdeal) -> PrimeSite:
    if not q.is_degree_one():
        raise FieldError("prime is not unramified of degree one")
    return PrimeSite(q.p, _residue_root(q.field, q), q)


def find_generator(I: Ideal, max_bound_doublings: int = 40) -> FieldElement | None:
    """A generator of I if one is found by short-vector search, else None.

    For quadratic fields the search bound covers a fundamental domain for the
    unit action, so None certifies that I is not principal.
    """
    F = I.field
    norm = I.norm
    basis = [list(r) for r in I.hnf]
    gram = lat.mat_mul(lat.mat_mul(basis, F.trace_matrix), lat.transpose(basis))
    red, t = lat.lll_gram(gram)
    final = None
    if F.n == 1:
        return F(basis[0][0])
    if F.n == 2:
        eps = fundamental_unit_float(F)
        final = math.ceil(2 * norm * (eps + 1 / eps)) + 1
    bound = max(1, F.n * math.ceil(norm ** (2 / F.n)))
    for step in range(max_bound_doublings):
        cap = bound if final is None else min(bound, final)
        if final is not None and step >= _QUADRATIC_SWITCH:
            # a large fundamental unit: solve the norm equation row by row instead
            return _solve_norm_form(F, basis, red, t, norm, final)
        for y in lat.short_vectors(red, cap):
            coords = lat.vec_mat(lat.vec_mat(y, t), basis)
            x = F(coords)
            if abs(x.norm()) == norm:
                return x
        if final is not None and cap >= final:
            return None
        bound *= 2
    return None


_QUADRATIC_SWITCH = 10


def _solve_norm_form(F, basis, red, t, norm: int, cap: int) -> FieldElement | None:
    """Generator of T2 at most ``cap`` in a rank-2 ideal lattice, or None.

    N(y1 b1 + y2 b2) = A y1^2 + B y1 y2 + C y2^2 in the reduced basis b1, b2;
    for each admissible y2 the equation = +-norm is a quadratic in y1.  Cost is
    linear in sqrt(cap) rather than in cap.  Returns the solution of least T2.
    """
    elems = [F(lat.vec_mat(lat.vec_mat(row, t), basis)) for row in ([1, 0], [0, 1])]
    A, C = int(elems[0].norm()), int(elems[1].norm())
    B = int((elems[0] + elems[1]).norm()) - A - C
    Ginv = lat.inverse(red)
    ymax = math.isqrt(int(cap * Ginv[1][1]) + 1) + 1
    best = None
    for y2 in range(0, ymax + 1):
        for s in (norm, -norm):
            # A y1^2 + (B y2) y1 + (C y2^2 - s) = 0
            b, c = B * y2, C * y2 * y2 - s
            if A == 0:
                roots = [Fraction(-c, b)] if b else []
            else:
                disc = b * b - 4 * A * c
                if disc < 0 or math.isqrt(disc) ** 2 != disc:
                    continue
                r = math.isqrt(disc)
                roots = [Fraction(-b + r, 2 * A), Fraction(-b - r, 2 * A)]
            for y1 in roots:
                if y1.denominator != 1 or (y1 == 0 and y2 == 0):
                    continue
                y = [int(y1), y2]
                val = lat.quad_form(red, y)
                if val <= cap and (best is None or (val, y) < best[:2]):
                    best = (val, y)
    if best is None:
        return None
    return F(lat.vec_mat(lat.vec_mat(best[1], t), basis))


def principalize(site: PrimeSite, max_d: int = 12) -> PrimeSite:
    """Fill in the least d with the d-th power of the prime principal, and a generator."""
    q = site.prime
    for d in range(1, max_d + 1):
        I = q.ideal ** d
        delta = find_generator(I)
        if delta is not None:
            if q.valuation(delta) != d or abs(delta.norm()) != site.p ** d:
                raise FieldError("generator check failed")
            return site.with_generator(d, delta)
    raise FieldError(f"class order exceeds bound {max_d}")


def fundamental_unit_float(F: NumberField) -> float:
    """Fundamental unit (> 1) of a real quadratic field, via continued fractions."""
    if F.n != 2:
        raise FieldError("only for quadratic fields")
    eps = fundamental_unit(F)
    return max(abs(v) for v in F.embeddings(eps))


def fundamental_unit(F: NumberField) -> FieldElement:
    """Fundamental unit (> 1 at the first embedding) of a real quadratic field.

    Runs the continued fraction of the generator (P + sqrt(D))/Q of O_F and
    returns the first convergent combination k*x - h of norm +-1.
    """
    if F.n != 2:
        raise FieldError("only for quadratic fields")
    d = F.disc
    if d % 4 == 1:
        P, Q, rad = 1, 2, d
    else:
        P, Q, rad = 0, 1, d // 4
    s = math.isqrt(rad)
    x = (F.from_power_basis(_sqrt_power(F, rad)) + P) / Q
    h0, h1, k0, k1 = 1, 0, 0, 1
    for _ in range(100000):
        a = (P + s) // Q
        h0, h1 = a * h0 + h1, h0
        k0, k1 = a * k0 + k1, k0
        u = x * k0 - h0
        if abs(u.norm()) == 1:
            if abs(F.embeddings(u)[0]) < 1:
                u = u.inverse()
            if F.embeddings(u)[0] < 0:
                u = -u
            return u
        P = a * Q - P
        Q = (rad - P * P) // Q
    raise FieldError("fundamental unit search did not terminate")


def _sqrt_power(F: NumberField, rad: int) -> list[Fraction]:
    # sqrt(rad) in the power basis: sqrt(c1^2 - 4 c0) = 2 theta + c1
    c0, c1 = Fraction(F.poly[0]), Fraction(F.poly[1])
    m2 = (c1 * c1 - 4 * c0) / rad
    m = Fraction(math.isqrt(m2.numerator), math.isqrt(m2.denominator))
    if m * m != m2:
        raise FieldError("discriminant mismatch in square root")
    return [c1 / m, Fraction(2) / m]


# ---------------------------------------------------------------- enumeration


def _primes_up_to(n: int) -> list[int]:
    if n < 2:
        return []
    sieve = bytearray([1]) * (n + 1)
    sieve[0] = sieve[1] = 0
    for i in range(2, math.isqrt(n) + 1):
        if sieve[i]:
            sieve[i * i :: i] = bytearray(len(range(i * i, n + 1, i)))
    return [i for i in range(n + 1) if sieve[i]]


def _factor_int(n: int) -> list[tuple[int, int]]:
    if n == 1:
        return []
    return [(int(p), int(e)) for p, e in flint.fmpz(n).factor()]


def enumerate_ideals(F: NumberField, X: int) -> list[IdealData]:
    """All integral ideals of norm <= X, sorted by (norm, factor data)."""
    primes = F.prime_ideals_up_to(X)
    out: list[IdealData] = []

    def rec(idx: int, facs: list, norm: int) -> None:
        out.append(IdealData.from_factors(F, facs))
        for j in range(idx, len(primes)):
            q = primes[j]
            if norm * q.norm > X:
                break
            e, nn = 1, norm * q.norm
            while nn <= X:
                rec(j + 1, facs + [(q, e)], nn)
                e += 1
                nn *= q.norm

    rec(0, [], 1)
    out.sort(key=IdealData.sort_key)
    return out


def zeta2_lower(F: NumberField, prime_bound: int) -> float:
    """Partial Euler product for zeta_F(2) over primes of norm <= bound, rounded down."""
    if prime_bound in F._zeta_cache:
        return F._zeta_cache[prime_bound]
    terms = []
    for p in _primes_up_to(prime_bound):
        for N in F.norms_above(p):
            if N <= prime_bound:
                terms.append(-math.log1p(-1.0 / (N * N)))
    # the float sum carries a relative error far below 1e-12
    val = max(1.0, math.exp(math.fsum(terms)) * (1 - 1e-12))
    F._zeta_cache[prime_bound] = val
    return val


def zeta2_upper(F: NumberField, prime_bound: int) -> float:
    """Upper bound matching :func:`zeta2_lower` (tail bounded by exp(2n/bound))."""
    lo = zeta2_lower(F, prime_bound)
    return lo * math.exp(2 * F.n / max(prime_bound, 1)) * (1 + 3e-12)


# ---------------------------------------------------------------- automorphisms


class Automorphism:
    """Field automorphism determined by the image of theta."""

    def __init__(self, field: NumberField, image: FieldElement):
        self.field = field
        self.image = image
        if not _poly_eval([field(c) for c in field.poly], image).is_zero():
            raise FieldError("automorphism image is not a root of the defining polynomial")
        # matrix on omega coordinates: row k = image of omega_k
        rows = []
        for k in range(field.n):
            val = field.zero
            power = field.one
            for c in field.omega[k]:
                if c:
                    val = val + power * c
                power = power * image
            rows.append(val.coords)
        self.matrix = tuple(tuple(r) for r in rows)

    def __call__(self, x):
        if isinstance(x, FieldElement):
            n = self.field.n
            coords = tuple(sum(x.coords[k] * self.matrix[k][j] for k in range(n)) for j in range(n))
            return FieldElement(self.field, coords)
        if isinstance(x, PrimeIdeal):
            return self.apply_prime(x)
        if isinstance(x, IdealData):
            return IdealData.from_factors(self.field, [(self.apply_prime(q), e) for q, e in x.factors])
        if isinstance(x, Ideal):
            return self.field.ideal([self(self.field(r)) for r in x.hnf])
        raise TypeError(f"cannot apply automorphism to {type(x).__name__}")

    def apply_prime(self, q: PrimeIdeal) -> PrimeIdeal:
        img = self.field.ideal([self.field(q.p), self(q.gen)])
        for r in self.field.primes_above(q.p):
            if r.ideal == img:
                return r
        raise FieldError("image of prime not found among primes above p")

    def is_identity(self) -> bool:
        return self.image == self.field.theta


def apply_automorphism(sigma: Automorphism, x):
    return sigma(x)


# ---------------------------------------------------------------- tables

FIELD_TABLE_ENV = "BTQ_FIELD_TABLES"


def _table_paths() -> list[Path]:
    paths = []
    env = os.environ.get(FIELD_TABLE_ENV)
    if env:
        for part in env.split(os.pathsep):
            d = Path(part)
            if d.is_dir():
                paths.extend(sorted(d.glob("*.json")))
            elif d.is_file():
                paths.append(d)
    data_dir = Path(__file__).parent / "data"
    paths.extend(sorted(data_dir.glob("fields*.json")))
    return paths


def load_table(path: str | Path) -> list[dict]:
    with open(path) as fh:
        data = json.load(fh)
    if not isinstance(data, list):
        raise FieldError(f"field table {path} must hold a JSON array")
    return data


_TABLE_CACHE: dict[str, dict] | None = None
_FIELD_CACHE: dict[str, NumberField] = {}


def table_entries() -> dict[str, dict]:
    global _TABLE_CACHE
    if _TABLE_CACHE is None:
        entries: dict[str, dict] = {}
        for path in _table_paths():
            for entry in load_table(path):
                entries.setdefault(entry["label"], entry)
        _TABLE_CACHE = entries
    return _TABLE_CACHE


def reset_table_cache() -> None:
    global _TABLE_CACHE
    _TABLE_CACHE = None
    _FIELD_CACHE.clear()


def field_by_label(label: str) -> NumberField:
    if label not in _FIELD_CACHE:
        entries = table_entries()
        if label not in entries:
            raise FieldError(f"field {label!r} not found in field tables")
        _FIELD_CACHE[label] = NumberField.from_table_entry(entries[label])
    return _FIELD_CACHE[label]


def rationals() -> NumberField:
    return field_by_label("1.1.1.1")
