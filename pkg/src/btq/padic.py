"""Finite-precision p-adic arithmetic and the local splitting of a quaternion order.

Everything here lives over Z/p^N for a degree-one prime, so Z_p is the
completed ring of integers.  Linear algebra over Z/p^N goes through Howell
forms; there is no division by non-units anywhere.
"""

from __future__ import annotations

import itertools

from dataclasses import dataclass, field as dc_field
from fractions import Fraction
from typing import Sequence

Mat = tuple[int, int, int, int]  # (a, b, c, d) for [[a, b], [c, d]]


class PadicError(ArithmeticError):
    pass


class PrecisionError(PadicError):
    pass


def vp(x: int, p: int, cap: int | None = None) -> int:
    """p-adic valuation of an integer (``cap`` for zero, or an error)."""
    if x == 0:
        if cap is None:
            raise PadicError("valuation of zero")
        return cap
    v = 0
    while x % p == 0:
        x //= p
        v += 1
        if cap is not None and v >= cap:
            return cap
    return v


def vp_frac(x: Fraction, p: int, cap: int | None = None) -> int:
    x = Fraction(x)
    if x == 0:
        return vp(0, p, cap)
    return vp(x.numerator, p) - vp(x.denominator, p)


def reduce_frac(x: Fraction, p: int, N: int) -> int:
    """Image in Z/p^N of a p-integral rational."""
    x = Fraction(x)
    mod = p ** N
    if x.denominator % p == 0:
        raise PrecisionError("value is not p-integral")
    return x.numerator * pow(x.denominator, -1, mod) % mod


@dataclass(frozen=True)
class PadicApprox:
    """Element of Z_p known modulo p^N.  Mixed-precision arithmetic keeps the minimum."""

    value: int
    p: int
    N: int

    def __post_init__(self):
        object.__setattr__(self, "value", self.value % self.p ** self.N)

    def _other(self, y) -> "PadicApprox":
        if isinstance(y, PadicApprox):
            if y.p != self.p:
                raise PadicError("mixing different primes")
            return y
        return PadicApprox(int(y), self.p, self.N)

    def __add__(self, y):
        y = self._other(y)
        return PadicApprox(self.value + y.value, self.p, min(self.N, y.N))

    def __sub__(self, y):
        y = self._other(y)
        return PadicApprox(self.value - y.value, self.p, min(self.N, y.N))

    def __mul__(self, y):
        y = self._other(y)
        return PadicApprox(self.value * y.value, self.p, min(self.N, y.N))

    __radd__ = __add__
    __rmul__ = __mul__

    def __eq__(self, y) -> bool:
        if not isinstance(y, PadicApprox):
            y = self._other(y)
        N = min(self.N, y.N)
        return self.p == y.p and (self.value - y.value) % self.p ** N == 0

    def __hash__(self):
        return hash((self.value, self.p, self.N))

    def valuation(self) -> int:
        return vp(self.value, self.p, self.N)

    def reduce(self, N: int) -> "PadicApprox":
        if N > self.N:
            raise PrecisionError("cannot increase precision")
        return PadicApprox(self.value, self.p, N)


# ---------------------------------------------------------------- roots


def hensel_root(f: Sequence[int], r: int, p: int, N: int) -> int:
    """The unique root of f in Z/p^N congruent to r mod p (Newton iteration)."""
    f = [int(c) for c in f]
    df = [i * c for i, c in enumerate(f)][1:]

    def ev(poly, x, mod):
        acc = 0
        for c in reversed(poly):
            acc = (acc * x + c) % mod
        return acc

    if ev(f, r, p) != 0:
        raise PadicError(f"{r} is not a root of the polynomial mod {p}")
    if ev(df, r, p) == 0:
        raise PadicError(f"{r} is a multiple root mod {p}; Hensel lifting does not apply")
    s = r % p
    k = 1
    while k < N:
        k = min(2 * k, N)
        mod = p ** k
        s = (s - ev(f, s, mod) * pow(ev(df, s, mod), -1, mod)) % mod
    return s % p ** N


def is_padic_square(x: Fraction, p: int) -> bool:
    """Whether a nonzero p-adic rational is a square in Q_p (x need only be exact mod a few p powers)."""
    x = Fraction(x)
    if x == 0:
        return True
    v = vp_frac(x, p)
    if v % 2:
        return False
    u = x / Fraction(p) ** v
    if p == 2:
        return reduce_frac(u, 2, 3) == 1
    return pow(reduce_frac(u, p, 1), (p - 1) // 2, p) == 1


def padic_sqrt(x: Fraction, p: int, N: int) -> Fraction:
    """A square root of x in Q_p, correct modulo p^N (as a rational with p-power denominator).

    ``x`` must be known modulo p^(N + v(x) + 3).
    """
    x = Fraction(x)
    if x == 0:
        return Fraction(0)
    v = vp_frac(x, p)
    if v % 2:
        raise PadicError("odd valuation: not a square")
    k = v // 2
    u = x / Fraction(p) ** v
    W = N - k + 3
    if W <= 0:
        return Fraction(0)
    if p == 2:
        um = reduce_frac(u, 2, W + 1)
        if um % 8 != 1:
            raise PadicError("unit is not a 2-adic square")
        # invariant s^2 = u mod 2^t; flipping bit t-1 fixes bit t (t >= 3)
        s = 1
        for t in range(3, W + 1):
            if (s * s - um) % 2 ** (t + 1):
                s += 2 ** (t - 1)
        s %= 2 ** W
    else:
        um = reduce_frac(u, p, W)
        r = _sqrt_mod_p(um % p, p)
        if r is None:
            raise PadicError("unit is not a square mod p")
        s = hensel_root([-um, 0, 1], r, p, W)
    return Fraction(s) * Fraction(p) ** k


def _sqrt_mod_p(a: int, p: int) -> int | None:
    a %= p
    if a == 0:
        return 0
    if p == 2:
        return 1
    if pow(a, (p - 1) // 2, p) != 1:
        return None
    if p % 4 == 3:
        return pow(a, (p + 1) // 4, p)
    q, s = p - 1, 0
    while q % 2 == 0:
        q //= 2
        s += 1
    z = 2
    while pow(z, (p - 1) // 2, p) != p - 1:
        z += 1
    m, c, t, r = s, pow(z, q, p), pow(a, q, p), pow(a, (q + 1) // 2, p)
    while t != 1:
        i, w = 0, t
        while w != 1:
            w = w * w % p
            i += 1
        b = pow(c, 1 << (m - i - 1), p)
        m, c, t, r = i, b * b % p, t * b * b % p, r * b % p
    return r


# ---------------------------------------------------------------- Howell forms


def howell_form(rows: Sequence[Sequence[int]], p: int, N: int, pivot_cols: int | None = None) -> tuple[list[list[int]], list[list[int]]]:
    """Howell-style echelon form over Z/p^N.

    Returns ``(pivots, rest)``: echelon rows with pivot p^v on the first
    ``pivot_cols`` columns, and the remaining generators, which vanish on
    those columns.  Together they generate the same module as ``rows``, and
    ``rest`` generates every element of the row module that vanishes on the
    pivot columns (the Howell property).
    """
    mod = p ** N
    work = [[x % mod for x in r] for r in rows]
    work = [r for r in work if any(r)]
    ncols = len(work[0]) if work else 0
    if pivot_cols is None:
        pivot_cols = ncols
    pivots = []
    for j in range(pivot_cols):
        best, best_v = None, N
        for idx, r in enumerate(work):
            if r[j]:
                v = vp(r[j], p, N)
                if v < best_v:
                    best, best_v = idx, v
                    if v == 0:
                        break
        if best is None:
            continue
        piv = work.pop(best)
        pv = p ** best_v
        uinv = pow(piv[j] // pv, -1, mod)
        piv = [x * uinv % mod for x in piv]
        nxt = []
        for r in work:
            if r[j]:
                q = r[j] // pv
                r = [(x - q * y) % mod for x, y in zip(r, piv)]
            if any(r):
                nxt.append(r)
        if best_v:
            extra = [x * p ** (N - best_v) % mod for x in piv]
            if any(extra):
                nxt.append(extra)
        work = nxt
        pivots.append(piv)
    # reduce entries above pivots for a canonical shape
    for i, piv in enumerate(pivots):
        j = next(k for k, x in enumerate(piv) if x)
        for h in range(i):
            if pivots[h][j] >= piv[j]:
                q = pivots[h][j] // piv[j]
                pivots[h] = [(x - q * y) % mod for x, y in zip(pivots[h], piv)]
    return pivots, work


def left_kernel_mod(a: Sequence[Sequence[int]], p: int, N: int) -> list[list[int]]:
    """Generators of {x : x a == 0 mod p^N}, complete in the Howell sense."""
    m = len(a)
    if m == 0:
        return []
    c = len(a[0])
    aug = [list(a[i]) + [int(i == k) for k in range(m)] for i in range(m)]
    _, rest = howell_form(aug, p, N, pivot_cols=c)
    return [r[c:] for r in rest]


def howell_solve(L: Sequence[Sequence[int]], Z: Sequence[Sequence[int]], p: int, N: int) -> tuple[list[list[int]], list[list[int]]]:
    """Kernel generators K of L and particular solutions S with S_i L == Z_i (mod p^N)."""
    mod = p ** N
    K = left_kernel_mod(L, p, N)
    S = []
    m = len(L)
    for z in Z:
        ker = left_kernel_mod(list(L) + [[-x for x in z]], p, N)
        sol = None
        for k in ker:
            if k[m] % p:
                inv = pow(k[m], -1, mod)
                sol = [x * inv % mod for x in k[:m]]
                break
        if sol is None:
            raise PadicError("target outside image")
        S.append(sol)
    return K, S


# ---------------------------------------------------------------- 2x2 matrices


def mat_mul(x: Mat, y: Mat, mod: int | None = None) -> Mat:
    a, b, c, d = x
    e, f, g, h = y
    out = (a * e + b * g, a * f + b * h, c * e + d * g, c * f + d * h)
    if mod is not None:
        out = tuple(t % mod for t in out)
    return out


def mat_det(x: Mat) -> int:
    return x[0] * x[3] - x[1] * x[2]


def mat_adj(x: Mat) -> Mat:
    a, b, c, d = x
    return (d, -b, -c, a)


def mat_mod(x: Mat, mod: int) -> Mat:
    return tuple(t % mod for t in x)


# ---------------------------------------------------------------- splitting


@dataclass(frozen=True)
class SplittingMap:
    """Images of an order's Z-basis under the local splitting, modulo p^N_cap."""

    images: tuple[Mat, ...]
    N_cap: int
    p: int
    site: object = dc_field(compare=False, repr=False)

    def image(self, coords: Sequence[int], N: int) -> Mat:
        """ι of the order element with the given integer coordinates, mod p^N."""
        if N > self.N_cap:
            raise PrecisionError(f"precision {N} exceeds splitting cap {self.N_cap}")
        mod = self.p ** N
        a = b = c = d = 0
        for x, m in zip(coords, self.images):
            if x:
                a += x * m[0]
                b += x * m[1]
                c += x * m[2]
                d += x * m[3]
        return (a % mod, b % mod, c % mod, d % mod)

    def matrix_rows(self, N: int) -> list[list[int]]:
        """The 4n x 4 matrix of flattened images mod p^N."""
        mod = self.p ** N
        return [[t % mod for t in m] for m in self.images]

    def to_json(self) -> dict:
        return {"p": self.p, "N_cap": self.N_cap, "images": [list(m) for m in self.images]}


def _embed_frac(site, x, W: int) -> Fraction:
    """p-adic approximation of a field element as a rational with p-power denominator.

    Correct modulo p^W (absolute).
    """
    F, p = site.field, site.p
    x = F(x)
    if x.is_zero():
        return Fraction(0)
    den = x.denominator()
    k = 0
    while den % p == 0:
        den //= p
        k += 1
    y = x * (p ** k)
    return Fraction(site.embed(y, W + k), p ** k)


def _frac_mat_mul(x, y):
    a, b, c, d = x
    e, f, g, h = y
    return (a * e + b * g, a * f + b * h, c * e + d * g, c * f + d * h)


def _choose_split_pair(B, site, W: int):
    """Pure quaternions x, y with xy = -yx and x^2 a nonzero square in Q_p."""
    from .quatalg import Quaternion

    F = B.field
    one, zero = F.one, F.zero
    i = Quaternion(B, (zero, one, zero, zero))
    j = Quaternion(B, (zero, zero, one, zero))
    k = Quaternion(B, (zero, zero, zero, one))
    candidates = [i, j, k]
    for c1 in range(1, 6):
        for c2 in range(1, 6):
            candidates += [i * c1 + j * c2, i * c1 + k * c2, j * c1 + k * c2]
    for x in itertools.chain(candidates, _wider_candidates(F, i, j, k)):
        alpha = x * x
        alpha = alpha.coords[0]
        if alpha.is_zero():
            continue
        if not is_padic_square(_embed_frac(site, alpha, 8 + 2 * abs(site.prime.valuation(alpha))), site.p):
            continue
        nx = x.nrd()
        for e in (i, j, k):
            y = e - x * (e.conj_mul_trd(x) / (2 * nx))
            if not y.is_zero():
                return x, y
    raise PadicError("presentation not split-adapted: no pure quaternion with square norm found at the prime")


def _wider_candidates(F, i, j, k):
    """w1 i + w2 j + w3 k with small w over the integral basis, by increasing height.

    The small rational combinations above can all have non-square norm at the
    prime (x^2 = -(c1^2 + c2^2) for the Hamilton-type algebra when -1 and
    every small sum of two squares have the same residue character).
    """
    basis = F.basis_elements()
    for h in range(1, 4):
        ws = [sum((w * c for w, c in zip(basis, cs)), F.zero) for cs in itertools.product(range(-h, h + 1), repeat=F.n)]
        for w1, w2, w3 in itertools.product(ws, repeat=3):
            x = i * w1 + j * w2 + k * w3
            if not x.is_zero():
                yield x


def build_splitting(order, site, N_cap: int = 64) -> SplittingMap:
    """Splitting ι with ι(order ⊗ Z_p) = M_2(Z_p), images mod p^N_cap.

    Two stages: a naive splitting ι0 from a pure quaternion x whose square is
    a p-adic square, then conjugation by the column Hermite basis of
    ι0(order) e_1.  The working precision is raised until all checks pass.
    """
    if N_cap < 1:
        raise PadicError("precision cap must be positive")
    p = site.p
    slack = 12
    for _ in range(8):
        try:
            images = _build_images(order, site, N_cap, N_cap + slack)
        except PrecisionError as exc:
            slack = max(2 * slack, getattr(exc, "needed", 0))
            continue
        sm = SplittingMap(tuple(images), N_cap, p, site)
        verify_splitting(order, sm)
        return sm
    raise PadicError("could not build a splitting at the requested precision")


def _build_images(order, site, N: int, W: int) -> list[Mat]:
    p = site.p
    x, y = _choose_split_pair(order.algebra, site, W)
    alpha = (x * x).coords[0]
    beta = (y * y).coords[0]
    xy = x * y
    s = padic_sqrt(_embed_frac(site, alpha, W + 2 * abs(site.prime.valuation(alpha)) + 4), p, W)
    bet = _embed_frac(site, beta, W)
    X = (s, Fraction(0), Fraction(0), -s)
    Y = (Fraction(0), bet, Fraction(1), Fraction(0))
    XY = _frac_mat_mul(X, Y)
    I = (Fraction(1), Fraction(0), Fraction(0), Fraction(1))
    frame = [(order.algebra.one(), I), (x, X), (y, Y), (xy, XY)]
    norms = [w.nrd() for w, _ in frame]
    raw = []
    for e in order.zbasis:
        acc = (Fraction(0),) * 4
        for (w, M), nw in zip(frame, norms):
            coef = e.conj_mul_trd(w) / (2 * nw)
            if coef.is_zero():
                continue
            c = _embed_frac(site, coef, W)
            acc = tuple(a + c * m for a, m in zip(acc, M))
        raw.append(acc)
    # column Hermite basis of the Z_p-span of the first columns
    K = max(vp_frac(t, p) * -1 for m in raw for t in (m[0], m[2]) if t != 0)
    K = max(K, 0)
    scale = Fraction(p) ** K
    mod = p ** W
    cols = [(reduce_frac(m[0] * scale, p, W), reduce_frac(m[2] * scale, p, W)) for m in raw]
    alpha_v, piv = min(((vp(c[0], p, W), idx) for idx, c in enumerate(cols)), default=(W, None))
    if piv is None or alpha_v >= W - 2:
        raise PrecisionError("first column lattice degenerate at this precision")
    u0 = cols[piv][0] // p ** alpha_v
    uinv = pow(u0, -1, mod)
    top, bot = p ** alpha_v, cols[piv][1] * uinv % mod
    rest = []
    for idx, (c0, c1) in enumerate(cols):
        q = c0 // p ** alpha_v
        rest.append((c1 - q * bot) % mod)
    beta_v = min(vp(r, p, W) for r in rest)
    if beta_v >= W - alpha_v - 2:
        raise PrecisionError("second column lattice degenerate at this precision")
    bot %= p ** beta_v
    needed = 2 * (K + alpha_v + beta_v) + 8
    if W - N < needed:
        err = PrecisionError("working precision too small for the denominators seen")
        err.needed = needed
        raise err
    M = (Fraction(top), Fraction(0), Fraction(bot), Fraction(p ** beta_v))
    detM = M[0] * M[3]
    Minv = (M[3] / detM, Fraction(0), -M[2] / detM, M[0] / detM)
    images = []
    for m in raw:
        c = _frac_mat_mul(_frac_mat_mul(Minv, m), M)
        if any(vp_frac(t, p, W) < 0 and t != 0 for t in c):
            raise PrecisionError("non-integral splitting image")
        images.append(tuple(reduce_frac(t, p, N) for t in c))
    return images


def verify_splitting(order, sm: SplittingMap) -> None:
    """Unity, multiplicativity, determinant and mod-p surjectivity checks."""
    from .lattice import rank_mod_p

    p, N = sm.p, sm.N_cap
    mod = p ** N
    one = order.coords_of(order.algebra.one())
    if sm.image(one, N) != (1, 0, 0, 1):
        raise PadicError("splitting does not send 1 to the identity")
    table = order.mult_table
    n4 = len(order.zbasis)
    for a in range(n4):
        for b in range(n4):
            lhs = mat_mul(sm.images[a], sm.images[b], mod)
            rhs = sm.image(table[a][b], N)
            if lhs != rhs:
                raise PadicError("splitting is not multiplicative")
    site = sm.site
    for a in range(n4):
        nrd = order.zbasis[a].nrd()
        if (mat_det(sm.images[a]) - site.embed(nrd, N)) % mod:
            raise PadicError("determinant does not match reduced norm")
    if rank_mod_p([list(m) for m in sm.images], p) != 4:
        raise PadicError("splitting image is not all of M_2 modulo p")


def embed_matrix(sm: SplittingMap, coords: Sequence[int], N: int) -> Mat:
    return sm.image(coords, N)
