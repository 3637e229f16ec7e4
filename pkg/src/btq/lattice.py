"""Exact integer lattice toolkit.

Row-style Hermite normal forms (plain and modulo an exponent), integral LLL
on Gram matrices, and Fincke-Pohst enumeration with exact integer checks.
LLL is an integral (fraction-free) implementation; backend="flint" hands
the Gram matrix to python-flint instead and is used as a cross-check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator, Sequence

try:  # pragma: no cover - exercised implicitly
    import flint as _flint
except ImportError:  # pragma: no cover
    _flint = None

Matrix = list[list[int]]

LLL_DELTA = Fraction(99, 100)


class LatticeError(ValueError):
    pass


@dataclass(frozen=True)
class IntLattice:
    """Z-span of ``basis`` rows inside Z^rank."""

    basis: tuple[tuple[int, ...], ...]
    rank: int

    @classmethod
    def from_rows(cls, rows: Iterable[Sequence[int]], rank: int | None = None) -> "IntLattice":
        h = hnf(rows)
        if rank is None:
            rank = len(h[0]) if h else 0
        return cls(tuple(tuple(r) for r in h), rank)

    def __contains__(self, v: Sequence[int]) -> bool:
        return in_row_span(self.basis, v)

    def index(self) -> int:
        if len(self.basis) != self.rank:
            raise LatticeError("lattice is not of full rank")
        return abs(det(self.basis))


# ---------------------------------------------------------------- basics


def mat_mul(a: Sequence[Sequence[int]], b: Sequence[Sequence[int]]) -> Matrix:
    bt = list(zip(*b))
    return [[sum(x * y for x, y in zip(row, col)) for col in bt] for row in a]


def vec_mat(v: Sequence[int], m: Sequence[Sequence[int]]) -> list[int]:
    out = [0] * len(m[0])
    for c, row in zip(v, m):
        if c:
            for j, x in enumerate(row):
                out[j] += c * x
    return out


def transpose(m: Sequence[Sequence[int]]) -> Matrix:
    return [list(r) for r in zip(*m)]


def identity(n: int) -> Matrix:
    return [[int(i == j) for j in range(n)] for i in range(n)]


def quad_form(g: Sequence[Sequence[int]], x: Sequence[int]) -> int:
    total = 0
    for i, xi in enumerate(x):
        if xi:
            row = g[i]
            total += xi * sum(row[j] * xj for j, xj in enumerate(x) if xj)
    return total


def det(m: Sequence[Sequence]) -> int | Fraction:
    """Determinant by fraction-free Bareiss elimination."""
    n = len(m)
    if n == 0:
        return 1
    if any(isinstance(x, Fraction) for row in m for x in row):
        return _det_frac(m)
    a = [list(r) for r in m]
    sign = 1
    prev = 1
    for k in range(n - 1):
        if a[k][k] == 0:
            for i in range(k + 1, n):
                if a[i][k] != 0:
                    a[k], a[i] = a[i], a[k]
                    sign = -sign
                    break
            else:
                return 0
        akk = a[k][k]
        for i in range(k + 1, n):
            aik = a[i][k]
            row_i, row_k = a[i], a[k]
            for j in range(k + 1, n):
                row_i[j] = (row_i[j] * akk - aik * row_k[j]) // prev
        prev = akk
    return sign * a[n - 1][n - 1]


def _det_frac(m: Sequence[Sequence]) -> Fraction:
    a = [[Fraction(x) for x in r] for r in m]
    n = len(a)
    d = Fraction(1)
    for k in range(n):
        piv = next((i for i in range(k, n) if a[i][k] != 0), None)
        if piv is None:
            return Fraction(0)
        if piv != k:
            a[k], a[piv] = a[piv], a[k]
            d = -d
        d *= a[k][k]
        inv = 1 / a[k][k]
        for i in range(k + 1, n):
            f = a[i][k] * inv
            if f:
                for j in range(k, n):
                    a[i][j] -= f * a[k][j]
    return d


def inverse(m: Sequence[Sequence]) -> list[list[Fraction]]:
    """Inverse over Q by Gauss-Jordan elimination."""
    n = len(m)
    a = [[Fraction(x) for x in r] + [Fraction(int(i == j)) for j in range(n)] for i, r in enumerate(m)]
    for k in range(n):
        piv = next((i for i in range(k, n) if a[i][k] != 0), None)
        if piv is None:
            raise LatticeError("singular matrix")
        a[k], a[piv] = a[piv], a[k]
        inv = 1 / a[k][k]
        a[k] = [x * inv for x in a[k]]
        for i in range(n):
            if i != k and a[i][k] != 0:
                f = a[i][k]
                a[i] = [x - f * y for x, y in zip(a[i], a[k])]
    return [r[n:] for r in a]


def solve_left(m: Sequence[Sequence], v: Sequence) -> list[Fraction]:
    """Rational x with x * m == v for square invertible ``m``."""
    inv = inverse(m)
    n = len(m)
    return [sum(Fraction(v[i]) * inv[i][j] for i in range(n)) for j in range(n)]


def rank_mod_p(rows: Sequence[Sequence[int]], p: int) -> int:
    return len(_echelon_mod_p([list(r) for r in rows], p))


def _echelon_mod_p(a: Matrix, p: int) -> Matrix:
    a = [[x % p for x in r] for r in a]
    out = []
    ncols = len(a[0]) if a else 0
    col = 0
    while a and col < ncols:
        piv = next((r for r in a if r[col]), None)
        if piv is None:
            col += 1
            continue
        a.remove(piv)
        inv = pow(piv[col], -1, p)
        piv = [x * inv % p for x in piv]
        a = [[(x - r[col] * y) % p for x, y in zip(r, piv)] if r[col] else r for r in a]
        a = [r for r in a if any(r)]
        out.append(piv)
        col += 1
    return out


def kernel_mod_p(a: Sequence[Sequence[int]], p: int) -> Matrix:
    """Basis of {x in F_p^rows : x * a == 0}."""
    nrows = len(a)
    ncols = len(a[0]) if a else 0
    aug = [[x % p for x in a[i]] + [int(i == j) for j in range(nrows)] for i in range(nrows)]
    row = 0
    for col in range(ncols):
        piv = next((i for i in range(row, nrows) if aug[i][col]), None)
        if piv is None:
            continue
        aug[row], aug[piv] = aug[piv], aug[row]
        inv = pow(aug[row][col], -1, p)
        aug[row] = [x * inv % p for x in aug[row]]
        for i in range(nrows):
            if i != row and aug[i][col]:
                f = aug[i][col]
                aug[i] = [(x - f * y) % p for x, y in zip(aug[i], aug[row])]
        row += 1
    return [r[ncols:] for r in aug[row:]]


# ---------------------------------------------------------------- HNF


def hnf_transform(rows: Iterable[Sequence[int]]) -> tuple[Matrix, Matrix]:
    """Row HNF ``h`` with unimodular ``u`` such that ``u * rows == h``.

    ``h`` keeps the zero rows at the bottom so that the trailing rows of
    ``u`` span the left kernel.
    """
    a = [list(r) for r in rows]
    m = len(a)
    if m == 0:
        return [], []
    n = len(a[0])
    u = identity(m)
    r = 0
    for c in range(n):
        if r == m:
            break
        while True:
            nz = [i for i in range(r, m) if a[i][c] != 0]
            if not nz:
                break
            piv = min(nz, key=lambda i: abs(a[i][c]))
            a[r], a[piv] = a[piv], a[r]
            u[r], u[piv] = u[piv], u[r]
            done = True
            for i in range(r + 1, m):
                if a[i][c]:
                    q = a[i][c] // a[r][c]
                    a[i] = [x - q * y for x, y in zip(a[i], a[r])]
                    u[i] = [x - q * y for x, y in zip(u[i], u[r])]
                    if a[i][c]:
                        done = False
            if done:
                break
        if r < m and a[r][c] != 0:
            if a[r][c] < 0:
                a[r] = [-x for x in a[r]]
                u[r] = [-x for x in u[r]]
            for i in range(r):
                q = a[i][c] // a[r][c]
                if q:
                    a[i] = [x - q * y for x, y in zip(a[i], a[r])]
                    u[i] = [x - q * y for x, y in zip(u[i], u[r])]
            r += 1
    return a, u


def hnf(rows: Iterable[Sequence[int]]) -> Matrix:
    """Canonical row HNF with zero rows removed."""
    h, _ = hnf_transform(rows)
    return [r for r in h if any(r)]


def hnf_mod(rows: Iterable[Sequence[int]], modulus: int, ncols: int) -> Matrix:
    """Upper-triangular basis of span(rows) + modulus * Z^ncols.

    Entries are kept reduced modulo ``modulus`` throughout, so the cost does
    not depend on the size of the generators.
    """
    work = [[x % modulus for x in r] for r in rows]
    work = [r for r in work if any(r)]
    basis: Matrix = []
    for j in range(ncols):
        piv = [0] * ncols
        piv[j] = modulus
        rest = []
        for r in work:
            if r[j] == 0:
                rest.append(r)
                continue
            g, s, t = _xgcd(piv[j], r[j])
            a, b = piv[j] // g, r[j] // g
            new_piv = [(s * x + t * y) % modulus if k > j else s * x + t * y for k, (x, y) in enumerate(zip(piv, r))]
            other = [(a * y - b * x) % modulus for x, y in zip(piv, r)]
            piv = new_piv
            if any(other):
                rest.append(other)
        piv[j] = math.gcd(piv[j], modulus)
        basis.append(piv)
        work = rest
    for j in range(ncols):
        pj = basis[j][j]
        for i in range(j):
            q = basis[i][j] // pj
            if q:
                basis[i] = [x - q * y for x, y in zip(basis[i], basis[j])]
    return basis


def _xgcd(a: int, b: int) -> tuple[int, int, int]:
    x0, x1, y0, y1 = 1, 0, 0, 1
    while b:
        q, a, b = a // b, b, a % b
        x0, x1 = x1, x0 - q * x1
        y0, y1 = y1, y0 - q * y1
    if a < 0:
        return -a, -x0, -y0
    return a, x0, y0


def in_row_span(basis: Sequence[Sequence[int]], v: Sequence[int]) -> bool:
    """Membership test against an echelon (HNF) basis."""
    w = list(v)
    for row in basis:
        c = next((k for k, x in enumerate(row) if x), None)
        if c is None:
            continue
        if w[c] % row[c]:
            return False
        q = w[c] // row[c]
        if q:
            w = [x - q * y for x, y in zip(w, row)]
    return not any(w)


def int_left_kernel(a: Sequence[Sequence[int]]) -> Matrix:
    """Z-basis of {x in Z^rows : x * a == 0}."""
    h, u = hnf_transform(a)
    return hnf([u[i] for i in range(len(h)) if not any(h[i])])


def intersect(b1: Sequence[Sequence[int]], b2: Sequence[Sequence[int]]) -> Matrix:
    """HNF basis of the intersection of two row lattices."""
    stacked = [list(r) for r in b1] + [[-x for x in r] for r in b2]
    ker = int_left_kernel(stacked)
    k1 = len(b1)
    return hnf(vec_mat(k[:k1], b1) for k in ker)


# ---------------------------------------------------------------- LLL


def lll_gram(gram: Sequence[Sequence[int]], delta: Fraction = LLL_DELTA, backend: str = "python") -> tuple[Matrix, Matrix]:
    """LLL-reduce a positive definite integer Gram matrix.

    Returns ``(reduced_gram, t)`` with ``t * gram * t^T == reduced_gram``.
    """
    if backend == "flint":
        if _flint is None:
            raise LatticeError("python-flint is not available")
        g = _flint.fmpz_mat([[int(x) for x in r] for r in gram])
        red, t = g.lll(transform=True, rep="gram", delta=float(delta))
        return _fmpz_to_list(red), _fmpz_to_list(t)
    if backend == "python":
        return _lll_gram_python(gram, Fraction(delta))
    raise LatticeError(f"unknown LLL backend {backend!r}")


def lll(basis: Sequence[Sequence[int]], delta: Fraction = LLL_DELTA, gram: Sequence[Sequence[int]] | None = None, backend: str = "python") -> tuple[Matrix, Matrix]:
    """LLL-reduce ``basis`` rows for the form ``gram`` (default: standard dot product).

    Returns ``(reduced_basis, t)`` with ``t * basis == reduced_basis``.
    """
    b = [list(r) for r in basis]
    if gram is None:
        g = mat_mul(b, transpose(b))
    else:
        g = mat_mul(mat_mul(b, gram), transpose(b))
    _, t = lll_gram(g, delta, backend)
    return mat_mul(t, b), t


def _fmpz_to_list(m) -> Matrix:
    return [[int(m[i, j]) for j in range(m.ncols())] for i in range(m.nrows())]


def _lll_gram_python(gram: Sequence[Sequence[int]], delta: Fraction) -> tuple[Matrix, Matrix]:
    # Integral LLL on the Gram matrix (de Weger / Cohen), 1-indexed internally.
    n = len(gram)
    g = [[0] * (n + 1)] + [[0] + [int(x) for x in r] for r in gram]
    h = [[0] * (n + 1)] + [[0] + [int(i == j) for j in range(n)] for i in range(n)]
    lam = [[0] * (n + 1) for _ in range(n + 1)]
    d = [0] * (n + 1)
    a, bden = delta.numerator, delta.denominator
    if n == 0:
        return [], []
    d[0] = 1
    d[1] = g[1][1]
    if d[1] <= 0:
        raise LatticeError("Gram matrix is not positive definite")
    k, kmax = 2, 1

    def redi(k: int, l: int) -> None:
        if 2 * abs(lam[k][l]) > d[l]:
            q = (2 * lam[k][l] + d[l]) // (2 * d[l])
            h[k] = [x - q * y for x, y in zip(h[k], h[l])]
            for j in range(1, n + 1):
                g[k][j] -= q * g[l][j]
            for j in range(1, n + 1):
                g[j][k] -= q * g[j][l]
            lam[k][l] -= q * d[l]
            for i in range(1, l):
                lam[k][i] -= q * lam[l][i]

    def swapi(k: int) -> None:
        h[k], h[k - 1] = h[k - 1], h[k]
        g[k], g[k - 1] = g[k - 1], g[k]
        for row in g:
            row[k], row[k - 1] = row[k - 1], row[k]
        for j in range(1, k - 1):
            lam[k][j], lam[k - 1][j] = lam[k - 1][j], lam[k][j]
        lm = lam[k][k - 1]
        bb = (d[k - 2] * d[k] + lm * lm) // d[k - 1]
        for i in range(k + 1, kmax + 1):
            t = lam[i][k]
            lam[i][k] = (d[k] * lam[i][k - 1] - lm * t) // d[k - 1]
            lam[i][k - 1] = (bb * t + lm * lam[i][k]) // d[k]
        d[k - 1] = bb

    while k <= n:
        if k > kmax:
            kmax = k
            for j in range(1, k + 1):
                u = g[k][j]
                for i in range(1, j):
                    u = (d[i] * u - lam[k][i] * lam[j][i]) // d[i - 1]
                if j < k:
                    lam[k][j] = u
                else:
                    d[k] = u
                    if u <= 0:
                        raise LatticeError("Gram matrix is not positive definite")
        while True:
            redi(k, k - 1)
            lm = lam[k][k - 1]
            if bden * d[k] * d[k - 2] < a * d[k - 1] ** 2 - bden * lm * lm:
                swapi(k)
                k = max(2, k - 1)
            else:
                for l in range(k - 2, 0, -1):
                    redi(k, l)
                k += 1
                break
    return [r[1:] for r in g[1:]], [r[1:] for r in h[1:]]


def is_lll_reduced(gram: Sequence[Sequence[int]], delta: Fraction = LLL_DELTA, eta: Fraction = Fraction(1, 2)) -> bool:
    """Size reduction (|mu| <= eta) and the Lovasz condition, checked exactly."""
    n = len(gram)
    mu = [[Fraction(0)] * n for _ in range(n)]
    bstar = [Fraction(0)] * n
    for i in range(n):
        for j in range(i):
            mu[i][j] = (Fraction(gram[i][j]) - sum(mu[j][k] * mu[i][k] * bstar[k] for k in range(j))) / bstar[j]
        bstar[i] = gram[i][i] - sum(mu[i][k] ** 2 * bstar[k] for k in range(i))
        if bstar[i] <= 0:
            return False
    for i in range(n):
        for j in range(i):
            if abs(mu[i][j]) > eta:
                return False
    for k in range(1, n):
        if bstar[k] < (delta - mu[k][k - 1] ** 2) * bstar[k - 1]:
            return False
    return True


def is_positive_definite(gram: Sequence[Sequence]) -> bool:
    n = len(gram)
    return all(det([r[:k] for r in gram[:k]]) > 0 for k in range(1, n + 1))


# ---------------------------------------------------------------- enumeration


def _cholesky_q(gram: Sequence[Sequence[int]]) -> tuple[list[float], list[list[float]]]:
    n = len(gram)
    q = [[float(gram[i][j]) for j in range(n)] for i in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            q[j][i] = q[i][j]
            q[i][j] = q[i][j] / q[i][i]
        for k in range(i + 1, n):
            for l in range(k, n):
                q[k][l] -= q[k][i] * q[i][l]
    diag = [q[i][i] for i in range(n)]
    if min(diag) <= 0:
        raise LatticeError("Gram matrix is not positive definite")
    return diag, q


def _enumerate(gram: Sequence[Sequence[int]], bound: int, target: int | None) -> Iterator[list[int]]:
    n = len(gram)
    if n == 0:
        return
    diag, q = _cholesky_q(gram)
    slack = 1e-9 * bound + 1e-9
    x = [0] * n
    rem = [0.0] * (n + 1)
    rem[n] = float(bound) + slack
    centre = [0.0] * n
    top_zero = [True] * (n + 1)

    def bounds(i: int) -> tuple[int, int]:
        c = -sum(q[i][j] * x[j] for j in range(i + 1, n))
        centre[i] = c
        r = math.sqrt(max(rem[i + 1], 0.0) / diag[i])
        lo = math.ceil(c - r - 1e-9)
        hi = math.floor(c + r + 1e-9)
        if top_zero[i + 1]:
            lo = max(lo, 0)
        return lo, hi

    def exact_ok(v: list[int]) -> bool:
        val = quad_form(gram, v)
        return val == target if target is not None else val <= bound

    stack_lo = [0] * n
    stack_hi = [0] * n
    i = n - 1
    lo, hi = bounds(i)
    stack_lo[i], stack_hi[i] = lo, hi
    x[i] = lo - 1
    while True:
        x[i] += 1
        if x[i] > stack_hi[i]:
            i += 1
            if i == n:
                return
            continue
        diff = x[i] - centre[i]
        rem[i] = rem[i + 1] - diag[i] * diff * diff
        top_zero[i] = top_zero[i + 1] and x[i] == 0
        if rem[i] < -slack:
            continue
        if i == 0:
            if not top_zero[0] and exact_ok(x):
                yield list(x)
            continue
        if i == 1 and target is not None:
            # last coordinate solved directly: q00 (x0 - c)^2 = target - partial
            x[0] = 0
            c = -sum(q[0][j] * x[j] for j in range(1, n))
            r2 = rem[1] - slack - (float(bound) - float(target))
            if r2 < -slack:
                continue
            r = math.sqrt(max(r2, 0.0) / diag[0])
            seen = set()
            for root in (c - r, c + r):
                for cand in (math.floor(root), math.ceil(root)):
                    if cand in seen:
                        continue
                    seen.add(cand)
                    if top_zero[1] and cand <= 0:
                        continue
                    x[0] = cand
                    if exact_ok(x):
                        yield list(x)
            x[0] = 0
            continue
        i -= 1
        lo, hi = bounds(i)
        stack_lo[i], stack_hi[i] = lo, hi
        x[i] = lo - 1


def short_vectors(gram: Sequence[Sequence[int]], bound: int, exact: bool = False) -> list[list[int]]:
    """Nonzero x (one of each +-x pair) with x G x^T <= bound, or == bound if ``exact``.

    Coordinates refer to the basis underlying ``gram``; no reduction is applied.
    """
    return list(_enumerate(gram, int(bound), int(bound) if exact else None))


def short_vectors_reduced(gram: Sequence[Sequence[int]], bound: int, exact: bool = False, backend: str = "python") -> list[list[int]]:
    """As :func:`short_vectors` but LLL-reduces first; coordinates are in the input basis."""
    if not gram:
        return []
    red, t = lll_gram(gram, backend=backend)
    return [vec_mat(y, t) for y in short_vectors(red, bound, exact)]


def sign_normalize(v: Sequence[int]) -> tuple[int, ...]:
    for x in v:
        if x:
            return tuple(v) if x > 0 else tuple(-y for y in v)
    return tuple(v)
