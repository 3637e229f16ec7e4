"""Deciding whether two vertices (or two edges) of the tree are equivalent under Gamma.

Gamma is the image under the local splitting of {x / delta^t : x in R,
nrd(x) = delta^(2t)}.  Two representatives u, v with det valuations a, b can
only be equivalent when a + b = 2m is even; a witness then exists with
t = ceil(m / d) and is a short vector of the hom lattice

    X = { x in R : iota(x) in p^h v L0 adj(u)  mod p^(2M+1) },   M = d t, h = M - m,

for the positive definite form x -> Tr(nrd(x) / delta^(2t)), on which every
witness has value exactly [F:Q].
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

from . import lattice as lat
from .bttree import TreeRep, normalize
from .field import FieldElement, PrimeSite
from .padic import PrecisionError, SplittingMap, build_splitting, left_kernel_mod
from .quatalg import QuatOrder


class EquivError(RuntimeError):
    """A witness failed verification: the splitting or the precision is broken."""


@dataclass
class EquivStats:
    calls: int = 0
    odd_rejections: int = 0
    identical: int = 0
    lattice_builds: int = 0
    candidates: int = 0
    naive_calls: int = 0

    def as_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass(frozen=True)
class GroupElement:
    """lambda / delta^t, with lambda given by integer coordinates over the order's basis."""

    coords: tuple[int, ...]
    t: int

    def to_json(self) -> dict:
        return {"coords": list(self.coords), "t": self.t}

    @classmethod
    def from_json(cls, data: dict) -> "GroupElement":
        return cls(tuple(int(c) for c in data["coords"]), int(data["t"]))


class ArithmeticContext:
    """An Eichler order with its splitting at a principalized degree-one prime.

    Owns the splitting (rebuilt with a doubled cap when a query needs more
    precision), the per-t Gram matrices and the instrumentation counters.
    """

    def __init__(self, R: QuatOrder, site: PrimeSite, splitting: SplittingMap | None = None, N_cap: int = 64):
        if site.d is None or site.delta is None:
            raise ValueError("prime site needs d and delta (call principalize first)")
        if not R.algebra.is_definite:
            raise ValueError("algebra must be totally definite")
        self.R = R
        self.site = site
        self.p = site.p
        self.d = site.d
        self.delta = site.delta
        F = R.algebra.field
        self.n = F.n
        self.norm_delta = int(self.delta.norm())
        self.delta_dual = F(self.norm_delta) / self.delta
        if not self.delta_dual.is_integral():
            raise ValueError("N(delta)/delta must be integral")
        self._splitting = splitting or build_splitting(R, site, N_cap)
        self._grams: dict[int, list[list[int]]] = {}
        self._delta_pow: dict[int, FieldElement] = {}
        self._naive_cache: dict[int, list[tuple[int, ...]]] = {}
        self.stats = EquivStats()

    # precision --------------------------------------------------------------

    @property
    def splitting(self) -> SplittingMap:
        return self._splitting

    def ensure_precision(self, N: int) -> SplittingMap:
        sm = self._splitting
        if N > sm.N_cap:
            cap = sm.N_cap
            while cap < N:
                cap *= 2
            self._splitting = build_splitting(self.R, self.site, cap)
        return self._splitting

    def image(self, coords: Sequence[int], N: int):
        return self.ensure_precision(N).image(coords, N)

    # group elements ---------------------------------------------------------

    def delta_power(self, k: int) -> FieldElement:
        if k not in self._delta_pow:
            self._delta_pow[k] = self.delta ** k
        return self._delta_pow[k]

    def scalar_element(self, t: int) -> GroupElement:
        """delta^t / delta^t: the identity of Gamma at level t."""
        B = self.R.algebra
        return GroupElement(tuple(self.R.coords_of(B.scalar(self.delta_power(t)))), t)

    def identity(self) -> GroupElement:
        return GroupElement(tuple(self.R.one_coords), 0)

    def compose(self, g: GroupElement, h: GroupElement) -> GroupElement:
        """g * h (apply h first)."""
        return GroupElement(tuple(self.R.mul(g.coords, h.coords)), g.t + h.t)

    def inverse(self, g: GroupElement) -> GroupElement:
        return GroupElement(tuple(self.R.conj(g.coords)), g.t)

    def in_gamma(self, g: GroupElement) -> bool:
        return self.R.nrd(g.coords) == self.delta_power(2 * g.t)

    def act(self, g: GroupElement, r: TreeRep) -> TreeRep:
        """Canonical form of iota(g) r.  Scalars do not move tree elements, so delta^-t is dropped."""
        K = 2 * g.t * self.d + r.detval + 3
        for _ in range(3):
            a, b, c, d = self.image(g.coords, K)
            e, f, gg, h = r.m
            m = (a * e + b * gg, a * f + b * h, c * e + d * gg, c * f + d * h)
            try:
                return normalize(r.kind, m, self.p, K)
            except PrecisionError:
                K *= 2
        raise EquivError("action did not resolve at doubled precision")

    # forms ------------------------------------------------------------------

    def gram(self, t: int) -> list[list[int]]:
        """Integer Gram G_t with x G_t x^T = 2 N(delta)^(2t) Tr(nrd(x) / delta^(2t))."""
        if t not in self._grams:
            self._grams[t] = self.R.trace_gram(self.delta_dual ** (2 * t))
        return self._grams[t]

    def target_value(self, t: int) -> int:
        return 2 * self.n * self.norm_delta ** (2 * t)

    # naive enumeration -------------------------------------------------------

    def elements_of_level(self, t: int) -> list[tuple[int, ...]]:
        """All x in R (up to sign) with nrd(x) = delta^(2t), by direct enumeration of R."""
        if t not in self._naive_cache:
            vecs = lat.short_vectors_reduced(self.gram(t), self.target_value(t), exact=True)
            want = self.delta_power(2 * t)
            out = [lat.sign_normalize(x) for x in vecs if self.R.nrd(x) == want]
            out.sort()
            self._naive_cache[t] = out
        return self._naive_cache[t]


# ---------------------------------------------------------------- lattice equivalence test


@dataclass(frozen=True)
class EquivProblem:
    u: TreeRep
    v: TreeRep
    m: int
    t: int
    h: int
    N: int

    @property
    def mode(self) -> str:
        return self.u.kind


def make_problem(u: TreeRep, v: TreeRep, d: int) -> EquivProblem | None:
    """Parameters of the query, or None when the det valuations have odd sum."""
    if u.kind != v.kind:
        raise ValueError("cannot compare a vertex with an edge")
    if u.p != v.p:
        raise ValueError("tree elements belong to different primes")
    s = u.detval + v.detval
    if s % 2:
        return None
    m = s // 2
    t = -(-m // d)
    M = d * t
    return EquivProblem(u, v, m, t, M - m, 2 * M + 1)


def _adj(m):
    a, b, c, d = m
    return (d, -b, -c, a)


def _mul(x, y):
    a, b, c, d = x
    e, f, g, h = y
    return (a * e + b * g, a * f + b * h, c * e + d * g, c * f + d * h)


def hom_lattice(ctx: ArithmeticContext, P: EquivProblem) -> list[list[int]]:
    """HNF basis (coordinates over R's basis) of the hom lattice X of the problem."""
    ctx.stats.lattice_builds += 1
    p, N = ctx.p, P.N
    mod = p ** N
    L = ctx.ensure_precision(N).matrix_rows(N)
    adj_u = _adj(P.u.m)
    lower = p if P.mode == "edge" else 1
    basis0 = [(1, 0, 0, 0), (0, 1, 0, 0), (0, 0, 0, 1), (0, 0, lower, 0)]
    ph = p ** P.h
    Z = []
    for b in basis0:
        z = _mul(_mul(P.v.m, b), adj_u)
        Z.append([(-ph * x) % mod for x in z])
    ker = left_kernel_mod(L + Z, p, N)
    n4 = len(L)
    return lat.hnf_mod([k[:n4] for k in ker], mod, n4)


def _witnesses(ctx: ArithmeticContext, cands: Iterable[Sequence[int]], P: EquivProblem) -> GroupElement | None:
    want = ctx.delta_power(2 * P.t)
    best = None
    for x in cands:
        x = lat.sign_normalize(x)
        if best is not None and x >= best:
            continue
        if ctx.R.nrd(x) != want:
            continue
        g = GroupElement(x, P.t)
        if ctx.act(g, P.u) == P.v:
            best = x
    return GroupElement(best, P.t) if best is not None else None


def is_equivalent(ctx: ArithmeticContext, u: TreeRep, v: TreeRep) -> GroupElement | None:
    """A witness g in Gamma with g u = v, or None.

    Among all witnesses at level t = ceil(m/d) the lexicographically least
    sign-normalized coordinate vector is returned.
    """
    ctx.stats.calls += 1
    P = make_problem(u, v, ctx.d)
    if P is None:
        ctx.stats.odd_rejections += 1
        return None
    if u == v:
        ctx.stats.identical += 1
        return ctx.scalar_element(P.t)
    X = hom_lattice(ctx, P)
    gram = lat.mat_mul(lat.mat_mul(X, ctx.gram(P.t)), lat.transpose(X))
    red, T = lat.lll_gram(gram)
    TX = lat.mat_mul(T, X)
    ys = lat.short_vectors(red, ctx.target_value(P.t), exact=True)
    ctx.stats.candidates += len(ys)
    cands = [lat.vec_mat(y, TX) for y in ys]
    g = _witnesses(ctx, cands, P)
    if g is not None and ctx.act(g, u) != v:
        raise EquivError(f"witness does not map {u} to {v}")
    return g


def naive_equivalent(ctx: ArithmeticContext, u: TreeRep, v: TreeRep) -> GroupElement | None:
    """Reference answer by enumerating every x in R with nrd(x) = delta^(2t).

    Cost grows like N(p)^(2t); keep m small.
    """
    ctx.stats.naive_calls += 1
    P = make_problem(u, v, ctx.d)
    if P is None:
        return None
    if u == v:
        return ctx.scalar_element(P.t)
    return _witnesses(ctx, ctx.elements_of_level(P.t), P)


EquivFn = Callable[[ArithmeticContext, TreeRep, TreeRep], "GroupElement | None"]
