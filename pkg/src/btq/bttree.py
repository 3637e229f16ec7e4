"""Vertices and directed edges of the Bruhat-Tits tree of GL_2(Q_p).

A vertex is the homothety class of the Z_p-lattice spanned by the columns of
a 2x2 matrix; GL_2 acts on the left.  Canonical forms:

  vertex   [[p^a, 0], [r, p^b]]   0 <= r < p^b
  edge     [[p^a, 0], [r, p^b]]   0 <= r < p^(b+1)   (top-left valuation <= top-right)
           [[0, p^a], [p^b, r]]   0 <= r < p^b       (otherwise)

always with the common power of p removed.  An edge matrix E has source the
class of E and target the class of E * diag(1, p); its stabilizer on the
right is Gamma_0(p) = {c in pZ_p}.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from typing import Iterator, Sequence

from .padic import PrecisionError, vp

Mat = tuple[int, int, int, int]


class TreeError(ValueError):
    pass


@dataclass(frozen=True, order=True)
class TreeRep:
    """Canonical representative of a vertex or a directed edge."""

    kind: str
    m: Mat
    p: int

    @property
    def is_vertex(self) -> bool:
        return self.kind == "vertex"

    @property
    def detval(self) -> int:
        a, b, c, d = self.m
        return vp(a * d - b * c, self.p)

    def matrix(self) -> list[list[int]]:
        a, b, c, d = self.m
        return [[a, b], [c, d]]

    def text(self) -> str:
        return json.dumps(self.matrix(), separators=(",", ":"))

    def __repr__(self) -> str:
        return f"{self.kind[0].upper()}{self.text()}"


def parse_matrix(text: str) -> Mat:
    """Parse '[[a,b],[c,d]]'."""
    try:
        rows = json.loads(text)
        (a, b), (c, d) = rows
        return (int(a), int(b), int(c), int(d))
    except (ValueError, TypeError) as exc:
        raise TreeError(f"cannot parse matrix {text!r}") from exc


def mat_mul(x: Mat, y: Mat) -> Mat:
    a, b, c, d = x
    e, f, g, h = y
    return (a * e + b * g, a * f + b * h, c * e + d * g, c * f + d * h)


def _precision(m: Mat, p: int, K: int | None) -> int:
    if K is not None:
        return K
    a, b, c, d = m
    det = a * d - b * c
    if det == 0:
        raise TreeError("singular matrix does not represent a lattice")
    return vp(det, p) + 2


def _val(x: int, p: int, K: int) -> int:
    v = vp(x, p, K)
    return v


def _strip(entries: Sequence[int], p: int) -> tuple[int, ...]:
    s = min(vp(x, p) for x in entries if x)
    q = p ** s
    return tuple(x // q for x in entries)


def normalize_vertex(m: Mat, p: int, K: int | None = None) -> TreeRep:
    """Canonical vertex form of the lattice spanned by the columns of m.

    The entries need only be known modulo p^K with K > v_p(det m).
    """
    K = _precision(m, p, K)
    mod = p ** K
    a, b, c, d = (x % mod for x in m)
    if _val(b, p, K) < _val(a, p, K):
        a, b, c, d = b, a, d, c
    va = _val(a, p, K)
    if va >= K:
        raise PrecisionError("vertex matrix is singular at this precision")
    pa = p ** va
    uinv = pow(a // pa, -1, mod)
    x = (b // pa) * uinv
    d = (d - x * c) % mod
    vd = _val(d, p, K)
    if va + vd >= K:
        raise PrecisionError("vertex determinant not resolved at this precision")
    pd = p ** vd
    r = (c * uinv) % pd
    return TreeRep("vertex", _strip((pa, 0, r, pd), p), p)


def normalize_edge(m: Mat, p: int, K: int | None = None) -> TreeRep:
    """Canonical form of the directed edge m modulo the right action of Gamma_0(p)."""
    K = _precision(m, p, K)
    mod = p ** K
    a, b, c, d = (x % mod for x in m)
    va, vb = _val(a, p, K), _val(b, p, K)
    if va <= vb:
        if va >= K:
            raise PrecisionError("edge matrix is singular at this precision")
        pa = p ** va
        uinv = pow(a // pa, -1, mod)
        x = (b // pa) * uinv
        d = (d - x * c) % mod
        vd = _val(d, p, K)
        if va + vd + 1 >= K:
            raise PrecisionError("edge determinant not resolved at this precision")
        r = (c * uinv) % p ** (vd + 1)
        return TreeRep("edge", _strip((pa, 0, r, p ** vd), p), p)
    pb = p ** vb
    uinv = pow(b // pb, -1, mod)
    x = (a // pb) * uinv
    c = (c - x * d) % mod
    vc = _val(c, p, K)
    if vb + vc >= K:
        raise PrecisionError("edge determinant not resolved at this precision")
    pc = p ** vc
    r = (d * uinv) % pc
    return TreeRep("edge", _strip((0, pb, pc, r), p), p)


def normalize(kind: str, m: Mat, p: int, K: int | None = None) -> TreeRep:
    if kind == "vertex":
        return normalize_vertex(m, p, K)
    if kind == "edge":
        return normalize_edge(m, p, K)
    raise TreeError(f"unknown tree element kind {kind!r}")


def origin(p: int) -> TreeRep:
    return TreeRep("vertex", (1, 0, 0, 1), p)


def origin_edge(p: int) -> TreeRep:
    return TreeRep("edge", (1, 0, 0, 1), p)


def source(e: TreeRep) -> TreeRep:
    return normalize_vertex(e.m, e.p)


def target(e: TreeRep) -> TreeRep:
    a, b, c, d = e.m
    return normalize_vertex((a, b * e.p, c, d * e.p), e.p)


def reverse(e: TreeRep) -> TreeRep:
    """The same edge with opposite orientation: E * [[0, 1], [p, 0]]."""
    a, b, c, d = e.m
    p = e.p
    return normalize_edge((p * b, a, p * d, c), p)


def _a_matrices(p: int) -> list[Mat]:
    return [(1, 0, r, p) for r in range(p)] + [(p, 0, 0, 1)]


def neighbors(v: TreeRep) -> list[TreeRep]:
    """The p + 1 adjacent vertices, in the order A_0, ..., A_{p-1}, A_inf."""
    return [normalize_vertex(mat_mul(v.m, A), v.p) for A in _a_matrices(v.p)]


def edges_leaving(v: TreeRep) -> list[TreeRep]:
    """Edges with source v, ordered like neighbors(v) by their targets."""
    p = v.p
    out = [normalize_edge(mat_mul(v.m, (1, 0, r, 1)), p) for r in range(p)]
    out.append(normalize_edge(mat_mul(v.m, (0, 1, 1, 0)), p))
    return out


def distance(u: TreeRep, v: TreeRep) -> int:
    """Path length between two vertices: the spread of the elementary divisors of u^-1 v."""
    a, b, c, d = u.m
    prod = mat_mul((d, -b, -c, a), v.m)
    p = u.p
    D = vp(prod[0] * prod[3] - prod[1] * prod[2], p)
    s = min(vp(x, p) for x in prod if x)
    return D - 2 * s


def parity(r: TreeRep) -> int:
    return r.detval % 2


def random_walk(start: TreeRep, length: int, rng: random.Random) -> list[TreeRep]:
    """A non-backtracking walk of the given length; returns all visited vertices."""
    path = [start]
    prev = None
    for _ in range(length):
        choices = [w for w in neighbors(path[-1]) if w != prev]
        prev = path[-1]
        path.append(rng.choice(choices))
    return path


def random_vertex(p: int, dist: int, rng: random.Random) -> TreeRep:
    return random_walk(origin(p), dist, rng)[-1]


def random_edge(p: int, dist: int, rng: random.Random) -> TreeRep:
    """A random directed edge whose source lies at the given distance from the origin."""
    v = random_vertex(p, dist, rng)
    return rng.choice(edges_leaving(v))


def ball(center: TreeRep, radius: int) -> Iterator[TreeRep]:
    """Vertices within the given distance, breadth first."""
    seen = {center}
    layer = [center]
    yield center
    for _ in range(radius):
        nxt = []
        for v in layer:
            for w in neighbors(v):
                if w not in seen:
                    seen.add(w)
                    nxt.append(w)
                    yield w
        layer = nxt
