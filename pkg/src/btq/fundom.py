"""Fundamental domains for Gamma acting on the tree, and reduction into them.

The domain is grown breadth first from the origin.  Every edge leaving a
processed vertex is either new (stored) or equivalent to a stored edge, in
either orientation (recorded as an edge pairing).  The target of a new edge
is either a new vertex or equivalent to a stored one; the latter closes a
cycle in the quotient and raises the genus by one.
"""

from __future__ import annotations

import heapq
import time
from dataclasses import dataclass, field as dc_field
from typing import Iterable

from .bttree import TreeRep, distance, edges_leaving, neighbors, origin, reverse, source, target
from .equiv import ArithmeticContext, EquivFn, GroupElement, is_equivalent


class LimitExceeded(Exception):
    """The genus passed the requested maximum before the domain closed."""

    def __init__(self, genus: int, max_genus: int):
        super().__init__(f"genus exceeds {max_genus} (reached {genus})")
        self.genus = genus
        self.max_genus = max_genus


@dataclass(frozen=True)
class Pairing:
    """gamma * outer == inner, with inner in the domain."""

    outer: TreeRep
    inner: TreeRep
    gamma: GroupElement

    def to_json(self) -> dict:
        return {"outer": self.outer.matrix(), "inner": self.inner.matrix(), "gamma": self.gamma.to_json()}


@dataclass
class QuotientGraph:
    p: int
    vertices: list[TreeRep]
    edges: list[TreeRep]
    vertex_pairings: list[Pairing]
    edge_pairings: list[Pairing]
    genus: int
    boundary: dict[TreeRep, Pairing] = dc_field(default_factory=dict)
    stats: dict = dc_field(default_factory=dict)

    def __post_init__(self) -> None:
        self._index()

    def _index(self) -> None:
        self.vertex_set = set(self.vertices)
        self.vertex_index = {v: k for k, v in enumerate(self.vertices)}
        self.edge_index: dict[TreeRep, tuple[int, bool]] = {}
        for k, e in enumerate(self.edges):
            self.edge_index[e] = (k, False)
            self.edge_index.setdefault(reverse(e), (k, True))
        self.vertex_pair_map = {pr.outer: pr for pr in self.vertex_pairings}

    @property
    def origin(self) -> TreeRep:
        return self.vertices[0]

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def betti(self) -> int:
        return self.n_edges - self.n_vertices + 1

    def in_domain(self, e: TreeRep) -> bool:
        return e in self.edge_index

    def quotient_endpoints(self, k: int) -> tuple[int, int]:
        """Indices of the quotient vertices joined by stored edge k."""
        e = self.edges[k]
        s = self.vertex_index[source(e)]
        w = target(e)
        if w in self.vertex_index:
            return s, self.vertex_index[w]
        return s, self.vertex_index[self.vertex_pair_map[w].inner]

    def degree(self, v: TreeRep) -> int:
        """Number of domain edges (either orientation) whose source is v."""
        return sum(1 for e in edges_leaving(v) if e in self.edge_index)

    def to_json(self) -> dict:
        edges = []
        for k, e in enumerate(self.edges):
            s, t = self.quotient_endpoints(k)
            edges.append({"id": k, "src": s, "tgt": t, "matrix": e.matrix()})
        return {
            "p": self.p,
            "vertices": [v.matrix() for v in self.vertices],
            "edges": edges,
            "vertex_pairings": [pr.to_json() for pr in self.vertex_pairings],
            "edge_pairings": [pr.to_json() for pr in self.edge_pairings],
            "boundary": [pr.to_json() for pr in self.boundary.values()],
            "genus": self.genus,
            "stats": self.stats,
        }

    @classmethod
    def from_json(cls, data: dict) -> "QuotientGraph":
        p = int(data["p"])

        def rep(kind: str, m) -> TreeRep:
            (a, b), (c, d) = m
            return TreeRep(kind, (a, b, c, d), p)

        def pairing(kind: str, pr: dict) -> Pairing:
            return Pairing(rep(kind, pr["outer"]), rep(kind, pr["inner"]), GroupElement.from_json(pr["gamma"]))

        g = cls(
            p=p,
            vertices=[rep("vertex", m) for m in data["vertices"]],
            edges=[rep("edge", e["matrix"]) for e in data["edges"]],
            vertex_pairings=[pairing("vertex", pr) for pr in data["vertex_pairings"]],
            edge_pairings=[pairing("edge", pr) for pr in data["edge_pairings"]],
            genus=int(data["genus"]),
            stats=dict(data.get("stats", {})),
        )
        g.boundary = {pr.outer: pr for pr in (pairing("edge", x) for x in data.get("boundary", []))}
        return g

    def to_dot(self, name: str = "quotient") -> str:
        lines = [f"// genus {self.genus}", f"graph {name} {{"]
        for k, v in enumerate(self.vertices):
            lines.append(f'  {k} [label="{v.text()}"];')
        for k in range(len(self.edges)):
            s, t = self.quotient_endpoints(k)
            lines.append(f"  {s} -- {t};")
        lines.append("}")
        return "\n".join(lines) + "\n"


# ---------------------------------------------------------------- domain growth


def _match(ctx: ArithmeticContext, x: TreeRep, stored: Iterable[TreeRep], equiv: EquivFn, both_orientations: bool):
    par = x.detval % 2
    for y in stored:
        for cand in ((y, reverse(y)) if both_orientations else (y,)):
            if cand.detval % 2 != par:
                continue
            g = equiv(ctx, x, cand)
            if g is not None:
                return cand, g
    return None


def fundamental_domain(ctx: ArithmeticContext, max_genus: int | None = None, equiv: EquivFn = is_equivalent) -> QuotientGraph:
    """Breadth-first fundamental domain with genus counting and early exit.

    Vertices are processed by (distance from the origin, canonical matrix);
    edges in the order of edges_leaving.
    """
    t0 = time.perf_counter()
    calls0 = ctx.stats.calls + ctx.stats.naive_calls
    p = ctx.p
    v0 = origin(p)
    vertices = [v0]
    dist = {v0: 0}
    edges: list[TreeRep] = []
    vertex_pairings: list[Pairing] = []
    edge_pairings: list[Pairing] = []
    genus = 0
    heap = [(0, v0.m, v0)]
    while heap:
        dv, _, v = heapq.heappop(heap)
        for e in edges_leaving(v):
            hit = _match(ctx, e, edges, equiv, True)
            if hit is not None:
                edge_pairings.append(Pairing(e, hit[0], hit[1]))
                continue
            edges.append(e)
            w = target(e)
            hit = _match(ctx, w, vertices, equiv, False)
            if hit is not None:
                vertex_pairings.append(Pairing(w, hit[0], hit[1]))
                genus += 1
                if max_genus is not None and genus > max_genus:
                    raise LimitExceeded(genus, max_genus)
                continue
            vertices.append(w)
            dist[w] = dv + 1
            heapq.heappush(heap, (dv + 1, w.m, w))
    stats = {
        "time_ms": round(1000 * (time.perf_counter() - t0), 1),
        "equiv_calls": ctx.stats.calls + ctx.stats.naive_calls - calls0,
    }
    g = QuotientGraph(p, vertices, edges, vertex_pairings, edge_pairings, genus, stats=stats)
    if g.betti() != genus:
        raise RuntimeError("genus counter disagrees with the Betti number (internal)")
    return boundary_data(ctx, g)


def boundary_data(ctx: ArithmeticContext, g: QuotientGraph) -> QuotientGraph:
    """Fill g.boundary: every edge leaving a domain vertex that is not a domain edge, with its reduction."""
    known = {pr.outer: pr for pr in g.edge_pairings}
    boundary = {}
    for v in g.vertices:
        for e in edges_leaving(v):
            if g.in_domain(e):
                continue
            pr = known.get(e)
            if pr is None or not g.in_domain(pr.inner):
                hit = _match(ctx, e, g.edges, is_equivalent, True)
                if hit is None:
                    raise RuntimeError(f"boundary edge {e} has no partner in the domain")
                pr = Pairing(e, hit[0], hit[1])
            if ctx.act(pr.gamma, e) != pr.inner:
                raise RuntimeError(f"boundary pairing for {e} does not verify")
            boundary[e] = pr
    g.boundary = boundary
    return g


# ---------------------------------------------------------------- reduction


@dataclass
class ReduceStats:
    lookups: int = 0
    steps: int = 0


def _path_from_origin(v: TreeRep) -> list[TreeRep]:
    v0 = origin(v.p)
    path = [v0]
    k = distance(v0, v)
    while len(path) <= k:
        here = path[-1]
        remaining = k - len(path) + 1
        nxt = next(w for w in neighbors(here) if distance(w, v) == remaining - 1)
        path.append(nxt)
    return path


def _edge_between(a: TreeRep, b: TreeRep) -> TreeRep:
    for e in edges_leaving(a):
        if target(e) == b:
            return e
    raise ValueError("vertices are not adjacent")


def _step(ctx: ArithmeticContext, g: QuotientGraph, gamma: GroupElement, e: TreeRep, stats: ReduceStats):
    """Map the edge e (whose source gamma sends into the domain) to a domain edge."""
    f = ctx.act(gamma, e)
    if not g.in_domain(f):
        stats.lookups += 1
        pr = g.boundary.get(f)
        if pr is None:
            raise RuntimeError(f"edge {f} leaves the domain but has no boundary data")
        gamma = ctx.compose(pr.gamma, gamma)
        f = pr.inner
    return f, gamma


def _into_domain(ctx: ArithmeticContext, g: QuotientGraph, gamma: GroupElement, f: TreeRep):
    """Given a domain edge f, move its target into the domain vertex set."""
    w = target(f)
    if w in g.vertex_set:
        return w, gamma
    pr = g.vertex_pair_map[w]
    return pr.inner, ctx.compose(pr.gamma, gamma)


def reduce_vertex(ctx: ArithmeticContext, g: QuotientGraph, v: TreeRep, stats: ReduceStats | None = None) -> tuple[TreeRep, GroupElement]:
    """A domain vertex and gamma with gamma v equal to it."""
    stats = stats if stats is not None else ReduceStats()
    path = _path_from_origin(v)
    gamma = ctx.identity()
    for a, b in zip(path, path[1:]):
        stats.steps += 1
        f, gamma = _step(ctx, g, gamma, _edge_between(a, b), stats)
        _, gamma = _into_domain(ctx, g, gamma, f)
    w = ctx.act(gamma, v)
    if w not in g.vertex_set:
        raise RuntimeError("vertex reduction left the domain (internal)")
    return w, gamma


def reduce_edge(ctx: ArithmeticContext, g: QuotientGraph, e: TreeRep, stats: ReduceStats | None = None) -> tuple[TreeRep, GroupElement]:
    """A domain edge and gamma with gamma e equal to it.

    Walks the geodesic from the origin to the source of e, keeping the walk
    inside the domain with boundary pairings; at most one boundary lookup per
    step.
    """
    stats = stats if stats is not None else ReduceStats()
    s = source(e)
    _, gamma = reduce_vertex(ctx, g, s, stats)
    f, gamma = _step(ctx, g, gamma, e, stats)
    if not g.in_domain(f) or ctx.act(gamma, e) != f:
        raise RuntimeError("edge reduction failed verification (internal)")
    return f, gamma


def edge_distance(e: TreeRep) -> int:
    """Distance of the farther endpoint of e from the origin."""
    v0 = origin(e.p)
    return max(distance(v0, source(e)), distance(v0, target(e)))
