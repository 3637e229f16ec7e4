import random

import pytest
from hypothesis import given, settings, strategies as st

from btq.bttree import (
    TreeError,
    ball,
    distance,
    edges_leaving,
    mat_mul,
    neighbors,
    normalize_edge,
    normalize_vertex,
    origin,
    parse_matrix,
    random_edge,
    random_vertex,
    reverse,
    source,
    target,
)

PRIMES = st.sampled_from([2, 3, 5, 11])


def unit_matrix(p, entries, lower_divisible=False):
    """Adjust entries into an element of GL_2(Z_p) (of Gamma_0(p) if asked)."""
    a, b, c, d = entries
    if lower_divisible:
        c *= p
    if (a * d - b * c) % p == 0:
        a, d = a * p + 1, d * p + 1
        if lower_divisible or (a * d - b * c) % p == 0:
            b = b * p
    assert (a * d - b * c) % p
    return (a, b, c, d)


coeffs = st.lists(st.integers(-50, 50), min_size=4, max_size=4)


def walk_matrix(p, steps):
    m = (1, 0, 0, 1)
    for s in steps:
        A = (p, 0, 0, 1) if s % (p + 1) == p else (1, 0, s % (p + 1), p)
        m = mat_mul(m, A)
    return m


@settings(max_examples=200, deadline=None)
@given(PRIMES, st.lists(st.integers(0, 100), max_size=7), coeffs)
def test_vertex_form_invariant_under_units(p, steps, c):
    m = walk_matrix(p, steps)
    g = unit_matrix(p, c)
    v = normalize_vertex(m, p)
    assert normalize_vertex(mat_mul(m, g), p) == v
    assert normalize_vertex(tuple(p**3 * x for x in m), p) == v
    assert normalize_vertex(v.m, p) == v


@settings(max_examples=200, deadline=None)
@given(PRIMES, st.lists(st.integers(0, 100), max_size=7), coeffs)
def test_edge_form_invariant_under_iwahori(p, steps, c):
    m = walk_matrix(p, steps)
    g = unit_matrix(p, c, lower_divisible=True)
    e = normalize_edge(m, p)
    assert normalize_edge(mat_mul(m, g), p) == e
    assert source(e) == normalize_vertex(m, p)


@settings(max_examples=100, deadline=None)
@given(PRIMES, st.lists(st.integers(0, 100), max_size=6))
def test_reverse_is_an_involution(p, steps):
    for e in edges_leaving(normalize_vertex(walk_matrix(p, steps), p)):
        r = reverse(e)
        assert reverse(r) == e
        assert source(r) == target(e) and target(r) == source(e)
        assert r != e


@pytest.mark.parametrize("p", [2, 3, 5])
def test_distances_match_breadth_first_search(p):
    o = origin(p)
    layer = {o: 0}
    frontier = [o]
    for k in range(1, 5):
        nxt = []
        for v in frontier:
            for w in neighbors(v):
                if w not in layer:
                    layer[w] = k
                    nxt.append(w)
        frontier = nxt
    assert len(layer) == 1 + sum((p + 1) * p ** (k - 1) for k in range(1, 5))
    for v, k in layer.items():
        assert distance(o, v) == k == v.detval
    assert list(ball(o, 4)) and set(ball(o, 4)) == set(layer)
    rng = random.Random(p)
    vs = list(layer)
    for _ in range(200):
        u, w = rng.choice(vs), rng.choice(vs)
        assert distance(u, w) == distance(w, u)
        assert distance(u, w) <= layer[u] + layer[w]
        assert (distance(u, w) - layer[u] - layer[w]) % 2 == 0


@settings(max_examples=60, deadline=None)
@given(PRIMES, st.lists(st.integers(0, 100), max_size=6))
def test_neighbors_and_leaving_edges(p, steps):
    v = normalize_vertex(walk_matrix(p, steps), p)
    ns = neighbors(v)
    assert len(set(ns)) == p + 1
    assert all(distance(v, w) == 1 and v in neighbors(w) for w in ns)
    es = edges_leaving(v)
    assert [target(e) for e in es] == ns
    assert all(source(e) == v for e in es)


def test_random_elements_have_requested_distance():
    rng = random.Random(5)
    for p in (2, 3, 31):
        for k in (0, 1, 7, 20):
            assert distance(origin(p), random_vertex(p, k, rng)) == k
            assert distance(origin(p), source(random_edge(p, k, rng))) == k


def test_parse_matrix():
    assert parse_matrix("[[3,0],[1,81]]") == (3, 0, 1, 81)
    for bad in ("[[1,2]]", "nonsense", "[[1,2],[3]]"):
        with pytest.raises(TreeError):
            parse_matrix(bad)
    with pytest.raises(TreeError):
        normalize_vertex((1, 2, 2, 4), 3)
