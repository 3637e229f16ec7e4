import random

import pytest
from hypothesis import given, settings, strategies as st

from btq.bttree import distance, edges_leaving, origin, random_edge, random_vertex, reverse
from btq.equiv import GroupElement, is_equivalent, make_problem, naive_equivalent


@pytest.fixture(scope="module")
def ctx(sqrt97):
    return sqrt97.context


def test_identity_shortcut(ctx):
    v = random_vertex(ctx.p, 4, random.Random(1))
    before = ctx.stats.lattice_builds
    g = is_equivalent(ctx, v, v)
    assert ctx.stats.lattice_builds == before
    assert ctx.in_gamma(g) and ctx.act(g, v) == v


def test_odd_sum_rejected_without_lattice(ctx):
    rng = random.Random(2)
    before = ctx.stats.lattice_builds
    for _ in range(50):
        u = random_vertex(ctx.p, rng.randint(0, 6), rng)
        v = random_vertex(ctx.p, rng.randint(0, 6), rng)
        if (u.detval + v.detval) % 2:
            assert is_equivalent(ctx, u, v) is None
    assert ctx.stats.lattice_builds == before


def test_make_problem_parameters():
    o = origin(3)
    v = random_vertex(3, 4, random.Random(0))
    P = make_problem(o, v, 3)
    assert (P.m, P.t, P.h, P.N) == (2, 1, 1, 7)
    assert make_problem(o, random_vertex(3, 3, random.Random(0)), 1) is None
    with pytest.raises(ValueError):
        make_problem(o, edges_leaving(o)[0], 1)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**6), st.integers(0, 3), st.booleans())
def test_orbit_members_are_found(ctx, seed, k, edge):
    """gamma u is always equivalent to u, and the witness verifies."""
    rng = random.Random(seed)
    elems = ctx.elements_of_level(1)
    gamma = GroupElement(rng.choice(elems), 1)
    assert ctx.in_gamma(gamma)
    u = random_edge(ctx.p, k, rng) if edge else random_vertex(ctx.p, k, rng)
    v = ctx.act(gamma, u)
    g = is_equivalent(ctx, u, v)
    assert g is not None and ctx.in_gamma(g) and ctx.act(g, u) == v
    back = is_equivalent(ctx, v, u)
    assert back is not None and ctx.act(back, v) == u


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**6))
def test_agrees_with_naive_oracle(ctx, seed):
    rng = random.Random(seed)
    u = random_vertex(ctx.p, rng.randint(0, 2), rng)
    v = random_vertex(ctx.p, rng.randint(0, 2), rng)
    a, b = is_equivalent(ctx, u, v), naive_equivalent(ctx, u, v)
    assert (a is None) == (b is None)
    if a is not None:
        assert a == b and ctx.act(a, u) == v


def test_edge_equivalence_respects_orientation(ctx):
    rng = random.Random(3)
    e = random_edge(ctx.p, 2, rng)
    g = is_equivalent(ctx, e, e)
    assert g is not None
    # Gamma acts without inversions
    assert is_equivalent(ctx, e, reverse(e)) is None


def test_act_composes(ctx):
    rng = random.Random(4)
    elems = ctx.elements_of_level(1)
    g, h = GroupElement(rng.choice(elems), 1), GroupElement(rng.choice(elems), 1)
    v = random_vertex(ctx.p, 3, rng)
    assert ctx.act(ctx.compose(g, h), v) == ctx.act(g, ctx.act(h, v))
    assert ctx.act(ctx.inverse(g), ctx.act(g, v)) == v
    assert distance(ctx.act(g, v), ctx.act(g, origin(ctx.p))) == distance(v, origin(ctx.p))
