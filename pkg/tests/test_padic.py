import itertools
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from btq.padic import (
    PadicError,
    build_splitting,
    hensel_root,
    howell_form,
    is_padic_square,
    left_kernel_mod,
    padic_sqrt,
    reduce_frac,
    verify_splitting,
    vp,
    vp_frac,
)
from btq.field import IdealData, field_by_label, principalize, site_from_root, split_prime
from btq.quatalg import algebra_from_discriminant, maximal_order, standard_order

primes = st.sampled_from([2, 3, 5, 7, 11])


def test_valuation():
    assert vp(48, 2) == 4
    assert vp(0, 3, cap=7) == 7
    with pytest.raises(PadicError):
        vp(0, 3)


def test_hensel_root_of_golden_polynomial():
    # x^2 - x - 1 has the roots 4 and 8 modulo 11
    for r in (4, 8):
        s = hensel_root([-1, -1, 1], r, 11, 20)
        assert (s * s - s - 1) % 11**20 == 0 and s % 11 == r


def test_hensel_root_rejects_double_root():
    with pytest.raises(PadicError):
        hensel_root([0, 0, 1], 0, 5, 4)


@settings(max_examples=80, deadline=None)
@given(primes, st.integers(1, 10**6), st.integers(0, 4))
def test_padic_square_against_brute_force(p, u, k):
    x = Fraction(u) * p ** (2 * k)
    # oracle: a unit u is a square in Q_p iff it is a square mod p^3 (p^1 for odd p suffices)
    v = vp(u, p)
    if v % 2:
        expected = False
    else:
        unit = u // p**v
        mod = 8 if p == 2 else p
        expected = any((y * y - unit) % mod == 0 for y in range(mod) if y % p)
    assert is_padic_square(x, p) == expected
    if expected:
        s = padic_sqrt(x, p, 12)
        assert s * s == x or vp_frac(s * s - x, p) >= 12


def test_reduce_frac():
    assert reduce_frac(Fraction(1, 2), 3, 2) * 2 % 9 == 1
    with pytest.raises(PadicError):
        reduce_frac(Fraction(1, 3), 3, 2)


def _span(gens, mod, m):
    """All Z/mod combinations of the generators (tiny cases only)."""
    seen = {tuple([0] * m)}
    frontier = list(seen)
    while frontier:
        nxt = []
        for v in frontier:
            for g in gens:
                w = tuple((a + b) % mod for a, b in zip(v, g))
                if w not in seen:
                    seen.add(w)
                    nxt.append(w)
        frontier = nxt
    return seen


@settings(max_examples=40, deadline=None)
@given(
    st.sampled_from([(2, 2), (2, 3), (3, 2)]),
    st.integers(1, 3).flatmap(lambda m: st.lists(st.lists(st.integers(0, 26), min_size=2, max_size=2), min_size=m, max_size=m)),
)
def test_left_kernel_is_complete(pN, a):
    p, N = pN
    mod = p**N
    m = len(a)
    K = left_kernel_mod(a, p, N)
    for k in K:
        assert all(sum(k[i] * a[i][j] for i in range(m)) % mod == 0 for j in range(2))
    brute = {
        x for x in itertools.product(range(mod), repeat=m)
        if all(sum(x[i] * a[i][j] for i in range(m)) % mod == 0 for j in range(2))
    }
    assert _span([tuple(k) for k in K], mod, m) == brute


def test_howell_form_preserves_span():
    rows = [[2, 4, 1], [6, 3, 0], [0, 9, 4]]
    piv, rest = howell_form(rows, 3, 2)
    mod = 9
    assert _span([tuple(r) for r in piv + rest], mod, 3) == _span([tuple(x % mod for x in r) for r in rows], mod, 3)


def test_splitting_of_problem_orders(sqrt97, sqrt5_21, hamilton):
    for P in (sqrt97, sqrt5_21, hamilton(3), hamilton(13)):
        sm = build_splitting(P.order, P.site, 24)
        verify_splitting(P.order, sm)


@settings(max_examples=25, deadline=None)
@given(st.lists(st.integers(-5, 5), min_size=8, max_size=8), st.lists(st.integers(-5, 5), min_size=8, max_size=8))
def test_splitting_is_multiplicative(x, y):
    from tests.conftest import problem

    P = _cached("sqrt97", problem)
    R, ctx = P.order, P.context
    N = 10
    mod = 3**N
    a, b, c, d = ctx.image(x, N)
    e, f, g, h = ctx.image(y, N)
    prod = ctx.image(R.mul(x, y), N)
    assert prod == ((a * e + b * g) % mod, (a * f + b * h) % mod, (c * e + d * g) % mod, (c * f + d * h) % mod)
    assert (a * d - b * c - P.site.embed(R.nrd(x), N)) % mod == 0


_CACHE = {}


def _cached(name, factory):
    if name not in _CACHE:
        _CACHE[name] = factory(name)
    return _CACHE[name]


def test_splitting_when_small_pure_quaternions_have_nonsquare_norm():
    # a = b = -1 over Q(sqrt 5) at a prime above 2551: every -(c1^2 + c2^2) with c <= 5 is a non-square there
    F = field_by_label("2.2.5.1")
    B = algebra_from_discriminant(F, IdealData.unit())
    R = maximal_order(standard_order(B))
    site = principalize(site_from_root(F, 2551, 1412))
    verify_splitting(R, build_splitting(R, site, 16))


def test_splitting_at_a_dyadic_prime_with_unit_pivot():
    # conjugation needs a non-trivial unit in the column Hermite step at 2
    F = field_by_label("2.2.33.1")
    site = principalize(split_prime(F, 2)[1])
    others = [q for q in F.primes_above(2) if q != site.prime]
    N = IdealData.from_factors(F, [(F.primes_above(17)[1], 1), (others[0], 1)])
    R = maximal_order(standard_order(algebra_from_discriminant(F, N)))
    verify_splitting(R, build_splitting(R, site, 16))
