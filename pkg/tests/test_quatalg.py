from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from btq.field import IdealData, field_by_label, rationals
from btq.quatalg import (
    QuaternionAlgebra,
    QuaternionError,
    algebra_from_discriminant,
    eichler_order,
    hilbert_symbol,
    maximal_order,
    order_from_basis,
    standard_order,
)

Q = rationals()
Q5 = field_by_label("2.2.5.1")


def classical_hilbert(a: int, b: int, p: int) -> int:
    """Textbook formula for (a, b)_p over Q_p."""

    def split(x):
        v = 0
        while x % p == 0:
            x //= p
            v += 1
        return v, x

    al, u = split(a)
    be, w = split(b)
    if p != 2:
        def leg(x):
            r = pow(x % p, (p - 1) // 2, p)
            return -1 if r == p - 1 else 1

        sign = -1 if (al * be * (p - 1) // 2) % 2 else 1
        return sign * leg(u) ** be * leg(w) ** al

    def eps(x):
        return ((x - 1) // 2) % 2

    def omega(x):
        return ((x * x - 1) // 8) % 2

    e = (eps(u) * eps(w) + al * omega(w) + be * omega(u)) % 2
    return -1 if e else 1


def hamilton():
    return QuaternionAlgebra(Q, Q(-1), Q(-1))


@settings(max_examples=150, deadline=None)
@given(
    st.integers(-60, 60).filter(lambda x: x != 0),
    st.integers(-60, 60).filter(lambda x: x != 0),
    st.sampled_from([2, 3, 5, 7, 11, 13]),
)
def test_hilbert_symbol_over_q(a, b, p):
    q = Q.primes_above(p)[0]
    assert hilbert_symbol(Q(a), Q(b), q) == classical_hilbert(a, b, p)


def test_hamilton_ramification():
    B = hamilton()
    assert [q.p for q in B.ram_finite] == [2]
    assert B.is_definite


def test_lipschitz_and_hurwitz_discriminants():
    B = hamilton()
    L = standard_order(B)
    assert L.discriminant.norm == 4
    O = maximal_order(L)
    assert O.discriminant.norm == 2
    assert L.index_in(O) == 2
    half = B([Fraction(1, 2)] * 4)
    assert half in O and half not in L


def test_hurwitz_from_basis():
    B = hamilton()
    h = [["1/2", "1/2", "1/2", "1/2"], [0, 1, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1]]
    O = order_from_basis(B, h)
    assert O.discriminant.norm == 2
    with pytest.raises(QuaternionError):
        order_from_basis(B, [["1/3", 0, 0, 0], [0, 1, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1]])


@settings(max_examples=60, deadline=None)
@given(st.lists(st.integers(-9, 9), min_size=8, max_size=8))
def test_reduced_norm_multiplicative(c):
    B = QuaternionAlgebra(Q5, Q5(-1), Q5([-3, 0]))
    x = B([Q5([c[0], c[1]]), Q5([c[2], 0]), Q5([0, c[3]]), Q5([c[4], c[5]])])
    y = B([Q5([c[6], 1]), Q5([c[7], 0]), Q5([1, c[1]]), Q5([0, c[2]])])
    assert (x * y).nrd() == x.nrd() * y.nrd()
    assert (x * y).conj() == y.conj() * x.conj()
    assert x * x.conj() == B.scalar(x.nrd())


def test_algebra_from_discriminant_q5_21():
    N = Q5.ideal([Q5(21)]).factor()
    B = algebra_from_discriminant(Q5, N)
    assert B.is_definite
    assert IdealData.from_factors(Q5, [(q, 1) for q in B.ram_finite]) == N
    O = maximal_order(standard_order(B))
    assert O.discriminant == N


def test_unramified_definite_algebra_over_q5():
    B = algebra_from_discriminant(Q5, IdealData.unit())
    assert B.ram_finite == ()
    O = maximal_order(standard_order(B))
    assert O.discriminant.norm == 1


@pytest.mark.parametrize("level", [3, 9, 2, 7, 11, 4])
def test_eichler_discriminants_q5(level):
    B = algebra_from_discriminant(Q5, IdealData.unit())
    O = maximal_order(standard_order(B))
    N = Q5.ideal([Q5(level)]).factor()
    R = eichler_order(O, N)
    assert R.discriminant == N
    assert R.index_in(O) == N.norm


def test_eichler_level_over_q():
    O = maximal_order(standard_order(hamilton()))
    N = Q.ideal([Q(3)]).factor()
    R = eichler_order(O, N)
    assert R.discriminant.norm == 6
    with pytest.raises(QuaternionError):
        eichler_order(O, Q.ideal([Q(2)]).factor())


def test_maximal_order_is_closed_and_integral():
    B = algebra_from_discriminant(Q5, Q5.ideal([Q5(21)]).factor())
    O = maximal_order(standard_order(B))
    for x in O.zbasis:
        assert x.nrd().is_integral() and x.trd().is_integral()
        for y in O.zbasis:
            assert x * y in O
