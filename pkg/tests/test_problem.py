import pytest

from btq.problem import ConfigError, build, parse_config

from .conftest import load


def build_raw(raw):
    return build(parse_config(raw))


def test_configs_build(sqrt97, sqrt5_21, phi31):
    assert sqrt97.site.delta.norm() in (3, -3)
    assert sqrt5_21.N_minus.norm == 441
    assert phi31.site.d == 1
    assert sqrt5_21.describe()["field"] == "2.2.5.1"


def test_explicit_hamilton_algebra(hamilton):
    P = hamilton(3)
    assert P.N_minus.norm == 2
    assert P.order.discriminant.norm == 2


@pytest.mark.parametrize(
    "patch",
    [
        {"prime": {"p": 11, "r": 3}},  # 3 is not a root of x^2 - x - 1 mod 11
        {"prime": {"p": 7, "r": 0}},  # 7 does not split
        {"Nminus": 33},  # contains the prime above 11
        {"Nminus": 3},  # odd number of ramified primes
        {"Nminus": 63},  # not squarefree
        {"order": {"kind": "level", "level": 3}},  # level meets the discriminant
        {"order": {"kind": "level"}},
        {"order": {"kind": "maximal", "level": 2}},
        {"bogus": 1},
        {"options": {"precision_cap": 4}},
        {"field": "9.9.9.9"},
        {"field": {"poly": [1, 0, 1]}},
        {"prime": {"p": 11, "r": 8, "d": 1, "delta": [2, -5]}},  # norm 31 element
    ],
)
def test_invalid_configs(patch):
    raw = load("sqrt5_genus65")
    raw.update(patch)
    with pytest.raises(ConfigError):
        build_raw(raw)


def test_algebra_must_match_discriminant():
    raw = load("hamilton_p3")
    raw["Nminus"] = 3
    with pytest.raises(ConfigError):
        build_raw(raw)
    raw = load("hamilton_p3")
    raw["algebra"] = {"a": [-1], "b": [3]}  # indefinite
    with pytest.raises(ConfigError):
        build_raw(raw)


def test_level_config_builds():
    raw = load("sqrt97")
    raw["order"] = {"kind": "level", "level": 5}
    P = build_raw(raw)
    assert P.N_plus.norm == 25
    assert P.order.discriminant == P.N_plus


def test_basis_order_checked():
    P = build_raw(load("hamilton_p3"))
    basis = [q.to_json() for q in P.order.zbasis]
    raw = load("hamilton_p3")
    raw["order"] = {"kind": "basis", "basis": basis}
    assert build_raw(raw).order == P.order
    raw["order"] = {"kind": "basis", "basis": [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1]]}
    with pytest.raises(ConfigError):
        build_raw(raw)
