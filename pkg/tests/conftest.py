import json
import sys
from pathlib import Path

import pytest

from btq.fundom import fundamental_domain
from btq.problem import build, parse_config

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def load(name: str, **prime) -> dict:
    raw = json.loads((CONFIGS / f"{name}.json").read_text())
    raw["prime"].update(prime)
    return raw


def problem(name: str, **prime):
    return build(parse_config(load(name, **prime)))


@pytest.fixture(scope="session")
def sqrt97():
    return problem("sqrt97")


@pytest.fixture(scope="session")
def sqrt97_graph(sqrt97):
    return fundamental_domain(sqrt97.context)


@pytest.fixture(scope="session")
def sqrt5_21():
    return problem("sqrt5_genus65")


@pytest.fixture(scope="session")
def sqrt5_21_graph(sqrt5_21):
    return fundamental_domain(sqrt5_21.context)


@pytest.fixture(scope="session")
def phi31():
    return problem("phi31")


@pytest.fixture(scope="session")
def hamilton():
    cache = {}

    def get(p: int):
        if p not in cache:
            cache[p] = problem("hamilton_p3", p=p, r=0)
        return cache[p]

    return get


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("tests.test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[n])
