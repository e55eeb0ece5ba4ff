from pathlib import Path

import pytest

from mapindep.cli import load_network

ROOT = Path(__file__).resolve().parents[1]
FIXTURES = ROOT / "fixtures"


@pytest.fixture(scope="session")
def fig1a():
    return load_network(FIXTURES / "fig1a.json")


@pytest.fixture(scope="session")
def fig1b():
    return load_network(FIXTURES / "fig1b.json")


@pytest.fixture(scope="session")
def fn_ter():
    return load_network(FIXTURES / "fn_ter.json")


@pytest.fixture(scope="session")
def fn_bin():
    return load_network(FIXTURES / "fn_bin.json")
