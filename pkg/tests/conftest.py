"""Shared test fixtures."""

from __future__ import annotations

import pytest

from app.config import Settings
from app.model.loader import example_path, load_free_split, load_spec
from app.model.spec import ColumnSpec, ComponentSystem, StreamSpec
from app.services.minreflux import vreb_min


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run stage-by-stage oracle tests")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def settings() -> Settings:
    return Settings(threads=2)


@pytest.fixture(scope="session")
def ex1() -> ColumnSpec:
    """Two saturated-liquid feeds, hexane/heptane/octane."""
    return load_spec(example_path("ex1_scenario1"))


@pytest.fixture(scope="session")
def ex1_swapped() -> ColumnSpec:
    return load_spec(example_path("ex1_scenario2"))


@pytest.fixture(scope="session")
def ex2() -> ColumnSpec:
    """Sidedraw, feed, sidedraw."""
    return load_spec(example_path("ex2"))


@pytest.fixture(scope="session")
def ex3() -> ColumnSpec:
    """Four components, vapor feed, BC sidedraw, liquid feed."""
    return load_spec(example_path("ex3_fixed"))


@pytest.fixture(scope="session")
def ex3_free():
    return load_free_split(example_path("ex3_free"))


@pytest.fixture(scope="session")
def ex1_result(ex1):
    return vreb_min(ex1)


@pytest.fixture(scope="session")
def ex2_result(ex2):
    return vreb_min(ex2)


@pytest.fixture(scope="session")
def ex3_result(ex3):
    return vreb_min(ex3)


def _make_system(alphas: tuple[float, ...], names: tuple[str, ...] | None = None) -> ComponentSystem:
    names = names or tuple(f"c{i}" for i in range(1, len(alphas) + 1))
    return ComponentSystem(names=names, alphas=alphas)


def _make_feed(name: str, position: int, flows: tuple[float, ...], vapor: bool = False) -> StreamSpec:
    zeros = (0.0,) * len(flows)
    return StreamSpec(
        name=name,
        kind="feed",
        position=position,
        flows=flows,
        liquid=zeros if vapor else flows,
        vapor=flows if vapor else zeros,
        thermal_state="saturated-vapor" if vapor else "saturated-liquid",
    )


def _make_sidedraw(name: str, position: int, withdrawn: tuple[float, ...]) -> StreamSpec:
    flows = tuple(-x for x in withdrawn)
    return StreamSpec(
        name=name,
        kind="sidedraw",
        position=position,
        flows=flows,
        liquid=flows,
        vapor=(0.0,) * len(flows),
    )


def _make_column(
    alphas: tuple[float, ...],
    streams: tuple[StreamSpec, ...],
    distillate: tuple[float, ...],
    name: str = "test",
) -> ColumnSpec:
    return ColumnSpec(name=name, components=_make_system(alphas), streams=streams, distillate=distillate)


@pytest.fixture
def binary_column() -> ColumnSpec:
    """One saturated-liquid feed, 50/50 binary, 95% recovery of the light key."""
    return _make_column((1.0, 2.5), (_make_feed("F", 1, (50.0, 50.0)),), (2.5, 47.5), name="binary")


@pytest.fixture
def ternary_column() -> ColumnSpec:
    """One saturated-liquid feed, sharp light/heavy split with a distributed middle."""
    return _make_column(
        (1.0, 2.0, 4.0), (_make_feed("F", 1, (30.0, 40.0, 30.0)),), (0.0, 10.0, 30.0), name="ternary"
    )
