import pytest

from zeroising.plane_graph import build_lattice


@pytest.fixture(scope="session")
def square9():
    return build_lattice("square", 9, "free")


@pytest.fixture(scope="session")
def square21():
    return build_lattice("square", 21, "free")


@pytest.fixture(scope="session")
def torus16():
    return build_lattice("square", 16, "periodic")


@pytest.fixture(scope="session")
def hexagonal8():
    return build_lattice("hexagonal", 8, "free")


@pytest.fixture(scope="session")
def triangular15():
    return build_lattice("triangular", 15, "free")
