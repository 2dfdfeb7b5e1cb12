import pytest

from polylat.fieldpoly import ModulusContext


@pytest.fixture(scope="session")
def ctx22():
    # b=2, p = x^2 + x + 1
    return ModulusContext.create(2, 2)


@pytest.fixture(scope="session")
def ctx24():
    return ModulusContext.create(2, 4)


@pytest.fixture(scope="session")
def ctx32():
    return ModulusContext.create(3, 2)
