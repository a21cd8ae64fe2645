import pytest

from collapse_lab.quadrature import QuadratureSpec


@pytest.fixture(scope="session")
def quad():
    return QuadratureSpec()
