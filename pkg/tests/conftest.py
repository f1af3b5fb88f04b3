import pytest

from bounds.catalog import builtin_catalog
from bounds.oracle import Precision

P30 = Precision(30)
P40 = Precision(40)


@pytest.fixture(scope="session")
def cat():
    return builtin_catalog()
