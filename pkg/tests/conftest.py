import numpy as np
import pytest

from srsmine import load_statin_table
from srsmine.stochastic import RngStream
from srsmine.tables import ContingencyTable


@pytest.fixture(scope="session")
def statin_table():
    return load_statin_table()


@pytest.fixture
def rng():
    return RngStream(20250809)


@pytest.fixture
def small_table():
    counts = np.array(
        [
            [12, 3, 40],
            [5, 9, 22],
            [0, 2, 31],
            [7, 1, 18],
            [3, 6, 55],
        ]
    )
    return ContingencyTable(counts, tuple("abcde"), ("D1", "D2", "Other"))
