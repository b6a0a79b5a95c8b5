import numpy as np
import pytest
from fastapi.testclient import TestClient

from fracstab.service.app import app


def multiset_gap(a, b):
    """Largest pairing distance between two complex multisets (greedy nearest)."""
    pool = list(b)
    worst = 0.0
    for z in a:
        j = min(range(len(pool)), key=lambda i: abs(z - pool[i]))
        worst = max(worst, abs(z - pool[j]))
        pool.pop(j)
    return worst


@pytest.fixture(scope="session")
def client():
    with TestClient(app) as c:
        yield c


@pytest.fixture()
def rng():
    return np.random.default_rng(20260819)
