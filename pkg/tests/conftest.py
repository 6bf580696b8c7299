import functools

import pytest

from qflow.core import make_params
from qflow.delaunay import shoot_delaunay


@functools.lru_cache(maxsize=None)
def _shot(n, eps, step=1e-4, tol=1e-10):
    return shoot_delaunay(make_params(n), eps, tol=tol, step=step)


@pytest.fixture(scope="session")
def shot():
    """Memoised Delaunay shooting, shared by every test module."""
    return _shot


@pytest.fixture(scope="session")
def sol5(shot):
    return shot(5, 0.2)


@pytest.fixture(scope="session")
def sol6(shot):
    return shot(6, 0.1)


@pytest.fixture(autouse=True)
def _isolated_cache(tmp_path, monkeypatch):
    monkeypatch.setenv("QFLOW_CACHE", str(tmp_path / "cache.jsonl"))
