import csv
import io
import json
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qflow import __version__
from qflow.core import make_params
from qflow.errors import DomainError
from qflow.io import (
    SCHEMA,
    DelaunayCache,
    RunConfig,
    cached_shoot,
    check_schema,
    csv_text,
    default_cache_path,
    dumps,
    read_json,
    to_jsonable,
    write_csv,
    write_json,
)


def test_jsonable_conversions():
    obj = {"a": np.float64(1.5), "b": np.arange(3), "c": (1, Fraction(1, 4)), "d": np.bool_(True), 3: np.int64(2)}
    out = to_jsonable(obj)
    assert out == {"a": 1.5, "b": [0, 1, 2], "c": [1, 0.25], "d": True, "3": 2}
    json.dumps(out)


def test_dumps_puts_schema_first():
    text = dumps({"x": 1, "schema": "old"})
    doc = json.loads(text)
    assert list(doc) == ["schema", "x"]
    assert doc["schema"] == SCHEMA == f"qflow/{__version__}"
    assert text.endswith("\n")
    assert "schema" not in json.loads(dumps({"x": 1}, schema=False))


def test_json_round_trip(tmp_path):
    path = tmp_path / "doc.json"
    write_json({"v": [1.0, 2.5]}, path)
    doc = read_json(path)
    assert check_schema(doc)["v"] == [1.0, 2.5]
    with pytest.raises(DomainError):
        check_schema({"schema": "qflow/0.0.0"})
    with pytest.raises(DomainError):
        check_schema([1, 2])


def test_csv_text_format(tmp_path):
    rows = [{"a": 1, "b": 0.1}, {"a": 2, "c": "x,y"}]
    text = csv_text(rows)
    assert text.split("\r\n")[0] == "a,b,c"
    parsed = list(csv.DictReader(io.StringIO(text)))
    assert parsed[0] == {"a": "1", "b": "0.1", "c": ""}
    assert parsed[1]["c"] == "x,y"
    path = tmp_path / "t.csv"
    write_csv(rows, path, columns=["b", "a"])
    assert path.read_bytes().startswith(b"b,a\r\n")


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(allow_nan=False, allow_infinity=False), min_size=1, max_size=8))
def test_csv_floats_round_trip(values):
    text = csv_text([{"x": v} for v in values])
    back = [float(r["x"]) for r in csv.DictReader(io.StringIO(text))]
    assert back == values


def test_run_config():
    cfg = RunConfig().validate()
    assert cfg.as_dict()["eps"] == [0.2]
    for bad in (RunConfig(n=4), RunConfig(eps=()), RunConfig(step=0.0), RunConfig(l_max=-1)):
        with pytest.raises(DomainError):
            bad.validate()


def test_default_cache_path(monkeypatch, tmp_path):
    monkeypatch.setenv("QFLOW_CACHE", str(tmp_path / "c.jsonl"))
    assert default_cache_path() == tmp_path / "c.jsonl"
    monkeypatch.delenv("QFLOW_CACHE")
    assert default_cache_path().name == "delaunay.jsonl"


def test_cache_round_trip_is_bitwise(tmp_path):
    p = make_params(6)
    cache = DelaunayCache(tmp_path / "cache.jsonl")
    fresh, hit = cached_shoot(p, 0.1, cache=cache)
    assert not hit
    again, hit = cached_shoot(p, 0.1, cache=cache)
    assert hit
    assert again.q == fresh.q and again.period == fresh.period
    assert np.array_equal(again.samples, fresh.samples)
    assert dumps(again.to_record()) == dumps(fresh.to_record())
    assert len((tmp_path / "cache.jsonl").read_text().splitlines()) == 1


def test_cache_key_and_version(tmp_path, sol5):
    path = tmp_path / "cache.jsonl"
    cache = DelaunayCache(path)
    assert cache.lookup(5, 0.2, 1e-4, 1e-10) is None
    cache.store(sol5, 1e-10, 1e-4)
    assert cache.lookup(5, 0.2, 1e-4, 1e-10) is not None
    assert cache.lookup(5, 0.2, 1e-4, 1e-9) is None
    assert cache.lookup(5, 0.3, 1e-4, 1e-10) is None
    # foreign versions and corrupt lines are ignored
    rec = json.loads(path.read_text())
    rec["version"] = "0.0.0"
    with open(path, "a") as fh:
        fh.write("not json\n")
    path.write_text(json.dumps(rec) + "\nnot json\n")
    assert cache.lookup(5, 0.2, 1e-4, 1e-10) is None


def test_cache_disabled(tmp_path, monkeypatch):
    monkeypatch.setenv("QFLOW_CACHE", str(tmp_path / "never.jsonl"))
    _, hit = cached_shoot(make_params(5), 0.2, cache=False)
    assert not hit
    assert not (tmp_path / "never.jsonl").exists()
