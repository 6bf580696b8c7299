"""
Serialization, run configuration and the Delaunay solution cache.

JSON output is UTF-8 with fields in insertion order, and every document
carries a ``schema`` tag.  CSV output goes through :mod:`csv` with a header
row.  The cache is an append-only JSON-lines file; a record is used only
when its key and its version tag both match exactly, so a version bump
silently retires older entries.
"""

import csv
import io as _io
import json
import os
import threading
import time
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from .delaunay import DelaunaySolution, shoot_delaunay
from .errors import DomainError

__all__ = [
    "SCHEMA",
    "RunConfig",
    "DelaunayCache",
    "default_cache_path",
    "cached_shoot",
    "to_jsonable",
    "dumps",
    "write_json",
    "read_json",
    "check_schema",
    "csv_text",
    "write_csv",
]

SCHEMA = f"qflow/{__version__}"


def to_jsonable(obj):
    """Recursively convert numpy scalars and arrays, fractions and tuples."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, Fraction):
        return float(obj)
    return obj


def dumps(obj, schema=True):
    """Deterministic JSON text; a schema tag is put first unless disabled."""
    obj = to_jsonable(obj)
    if schema and isinstance(obj, dict):
        obj = {"schema": SCHEMA, **{k: v for k, v in obj.items() if k != "schema"}}
    return json.dumps(obj, indent=2, ensure_ascii=False, allow_nan=True) + "\n"


def write_json(obj, path, schema=True):
    Path(path).write_text(dumps(obj, schema=schema), encoding="utf-8")


def read_json(path):
    return json.loads(Path(path).read_text(encoding="utf-8"))


def check_schema(doc):
    """Raise DomainError unless ``doc`` carries this version's schema tag."""
    tag = doc.get("schema") if isinstance(doc, dict) else None
    if tag != SCHEMA:
        raise DomainError(f"schema mismatch: expected {SCHEMA!r}, found {tag!r}")
    return doc


def csv_text(rows, columns=None):
    """RFC 4180 text (CRLF line ends) with a header row."""
    rows = [to_jsonable(r) for r in rows]
    if columns is None:
        columns = []
        for r in rows:
            columns.extend(k for k in r if k not in columns)
    buf = _io.StringIO(newline="")
    w = csv.DictWriter(buf, fieldnames=columns, lineterminator="\r\n", extrasaction="ignore")
    w.writeheader()
    for r in rows:
        w.writerow({k: ("" if r.get(k) is None else repr(r[k]) if isinstance(r.get(k), float) else r[k]) for k in columns})
    return buf.getvalue()


def write_csv(rows, path, columns=None):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(csv_text(rows, columns))


@dataclass
class RunConfig:
    """Flags shared by the commands; every field has a printable default."""

    n: int = 5
    eps: tuple = (0.2,)
    step: float = 1e-4
    tol: float = 1e-10
    delta0: float = 0.05
    delta1: float = 0.02
    delta2: float = 0.03
    m: float = 0.04
    b: float = 0.0
    l_max: int = 4
    out: str = None
    cache: str = None
    extra: dict = field(default_factory=dict)

    def validate(self):
        if int(self.n) != self.n or self.n < 5:
            raise DomainError(f"n must be ≥ 5 (got {self.n})")
        if not self.eps:
            raise DomainError("at least one eps is required")
        if self.step <= 0 or self.tol <= 0:
            raise DomainError("step and tol must be positive")
        if self.l_max < 0:
            raise DomainError("l_max must be non-negative")
        return self

    def as_dict(self):
        d = asdict(self)
        d["eps"] = list(self.eps)
        return d


def default_cache_path():
    """QFLOW_CACHE if set, otherwise ~/.cache/qflow/delaunay.jsonl."""
    env = os.environ.get("QFLOW_CACHE")
    if env:
        return Path(env)
    return Path.home() / ".cache" / "qflow" / "delaunay.jsonl"


class DelaunayCache:
    """Append-only JSON-lines cache of shooting results keyed by (n, eps, step, tol)."""

    _lock = threading.Lock()

    def __init__(self, path=None):
        self.path = Path(path) if path is not None else default_cache_path()

    @staticmethod
    def key(n, eps, step, tol):
        return [int(n), float(eps), float(step), float(tol)]

    def lookup(self, n, eps, step, tol):
        """Latest matching record for the key, or None."""
        key = self.key(n, eps, step, tol)
        if not self.path.exists():
            return None
        hit = None
        with open(self.path, encoding="utf-8") as fh:
            for line in fh:
                try:
                    rec = json.loads(line)
                except json.JSONDecodeError:
                    continue
                if rec.get("key") == key and rec.get("version") == __version__:
                    hit = rec
        return hit

    def store(self, solution, tol, step=None):
        step = solution.step if step is None else step
        rec = {
            "key": self.key(solution.params.n, solution.eps, step, tol),
            "version": __version__,
            "created": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
            "solution": solution.to_record(),
        }
        self.path.parent.mkdir(parents=True, exist_ok=True)
        with self._lock, open(self.path, "a", encoding="utf-8") as fh:
            fh.write(json.dumps(rec) + "\n")
        return rec


def cached_shoot(params, eps, step=1e-4, tol=1e-10, cache=None):
    """Shoot with the cache; returns (solution, hit).

    ``cache=False`` disables caching.  A hit rebuilds the samples from the
    stored shooting value, which reproduces a fresh shot bit for bit.
    """
    if cache is False:
        return shoot_delaunay(params, eps, tol=tol, step=step), False
    cache = cache if isinstance(cache, DelaunayCache) else DelaunayCache(cache)
    rec = cache.lookup(params.n, eps, step, tol)
    if rec is not None:
        return DelaunaySolution.from_record(rec["solution"]), True
    sol = shoot_delaunay(params, eps, tol=tol, step=step)
    cache.store(sol, tol, step)
    return sol, False
