import csv
import io
import json

import numpy as np
import pytest
from numpy.testing import assert_allclose

from qflow.cli import EXIT_IO, EXIT_NUMERIC, EXIT_OK, EXIT_USAGE, build_parser, main
from qflow.io import SCHEMA


def _run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_params(capsys):
    code, out, _ = _run(capsys, "params", "--n", "5")
    doc = json.loads(out)
    assert code == EXIT_OK
    assert doc["schema"] == SCHEMA
    assert doc["params"]["A"] == 6.5 and doc["params"]["C_exact"] == "105/16"


def test_params_rejects_low_dimension(capsys):
    code, _, err = _run(capsys, "params", "--n", "4")
    assert code == EXIT_USAGE
    assert "n must be" in err


def test_bad_flag_is_usage_error(capsys):
    with pytest.raises(SystemExit) as info:
        main(["params", "--bogus"])
    assert info.value.code == 2


def test_delaunay_cache_hit_is_identical(capsys, tmp_path):
    cache = str(tmp_path / "c.jsonl")
    code, first, err = _run(capsys, "delaunay", "--n", "5", "--eps", "0.2", "--cache", cache)
    assert code == EXIT_OK and "cache miss" in err
    code, second, err = _run(capsys, "delaunay", "--n", "5", "--eps", "0.2", "--cache", cache)
    assert code == EXIT_OK and "cache hit" in err
    assert first == second
    rec = json.loads(first)["solution"]
    assert_allclose(rec["q"], 0.04998257610574826, rtol=1e-9)


def test_delaunay_check_and_csv(capsys, tmp_path):
    path = tmp_path / "orbit.csv"
    code, out, _ = _run(capsys, "delaunay", "--n", "6", "--eps", "0.1", "--check", "--csv", str(path))
    ver = json.loads(out)["verification"]
    assert code == EXIT_OK
    assert ver["all_pass"] and ver["energy_inequality"]
    assert all(ver["sign_property"].values())
    rows = list(csv.DictReader(io.StringIO(path.read_text())))
    assert list(rows[0]) == ["t", "v", "v1", "v2", "v3"]
    assert float(rows[0]["v"]) == 0.1


def test_delaunay_domain_errors(capsys):
    code, _, err = _run(capsys, "delaunay", "--n", "5", "--eps", "0.9", "--no-cache")
    assert code == EXIT_USAGE
    code, _, _ = _run(capsys, "delaunay", "--n", "5", "--eps", "0.1,0.2", "--no-cache")
    assert code == EXIT_USAGE


def test_modes_and_n2n(capsys):
    code, out, _ = _run(capsys, "modes", "--n", "5", "--lmax", "3", "--format", "csv")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == EXIT_OK and [r["l"] for r in rows] == ["0", "1", "2", "3"]
    assert rows[1]["D_l"] == "-6"
    code, out, _ = _run(capsys, "n2n", "--n", "5", "--lmax", "3")
    doc = json.loads(out)
    assert [r["l"] for r in doc["n2n"]] == [2, 3]
    for r in doc["n2n"]:
        assert_allclose(r["det"], r["det_closed_form"], rtol=1e-12)
    assert_allclose(doc["n2n"][0]["M12"], 14 / 45, rtol=1e-12)
    code, _, _ = _run(capsys, "n2n", "--lmax", "1")
    assert code == EXIT_USAGE


def test_modesolve(capsys, tmp_path):
    path = tmp_path / "w.csv"
    code, out, _ = _run(capsys, "modesolve", "--n", "5", "--eps", "0.2", "--T", "5", "--scheme", "reflect",
                        "--csv", str(path))
    doc = json.loads(out)
    assert code == EXIT_OK
    assert_allclose(doc["smallest_eigenvalue"], 136.25, rtol=1e-3)
    assert doc["ratio"] > 0
    assert path.read_bytes().startswith(b"t,f,w\r\n")
    code, out, _ = _run(capsys, "modesolve", "--potential", "zero", "--forcing", "zero")
    assert code == EXIT_OK and json.loads(out)["ratio"] == 0.0
    code, _, _ = _run(capsys, "modesolve", "--potential", "zero", "--delta", "9")
    assert code == EXIT_USAGE


def test_glue(capsys):
    code, out, _ = _run(capsys, "glue", "--n", "5", "--eps", "0.2")
    doc = json.loads(out)
    assert code == EXIT_OK
    assert max(doc["mismatch"].values()) < 1e-13
    assert all(b["ok"] for b in doc["bounds"].values())
    assert doc["reduction"] == ["1", "1/4", "-1/12", "-1/24"]
    code, _, _ = _run(capsys, "glue", "--m", "0.01")
    assert code == EXIT_USAGE


def test_sweep_single_writer(capsys, tmp_path):
    cache = tmp_path / "c.jsonl"
    code, out, _ = _run(capsys, "sweep", "--what", "glue", "--eps", "0.3,0.2,0.1", "--workers", "2",
                        "--cache", str(cache))
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == EXIT_OK and len(rows) == 3
    lead = [float(r["leading_mismatch"]) for r in rows]
    assert np.all(np.diff(lead) < 0)
    assert len(cache.read_text().splitlines()) == 3
    code, again, _ = _run(capsys, "sweep", "--what", "glue", "--eps", "0.3,0.2,0.1", "--cache", str(cache))
    assert again == out
    assert len(cache.read_text().splitlines()) == 3


def test_config_and_explain(capsys, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"n": 6, "eps": [0.1], "delta0": 0.1}))
    code, out, _ = _run(capsys, "glue", "--config", str(cfg), "--explain")
    settings = json.loads(out)["settings"]
    assert code == EXIT_OK
    assert settings["n"] == 6 and settings["eps"] == [0.1] and settings["delta0"] == 0.1
    code, out, _ = _run(capsys, "glue", "--config", str(cfg), "--n", "7", "--explain")
    assert json.loads(out)["settings"]["n"] == 7
    cfg.write_text(json.dumps({"nonsense": 1}))
    code, _, _ = _run(capsys, "glue", "--config", str(cfg))
    assert code == EXIT_USAGE
    code, _, _ = _run(capsys, "glue", "--config", str(tmp_path / "missing.json"))
    assert code == EXIT_IO


def test_out_file(capsys, tmp_path):
    path = tmp_path / "p.json"
    code, out, _ = _run(capsys, "params", "--out", str(path))
    assert code == EXIT_OK and out == ""
    assert json.loads(path.read_text())["schema"] == SCHEMA
    code, _, _ = _run(capsys, "params", "--out", str(tmp_path / "no" / "such" / "dir.json"))
    assert code == EXIT_IO


def test_verify_inputs(capsys, tmp_path):
    good, bad = tmp_path / "good.json", tmp_path / "bad.json"
    _run(capsys, "params", "--out", str(good))
    bad.write_text(json.dumps({"schema": "qflow/0.0.0"}))
    code, _, err = _run(capsys, "verify", "--input", str(good), "--inputs-only")
    assert code == EXIT_OK and "schema ok" in err
    code, _, _ = _run(capsys, "verify", "--input", str(bad), "--inputs-only")
    assert code == EXIT_IO


def test_verify_subset(capsys):
    code, out, _ = _run(capsys, "verify", "--criteria", "1,4", "--no-repeat")
    assert code == EXIT_OK
    assert out.count("[PASS]") == 2


def test_parser_lists_every_command():
    sub = build_parser()._subparsers._group_actions[0].choices
    assert set(sub) == {"params", "delaunay", "modes", "n2n", "modesolve", "glue", "sweep", "verify"}


def test_numerical_failure_exit_code(capsys, monkeypatch):
    from qflow import cli
    from qflow.errors import ConvergenceError

    def boom(args):
        raise ConvergenceError("forced")

    monkeypatch.setattr(cli, "cmd_params", boom)
    assert main(["params"]) == EXIT_NUMERIC
