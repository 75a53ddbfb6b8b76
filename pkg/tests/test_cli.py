import csv
import hashlib
import json
import math

import pytest

from hnlslab import acceptance, cli


def run_main(tmp_path, *argv):
    return cli.main([*argv, "--out", str(tmp_path)])


def test_emit_csv_is_sorted_and_deterministic(tmp_path):
    rows = [{"b": 1.5, "a": True, "c": "x"}, {"a": False, "b": math.inf}]
    p1 = cli.emit_report(rows, "csv", tmp_path / "one.csv")
    p2 = cli.emit_report(list(reversed(rows))[::-1], "csv", tmp_path / "two.csv")
    assert p1.read_bytes() == p2.read_bytes()
    lines = p1.read_text().splitlines()
    assert lines[0] == "a,b,c"
    assert lines[1] == "true,1.500000000000e+00,x"


def test_emit_csv_header_only_when_empty(tmp_path):
    p = cli.emit_report([], "csv", tmp_path / "e.csv", columns=["y", "x"])
    assert p.read_text() == "x,y\n"


def test_emit_json_canonical(tmp_path):
    p = cli.emit_report({"z": 0.1, "a": [1, float("nan")]}, "json", tmp_path / "r.json")
    doc = json.loads(p.read_text())
    assert list(doc) == ["a", "z"]
    assert doc["a"][1] == "nan"
    with pytest.raises(ValueError):
        cli.emit_report({}, "xml", tmp_path / "r.xml")


def test_unknown_parameter_is_a_config_error(tmp_path, capsys):
    assert run_main(tmp_path, "solve", "--param", "bogus=1") == 2
    assert "bogus" in capsys.readouterr().err


def test_bad_seed_is_a_config_error(tmp_path):
    assert run_main(tmp_path, "solve", "--seed", "-1") == 2


def test_non_dyadic_list_is_a_config_error(tmp_path):
    assert run_main(tmp_path, "kernel-scan", "--param", "N_list=[3, 4]") == 2


def test_missing_config_file_is_an_io_error(tmp_path):
    assert run_main(tmp_path, "--config", str(tmp_path / "missing.json")) == 3


def test_config_file_and_precedence(tmp_path, monkeypatch):
    conf = tmp_path / "c.json"
    conf.write_text(json.dumps({"command": "solve", "root_seed": 5, "parameters": {"k": 2}}))
    monkeypatch.setenv("HNLSLAB_SEED", "9")
    args = cli.build_parser().parse_args(["--config", str(conf), "--param", "dt=0.002"])
    cfg = cli.resolve_config(args)
    assert cfg["root_seed"] == 9  # environment beats the file
    assert cfg["parameters"]["k"] == 2 and cfg["parameters"]["dt"] == 0.002
    assert cfg["parameters"]["n_x"] == cli.DEFAULTS["solve"]["n_x"]
    args = cli.build_parser().parse_args(["--config", str(conf), "--seed", "11"])
    assert cli.resolve_config(args)["root_seed"] == 11  # flag beats the environment


def test_bad_environment_value():
    with pytest.raises(cli.ConfigError):
        cli.resolve_config(cli.build_parser().parse_args(["solve"]), env={"HNLSLAB_THREADS": "many"})


def test_solve_zero_data_passes_and_writes_manifest(tmp_path):
    code = run_main(tmp_path, "solve", "--param", "data=zero", "--param", "t_end=0.05", "--param", "stride=10")
    assert code == 0
    man = json.loads((tmp_path / "manifest.json").read_text())
    assert man["passed"] is True
    for name, digest in man["files"].items():
        assert hashlib.sha256((tmp_path / name).read_bytes()).hexdigest() == digest
    assert not (tmp_path / "manifest.json.tmp").exists()


def test_measure_scan_rows_and_thread_independence(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    args = ["measure-scan", "--param", "N_max=4", "--seed", "3"]
    assert cli.main([*args, "--out", str(a), "--threads", "1"]) == 0
    assert cli.main([*args, "--out", str(b), "--threads", "4"]) == 0
    files = json.loads((a / "manifest.json").read_text())["files"]
    assert files == json.loads((b / "manifest.json").read_text())["files"]
    csv_name = next(n for n in files if n.endswith(".csv"))
    rows = list(csv.DictReader(open(a / csv_name)))
    assert len(rows) == 10


def test_kernel_scan_small(tmp_path):
    code = run_main(tmp_path, "kernel-scan", "--param", "N_list=[2, 4, 8]", "--param", "n_t=8")
    man = json.loads((tmp_path / "manifest.json").read_text())
    assert code == (0 if man["passed"] else 1)
    assert any(n.endswith(".py") for n in man["files"])


def test_budget_plan_reduces_expensive_criteria():
    reduced = acceptance.plan(1)
    assert reduced[9] and reduced[12]
    assert not any(acceptance.plan(10_000).values())


def test_accept_all_partial_flag():
    summary = acceptance.accept_all(budget_min=1, which=[4, 6])
    assert [r.number for r in summary["results"]] == [4, 6]
    assert all(r.passed for r in summary["results"])
    assert summary["partial"] is False
    assert acceptance.accept_all(budget_min=0, which=[4, 6])["results"][-1].skipped


def test_schema_is_packaged():
    schema = cli.load_schema()
    assert set(schema["properties"]["command"]["enum"]) == set(cli.DEFAULTS)
