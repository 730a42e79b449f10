import csv
import json
import math
from pathlib import Path

import pytest

from main import EXIT_OK, EXIT_TRUNCATED, EXIT_USAGE, main

CONFIG_DIR = Path(__file__).resolve().parent.parent / "config"


@pytest.fixture
def workspace(tmp_path):
    settings = tmp_path / "settings.json"
    settings.write_text(json.dumps({"db_path": str(tmp_path / "runs.db")}), encoding="utf-8")

    def run(*args):
        return main(["--quiet", "--settings", str(settings), *args])

    run.tmp = tmp_path
    return run


def _load(path):
    with open(path, encoding="utf-8") as f:
        return json.load(f)


def test_compute_on_chain_member(workspace):
    out = workspace.tmp / "shift.json"
    assert workspace("compute", "--group", "Z2^(N)", "--endo", "shift", "--set", "member:0",
                     "--json", str(out)) == EXIT_OK
    report = _load(out)
    assert report["exact"] == pytest.approx(math.log(2), abs=1e-12)
    assert report["group"]["modulus"] == 2

    assert workspace("compute", "--group", "Z2^(N)", "--endo", "identity", "--set", "member:0",
                     "--json", str(out)) == EXIT_OK
    assert _load(out)["exact"] == 0.0


def test_compute_csv_and_linear_scheme(workspace):
    table = workspace.tmp / "table.csv"
    assert workspace("compute", "--group", "Z3^(N)", "--endo", "shift", "--set", "gens:[[[0, 1]]]",
                     "--scheme", "linear", "--csv", str(table), "--json",
                     str(workspace.tmp / "lin.json")) == EXIT_OK
    with open(table, encoding="utf-8-sig") as f:
        rows = list(csv.DictReader(f))
    assert len(rows) == 16
    assert float(rows[0]["value"]) == pytest.approx(math.log(3))


def test_truncated_compute_exits_with_three(workspace):
    code = workspace("compute", "--group", "Z3^(N)", "--endo", "shift", "--set", "[[], [[0, 1]]]",
                     "--budget", '{"max_set_size": 1000}', "--json", str(workspace.tmp / "t.json"))
    assert code == EXIT_TRUNCATED
    assert _load(workspace.tmp / "t.json")["truncated"] is True


def test_usage_errors(workspace):
    assert workspace("compute", "--group", "Z7", "--endo", "shift") == EXIT_USAGE
    assert workspace("compute", "--group", "Q8", "--endo", "shift") == EXIT_USAGE
    assert workspace("permute") == EXIT_USAGE
    assert workspace("examples", "run", "nonexistent") == EXIT_USAGE
    assert workspace("history", "--since", "not a date at all") == EXIT_USAGE


def test_malformed_input_is_a_usage_error(workspace):
    base = ("compute", "--group", "Z2^(N)", "--json", str(workspace.tmp / "x.json"))
    assert workspace(*base, "--endo", "shift", "--set", "member:abc") == EXIT_USAGE
    assert workspace(*base, "--endo", "scale:x", "--set", "member:0") == EXIT_USAGE
    assert workspace(*base, "--endo", '{"kind": "scale"}', "--set", "member:0") == EXIT_USAGE
    assert workspace(*base, "--endo", "inner:[[0, \"a\"]]", "--set", "member:0") == EXIT_USAGE

    broken = workspace.tmp / "broken.json"
    broken.write_text("{not json", encoding="utf-8")
    assert workspace(*base, "--endo", "shift", "--set", str(broken)) == EXIT_USAGE
    assert workspace("at-verify", "--experiment", str(broken)) == EXIT_USAGE
    assert workspace(*base, "--endo", "shift", "--set", "member:0",
                     "--budget", '{"max_exponent": "four"}') == EXIT_USAGE


def test_permute_commands(workspace):
    out = workspace.tmp / "witness.json"
    assert workspace("permute", "--witness", "3", "4", "--json", str(out)) == EXIT_OK
    assert _load(out)["witness"] == "(1 3 5)"

    matrix = workspace.tmp / "s3.csv"
    assert workspace("permute", "--group", "S3", "--enumerate", "--csv", str(matrix),
                     "--json", str(out)) == EXIT_OK
    data = _load(out)
    assert len(data["subgroups"]) == 6
    assert data["all_permutable"] is False
    assert matrix.exists()


def test_examples_list(workspace, capsys):
    assert workspace("examples", "list") == EXIT_OK
    printed = capsys.readouterr().out
    for name in ("bernoulli", "z6-addition", "lamplighter"):
        assert name in printed


def test_at_verify_on_config_experiment(workspace):
    out = workspace.tmp / "report.json"
    assert workspace("at-verify", "--experiment", str(CONFIG_DIR / "experiments" / "z6_shift_3G.json"),
                     "--json", str(out)) == EXIT_OK
    report = _load(out)
    assert report["verdict"] == "additivity_holds_exact"
    assert all(r["inequality_holds"] for r in report["chain_checks"])


def test_history_lists_recorded_runs(workspace, capsys):
    workspace("permute", "--witness", "2", "2", "--json", str(workspace.tmp / "w.json"))
    workspace("compute", "--group", "Z2^(N)", "--endo", "shift", "--set", "member:0",
              "--json", str(workspace.tmp / "c.json"))
    capsys.readouterr()
    assert workspace("history", "--since", "2000-01-01") == EXIT_OK
    lines = capsys.readouterr().out.strip().splitlines()
    assert len(lines) == 2
    assert "compute" in lines[0] and "permute" in lines[1]

    exported = workspace.tmp / "history.csv"
    assert workspace("history", "--csv", str(exported)) == EXIT_OK
    with open(exported, encoding="utf-8-sig") as f:
        assert len(list(csv.DictReader(f))) == 2


def test_no_record_leaves_no_database(workspace):
    assert main(["--quiet", "--no-record", "--settings", str(workspace.tmp / "settings.json"),
                 "permute", "--witness", "2", "3", "--json", str(workspace.tmp / "w.json")]) == EXIT_OK
    assert not (workspace.tmp / "runs.db").exists()
