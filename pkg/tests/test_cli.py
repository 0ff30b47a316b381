import csv
import io
import json

import pytest

from fei_lab.boolfn import TruthTable, save_table
from fei_lab.cli import num, run
from fei_lab.compose import paper_g


def call(capsys, *argv):
    code = run([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def g_file(tmp_path):
    p = tmp_path / "g.json"
    save_table(paper_g(), p)
    return p


def test_analyze_paper_g(capsys, g_file):
    code, out, err = call(capsys, "analyze", "--input", g_file, "--mu", "uniform")
    assert code == 0 and err == ""
    doc = json.loads(out)
    assert doc["measures"]["total_influence"] == 1.625
    assert doc["measures"]["mean"] == 0.0
    assert doc["manifest"]["subcommand"] == "analyze"
    assert len(doc["manifest"]["inputs"]["input"]) == 64


def test_amplify_csv(capsys, g_file):
    code, out, err = call(capsys, "amplify", "--F", g_file, "--g", g_file, "--m", 30)
    assert code == 0
    lines = out.splitlines()
    assert lines[0].startswith("# manifest: ")
    rows = list(csv.DictReader(io.StringIO("\n".join(lines[1:]))))
    assert [r["m"] for r in rows] == [str(m) for m in range(31)]
    ratios = [float(r["ratio"]) for r in rows]
    assert all(a < b for a, b in zip(ratios, ratios[1:]))
    assert float(rows[1]["Inf"]) == pytest.approx(1.625 ** 2)
    # converges to the printed constant; the gap drops below 1e-5 at m = 27
    assert abs(ratios[20] - 6.278944) == pytest.approx(2.33e-4, abs=1e-6)
    assert abs(ratios[27] - 6.278944) <= 1e-5


def test_amplify_builtin_and_json(capsys):
    code, out, _ = call(capsys, "amplify", "--F", "maj3", "--m", 1, "--format", "json")
    doc = json.loads(out)
    assert code == 0 and doc["limit"] == 4.0
    assert doc["rows"][1] == {"m": 1, "H": 5.0, "Inf": 2.25, "ratio": num(5 / 2.25)}


def test_amplify_rejects_unbalanced(capsys):
    code, out, err = call(capsys, "amplify", "--F", "g_printed")
    assert code == 1 and out == "" and "balanced" in err


def test_parse_duplicate_variable(capsys):
    code, out, err = call(capsys, "parse", "AND(x1,x1)")
    assert code == 1 and out == ""
    assert "x1 appears more than once" in err


def test_parse_report(capsys):
    code, out, _ = call(capsys, "parse", "OR(AND(x1,x2),NOT(x3))", "--mu", "0.2")
    doc = json.loads(out)
    assert code == 0
    assert doc["formula"] == "OR(AND(x1, x2), NOT(x3))"
    assert len(doc["report"]["nodes"]) == 5
    assert doc["report"]["dense_check"]["max_residual"] <= 1e-9


def test_parse_syntax_error(capsys):
    code, out, err = call(capsys, "parse", "AND(x1,")
    assert code == 1 and "line 1, column 8" in err


def test_usage_errors(capsys):
    assert call(capsys, "nope")[0] == 1
    assert call(capsys, "analyze", "--format", "xml", "--input", "maj3")[0] == 1
    code, _, err = call(capsys, "analyze", "--input", "maj3", "--mu", "0.1,0.2")
    assert code == 1 and "arity 3" in err
    code, _, err = call(capsys, "analyze", "--input", "/no/such/file.json")
    assert code == 1
    assert call(capsys, "search", "--k", 9)[0] == 1


def test_spectrum_csv(capsys):
    code, out, _ = call(capsys, "spectrum", "--input", "XOR(x1,x2)", "--format", "csv")
    lines = out.splitlines()
    assert code == 0 and lines[1] == "mask,subset_bits,coefficient"
    assert lines[2:] == ["3,11,1"]


def test_compose_subcommand(capsys, tmp_path):
    p = tmp_path / "spec.json"
    p.write_text(json.dumps({"outer": "OR2", "inner": ["AND2", "AND2"], "mu": [0.2, -0.3, 0.1, 0.5]}))
    code, out, _ = call(capsys, "compose", "--input", p, "--C", 10)
    doc = json.loads(out)
    assert code == 0
    assert all(c["holds"] for c in doc["identities"])
    assert doc["theorem"]["implication_holds"]


def test_verify_small(capsys):
    code, out, _ = call(capsys, "verify", "--grid-kmax", 2, "--uniform-k", 3, "--random", 500, "--random-kmax", 4, "--jobs", 1)
    doc = json.loads(out)
    assert code == 0 and doc["ok"] and doc["sweep"]["violations"] == []
    assert doc["sweep"]["checked"] == 4 * 5 + 16 * 25 + 256 + 500


def test_verify_one_function(capsys, g_file):
    code, out, _ = call(capsys, "verify", "--input", g_file, "--mu", "0.3")
    assert code == 0 and json.loads(out)["ok"]


def test_search_cli(capsys):
    code, out, _ = call(capsys, "search", "--k", 3, "--constraint", "balanced")
    doc = json.loads(out)
    assert code == 0
    w = TruthTable.from_json(doc["result"]["witness"])
    assert w.is_balanced()
    code, out, _ = call(capsys, "search", "--k", 2, "--target", "fei_plus")
    assert code == 0 and json.loads(out)["result"]["within_bound"]


def test_byte_determinism_and_jobs(capsys):
    args = ["verify", "--grid-kmax", 1, "--uniform-k", 2, "--random", 300, "--random-kmax", 3, "--seed", 5]
    _, a, _ = call(capsys, *args, "--jobs", 1)
    _, b, _ = call(capsys, *args, "--jobs", 1)
    _, c, _ = call(capsys, *args, "--jobs", 3)
    assert a == b == c


def test_out_file(capsys, tmp_path):
    p = tmp_path / "o.json"
    code, out, _ = call(capsys, "analyze", "--input", "maj3", "--out", p)
    assert code == 0 and out == ""
    assert json.loads(p.read_text())["measures"]["total_influence"] == 1.5


def test_twelve_digits():
    assert num(1 / 3) == 0.333333333333
    assert num(6.278945252708619) == 6.27894525271
    assert num(float("inf")) == "inf"
    assert num(-0.0) == 0.0


def test_module_entry_point():
    import subprocess
    import sys

    r = subprocess.run([sys.executable, "-m", "fei_lab", "parse", "XOR(x1,x2)"], capture_output=True, text=True)
    assert r.returncode == 0 and json.loads(r.stdout)["arity"] == 2
