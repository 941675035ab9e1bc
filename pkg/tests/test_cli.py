import csv
import hashlib
import json
from pathlib import Path

import numpy as np
import pytest

from cli import run
from opcore import compress, hermite_q
from specfile import parse_matrix, parse_spec

SPECS = Path(__file__).resolve().parent.parent / "specs"


def _run(tmp_path, *argv):
    out = tmp_path / "report.csv"
    code = run([*argv, "--out", str(out), "--no-timestamp", "--settings", str(tmp_path / "none.txt")])
    return code, out


def _read(path):
    meta, body = {}, []
    for line in path.read_text(encoding="utf-8").splitlines():
        if line.startswith("# "):
            key, _, value = line[2:].partition(": ")
            meta[key] = value
        else:
            body.append(line)
    return meta, body


def _rows(body):
    return list(csv.DictReader(body))


def test_norms_report(tmp_path):
    spec = SPECS / "shift_sqrt.json"
    code, out = _run(tmp_path, "norms", "--spec", str(spec))
    assert code == 0
    meta, body = _read(out)
    assert meta["tool"] == "qdfolner"
    assert meta["command"] == "norms"
    assert meta["spec-sha256"] == hashlib.sha256(spec.read_bytes()).hexdigest()
    assert "timestamp" not in meta
    rows = _rows(body)
    assert [int(r["n"]) for r in rows] == [10, 100, 1000]
    assert all(abs(float(r["ratio2"]) - 1) < 1e-12 for r in rows)


def test_grid_flags_override_experiment(tmp_path):
    code, out = _run(tmp_path, "norms", "--spec", str(SPECS / "shift_sqrt.json"), "--n-end", "40", "--n-geometric", "3", "--ns", "2,5")
    assert code == 0
    assert [int(r["n"]) for r in _rows(_read(out)[1])] == [2, 5]
    code, out = _run(tmp_path, "norms", "--spec", str(SPECS / "dilation.json"), "--n-end", "40")
    assert [int(r["n"]) for r in _rows(_read(out)[1])] == [1, 2, 4, 8, 16, 32]


def test_reports_are_deterministic(tmp_path):
    first = _run(tmp_path, "classify", "--spec", str(SPECS / "hermite_q.json"))[1].read_text()
    second = _run(tmp_path, "classify", "--spec", str(SPECS / "hermite_q.json"))[1].read_text()
    assert first == second


def test_classify_verdicts(tmp_path):
    code, out = _run(tmp_path, "classify", "--spec", str(SPECS / "shift_linear.json"))
    assert code == 0
    meta, _ = _read(out)
    assert meta["verdict-ratio2"] == "diverges"
    assert meta["verdict-ratio1"].startswith("tends_to_positive(")


def test_malformed_spec_is_rejected(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"operator": {"kind": "weighted_shift", "weight": "log"', encoding="utf-8")
    code, out = _run(tmp_path, "norms", "--spec", str(bad), "--ns", "4")
    assert code == 2
    assert not out.exists()
    assert "InvalidSpec" in capsys.readouterr().err


def test_unknown_field_is_rejected(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"operator": {"kind": "hermite_q", "weight": "log"}}), encoding="utf-8")
    assert _run(tmp_path, "norms", "--spec", str(bad), "--ns", "4")[0] == 2


def test_computation_failure_exit_code(tmp_path, capsys):
    code, out = _run(tmp_path, "halmos", "--spec", str(SPECS / "unilateral_shift.json"))
    assert code == 3
    assert not out.exists()
    assert "NotQuasidiagonalAlongFamily" in capsys.readouterr().err


def test_halmos_report(tmp_path):
    code, out = _run(tmp_path, "halmos", "--spec", str(SPECS / "compact_shift.json"))
    assert code == 0
    meta, body = _read(out)
    assert meta["holds"] == "true"
    assert float(meta["k_norm"]) < 0.1
    assert [int(r["n"]) for r in _rows(body)] == [41, 81, 161, 321, 641, 1281]
    assert int(meta["window"]) == 1282


def test_sparse_report(tmp_path):
    code, out = _run(tmp_path, "sparse", "--spec", str(SPECS / "sparse_compact.json"))
    assert code == 0
    meta, body = _read(out)
    rows = _rows(body)
    assert [int(r["rank"]) for r in rows] == list(range(1, 13))
    assert meta["selector"] == "2^n"
    assert meta["verdict-ratio2"] == "tends_to_zero"


def test_szego_report(tmp_path):
    code, out = _run(tmp_path, "szego", "--spec", str(SPECS / "toeplitz_cos2.json"), "--ps", "2")
    assert code == 0
    meta, body = _read(out)
    assert meta["trend-p2"] == "non-increasing"
    assert meta["rate-p2"].endswith("validated=true")
    gaps = {int(r["n"]): float(r["gap"]) for r in _rows(body)}
    assert gaps[100] == pytest.approx(0.03, abs=1e-12)


def test_weyl_amenability_report(tmp_path):
    code, out = _run(tmp_path, "weyl-amenability", "--spec", str(SPECS / "weyl_generators.json"))
    assert code == 0
    meta, body = _read(out)
    assert meta["witness"] == "38" and meta["bound"] == "82"
    rows = _rows(body)
    assert [r["element"] for r in rows] == ["p", "q", "p*q"]
    assert {int(r["dim_v"]) for r in rows} == {780}
    code, out = _run(tmp_path, "weyl-amenability", "--elements", "p", "--epsilon", "1")
    assert _read(out)[0]["witness"] == "0"


def test_weyl_represent_writes_matrix(tmp_path):
    code, out = _run(tmp_path, "weyl-represent", "--element", "q", "--window", "4")
    assert code == 0
    meta, body = _read(out)
    assert meta["element"] == "q"
    np.testing.assert_allclose(parse_matrix("\n".join(body)), compress(hermite_q(), 4).entries, atol=1e-15)


def test_berg_report(tmp_path):
    matrix = tmp_path / "m.txt"
    matrix.write_text("# swap\n2\n0 1\n1 0\n", encoding="utf-8")
    code, out = _run(tmp_path, "berg", "--matrix", str(matrix), "--epsilon", "0.1")
    assert code == 0
    meta, body = _read(out)
    assert meta["final_rank"] == "2"
    assert [int(r["block_rank"]) for r in _rows(body)] == [2]
    code, out = _run(tmp_path, "berg", "--size", "16", "--seed", "4")
    meta, body = _read(out)
    assert code == 0 and meta["final_rank"] == "16"
    assert float(meta["perturbation_norm"]) < 0.05


def test_bad_epsilon_is_rejected(tmp_path):
    assert _run(tmp_path, "berg", "--size", "4", "--epsilon", "0")[0] == 2


def test_argument_errors():
    assert run(["transmogrify"]) == 2
    assert run([]) == 2
    assert run(["norms", "--bogus"]) == 2


@pytest.mark.parametrize("path", sorted(SPECS.glob("*.json")), ids=lambda p: p.stem)
def test_spec_files_reserialize(path):
    spec = parse_spec(path.read_text(encoding="utf-8"))
    again = parse_spec(json.dumps(spec.to_json()))
    assert again.to_json() == spec.to_json()


def test_berg_rejects_nearly_hermitian_matrix(tmp_path, capsys):
    matrix = tmp_path / "m.txt"
    matrix.write_text("2\n0 1\n1.00000000001 0\n", encoding="utf-8")
    code, out = _run(tmp_path, "berg", "--matrix", str(matrix))
    assert code == 3
    assert "NotHermitian" in capsys.readouterr().err
    loose = tmp_path / "settings.txt"
    loose.write_text("berg_hermitian_tol = 1e-10\n", encoding="utf-8")
    out = tmp_path / "loose.csv"
    code = run(["berg", "--matrix", str(matrix), "--out", str(out), "--no-timestamp", "--settings", str(loose)])
    assert code == 0 and out.exists()
