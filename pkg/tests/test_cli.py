import json

import pytest

from ultraholo.cli import main


def test_seq_predicates(capsys):
    assert main(["seq", "--gevrey", "2", "--horizon", "50", "--predicates", "--compare", "1"]) == 0
    out = capsys.readouterr().out
    assert "lc " in out and "relation to gevrey(1)" in out


def test_seq_csv_and_roundtrip(tmp_path, capsys):
    assert main(["seq", "--gevrey", "1", "--horizon", "20", "--out", str(tmp_path)]) == 0
    path = tmp_path / "sequence.csv"
    assert path.exists()
    assert main(["seq", "--file", str(path), "--predicates"]) == 0
    assert "mg" in capsys.readouterr().out


def test_weight_and_conj(tmp_path):
    assert main(["weight", "--weight", "power:0.5", "-n", "5", "--out", str(tmp_path)]) == 0
    lines = (tmp_path / "weight.csv").read_text().splitlines()
    assert lines[0] == "t,omega" and len(lines) == 6
    assert main(["conj", "-n", "4", "--out", str(tmp_path)]) == 0
    rows = (tmp_path / "conj.csv").read_text().splitlines()[1:]
    assert all(abs(float(r.split(",")[-1])) < 1e-6 for r in rows)


def test_matrix_and_index(tmp_path):
    assert main(["matrix", "--horizon", "30", "--mg", "--out", str(tmp_path)]) == 0
    report = json.loads((tmp_path / "matrix-report.json").read_text())
    assert all(v["passed"] for k, v in report.items() if k.startswith("mg"))
    assert main(["index", "--gevrey", "2", "--out", str(tmp_path)]) == 0
    est = json.loads((tmp_path / "index.json").read_text())
    assert est["value"] == pytest.approx(2.0, abs=0.05)


def test_flat(tmp_path):
    assert main(["flat", "--radii", "20", "--out", str(tmp_path)]) == 0
    report = json.loads((tmp_path / "flat-report.json").read_text())
    assert report["sandwich"]["stable"]


def test_verify(tmp_path, capsys):
    assert main(["verify", "--list"]) == 0
    assert "mg-across-levels" in capsys.readouterr().out
    rc = main(["verify", "--id", "mg-across-levels", "--id", "hm-bounds", "--out", str(tmp_path), "--no-meta"])
    assert rc == 0
    index = json.loads((tmp_path / "index.json").read_text())
    assert set(index["summary"]) == {"mg-across-levels", "hm-bounds"}
    assert main(["verify", "--id", "nope"]) == 2


def test_bad_inputs(tmp_path):
    assert main(["weight", "--weight", "cubic:3"]) == 2
    job = tmp_path / "job.json"
    job.write_text(json.dumps({"version": 2, "weight": "gevrey:1", "x": 1, "h": 1,
                               "gamma": 0.5, "lambda": "delta0"}))
    assert main(["extend", "--job", str(job)]) == 2
    assert main(["seq", "--file", str(tmp_path / "missing.csv")]) == 2
