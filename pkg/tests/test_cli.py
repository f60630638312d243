import csv
import json
import subprocess
import sys

import pytest

from tscale.cli import main
from tscale.report import validate_document

MR21 = ["check", "--rule", "MR2.1", "--phi", "x^2", "--psi", "x", "--scale", "lattice(0,1,4)"]


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_eval_nabla(capsys):
    code, out, _ = run(capsys, "eval", "--scale", "lattice(0,1,6)", "--f", "x^2",
                       "--op", "nabla", "--at", "3")
    assert (code, out) == (0, "5\n")


def test_eval_dense_delta(capsys):
    code, out, _ = run(capsys, "eval", "--scale", "interval(0,1)", "--f", "x^2",
                       "--op", "delta", "--at", "0.5")
    assert code == 0 and abs(float(out) - 1.0) <= 1e-8


@pytest.mark.parametrize("scale, at", [("interval(0,1)", "0.5"), ("qscale(2,1,5)", "4")])
def test_eval_diamond_one_equals_delta(capsys, scale, at):
    base = ["eval", "--scale", scale, "--f", "exp(x)/(x+1)", "--at", at]
    _, delta, _ = run(capsys, *base, "--op", "delta")
    _, diamond, _ = run(capsys, *base, "--op", "diamond", "--alpha", "1")
    assert delta == diamond


def test_eval_several_points_and_json(capsys):
    code, out, _ = run(capsys, "eval", "--scale", "lattice(0,1,6)", "--f", "x^2", "--g", "x",
                       "--op", "y", "--at", "2", "--at", "3", "--json")
    doc = json.loads(out)
    assert code == 0 and [v["value"] for v in doc["values"]] == ["2", "6"]


def test_eval_integral(capsys):
    code, out, _ = run(capsys, "eval", "--scale", "points(0,1,2,3)", "--f", "x",
                       "--op", "integral", "--kind", "nabla")
    assert (code, out) == (0, "6\n")


def test_eval_math_error_names_point(capsys):
    code, _, err = run(capsys, "eval", "--scale", "lattice(0,1,4)", "--f", "log(x)",
                       "--op", "nabla", "--at", "1")
    assert code == 3 and "x=0" in err


@pytest.mark.parametrize("argv", [
    ["eval", "--scale", "lattice(0,1,4)", "--f", "2*(", "--at", "1"],
    ["eval", "--scale", "lattice(0,1,4)", "--f", "x", "--at", "7"],
    ["eval", "--scale", "nonsense", "--f", "x", "--at", "1"],
    ["eval", "--scale", "lattice(0,1,4)", "--f", "x", "--op", "diamond", "--at", "1"],
    ["eval", "--scale", "lattice(0,1,4)", "--f", "x", "--op", "diamond", "--alpha", "2",
     "--at", "1"],
    ["check", "--rule", "MR9", "--phi", "x", "--psi", "x", "--scale", "lattice(0,1,4)"],
    ["check", "--rule", "MR2.2", "--phi", "x", "--psi", "x", "--scale", "lattice(1,1,4)"],
    ["check", "--rule", "MR3.1", "--phi", "x", "--psi", "x", "--scale", "lattice(1,1,4)"],
    ["check", "--rule", "MR2.1", "--phi", "x", "--psi", "x", "--scale", "lattice(1,1,4)",
     "--a", "3", "--b", "2"],
    ["frobnicate"],
])
def test_config_errors_exit_2(capsys, argv):
    try:
        code = main(argv)
    except SystemExit as e:
        code = e.code
    assert code == 2


def test_check_verified(capsys):
    code, out, _ = run(capsys, *MR21, "--no-timestamp")
    doc = json.loads(out)
    validate_document(doc)
    assert code == 0
    rep = doc["report"]
    assert rep["outcome"] == "VERIFIED"
    assert {c["status"] for c in rep["hypothesis_checks"]} == {"PASS"}
    assert doc["config"]["tolerances"] == {"discrete": 1e-12, "sampled": 1e-9, "identity": 1e-9}


def test_check_hypothesis_failure(capsys):
    code, out, _ = run(capsys, "check", "--rule", "MR2.2", "--case", "1", "--phi", "x^2",
                       "--psi=-x", "--scale", "lattice(1,1,5)")
    rep = json.loads(out)["report"]
    assert code == 4 and rep["outcome"] == "HYPOTHESIS_FAILED"
    failed = [c for c in rep["hypothesis_checks"] if c["status"] == "FAIL"]
    assert failed and failed[0]["witness"] == [[1.0, -1.0]]


def test_check_conclusion_failure(capsys, tmp_path):
    inst = {
        "rule": "MR3.1", "seed": 0, "scale": "lattice(0,1,8)",
        "phi": {"expr": "x"}, "psi": {"expr": "x"}, "params": {"alpha": "1/2"},
    }
    phi = {0: 0, 1: 0}
    for i, v in enumerate([0, 10, 1, 11, 2, 12], start=1):
        phi[i + 1] = phi[i - 1] + 2 * v
    inst["phi"] = {"table": {repr(float(k)): str(v) for k, v in phi.items()}}
    path = tmp_path / "zigzag.json"
    path.write_text(json.dumps(inst))
    code, out, _ = run(capsys, "check", "--instance", str(path))
    rep = json.loads(out)["report"]
    assert code == 5 and rep["counterexample"]["step"] == [[2.0, 10.0], [3.0, 1.0]]


def test_output_file_and_csv(capsys, tmp_path):
    out_json, out_csv = tmp_path / "r.json", tmp_path / "g.csv"
    code, out, _ = run(capsys, *MR21, "--output", str(out_json), "--csv", str(out_csv))
    assert code == 0 and out == ""
    validate_document(json.loads(out_json.read_text()))
    rows = list(csv.reader(out_csv.open()))
    assert rows[0] == ["t", "phi", "psi", "ratio", "Y", "verdict-local-sign"]
    assert [r[0] for r in rows[1:]] == ["0.0", "1.0", "2.0", "3.0"]


def test_csv_row_count_matches_dense_grid(capsys, tmp_path):
    out_csv = tmp_path / "g.csv"
    run(capsys, "check", "--rule", "MR2.1", "--phi", "x^2", "--psi", "x",
        "--scale", "interval(1,2)+points(3)", "--dense-samples", "9", "--csv", str(out_csv))
    assert len(out_csv.read_text().splitlines()) == 1 + 11 + 1


def test_seeded_runs_are_byte_identical(capsys, tmp_path):
    runs = []
    for name in ("a.json", "b.json"):
        path = tmp_path / name
        code, _, _ = run(capsys, "check", "--rule", "MR2.3", "--fuzz", "20", "--seed", "3",
                         "--no-timestamp", "--output", str(path))
        assert code == 0
        runs.append(path.read_bytes())
    assert runs[0] == runs[1]
    path = tmp_path / "c.json"
    run(capsys, "check", "--rule", "MR2.3", "--fuzz", "20", "--seed", "3", "--jobs", "2",
        "--no-timestamp", "--output", str(path))
    assert path.read_bytes() == runs[0]


def test_timestamp_present_by_default(capsys):
    _, out, _ = run(capsys, *MR21)
    assert "timestamp" in json.loads(out)


def test_fuzz_summary(capsys):
    code, out, _ = run(capsys, "check", "--rule", "Prop3.1ii", "--fuzz", "30", "--seed", "7",
                       "--no-timestamp")
    doc = json.loads(out)
    validate_document(doc)
    fz = doc["fuzz"]
    assert code == 0 and fz["outcomes"] == {"VERIFIED": 30}
    assert fz["max_residuals"]["alt_reading_max_relative_residual"] == 0
    assert fz["max_residuals"]["printed_max_relative_residual"] > 0


def test_gen_then_check(capsys, tmp_path):
    path = tmp_path / "inst.json"
    assert main(["gen", "--rule", "MR2.2", "--seed", "9", "--case", "3",
                 "--output", str(path)]) == 0
    code, out, _ = run(capsys, "check", "--instance", str(path), "--no-timestamp")
    doc = json.loads(out)
    assert code == 0 and doc["config"]["instance"]["params"]["case"] == 3


def test_export_uses_output_dir_env(capsys, tmp_path, monkeypatch):
    monkeypatch.setenv("TSCALE_OUTPUT_DIR", str(tmp_path))
    code, out, _ = run(capsys, "export", "--rule", "Prop3.2", "--alpha", "1/2", "--phi", "x^3",
                       "--psi", "x", "--scale", "lattice(1,1,5)", "--out-dir", "sub")
    assert code == 0
    report = tmp_path / "sub" / "report.json"
    validate_document(json.loads(report.read_text()))
    assert len((tmp_path / "sub" / "grid.csv").read_text().splitlines()) == 1 + 5


def test_io_error_exit_6(capsys, tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    code, _, err = run(capsys, *MR21, "--output", str(blocker / "r.json"))
    assert code == 6 and "I/O" in err
    code, _, _ = run(capsys, "check", "--instance", str(tmp_path / "missing.json"))
    assert code == 6


def test_validate_report(capsys, tmp_path):
    good = tmp_path / "good.json"
    run(capsys, *MR21, "--output", str(good))
    assert main(["validate-report", str(good)]) == 0
    doc = json.loads(good.read_text())
    doc["report"]["outcome"] = "MAYBE"
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(doc))
    assert main(["validate-report", str(bad)]) == 2


def test_config_file(capsys, tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# MR2.1 example\nrule = MR2.1\nscale = lattice(0,1,4)\nphi = x^2\n"
                   "psi = x\nno-timestamp = true\n")
    code, out, _ = run(capsys, "check", "--config", str(cfg))
    assert code == 0 and "timestamp" not in json.loads(out)
    code, out, _ = run(capsys, "check", "--config", str(cfg), "--phi=-x^2")
    assert code == 0 and json.loads(out)["config"]["phi"] == {"expr": "-x^2"}
    cfg.write_text("rule = MR2.1\ncolour = blue\n")
    assert main(["check", "--config", str(cfg)]) == 2


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "tscale", "eval", "--scale", "lattice(0,1,6)",
                          "--f", "x^2", "--op", "diamond", "--alpha", "0.5", "--at", "3"],
                         capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout == "6\n"
