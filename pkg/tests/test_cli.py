import json

import numpy as np
import pytest
from scipy import stats

from dadist.cli import read_matrix_csv, read_sample_csv, run, write_matrix_csv
from dadist.shapes_ingest import LandmarkSet, write_landmarks_csv


def call(capsys, *argv):
    code = run(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_logpdf_reference_value(capsys):
    code, out, _ = call(capsys, "logpdf", "--family", "beta2-marginal", "--beta", "1", "--m", "1",
                        "--a0", "1.5", "--a1", "0.5", "--point", "F=1")
    assert code == 0 and out.strip() == "-1.837877"


def test_logpdf_json_and_matrix_file(tmp_path, capsys):
    x = np.array([[[0.3, 0.1]], [[0.2, -0.4]]])
    write_matrix_csv(tmp_path / "x.csv", x)
    assert np.array_equal(read_matrix_csv(tmp_path / "x.csv"), x)
    code, out, _ = call(capsys, "logpdf", "--family", "pearson7-marginal", "--beta", "2",
                        "--n", "3,2", "--point", f"T1=@{tmp_path / 'x.csv'}", "--json")
    assert code == 0 and np.isfinite(json.loads(out)["logpdf"])


def test_matrix_header_is_strict(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("# dadist-matrix beta=2 n=1\n1,1,0,0\n")
    with pytest.raises(Exception):
        read_matrix_csv(p)


def test_errors_are_single_line_json(capsys):
    code, out, err = call(capsys, "logpdf", "--family", "beta2-marginal", "--beta", "1",
                          "--a0", "1.5", "--a1", "0.5", "--point", "F=-1")
    assert code == 1 and out == ""
    payload = json.loads(err)
    assert payload["error"] == "DomainError" and payload["predicates"] == ["pd"]
    assert err.count("\n") == 1
    for argv in (["logpdf", "--bogus", "1"], ["nope"], [],
                 ["logpdf", "--family", "beta9", "--beta", "1", "--a0", "1"],
                 ["fit", "--a0", "1"]):
        code, _, err = call(capsys, *argv)
        assert code == 1 and "error" in json.loads(err)


def test_sample_is_reproducible_and_stamps_the_seed(tmp_path, capsys):
    args = ["sample", "--family", "beta1-marginal", "--beta", "1", "--m", "1", "--n0", "3",
            "--n1", "1", "--count", "10", "--seed", "1"]
    assert call(capsys, *args, "--out", str(tmp_path / "a.csv"))[0] == 0
    assert call(capsys, *args, "--out", str(tmp_path / "b.csv"))[0] == 0
    a = (tmp_path / "a.csv").read_text()
    assert a == (tmp_path / "b.csv").read_text()
    assert a.startswith("# dadist-sample seed=1 ")
    assert len(a.strip().splitlines()) == 12


def test_seed_from_environment(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("DADIST_SEED", "77")
    _, out, _ = call(capsys, "sample", "--family", "beta1-marginal", "--beta", "1",
                     "--a", "1.5,0.5", "--count", "2")
    assert out.startswith("# dadist-sample seed=77 ")


def test_config_file_and_flag_precedence(tmp_path, capsys):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("# instance\nfamily=beta2-marginal\nbeta=1\nm=1\na0=1.5\na1=0.5\n")
    _, out, _ = call(capsys, "logpdf", "--config", str(cfg), "--point", "F=1")
    assert out.strip() == "-1.837877"
    _, out2, _ = call(capsys, "logpdf", "--config", str(cfg), "--a0", "2.5", "--point", "F=1")
    inst_val = stats.betaprime(0.5, 2.5).logpdf(1.0)
    assert float(out2) == pytest.approx(inst_val, abs=1e-6)
    cfg.write_text("family=beta2-marginal\nbeta=4\na0=2\na=3\nk=5\n")
    code, out, _ = call(capsys, "sample", "--config", str(cfg), "--count", "3", "--seed", "0")
    assert code == 0 and out.splitlines()[1].count("F") == 5 * 4


def test_sample_fit_roundtrip(tmp_path, capsys):
    data = tmp_path / "s.csv"
    call(capsys, "sample", "--family", "beta2-marginal", "--beta", "4", "--a", "2,3,3,3,3",
         "--count", "300", "--seed", "5", "--out", str(data))
    names, slots = read_sample_csv(data)
    assert names == ["F1", "F2", "F3", "F4"] and slots[0].shape == (300, 1, 1, 4)
    out = tmp_path / "fit.json"
    code, _, _ = call(capsys, "fit", "--family", "beta2-marginal", "--data", str(data),
                      "--beta", "4", "--m", "1", "--tie", "a1..ak", "--restarts", "4",
                      "--seed", "0", "--out", str(out))
    res = json.loads(out.read_text())
    assert code == 0 and res["converged"] and len(res["trace"]) == 4
    assert res["estimates"]["a0"] == pytest.approx(2.0, rel=0.2)
    assert res["estimates"]["a"] == pytest.approx(3.0, rel=0.2)
    code, csv_out, _ = call(capsys, "logpdf", "--family", "beta2-marginal", "--beta", "4",
                            "--a", "2,3,3,3,3", "--data", str(data))
    assert code == 0 and len(csv_out.splitlines()) == 301


def test_plot_data_density_matches_oracle(capsys):
    code, out, _ = call(capsys, "plot-data", "density", "--family", "beta1-marginal",
                        "--beta", "1", "--a0", "1.5", "--a1", "0.5", "--grid", "0.01:0.99:99")
    rows = np.array([[float(v) for v in r.split(",")] for r in out.splitlines()[1:]])
    assert code == 0 and rows.shape == (99, 3) and np.all(np.diff(rows[:, 0]) > 0)
    assert np.allclose(rows[:, 1], stats.beta(0.5, 1.5).logpdf(rows[:, 0]), atol=1e-10)
    code, out, _ = call(capsys, "plot-data", "density", "--family", "beta1-marginal",
                        "--beta", "1", "--a0", "1.5", "--a1", "0.5", "--grid", "0.01:0.99:0")
    assert code == 0 and out == "x,logpdf,density\n"


def test_plot_data_profile_and_trace(tmp_path, capsys):
    from dadist.estimation import FitProblem, profile
    data = tmp_path / "s.csv"
    call(capsys, "sample", "--family", "beta2-marginal", "--beta", "2", "--a", "2,3,3",
         "--count", "100", "--seed", "1", "--out", str(data))
    code, out, _ = call(capsys, "plot-data", "profile", "--family", "beta2-marginal",
                        "--beta", "2", "--data", str(data), "--params", "2,3", "--group", "a",
                        "--grid", "2:4:5")
    rows = [tuple(float(v) for v in r.split(",")) for r in out.splitlines()[1:]]
    _, slots = read_sample_csv(data)
    from dadist.families import FamilyPoint
    prob = FitProblem("beta2-marginal", 2, 1, [FamilyPoint(tuple(slots), batched=True)])
    assert code == 0 and rows == profile(prob, [2.0, 3.0], "a", np.linspace(2, 4, 5))
    code, out, _ = call(capsys, "plot-data", "trace", "--family", "beta2-marginal",
                        "--beta", "2", "--data", str(data), "--restarts", "3")
    assert code == 0 and out.splitlines()[0] == "restart,iterations,loglik,a0,a"
    assert len(out.splitlines()) == 4


def test_ingest_and_fit_quaternions(tmp_path, capsys):
    rng = np.random.default_rng(0)
    write_landmarks_csv(tmp_path / "lm.csv",
                        [LandmarkSet(f"small_{i}", rng.normal(size=(60, 2))) for i in range(6)])
    q = tmp_path / "q.csv"
    code, _, _ = call(capsys, "ingest-landmarks", "--input", str(tmp_path / "lm.csv"),
                      "--pairs", "default", "--mode", "vector", "--out", str(q))
    assert code == 0 and len(q.read_text().splitlines()) == 1 + 6 * 14
    code, out, _ = call(capsys, "fit", "--family", "beta2-marginal", "--beta", "4",
                        "--quaternions", str(q), "--layout", "pooled", "--restarts", "3")
    assert code == 0 and json.loads(out)["k"] == 6
    code, out, _ = call(capsys, "ingest-landmarks", "--input", str(tmp_path / "lm.csv"),
                        "--mode", "matrix")
    assert code == 0 and out.splitlines()[2].split(",")[2] == "2"
    code, _, err = call(capsys, "ingest-landmarks", "--input", str(tmp_path / "none.csv"))
    assert code == 1 and json.loads(err)["error"] == "OSError"


def test_validate_reports(capsys):
    code, out, _ = call(capsys, "validate", "--suite", "algebra", "--suite", "jacobians")
    rep = json.loads(out)
    assert code == 0 and rep["passed"]
    jac = rep["suites"][1]
    assert jac["suite"] == "jacobians" and len(jac["records"]) == 2 * 10 * 50
    assert {"transform", "draw", "closed_form", "numeric", "passed"} <= set(jac["records"][0])
    alt = [c for c in jac["checks"] if c["expected_failure"]]
    assert alt and not any(c["passed"] for c in alt)
    code, out, _ = call(capsys, "validate", "--suite", "landmarks")
    assert code == 0 and json.loads(out)["suites"][0]["skipped"]
