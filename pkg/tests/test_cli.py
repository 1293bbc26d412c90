import json
import os
import subprocess
import sys
from importlib import resources

import jsonschema
import numpy as np
import pytest

import oracles
from conftest import DATA
from covspec.bootstrap import BootstrapConfig, bootstrap_distribution
from covspec.cli import main
from covspec.linalg import CovarianceModel, sample_covariance
from covspec.matrix_io import MatrixParseError, format_matrix, read_matrix, read_vector, write_matrix

CLI = DATA / "cli"


def schema(name):
    return json.loads(resources.files("covspec").joinpath("schemas", f"{name}.json").read_text())


def run(capsys, monkeypatch, *args):
    monkeypatch.chdir(CLI)
    code = main(list(args))
    out = capsys.readouterr().out
    return code, out


def run_json(capsys, monkeypatch, *args):
    code, out = run(capsys, monkeypatch, *args)
    return code, json.loads(out)


@pytest.fixture(autouse=True)
def _no_env_threads(monkeypatch):
    monkeypatch.delenv("COVSPEC_THREADS", raising=False)


@pytest.mark.parametrize("name", ["test_opn", "test_com"])
def test_test_golden(capsys, monkeypatch, name):
    from make_golden import GOLDEN_RUNS

    code, out = run(capsys, monkeypatch, *GOLDEN_RUNS[name])
    assert code == 0
    assert out == (CLI / f"{name}.json").read_text()
    jsonschema.validate(json.loads(out), schema("test_report"))


def test_test_golden_quantile_cross_check():
    rep = json.loads((CLI / "test_opn.json").read_text())
    s0 = CovarianceModel(read_matrix(CLI / "S0.csv"))
    boot = bootstrap_distribution(s0, "opn", BootstrapConfig(n=40, B=200, master_seed=7), sigma0=s0)
    assert rep["quantile"] == oracles.upper_quantile(boot.values.tolist(), 0.05)
    assert rep["p_value"] == oracles.p_value(boot.values.tolist(), rep["observed"])


def test_test_thread_count_irrelevant(capsys, monkeypatch):
    from make_golden import GOLDEN_RUNS

    _, a = run(capsys, monkeypatch, *GOLDEN_RUNS["test_com"], "--threads", "1")
    _, b = run(capsys, monkeypatch, *GOLDEN_RUNS["test_com"], "--threads", "4")
    assert a == b == (CLI / "test_com.json").read_text()


@pytest.mark.parametrize("stat,extra", [("supn", []), ("ufn", []), ("supn", ["--calibration", "asymptotic"])])
def test_test_baselines(capsys, monkeypatch, stat, extra):
    code, out = run_json(capsys, monkeypatch, "test", "--data", "X.csv", "--sigma0", "S0.csv", "--stat", stat, "--B", "50", *extra)
    assert code == 0
    jsonschema.validate(out, schema("test_report"))


def test_test_group_centering(capsys, monkeypatch, tmp_path):
    labels = tmp_path / "labels.csv"
    labels.write_text("".join(f"{'ab'[i % 2]}\n" for i in range(40)))
    code, out = run_json(capsys, monkeypatch, "test", "--data", "X.csv", "--sigma0", "S0.csv", "--B", "30", "--center", f"groups:{labels}")
    assert code == 0 and out["centering"] == "groups"


def test_header_flag(capsys, monkeypatch, tmp_path):
    for name in ("X", "S0"):
        (tmp_path / f"{name}.csv").write_text("h\n" + (CLI / f"{name}.csv").read_text())
    code, out = run(capsys, monkeypatch, "test", "--data", str(tmp_path / "X.csv"), "--sigma0", str(tmp_path / "S0.csv"),
                    "--stat", "opn", "--B", "200", "--seed", "7", "--header")
    assert code == 0 and out == (CLI / "test_opn.json").read_text()


@pytest.mark.parametrize(
    "args,code",
    [
        (["test", "--data", "X.csv", "--sigma0", "nonsquare.csv"], "BadMatrixShape"),
        (["test", "--data", "X.csv", "--sigma0", "singular.csv", "--stat", "roy"], "SingularCovariance"),
        (["test", "--data", "missing.csv", "--sigma0", "S0.csv"], "ParseError"),
        (["test", "--data", "nonsquare.csv", "--sigma0", "S0.csv"], "BadMatrixShape"),
        (["simulate", "size", "--model", "wishart", "--n", "10", "--p", "5", "--out", "x.csv"], "UsageError"),
        (["edges"], "UsageError"),
        (["ci", "--data", "X.csv"], "UsageError"),
    ],
)
def test_errors(capsys, monkeypatch, args, code):
    rc, out = run_json(capsys, monkeypatch, *args)
    assert rc == 1
    assert out["error"] == code
    jsonschema.validate(out, schema("error"))


def test_rejection_still_exits_zero(capsys, monkeypatch, tmp_path):
    write_matrix(tmp_path / "far.csv", 5 * read_matrix(CLI / "X.csv"))
    rc, out = run_json(capsys, monkeypatch, "test", "--data", str(tmp_path / "far.csv"), "--sigma0", "S0.csv", "--B", "50")
    assert rc == 0 and out["reject"] is True


def test_simulate_size_and_power(capsys, monkeypatch, tmp_path):
    size = tmp_path / "size.csv"
    rc, out = run_json(capsys, monkeypatch, "simulate", "size", "--model", "expdecay", "--n", "30", "--p", "10",
                       "--reps", "10", "--B", "20", "--out", str(size))
    assert rc == 0 and out["rows"] == 3
    jsonschema.validate(out, schema("simulate"))
    power = tmp_path / "power.json"
    rc, out = run_json(capsys, monkeypatch, "simulate", "power", "--model", "block", "--n", "30", "--p", "12",
                       "--reps", "10", "--B", "20", "--stats", "opn,roy", "--sigma-grid", "0,1,2", "--out", str(power))
    assert rc == 0
    rows = json.loads(power.read_text())["rows"]
    assert len(rows) == 2 * 3
    assert sorted({(r["statistic"], r["sigma"]) for r in rows}) == [(s, g) for s in ("opn", "roy") for g in (0.0, 1.0, 2.0)]


def test_simulate_reproducible_across_threads(capsys, monkeypatch, tmp_path):
    outs = []
    for k in ("1", "3"):
        path = tmp_path / f"s{k}.csv"
        run(capsys, monkeypatch, "simulate", "size", "--model", "signedsubexp", "--dist", "unif_t", "--n", "30", "--p", "10",
            "--reps", "15", "--B", "20", "--stats", "opn,roy,com,supn,ufn", "--seed", "5", "--threads", k, "--out", str(path))
        outs.append(path.read_bytes())
    assert outs[0] == outs[1]


def test_edges_identity(capsys, monkeypatch, tmp_path):
    ones = tmp_path / "ones.csv"
    write_matrix(ones, np.ones((1, 20)))
    rc, out = run_json(capsys, monkeypatch, "edges", "--sigma-eigs", str(ones), "--phi", "1")
    assert rc == 0 and abs(out["E_plus"] - 4) <= 1e-3
    jsonschema.validate(out, schema("edges"))


def test_edges_null_pair(capsys, monkeypatch, tmp_path):
    eye = tmp_path / "eye.csv"
    write_matrix(eye, np.eye(10))
    rc, out = run_json(capsys, monkeypatch, "edges", "--sigma", str(eye), "--sigma0", str(eye), "--n", "10",
                       "--spike", "3,1,1")
    assert rc == 0 and abs(out["E_plus"] - 3) <= 2e-3
    assert out["which_edge_checked"] == "plus"
    assert out["kappa"]["kappa"] == pytest.approx(2.0, abs=1e-3)
    jsonschema.validate(out, schema("edges"))
    rc, out = run_json(capsys, monkeypatch, "edges", "--sigma", str(eye), "--sigma0", str(eye), "--n", "10",
                       "--tau", str(out["margin"] + 1))
    assert rc == 0 and out["admissible"] is False


def test_kappa(capsys, monkeypatch):
    rc, out = run_json(capsys, monkeypatch, "kappa", "--spike", "1.6,1,1", "--phi", "0.25")
    assert rc == 0
    jsonschema.validate(out, schema("kappa"))
    assert out["kappa"] == pytest.approx(1.5, abs=1e-3)
    assert out["corollary2"]["threshold_Roy"] == pytest.approx(0.5)
    assert out["corollary2"]["detectable_Roy"] is True


def test_ci_golden_and_forms(capsys, monkeypatch):
    from make_golden import GOLDEN_RUNS

    rc, out = run(capsys, monkeypatch, *GOLDEN_RUNS["ci_oracle"])
    assert rc == 0 and out == (CLI / "ci_oracle.json").read_text()
    rep = json.loads(out)
    jsonschema.validate(rep, schema("ci"))
    s_hat = sample_covariance(read_matrix(CLI / "X.csv"))
    iv = rep["intervals"][0]
    assert iv["center"] == s_hat[0, 0]
    assert iv["half_width"] == rep["q"]


def test_ci_zero_matrix(capsys, monkeypatch):
    rc, out = run_json(capsys, monkeypatch, "ci", "--data", "X.csv", "--A", "zero.csv", "--B", "50")
    assert rc == 0
    iv = out["intervals"][0]
    assert iv["lower"] == iv["upper"] == 0.0
    assert out["spectrum_method"] == "naive_sample"


def test_matrix_roundtrip(tmp_path, rng):
    m = rng.standard_normal((7, 5)) * 10.0 ** rng.integers(-300, 300, (7, 5))
    write_matrix(tmp_path / "m.csv", m)
    assert np.array_equal(read_matrix(tmp_path / "m.csv"), m)
    assert format_matrix(m) == (tmp_path / "m.csv").read_text()


def test_matrix_parse_errors(tmp_path):
    (tmp_path / "bad.csv").write_text("1,2\n3,x\n")
    with pytest.raises(MatrixParseError):
        read_matrix(tmp_path / "bad.csv")
    (tmp_path / "nan.csv").write_text("1,nan\n")
    with pytest.raises(MatrixParseError):
        read_matrix(tmp_path / "nan.csv")
    (tmp_path / "col.csv").write_text("1\n2\n3\n")
    assert list(read_vector(tmp_path / "col.csv")) == [1.0, 2.0, 3.0]


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "covspec", "--version"], capture_output=True, text=True,
                         env={**os.environ, "PYTHONPATH": os.pathsep.join(sys.path)})
    assert out.returncode == 0 and out.stdout.startswith("covspec ")
