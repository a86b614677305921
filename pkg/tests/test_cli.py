import json
import math
import subprocess
import sys

import numpy as np
import pytest

from mginf_busy import cli
from mginf_busy.exact import busy_cdf_special
from mginf_busy.model import QueueParams


def run(argv, capsys):
    """Run the CLI in-process, returning (exit code, stdout json, stderr json)."""
    try:
        code = cli.main(argv)
    except SystemExit as exc:
        code = exc.code
    out, err = capsys.readouterr()
    parse = lambda s: json.loads(s) if s.strip() else None
    return code, parse(out), parse(err)


def test_eval_special_point(tmp_path, capsys):
    code, rep, _ = run(["eval", "--lambda", "1", "--alpha", "1", "--model", "special",
                        "--beta", "0", "--t", "1", "--out", str(tmp_path / "e")], capsys)
    assert code == 0
    point = rep["points"][0]
    # closed-form value, checked against mpmath in the exact tests
    assert point["busy_cdf"] == pytest.approx(0.5624457524882361, abs=1e-12)
    assert point["busy_cdf_series"] == pytest.approx(point["busy_cdf"], abs=1e-7)
    assert point["cycle_cdf"] == pytest.approx(-math.expm1(-math.exp(-1.0)), abs=1e-12)
    assert point["cycle_cdf_series"] == pytest.approx(point["cycle_cdf"], abs=1e-4)
    names = {p.split("_", 1)[1] for p in map(lambda f: f.rsplit("/", 1)[1], rep["files"])}
    assert names == {"busy_series.csv", "busy_series.json", "cycle_series.csv",
                     "busy_special.csv", "cycle_special.csv"}
    side = json.loads((tmp_path / "e_busy_series.json").read_text())
    assert side["terms_used"] == rep["terms_used"]
    header = (tmp_path / "e_busy_special.csv").read_text().splitlines()[0]
    assert header == "t,value"


def test_eval_default_grid_and_scientific_flags(tmp_path, capsys):
    code, rep, _ = run(["eval", "--lambda", "5e-1", "--alpha", "1e0", "--tol", "1e-9",
                        "--out", str(tmp_path / "e")], capsys)
    assert code == 0
    t = np.loadtxt(tmp_path / "e_busy_series.csv", delimiter=",", skiprows=1)[:, 0]
    assert t[1] - t[0] == pytest.approx(0.01)
    assert t[-1] == pytest.approx(30 * 1.0 + 10 / 0.5)
    assert rep["truncation_bound"] <= 1e-9


def test_bounds_upper_source_switches_at_e(tmp_path, capsys):
    code, rep, _ = run(["bounds", "--lambda", "1", "--alpha", "1", "--grid-h", "0.01",
                        "--grid-T", "20", "--out", str(tmp_path / "b")], capsys)
    assert code == 0
    lines = (tmp_path / "b_busy_band.csv").read_text().splitlines()
    assert lines[0] == "t,lower,upper,lower_src,upper_src"
    rows = [line.split(",") for line in lines[1:]]
    srcs = [r[4] for r in rows]
    switches = [i for i in range(1, len(srcs)) if srcs[i] != srcs[i - 1]]
    assert len(switches) == 1
    t_switch = float(rows[switches[0]][0])
    assert abs(t_switch - math.e) <= 0.01
    assert srcs[0] == "service_upper" and srcs[-1] == "exp_rate_upper"
    assert (tmp_path / "b_cycle_band.csv").exists()


def test_bounds_general_service(tmp_path, capsys):
    code, rep, _ = run(["bounds", "--lambda", "1", "--alpha", "0.5", "--model", "special",
                        "--beta", "0", "--grid-T", "10", "--out", str(tmp_path / "b")], capsys)
    assert code == 0
    data = np.genfromtxt(tmp_path / "b_busy_band.csv", delimiter=",", skip_header=1, usecols=(0, 1, 2))
    p = QueueParams(1.0, 0.5)
    exact = busy_cdf_special(p, 0.0, data[:, 0])
    assert np.all(data[:, 1] <= exact + 1e-7) and np.all(exact <= data[:, 2] + 1e-7)


def test_simulate_writes_samples_and_summary(tmp_path, capsys):
    code, rep, _ = run(["simulate", "--lambda", "1", "--alpha", "1", "--cycles", "5000",
                        "--out", str(tmp_path / "s")], capsys)
    assert code == 0
    assert rep["n"] == 5000 and 0 < rep["ks"] < 0.05
    lines = (tmp_path / "s_samples.csv").read_text().splitlines()
    assert lines[0] == "idle,busy" and len(lines) == 5001
    summ = json.loads((tmp_path / "s_summary.json").read_text())
    assert set(summ) == {"n", "mean_idle", "mean_busy", "var_busy", "corr", "ks"}


def test_compare_verdict(tmp_path, capsys):
    code, rep, _ = run(["compare", "--lambda", "0.5", "--alpha", "1", "--cycles", "200000",
                        "--replicas", "2", "--workers", "2", "--out", str(tmp_path / "c")], capsys)
    assert code == 0 and rep["passed"]
    verdict = json.loads((tmp_path / "c_verdict.json").read_text())
    assert verdict["sandwich_violations"] == 0 and verdict["cycle_band_violations"] == 0
    assert verdict["ks_busy"] < verdict["ks_limit"] and verdict["ks_cycle"] < verdict["ks_limit"]
    assert verdict["n_cycles"] == 200000
    assert set(verdict["metadata"]) == {"version", "seed", "timestamp"}


def test_compare_failure_exits_4(tmp_path, capsys, monkeypatch):
    # with the sample-size allowance removed, 2000 cycles cannot reach KS < 0.005
    monkeypatch.setattr(cli, "ks_critical", lambda n: 0.0)
    code, out, err = run(["compare", "--lambda", "0.5", "--alpha", "1", "--cycles", "2000",
                          "--out", str(tmp_path / "c")], capsys)
    assert code == cli.EXIT_VERDICT
    assert err["error"] == "VerdictFailed" and out["passed"] is False
    assert json.loads((tmp_path / "c_verdict.json").read_text())["passed"] is False


def test_config_file_overrides_defaults(tmp_path, capsys):
    conf = tmp_path / "run.conf"
    conf.write_text("# special family run\nlambda = 1\nalpha=1\nmodel=special\nbeta = 0\ngrid-T = 15\n")
    code, rep, _ = run(["eval", "--config", str(conf), "--t", "1", "--out", str(tmp_path / "e")], capsys)
    assert code == 0
    assert rep["points"][0]["busy_cdf"] == pytest.approx(0.5624457524882361, abs=1e-12)
    t = np.loadtxt(tmp_path / "e_busy_series.csv", delimiter=",", skiprows=1)[:, 0]
    assert t[-1] == pytest.approx(15.0)
    # explicit flags win over the file
    code, rep, _ = run(["eval", "--config", str(conf), "--beta", "0.25", "--out", str(tmp_path / "f")], capsys)
    assert code == 0 and (tmp_path / "f_busy_special.csv").exists()


def test_config_unknown_key(tmp_path, capsys):
    conf = tmp_path / "bad.conf"
    conf.write_text("lambda=1\ncolour=blue\n")
    code, _, err = run(["eval", "--config", str(conf), "--alpha", "1"], capsys)
    assert code == cli.EXIT_INVALID and "colour" in err["message"]


@pytest.mark.parametrize("argv", [
    ["eval", "--lambda", "1", "--alpha", "1", "--model", "special", "--beta", "5"],
    ["eval", "--lambda", "0", "--alpha", "1"],
    ["eval", "--lambda", "1", "--alpha", "-2"],
    ["eval", "--lambda", "1"],
    ["eval", "--lambda", "abc", "--alpha", "1"],
    ["simulate", "--lambda", "1", "--alpha", "1", "--cycles", "0"],
    ["frobnicate"],
])
def test_invalid_input_exits_2(argv, tmp_path, capsys):
    code, _, err = run(argv + ["--out", str(tmp_path / "x")] if argv[0] != "frobnicate" else argv, capsys)
    assert code == cli.EXIT_INVALID
    assert err["exit_code"] == 2 and err["message"]


def test_unreachable_tolerance_exits_3(tmp_path, capsys):
    code, _, err = run(["eval", "--lambda", "3", "--alpha", "1", "--max-terms", "50",
                        "--out", str(tmp_path / "x")], capsys)
    assert code == cli.EXIT_NUMERIC
    assert err["error"] == "TruncationError" and err["achieved_bound"] > 1e-8


def test_table_model(tmp_path, capsys):
    t = np.linspace(0.0, 2.0, 201)
    table = tmp_path / "g.csv"
    table.write_text("t,G\n" + "\n".join(f"{a},{a / 2}" for a in t) + "\n")
    code, rep, _ = run(["eval", "--lambda", "0.8", "--model", "table", "--table", str(table),
                        "--out", str(tmp_path / "e")], capsys)
    assert code == 0 and rep["params"]["alpha"] == pytest.approx(1.0)


def test_compare_outputs_byte_identical(tmp_path, capsys):
    argv = ["compare", "--lambda", "0.5", "--alpha", "1", "--cycles", "50000", "--seed", "42"]
    for name in ("a", "b"):
        assert run(argv + ["--out", str(tmp_path / name / "run")], capsys)[0] == 0
    csvs = sorted(p.name for p in (tmp_path / "a").glob("*.csv"))
    assert len(csvs) == 5
    for name in csvs:
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    va, vb = (json.loads((tmp_path / d / "run_verdict.json").read_text()) for d in "ab")
    for v in (va, vb):
        v.pop("metadata"), v.pop("files")
    assert va == vb


def test_console_entry_point():
    out = subprocess.run([sys.executable, "-m", "mginf_busy.cli", "--version"],
                         capture_output=True, text=True)
    assert out.returncode == 0 and out.stdout.strip() == "0.1.0"
