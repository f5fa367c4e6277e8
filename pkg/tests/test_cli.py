import csv
import json
import subprocess
import sys

import pytest

from barronwave import experiments as ex
from barronwave.cli import main
from barronwave.experiments import (
    REGISTRY,
    ConfigError,
    ExperimentConfig,
    ExperimentReport,
    emit_report,
    resolve_parameters,
    run_experiment,
)

SWEEP_HEADER = "s,norm_1s,compensated,oracle,rel_err,pass"


def _read(path):
    return path.read_bytes()


# -- exit-code contract ----------------------------------------------------------------


def test_exit_zero_on_pass(tmp_path, capsys):
    assert main(["run", "barron-sweep", "--out", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    assert "PASS  barron-sweep: oracle_agreement" in out
    assert (tmp_path / "barron-sweep.csv").exists() and (tmp_path / "barron-sweep.json").exists()


def test_exit_one_on_numerical_failure(tmp_path, capsys):
    # no eigenvalue in the bracket: the report is written with a failing flag
    code = main(["run", "hydrogen-eigen", "--set", "lambda_lo=-0.4", "--set", "lambda_hi=-0.1",
                 "--out", str(tmp_path)])
    assert code == 1
    report = json.loads((tmp_path / "hydrogen-eigen.json").read_text())
    assert report["passed"] is False and report["checks"] == {"completed": False}
    assert "NoEigenvalueError" in report["error"]
    assert "FAIL" in capsys.readouterr().out


def test_exit_one_when_series_exceeds_budget(tmp_path):
    assert main(["run", "neumann-reconstruction", "--set", "omega_cut=0.05", "--out", str(tmp_path)]) == 1


def test_exit_two_on_misspelled_key(tmp_path, capsys):
    out = tmp_path / "out"
    assert main(["run", "riesz-identity", "--set", "alpa=1", "--out", str(out)]) == 2
    assert not out.exists()
    assert "alpa" in capsys.readouterr().err


@pytest.mark.parametrize("argv", [
    ["run", "riesz-identity", "--set", "scales=abc"],
    ["run", "riesz-identity", "--set", "noequals"],
    ["run", "barron-sweep", "--set", "node_count=2.5"],
])
def test_exit_two_on_bad_values(tmp_path, argv):
    out = tmp_path / "out"
    assert main(argv + ["--out", str(out)]) == 2
    assert not out.exists()


def test_unknown_experiment_is_usage_error(tmp_path):
    with pytest.raises(SystemExit) as exc:
        main(["run", "no-such-thing", "--out", str(tmp_path / "x")])
    assert exc.value.code == 2


def test_config_file(tmp_path):
    cfg = tmp_path / "run.ini"
    cfg.write_text("[barron-sweep]\ns_list = 0, 0.5\n\n[riesz-identity]\nscales = 1\n")
    assert main(["run", "barron-sweep", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 0
    lines = (tmp_path / "o" / "barron-sweep.csv").read_text().splitlines()
    assert len(lines) == 3


@pytest.mark.parametrize("text", ["[barron-sweep]\nslist = 0\n", "[barron-swep]\ns_list = 0\n",
                                  "[riesz-identity]\nalpa = 1\n[barron-sweep]\n", "not an ini file\n"])
def test_bad_config_file(tmp_path, text):
    cfg = tmp_path / "run.ini"
    cfg.write_text(text)
    out = tmp_path / "o"
    assert main(["run", "barron-sweep", "--config", str(cfg), "--out", str(out)]) == 2
    assert not out.exists()


def test_set_overrides_config(tmp_path):
    cfg = tmp_path / "run.ini"
    cfg.write_text("[barron-sweep]\ns_list = 0, 0.5\n")
    main(["run", "barron-sweep", "--config", str(cfg), "--set", "s_list=0.9", "--out", str(tmp_path)])
    assert len((tmp_path / "barron-sweep.csv").read_text().splitlines()) == 2


# -- listing ---------------------------------------------------------------------------


def test_list(capsys):
    assert main(["list"]) == 0
    out = capsys.readouterr().out
    for name in ("riesz-identity", "kappa-sharpness", "k-operator-xcheck", "multiparticle-commutation",
                 "hydrogen-eigen", "contraction-study", "barron-sweep", "neumann-reconstruction"):
        assert f"{name}:" in out
    assert "    s_list = 0,0.5,0.9,0.99,0.999" in out
    assert f"    seed = {ex.DEFAULT_SEED}" in out


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "barronwave", "list"], capture_output=True, text=True)
    assert res.returncode == 0 and "barron-sweep" in res.stdout


# -- report format ------------------------------------------------------------------------


def test_barron_sweep_csv(tmp_path):
    main(["run", "barron-sweep", "--set", "s_list=0,0.5,0.9,0.99", "--out", str(tmp_path)])
    text = (tmp_path / "barron-sweep.csv").read_text()
    lines = text.splitlines()
    assert lines[0] == SWEEP_HEADER
    rows = list(csv.DictReader(lines))
    assert [float(r["s"]) for r in rows] == [0.0, 0.5, 0.9, 0.99]
    assert all(r["pass"] == "true" for r in rows)
    # 17 significant digits round-trip exactly
    report = json.loads((tmp_path / "barron-sweep.json").read_text())
    for r, j in zip(rows, report["rows"]):
        assert float(r["norm_1s"]) == j["norm_1s"]
        assert j["tolerance"] == ex.ORACLE_TOL
    assert report["seed"] == ex.DEFAULT_SEED
    assert report["parameters"]["s_list"] == [0.0, 0.5, 0.9, 0.99]


@pytest.mark.parametrize("name,args", [
    ("barron-sweep", []),
    ("k-operator-xcheck", ["--set", "samples=20000", "--set", "radius_count=3"]),
    ("multiparticle-commutation", ["--set", "samples=5000", "--set", "points_per_case=1"]),
])
def test_reruns_are_byte_identical(tmp_path, name, args):
    a, b = tmp_path / "a", tmp_path / "b"
    main(["run", name, *args, "--seed", "7", "--out", str(a)])
    main(["run", name, *args, "--seed", "7", "--out", str(b)])
    for suffix in (".csv", ".json"):
        assert _read(a / f"{name}{suffix}") == _read(b / f"{name}{suffix}")


def test_seed_changes_monte_carlo_output(tmp_path):
    args = ["--set", "samples=5000", "--set", "radius_count=2"]
    main(["run", "k-operator-xcheck", *args, "--seed", "1", "--out", str(tmp_path / "a")])
    main(["run", "k-operator-xcheck", *args, "--seed", "2", "--out", str(tmp_path / "b")])
    assert _read(tmp_path / "a" / "k-operator-xcheck.csv") != _read(tmp_path / "b" / "k-operator-xcheck.csv")


def test_empty_result_set(tmp_path):
    report = ExperimentReport("barron-sweep", {"seed": 1}, REGISTRY["barron-sweep"].columns, [], {}, 1)
    emit_report(report, tmp_path)
    assert (tmp_path / "barron-sweep.csv").read_text() == SWEEP_HEADER + "\n"
    data = json.loads((tmp_path / "barron-sweep.json").read_text())
    assert data["rows"] == [] and data["passed"] is False


def test_emit_to_unwritable_path(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    report = ExperimentReport("barron-sweep", {}, REGISTRY["barron-sweep"].columns, [], {}, 1)
    with pytest.raises(OSError):
        emit_report(report, blocker / "sub")


# -- row tolerances equal the declared acceptance tolerances ------------------------------------


def test_row_tolerances(tmp_path):
    expected = {
        "riesz-identity": {None: 1e-8},
        "barron-sweep": {None: 1e-6},
        "hydrogen-eigen": {"eigenvalue": 1e-3, "shape": 1e-2, "growth": 0.25},
        "neumann-reconstruction": {"reconstruction": 1e-3, "terms": 200},
        "kappa-sharpness": {"sharpness": 0.02},
    }
    for name, tols in expected.items():
        report = run_experiment(ExperimentConfig(name, {}), emit=False)
        assert report.rows
        for row in report.rows:
            key = row.get("check") if None not in tols else None
            if key in tols:
                assert row["tolerance"] == tols[key], (name, row)
                assert isinstance(row["pass"], bool)


def test_sigma_tolerances():
    assert ex.SIGMA_MAX == 3.0 and ex.COMMUTATION_FRACTION == 0.95
    assert ex.SLOPE_RANGE == (-1.3, -0.7) and ex.NEUMANN_MAX_TERMS == 200
    report = run_experiment(ExperimentConfig("k-operator-xcheck", {"samples": 2000, "radius_count": 2}),
                            emit=False)
    assert all(r["tolerance"] == 3.0 for r in report.rows)


# -- parameter resolution ----------------------------------------------------------------------


def test_resolve_parameters():
    p = resolve_parameters("riesz-identity", {"scales": "0.5, 1", "seed": "3"})
    assert p["scales"] == (0.5, 1.0) and p["seed"] == 3
    with pytest.raises(ConfigError):
        resolve_parameters("riesz-identity", {"alpa": "1"})
    with pytest.raises(ConfigError):
        resolve_parameters("nope", {})


def test_bad_riesz_pairs(tmp_path):
    assert main(["run", "riesz-identity", "--set", "pairs=3:5", "--out", str(tmp_path / "o")]) == 2
    assert not (tmp_path / "o").exists()
