import subprocess
import sys

import numpy as np
import pytest
import yaml

from pseudopara.cli import main
from pseudopara.harness import read_csv
from pseudopara.solver import read_state

SOLVE = {
    "name": "bump",
    "grid": {"dim": 1, "L": 16.0, "N": 32},
    "solver": {"p": 0.5, "dt": 0.01, "m_ladder": [16, 64]},
    "initial": {"kind": "bump"},
    "t_end": 0.2,
}


def write(tmp_path, name, *docs):
    path = tmp_path / name
    path.write_text(yaml.safe_dump_all(docs))
    return str(path)


def test_solve_writes_csv_and_dump(tmp_path, capsys):
    cfg = write(tmp_path, "s.yaml", SOLVE)
    out, dump = str(tmp_path / "s.csv"), str(tmp_path / "u.bin")
    assert main(["solve", "--config", cfg, "--out", out, "--dump", dump]) == 0
    assert "ladder monotone True" in capsys.readouterr().out
    assert len(read_csv(out)["t"]) == 21
    f, t = read_state(dump)
    assert t == pytest.approx(0.2) and f.values.shape == (32,)
    assert main(["solve", "--config", cfg, "--out", out]) == 2
    assert main(["solve", "--config", cfg, "--out", out, "--force"]) == 0


def test_solve_bad_config(tmp_path):
    assert main(["solve", "--config", write(tmp_path, "b.yaml", {**SOLVE, "oops": 1})]) == 2
    assert main(["solve", "--config", write(tmp_path, "two.yaml", SOLVE, SOLVE)]) == 2
    assert main(["solve", "--config", str(tmp_path / "missing.yaml")]) == 2
    assert main(["solve"]) == 2
    assert main(["nonsense"]) == 2


def test_solve_overflow_exit(tmp_path):
    d = {**SOLVE, "solver": {**SOLVE["solver"], "ceiling": 1.01}, "t_end": 1.0,
         "initial": {"kind": "constant", "c": 1.0}}
    assert main(["solve", "--config", write(tmp_path, "o.yaml", d)]) == 1


def test_maximal(tmp_path, capsys):
    d = {"name": "max", "grid": {"dim": 1, "L": 8.0, "N": 16},
         "potential": {"k": 1.0, "zeta": 2.0}, "solver": {"dt": 0.01},
         "initial": {"kind": "zero"}, "t_end": 1.0, "checks": {"tol": 1e-3}}
    out = str(tmp_path / "m.csv")
    assert main(["maximal", "--config", write(tmp_path, "m.yaml", d), "--out", out]) == 0
    assert read_csv(out)["sup_norm"][-1] == pytest.approx(0.25, abs=1e-3)
    d["checks"] = {"tol": 1e-12}
    assert main(["maximal", "--config", write(tmp_path, "m2.yaml", d)]) == 1


def test_compare(tmp_path, capsys):
    hi = {**SOLVE, "initial": {"kind": "bump", "amplitude": 2.0}}
    cfg = write(tmp_path, "c.yaml", hi, SOLVE)
    assert main(["compare", "--config", cfg, "--out", str(tmp_path / "c.csv")]) == 0
    assert "holds" in capsys.readouterr().out
    # reversed order violates the precondition
    assert main(["compare", "--config", write(tmp_path, "r.yaml", SOLVE, hi)]) == 2
    assert main(["compare", "--config", write(tmp_path, "one.yaml", SOLVE)]) == 2


def test_growth_fit(tmp_path, capsys):
    d = {"name": "fit", "grid": {"dim": 1, "L": 8.0, "N": 16}, "solver": {"dt": 0.1,
         "m_ladder": ["inf"]}, "initial": {"kind": "constant", "c": 1.0}, "t_end": 100.0,
         "fit_window": [10.0, 100.0], "checks": {"fit_tol": 0.1}}
    cfg = write(tmp_path, "g.yaml", d)
    out = str(tmp_path / "g.csv")
    assert main(["growth-fit", "--config", cfg, "--out", out]) == 0
    assert "PASS" in capsys.readouterr().out
    assert main(["growth-fit", "--config", cfg, "--csv", out, "--column", "sup_norm"]) == 0
    d["checks"] = {"fit_tol": 0.001}
    assert main(["growth-fit", "--config", write(tmp_path, "g2.yaml", d), "--csv", out]) == 1


def test_nonuniqueness(tmp_path, capsys):
    d = {"name": "nu", "potential": {"k": 1.0}, "solver": {"dt": 0.01}, "initial": {"kind": "zero"},
         "t_end": 1.5, "checks": {"kappas": [0.0, 0.5], "tol": 1e-3, "min_gap": 0.05}}
    out = str(tmp_path / "n.csv")
    assert main(["nonuniqueness", "--config", write(tmp_path, "n.yaml", d), "--out", out]) == 0
    assert np.array_equal(read_csv(out)["kappa"], [0.0, 0.5])
    d["checks"]["min_gap"] = 1.0
    assert main(["nonuniqueness", "--config", write(tmp_path, "n2.yaml", d)]) == 1


def test_verify_operators(tmp_path, capsys):
    cfg = write(tmp_path, "v.yaml", {"dim": 1, "L": 16.0, "N": 64, "a": 1.0, "R": 2.0,
                                      "theta": 0.5, "trials": 4, "d": 1.0})
    assert main(["verify-operators", "--config", cfg]) == 0
    text = capsys.readouterr().out
    assert "||B phi|| / ||phi||" in text and text.strip().endswith("PASS")
    bad = write(tmp_path, "w.yaml", {"a": 5.0, "R": 1.0, "theta": 0.5, "trials": 2})
    assert main(["verify-operators", "--config", bad]) == 1
    assert "precondition violated" in capsys.readouterr().out
    assert main(["verify-operators", "--config", write(tmp_path, "x.yaml", {"zz": 1})]) == 2


def test_kernel_table(tmp_path, capsys):
    assert main(["kernel-table", "--dim", "1", "--rmin", "0.1", "--rmax", "5", "--samples", "5"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0] == "r,B_nu(r),lower_bound,ratio" and len(lines) == 6
    assert float(lines[1].split(",")[1]) == pytest.approx(0.5 * np.exp(-0.1), rel=1e-12)
    out = str(tmp_path / "k.csv")
    args = ["kernel-table", "--dim", "3", "--nu", "2", "--rmin", "0.5", "--rmax", "2",
            "--samples", "4", "--out", out]
    assert main(args) == 0
    assert main(args) == 2
    assert main(["kernel-table", "--dim", "0", "--rmin", "1", "--rmax", "2", "--samples", "2"]) == 2


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "pseudopara", "--help"], capture_output=True, text=True)
    assert r.returncode == 0 and "kernel-table" in r.stdout
