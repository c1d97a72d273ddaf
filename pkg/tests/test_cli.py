import json
import subprocess
import sys

import numpy as np
import pytest

from istlab import errors
from istlab.cli import main
from istlab.fields import Grid1D, read_field_json, sample, write_field_csv


def run(tmp_path, verb, cfg, name="cfg.json", out="out"):
    p = tmp_path / name
    p.write_text(json.dumps(cfg))
    return main([verb, "--config", str(p), "--out", str(tmp_path / out), "--quiet"])


def test_scatter_schrodinger(tmp_path):
    assert run(tmp_path, "scatter", {"equation": "schrodinger", "datum": "sech2_h1"}) == 0
    out = tmp_path / "out"
    summary = json.loads((out / "summary.json").read_text())
    assert summary["N"] == 1 and abs(summary["kappas"][0] - 1) < 1e-7
    assert summary["max_abs_rho"] < 1e-8
    for f in ("scattering.json", "scattering.csv", "bound_states.csv", "summary.txt"):
        assert (out / f).is_file()
    assert "reflectionless" in (out / "summary.txt").read_text()


def test_scatter_zs(tmp_path):
    cfg = {"equation": "zs_focusing", "datum": "nls_sol_h05", "k": {"dk": 0.2, "k_max": 4.0}}
    assert run(tmp_path, "scatter", cfg) == 0
    ev = json.loads((tmp_path / "out" / "summary.json").read_text())["eigenvalues"]
    assert len(ev) == 1 and abs(ev[0][1] - 0.5) < 1e-6


def test_ist_direct_compare_and_plotdata(tmp_path):
    assert run(tmp_path, "solve-ist", {"datum": "sech2_h1", "times": [0.0, 0.25]}, "a.json", "ist") == 0
    assert run(tmp_path, "solve-direct", {"equation": "kdv", "datum": "sech2_h1", "t_end": 0.25,
                                          "n_snapshots": 1}, "b.json", "dir") == 0
    man = json.loads((tmp_path / "dir" / "manifest.json").read_text())
    assert [s["t"] for s in man["snapshots"]] == [0.0, 0.25]
    cmp = {"a": str(tmp_path / "ist"), "b": str(tmp_path / "dir")}
    assert run(tmp_path, "compare", cmp, "c.json", "cmp") == 0
    rep = json.loads((tmp_path / "cmp" / "report.json").read_text())
    assert rep["passed"] and max(r["linf"] for r in rep["per_time"]) < 1e-5
    cmp["tolerances"] = {"linf": 1e-12}
    assert run(tmp_path, "compare", cmp, "c2.json", "cmp2") == errors.EXIT_TOLERANCE
    assert "linf" in json.loads((tmp_path / "cmp2" / "report.json").read_text())["flags"]

    pd = {"inputs": [{"path": str(tmp_path / "ist"), "series": "trajectory"},
                     {"path": str(tmp_path / "dir"), "series": "kappa_spectrum"}]}
    assert run(tmp_path, "plotdata", pd, "p.json", "plot") == 0
    lines = (tmp_path / "plot" / "plotdata.csv").read_text().splitlines()
    assert lines[0] == "series,label,x,re,im"
    assert sum(l.startswith("kappa_spectrum") for l in lines) == 2


def test_compare_incompatible(tmp_path):
    run(tmp_path, "nsoliton", {"components": [{"eta": 1.0}], "times": [0.0, 0.5]}, "a.json", "a")
    run(tmp_path, "nsoliton", {"components": [{"eta": 1.0}], "times": [0.0, 0.5],
                               "grid": {"x_min": -30, "x_max": 30, "n_points": 512}}, "b.json", "b")
    code = run(tmp_path, "compare", {"a": str(tmp_path / "a"), "b": str(tmp_path / "b")}, "c.json", "c")
    assert code == errors.IncompatibleError.exit_code == 8


def test_nsoliton_outputs(tmp_path):
    cfg = {"components": [{"eta": 1.0, "x0": -2.0}, {"eta": 2.0, "x0": -8.0}], "times": [0.0, 1.0]}
    assert run(tmp_path, "nsoliton", cfg) == 0
    man = json.loads((tmp_path / "out" / "manifest.json").read_text())
    f = read_field_json(tmp_path / "out" / man["snapshots"][1]["file"])
    assert abs(f.max_abs() - 8.0) < 1e-2
    nls = {"equation": "nls_focusing", "components": [{"eta": 0.5}], "times": [0.0, 1.0],
           "motion": {"velocity": 0.0, "frequency": -1.0}}
    assert run(tmp_path, "nsoliton", nls, "n.json", "nls") == 0
    deg = {"components": [{"eta": 1.0}, {"eta": 1.0}], "times": [0.0]}
    assert run(tmp_path, "nsoliton", deg, "d.json", "deg") == errors.DegeneracyError.exit_code


@pytest.mark.parametrize("verb,cfg", [
    ("scatter", {"equation": "schrodinger", "datum": "sech2_h1", "colour": "red"}),
    ("scatter", {"equation": "schrodinger"}),
    ("scatter", {"equation": "heat", "datum": "sech2_h1"}),
    ("scatter", {"equation": "schrodinger", "datum": "no_such_fixture"}),
    ("scatter", {"equation": "schrodinger", "datum": {"csv": "missing.csv"}}),
    ("solve-ist", {"datum": "sech2_h1", "times": []}),
    ("solve-direct", {"equation": "kdv", "datum": "sech2_h1", "t_end": 0.1, "dt": 1.0}),
    ("solve-direct", {"equation": "kdv", "datum": "sech2_h1", "t_end": 0.1, "n_snapshots": 0}),
    ("plotdata", {"inputs": [{"path": ".", "series": "histogram"}]}),
])
def test_config_errors_exit_2(tmp_path, verb, cfg):
    assert run(tmp_path, verb, cfg) == 2


def test_bad_json_and_missing_out(tmp_path, capsys):
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    assert main(["scatter", "--config", str(p), "--out", str(tmp_path / "o")]) == 2
    p.write_text(json.dumps({"equation": "schrodinger", "datum": "sech2_h1"}))
    assert main(["scatter", "--config", str(p)]) == 2
    assert "no output directory" in capsys.readouterr().err


def test_truncated_csv_datum_exits_3(tmp_path):
    write_field_csv(sample(Grid1D(-3, 3, 64), lambda x: np.exp(-x**2)), tmp_path / "u.csv")
    cfg = {"equation": "schrodinger", "datum": {"csv": "u.csv"}}
    assert run(tmp_path, "scatter", cfg) == 3


def test_module_entry_point(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"equation": "schrodinger", "datum": "zero", "out": "res"}))
    r = subprocess.run([sys.executable, "-m", "istlab.cli", "scatter", "--config", str(cfg)],
                       capture_output=True, text=True)
    assert r.returncode == 0, r.stderr
    assert "bound states N = 0" in r.stdout
    assert (tmp_path / "res" / "summary.json").is_file()
