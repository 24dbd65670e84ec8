import csv
import io
import json

import numpy as np
import pytest

from bhf.cli import CSV_HEADER, UsageError, main, parse_config, run
from bhf.grid import build_grid, coupling_field, g_norm2

FAST = ["--nr", "2", "--nang", "6"]


def test_parse_valid():
    cfg = parse_config("--sigma 0.5 --cutoff 2 --g 0.05 --p 0.1,0,0 --solver coherent".split())
    assert cfg.p == (0.1, 0.0, 0.0) and cfg.solver == "coherent"
    assert cfg.tolerance == 1e-10
    assert parse_config(["--solver", "lagrange"]).tolerance == 1e-8


@pytest.mark.parametrize("argv, needle", [
    ("--sigma 2 --cutoff 1", "sigma < cutoff required"),
    ("--solver quasifree --sigma 0", "sigma > 0"),
    ("--p 0.1,0", "3 components"),
    ("--p a,b,c", "comma separated"),
    ("--solver magic", "invalid choice"),
    ("--nang 7", "spherical rule"),
    ("--tol -1", "tol > 0"),
])
def test_parse_errors(argv, needle):
    with pytest.raises(UsageError, match=needle):
        parse_config(argv.split())


def test_error_listing_is_exhaustive():
    with pytest.raises(UsageError) as exc:
        parse_config("--sigma 2 --cutoff 1 --tol 0 --nr 1".split())
    msg = str(exc.value)
    assert "sigma < cutoff" in msg and "tol > 0" in msg and "nr >= 2" in msg


def test_usage_exit_status(capsys):
    assert main("--sigma 2 --cutoff 1".split()) == 64
    assert "sigma < cutoff required" in capsys.readouterr().err


def test_config_file_overridden_by_flags(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"g": 0.2, "sigma": 0.3, "p": [0.1, 0.2, 0.0], "nr": 3}))
    cfg = parse_config(["--config", str(path), "--g", "0.1"])
    assert cfg.g == 0.1 and cfg.sigma == 0.3 and cfg.p == (0.1, 0.2, 0.0) and cfg.n_radial == 3
    path.write_text(json.dumps({"bogus": 1}))
    with pytest.raises(UsageError):
        parse_config(["--config", str(path)])


def test_coherent_run_at_zero_momentum():
    cfg = parse_config(["--p", "0,0,0", "--g", "0.1"])
    rep = run(cfg)
    assert rep.exit_code == 0
    grid = build_grid(0.5, 2.0, 8, 26)
    assert rep.body["energies"]["coherent"] == pytest.approx(
        0.5 * g_norm2(coupling_field(grid, 0.1)))
    assert rep.body["solvers"]["coherent"]["iterations"] <= 2


def test_non_convergence_exit(tmp_path):
    out = tmp_path / "r.json"
    code = main(FAST + ["--g", "0.3", "--p", "0.3,0,0", "--max-iter", "1",
                        "--out", str(out)])
    assert code == 2
    data = json.loads(out.read_text())
    assert data["status"] == "not_converged"


def _rows(text):
    return list(csv.reader(io.StringIO(text)))


def test_sweep_csv(tmp_path):
    out = tmp_path / "sweep.json"
    csv_path = tmp_path / "sweep.csv"
    code = main(FAST + ["--solver", "sweep", "--g-values", "0.01,0.02,0.05",
                        "--p-values", "0.05,0.1,0.2", "--out", str(out),
                        "--csv", str(csv_path), "--jobs", "2"])
    assert code == 0
    rows = _rows(csv_path.read_text())
    assert rows[0] == CSV_HEADER
    assert csv_path.read_text().splitlines()[0] == \
        "g,p_norm,E_vac,E_coh,E_qf,E_lagrange,E_pert2,E_pert4,iters,residual"
    assert len(rows) == 10
    assert [(float(r[0]), float(r[1])) for r in rows[1:]] == [
        (g, p) for g in (0.01, 0.02, 0.05) for p in (0.05, 0.1, 0.2)]
    for r in rows[1:]:
        e_vac, e_coh, e_qf, e_lag = map(float, r[2:6])
        assert e_qf <= e_coh <= e_vac
        assert abs(e_qf - e_lag) < 1e-8
    data = json.loads(out.read_text())
    assert len(data["points"]) == 9


def test_sweep_missing_values_empty():
    cfg = parse_config(FAST + ["--solver", "sweep", "--g-values", "0.05",
                               "--p-values", "0.1", "--sweep-solvers", "coherent"])
    rep = run(cfg)
    row = _rows(rep.csv_text)[1]
    header = CSV_HEADER
    assert row[header.index("E_qf")] == "" and row[header.index("E_lagrange")] == ""
    assert row[header.index("E_pert4")] == ""
    assert row[header.index("E_coh")] != ""


def test_oracle_run():
    rep = run(parse_config(["--solver", "oracle", "--modes", "2", "--g", "0.1"]))
    table = rep.body["oracle"]["table"]
    errs = [row["rel_error"] for row in table]
    assert [row["nmax"] for row in table] == [4, 6, 8]
    assert errs[0] > errs[1] > errs[2]
    assert rep.exit_code == 0


def test_determinism():
    argv = FAST + ["--solver", "quasifree", "--g", "0.1", "--p", "0.1,0,0.1", "--seed", "3"]
    a = json.loads(run(parse_config(argv)).to_json())
    b = json.loads(run(parse_config(argv)).to_json())
    a.pop("wall_time"), b.pop("wall_time")
    assert json.dumps(a, sort_keys=True) == json.dumps(b, sort_keys=True)


def test_report_round_trip_and_env_dir(tmp_path, monkeypatch):
    monkeypatch.setenv("BHF_OUTPUT_DIR", str(tmp_path))
    assert main(FAST + ["--solver", "perturb"]) == 0
    data = json.loads((tmp_path / "report.json").read_text())
    assert json.loads(json.dumps(data)) == data
    assert data["solvers"]["perturb"]["c22_discrepancy"] is True
    assert set(data["energies"]) == {"vacuum", "pert2", "pert4"}
    assert not list(tmp_path.glob(".bhf-*"))
