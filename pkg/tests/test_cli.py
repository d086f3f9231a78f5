import csv
import json

import numpy as np
import pytest

from anisomg.cli import main
from anisomg.config import ConfigError, ExperimentConfig, load_config

QUICK = """
[mesh]
nx = 2
ny = 2
r = 2
degree = 1

[field]
kind = "island"
ratio = 1e6

[sim]
tau = 5e-7
steps = 3

[ms]
J = 2

[sweep]
J = [1, 2]
ratios = [1e3, 1e6]

[bench]
J = [1, 2]
ratios = [1e6]

[analysis]
samples = 10
ktg_modes = [1, 2]
ratios = [1e3, 1e6]
transient_field = "open_mixed"
transient_spread_cap = 100.0
"""


@pytest.fixture()
def quick_config(tmp_path):
    path = tmp_path / "quick.toml"
    path.write_text(QUICK)
    return path


def test_default_config_roundtrip():
    cfg = ExperimentConfig()
    cfg.validate()
    blob = cfg.to_canonical_dict()
    assert blob["sim"]["tau"] == 5e-7       # t_max 5e-6 over 10 steps
    assert blob["sim"]["steps"] == 10
    assert blob["solver"]["nu"] == 5
    assert blob["solver"]["rtol"] == 1e-5
    assert blob["solver"]["maxiter"] == 100
    assert len(cfg.config_hash()) == 64


def test_config_rejects_unknown_keys(tmp_path):
    bad = tmp_path / "bad.toml"
    bad.write_text("[mesh]\nnx = 2\ntypo = 1\n")
    with pytest.raises(ConfigError):
        load_config(bad)
    bad2 = tmp_path / "bad2.toml"
    bad2.write_text("[grid]\nnx = 2\n")
    with pytest.raises(ConfigError):
        load_config(bad2)


def test_config_validation_errors(tmp_path):
    for body in ("[mesh]\ndegree = 3\n",
                 "[field]\nkind = 'spiral'\n",
                 "[solver]\nsmoother = 'ilu'\n",
                 "[sweep]\nJ = []\n"):
        path = tmp_path / "case.toml"
        path.write_text(body)
        with pytest.raises(ConfigError):
            load_config(path)


def test_cli_exit_code_on_config_error(tmp_path):
    bad = tmp_path / "bad.toml"
    bad.write_text("[mesh]\ndegree = 7\n")
    assert main(["solve", "--config", str(bad), "--out", str(tmp_path / "o")]) == 1
    assert main(["solve", "--config", str(tmp_path / "missing.toml"),
                 "--out", str(tmp_path / "o")]) == 1


def test_cmd_solve_minimal(tmp_path, quick_config):
    out = tmp_path / "solve"
    assert main(["solve", "--config", str(quick_config), "--out", str(out)]) == 0
    report = json.loads((out / "report.json").read_text())
    assert report["config_hash"] == load_config(quick_config).config_hash()
    assert "multiscale" in report
    assert np.isfinite(report["multiscale"]["relative_l2_error"])
    assert (out / "solution.vtk").exists()
    assert (out / "solution.png").exists()
    # timings live in their own file, not in the report
    assert "wall" not in json.dumps(report).lower()
    assert (out / "timings.json").exists()


def test_cmd_solve_reference_only(tmp_path, quick_config):
    cfg_path = tmp_path / "ref.toml"
    cfg_path.write_text(QUICK.replace("[ms]\nJ = 2", "[ms]\nenabled = false"))
    out = tmp_path / "ref"
    assert main(["solve", "--config", str(cfg_path), "--out", str(out)]) == 0
    report = json.loads((out / "report.json").read_text())
    assert "multiscale" not in report
    assert "dof_coarse" not in report


def test_cmd_solve_pcg_mode(tmp_path, quick_config):
    cfg_path = tmp_path / "pcg.toml"
    cfg_path.write_text(QUICK + "\n[solver]\nmode = 'pcg'\n")
    out = tmp_path / "pcg"
    assert main(["solve", "--config", str(cfg_path), "--out", str(out)]) == 0
    report = json.loads((out / "report.json").read_text())
    assert report["fine_solver"]["nc"] is False
    assert report["fine_solver"]["nbar"] > 0
    assert all(r <= 1e-5 for r in report["fine_solver"]["final_relative_residuals"])


def test_cmd_solve_solver_failure_exit_code(tmp_path):
    # unpreconditioned PCG with a tiny iteration cap cannot converge
    cfg_path = tmp_path / "hard.toml"
    cfg_path.write_text("""
[mesh]
nx = 2
ny = 2
r = 2
degree = 1

[field]
ratio = 1e12

[sim]
steps = 1

[ms]
enabled = false

[solver]
mode = "pcg"
maxiter = 3
""")
    out = tmp_path / "hard"
    assert main(["solve", "--config", str(cfg_path), "--out", str(out)]) == 3


def test_cmd_sweep_outputs(tmp_path, quick_config):
    out = tmp_path / "sweep"
    assert main(["sweep", "--config", str(quick_config), "--out", str(out)]) == 0
    with open(out / "sweep.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 4  # 2 J x 2 ratios
    for row in rows:
        assert row["status"] == "ok"
        assert float(row["err"]) >= 0
        # coarse dofs invariant: J * number of coarse vertices
        assert int(row["dof_h"]) == int(row["J"]) * 9
    errs = {(r["J"], r["ratio"]): float(r["err"]) for r in rows}
    assert errs[("2", "1e+06")] < errs[("1", "1e+06")]
    assert (out / "err_vs_dofh.csv").exists()
    assert (out / "err_vs_dofh.png").exists()
    assert (out / "timings.csv").exists()


def test_sweep_nc_cells_do_not_abort(tmp_path):
    # J beyond the smallest local dimension: only those cells report nc
    cfg = tmp_path / "big_j.toml"
    cfg.write_text("""
[mesh]
nx = 2
ny = 2
r = 1
degree = 1

[sweep]
J = [2, 50]
ratios = [1e3]

[sim]
steps = 2
""")
    out = tmp_path / "sweep"
    assert main(["sweep", "--config", str(cfg), "--out", str(out)]) == 0
    with open(out / "sweep.csv") as fh:
        rows = {r["J"]: r["status"] for r in csv.DictReader(fh)}
    assert rows == {"2": "ok", "50": "nc"}


def test_cmd_precond_bench(tmp_path, quick_config):
    out = tmp_path / "bench"
    assert main(["precond-bench", "--config", str(quick_config), "--out", str(out)]) == 0
    with open(out / "bench.csv") as fh:
        rows = list(csv.DictReader(fh))
    smoothers = {r["smoother"] for r in rows}
    assert smoothers == {"jacobi", "sgs", "none"}  # identity baseline included
    for r in rows:
        if r["status"] == "ok":
            assert float(r["nbar"]) >= 0
    tg = [r for r in rows if r["smoother"] == "sgs" and r["J"] == "2"][0]
    un = [r for r in rows if r["smoother"] == "none"][0]
    assert float(tg["nbar"]) < float(un["nbar"])
    # Gauss-Seidel needs no more iterations than Jacobi, row by row
    for r in rows:
        if r["smoother"] != "sgs" or r["status"] != "ok":
            continue
        jac = [q for q in rows if q["smoother"] == "jacobi"
               and q["J"] == r["J"] and q["ratio"] == r["ratio"]]
        if jac and jac[0]["status"] == "ok":
            assert float(r["nbar"]) <= float(jac[0]["nbar"])


def test_cmd_verify_quick_passes(tmp_path, quick_config):
    out = tmp_path / "verify"
    assert main(["verify", "--config", str(quick_config), "--out", str(out)]) == 0
    payload = json.loads((out / "verify.json").read_text())
    assert payload["passed"] is True
    names = {r["name"] for r in payload["reports"]}
    assert any(n.startswith("local-estimates") for n in names)
    assert any(n.startswith("global-estimates") for n in names)
    assert any(n.startswith("transient-estimate") for n in names)
    assert any(n.startswith("two-grid-condition") for n in names)


def test_cmd_verify_failure_exit_code(tmp_path, quick_config):
    # absurdly small constant cap forces the global suite to fail
    cfg = tmp_path / "failing.toml"
    cfg.write_text(QUICK + "\nconstant_cap = 1e-12\n")
    out = tmp_path / "verify"
    assert main(["verify", "--config", str(cfg), "--out", str(out)]) == 2
    payload = json.loads((out / "verify.json").read_text())
    assert payload["passed"] is False


def test_cmd_verify_skips_dense_suite_on_large_mesh(tmp_path, capsys):
    cfg = tmp_path / "large.toml"
    cfg.write_text(QUICK + "\ndense_limit = 10\n")
    out = tmp_path / "verify"
    code = main(["verify", "--config", str(cfg), "--out", str(out)])
    assert code == 0  # skip is a warning, not a failure
    payload = json.loads((out / "verify.json").read_text())
    assert any("skipped" in r["name"] for r in payload["reports"])


def test_cmd_export(tmp_path, quick_config):
    out = tmp_path / "export"
    assert main(["export", "--config", str(quick_config), "--out", str(out)]) == 0
    for name in ("mesh.vtk", "field.vtk", "mass.mtx", "stiffness.mtx",
                 "system.mtx", "prolongation.mtx", "eigenvalues.csv",
                 "eigenvectors.vtk", "eigenvectors.png", "load.txt"):
        assert (out / name).exists(), name
    import scipy.io
    M = scipy.io.mmread(out / "mass.mtx")
    assert M.shape == (25, 25)
    with open(out / "eigenvalues.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert float(rows[0]["eigenvalue"]) <= 1e-8


def test_outputs_embed_config_hash_and_seed(tmp_path, quick_config):
    out = tmp_path / "s1"
    assert main(["sweep", "--config", str(quick_config), "--out", str(out),
                 "--seed", "77"]) == 0
    report = json.loads((out / "report.json").read_text())
    assert report["seed"] == 77
    assert report["config_hash"] == load_config(quick_config).config_hash()


def test_seed_pinned_runs_are_byte_identical(tmp_path, quick_config):
    outs = []
    for tag in ("a", "b"):
        sweep_out = tmp_path / f"sweep-{tag}"
        verify_out = tmp_path / f"verify-{tag}"
        assert main(["sweep", "--config", str(quick_config), "--out",
                     str(sweep_out), "--seed", "3"]) == 0
        assert main(["verify", "--config", str(quick_config), "--out",
                     str(verify_out), "--seed", "3"]) == 0
        outs.append((sweep_out, verify_out))
    for name in ("sweep.csv", "err_vs_dofh.csv", "report.json"):
        assert (outs[0][0] / name).read_bytes() == (outs[1][0] / name).read_bytes()
    for name in ("verify.json", "verify.txt"):
        assert (outs[0][1] / name).read_bytes() == (outs[1][1] / name).read_bytes()
