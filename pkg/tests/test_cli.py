import json

import pytest

from cayley_sobolev.cli import (
    EXIT_CAP,
    EXIT_CHECKS,
    EXIT_NONCONV,
    EXIT_OK,
    EXIT_USAGE,
    main,
)

CONFIG = """group: lattice
N: 3
p: 1.2
q: 7
radius: 4
init: radial-bump
seed: 0
tol_grad: 1.0e-5
max_iter: 200
restarts: 1
"""


def manifest(path):
    return json.loads((path / "manifest.json").read_text())


@pytest.fixture
def config(tmp_path):
    p = tmp_path / "run.yaml"
    p.write_text(CONFIG)
    return p


def test_growth(tmp_path):
    out = tmp_path / "g"
    assert main(["growth", "--group", "lattice", "--dim", "2", "--nmax", "10", "--out", str(out)]) \
        == EXIT_OK
    lines = (out / "growth.csv").read_text().splitlines()
    assert lines[3] == "2,13"
    m = manifest(out)
    assert m["status"] == "ok" and str(out / "growth.csv") in m["outputs"]


def test_growth_heisenberg(tmp_path):
    out = tmp_path / "h"
    assert main(["growth", "--group", "heisenberg", "--nmax", "12", "--fit-min", "5",
                 "--out", str(out)]) == EXIT_OK
    assert abs(json.loads((out / "growth.json").read_text())["fitted_exponent"] - 4) < 0.5


def test_growth_bad_dim(tmp_path):
    out = tmp_path / "bad"
    assert main(["growth", "--dim", "0", "--nmax", "5", "--out", str(out)]) == EXIT_USAGE
    assert manifest(out)["exit_code"] == EXIT_USAGE


def test_unknown_command():
    assert main(["frobnicate"]) == EXIT_USAGE


def test_cutoff(tmp_path):
    out = tmp_path / "c"
    assert main(["cutoff", "--kind", "first", "--dim", "3", "--r", "5", "--R", "50", "100",
                 "200", "400", "--out", str(out)]) == EXIT_OK
    summary = json.loads((out / "decay.json").read_text())
    assert abs(summary["slopes"]["gradient"] + 2) < 0.5
    assert (out / "decay.csv").read_text().startswith("R,loglog_ratio,norm,kind\n")
    assert (out / "profile_R50.dat").exists()


def test_cutoff_not_increasing(tmp_path):
    out = tmp_path / "c"
    assert main(["cutoff", "--kind", "first", "--dim", "3", "--r", "5", "--R", "100", "50",
                 "--out", str(out)]) == EXIT_USAGE


def test_cutoff_cap(tmp_path, monkeypatch):
    monkeypatch.setenv("CAYLEY_SOBOLEV_MAX_VERTICES", "10")
    out = tmp_path / "c"
    assert main(["cutoff", "--kind", "first", "--dim", "3", "--r", "5", "--R", "50", "100",
                 "--out", str(out)]) == EXIT_CAP
    assert manifest(out)["status"] == "resource-cap"


def test_minimize_deterministic(tmp_path, config):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["minimize", str(config), "--out", str(a)]) == EXIT_OK
    assert main(["minimize", str(config), "--out", str(b)]) == EXIT_OK
    for name in ("result.json", "u_star.csv", "tail_profile.csv", "history.dat"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
    result = json.loads((a / "result.json").read_text())
    assert result["K_est"] <= 6**1.2 + 6
    assert {"K_est", "el_residual", "iterations"} <= set(result)


def test_minimize_nonconvergence(tmp_path, config):
    config.write_text(CONFIG.replace("max_iter: 200", "max_iter: 1").replace(
        "tol_grad: 1.0e-5", "tol_grad: 1.0e-15"))
    out = tmp_path / "m"
    assert main(["minimize", str(config), "--out", str(out)]) == EXIT_NONCONV
    assert (out / "result.json").exists()
    assert manifest(out)["status"] == "non-convergence"


@pytest.mark.parametrize("key", ["seed", "group", "max_iter"])
def test_missing_key(tmp_path, config, capsys, key):
    config.write_text("\n".join(l for l in CONFIG.splitlines() if not l.startswith(key + ":")))
    out = tmp_path / "m"
    assert main(["minimize", str(config), "--out", str(out)]) == EXIT_USAGE
    assert key in capsys.readouterr().err
    assert manifest(out)["status"] == "usage-error"


def test_unknown_key(tmp_path, config, capsys):
    config.write_text(CONFIG + "colour: blue\n")
    assert main(["minimize", str(config), "--out", str(tmp_path / "m")]) == EXIT_USAGE
    assert "colour" in capsys.readouterr().err


def test_invalid_exponents(tmp_path, config):
    config.write_text(CONFIG.replace("q: 7", "q: 5"))
    assert main(["minimize", str(config), "--out", str(tmp_path / "m")]) == EXIT_USAGE


def test_biharmonic_and_lane_emden(tmp_path, config):
    out = tmp_path / "b"
    assert main(["biharmonic", str(config), "--out", str(out)]) == EXIT_OK
    gs = json.loads((out / "ground_state.json").read_text())
    assert gs["positive"] and abs(gs["multiplier"] - 1) < 1e-8
    out = tmp_path / "le"
    assert main(["lane-emden", str(config), "--out", str(out)]) == EXIT_OK
    rep = json.loads((out / "lane_emden.json").read_text())
    assert rep["r_system_1_relative"] < 1e-13 and rep["positive"]
    assert (out / "pair.csv").read_text().startswith("x0,x1,x2,u,v\n")


def test_hodge(tmp_path):
    out = tmp_path / "h"
    assert main(["hodge", "--dim", "2", "--radius", "6", "--out", str(out)]) == EXIT_OK
    s = json.loads((out / "hodge.json").read_text())
    assert s["div_residual"] < 1e-10 and s["orthogonality"] < 1e-8


def test_halflap(tmp_path):
    out = tmp_path / "hl"
    assert main(["halflap", "--dim", "2", "--radius", "5", "--out", str(out)]) == EXIT_OK
    s = json.loads((out / "halflap.json").read_text())
    assert s["spectral_rel_error"] < 1e-4 and s["composed_rel_error"] < 1e-3


def test_checks(tmp_path, capsys):
    assert main(["checks", "--out", str(tmp_path / "k")]) == EXIT_OK
    assert capsys.readouterr().out.count("[PASS]") == 9


def test_checks_filter(tmp_path, capsys):
    assert main(["checks", "--filter", "hodge", "--out", str(tmp_path / "k")]) == EXIT_OK
    lines = capsys.readouterr().out.strip().splitlines()
    assert len(lines) == 1 and lines[0].startswith("[PASS] hodge decomposition")


def test_checks_canary(tmp_path, capsys):
    out = tmp_path / "k"
    assert main(["checks", "--inject-sign-error", "--out", str(out)]) == EXIT_CHECKS
    assert "[FAIL] laplacian symmetry" in capsys.readouterr().out
    assert manifest(out)["exit_code"] == EXIT_CHECKS
