"""CLI: exit codes, output layout, byte-for-byte reproducibility."""

import json
from pathlib import Path

import numpy as np
import pytest
from click.testing import CliRunner

from orlx.cli import load_snapshot, main


def _write(path, obj):
    Path(path).write_text(json.dumps(obj))


@pytest.fixture
def runner():
    return CliRunner()


CHECK_CFG = {
    "seed": 0,
    "domain": {"extent": [0, 1, 0, 1], "nx": 48, "ny": 48},
    "modular": {
        "family": "variable_exponent_power",
        "params": {"p": {"kind": "sin_product", "base": 2.0, "amp": 0.4, "freq": [1, 1]}},
    },
    "conditions": ["nfunction", "delta2", "log-holder", "condition-M"],
    "condition_m": {"deltas": [0.125, 0.0625, 0.03125]},
}

SOLVE_CFG = {
    "seed": 0,
    "domain": {"extent": [0, 1, 0, 1], "nx": 24, "ny": 24},
    "operator": {
        "family": "weighted_px_laplacian",
        "p": {"kind": "sin_product", "base": 2.15, "amp": 0.35, "freq": [1, 1]},
        "alpha": 0.05,
    },
    "modular": "matched",
    "source": {"kind": "inverse_distance", "center": [0.753, 0.247], "scale": 1.0},
    "schedule": [1, 2, 4, 8, 16, 32],
    "tolerances": {"solve_tol": 1e-8},
    "diagnostics": {"k_values": [1, 2], "p_values": [2.0]},
}


def test_check_power_family_passes(runner, tmp_path):
    cfg = tmp_path / "cfg.json"
    _write(cfg, CHECK_CFG)
    res = runner.invoke(main, ["check", "--config", str(cfg), "--out", str(tmp_path / "o")])
    assert res.exit_code == 0, res.output
    for name in ("nfunction", "delta2", "log_holder", "condition_M"):
        rep = json.loads((tmp_path / "o" / f"report_{name}.json").read_text())
        assert rep["pass"] is True
        assert set(rep) == {"condition", "pass", "constants", "witness", "samples"}


def test_check_exp_type_delta2_fails_with_exit_1(runner, tmp_path):
    cfg_obj = {
        "seed": 0,
        "domain": {"extent": [0, 1, 0, 1], "nx": 32, "ny": 32},
        "modular": {"family": "exp_type", "params": {"a": 1.0}},
        "conditions": ["delta2"],
    }
    cfg = tmp_path / "cfg.json"
    _write(cfg, cfg_obj)
    res = runner.invoke(main, ["check", "--config", str(cfg), "--out", str(tmp_path / "o")])
    assert res.exit_code == 1
    rep = json.loads((tmp_path / "o" / "report_delta2.json").read_text())
    assert rep["pass"] is False
    assert rep["witness"] is not None


def test_check_missing_config_exit_2(runner, tmp_path):
    res = runner.invoke(main, ["check", "--config", str(tmp_path / "nope.json"),
                               "--out", str(tmp_path / "o")])
    assert res.exit_code == 2


def test_check_malformed_config_exit_2(runner, tmp_path):
    cfg = tmp_path / "bad.json"
    cfg.write_text("{not json")
    res = runner.invoke(main, ["check", "--config", str(cfg), "--out", str(tmp_path / "o")])
    assert res.exit_code == 2
    cfg2 = tmp_path / "bad2.json"
    _write(cfg2, {"modular": {"family": "nope"}, "conditions": ["delta2"]})
    res = runner.invoke(main, ["check", "--config", str(cfg2), "--out", str(tmp_path / "o")])
    assert res.exit_code == 2


def test_solve_outputs_and_determinism(runner, tmp_path):
    cfg = tmp_path / "cfg.json"
    _write(cfg, SOLVE_CFG)
    r1 = runner.invoke(main, ["solve", "--config", str(cfg), "--out", str(tmp_path / "a")])
    assert r1.exit_code == 0, r1.output
    r2 = runner.invoke(main, ["solve", "--config", str(cfg), "--out", str(tmp_path / "b")])
    assert r2.exit_code == 0
    names = sorted(p.name for p in (tmp_path / "a").iterdir())
    assert "summary.json" in names and "schema.json" in names
    assert "apriori.csv" in names and "radiation.csv" in names
    for name in names:
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    s, vals = load_snapshot(tmp_path / "a", 3)
    assert s == 8.0
    assert vals.shape == (24, 24)
    assert np.all(np.isfinite(vals))
    summary = json.loads((tmp_path / "a" / "summary.json").read_text())
    assert summary["apriori_ok"] is True


def test_solve_threads_match_serial(runner, tmp_path):
    cfg = tmp_path / "cfg.json"
    _write(cfg, SOLVE_CFG)
    r1 = runner.invoke(main, ["solve", "--config", str(cfg), "--out", str(tmp_path / "a")])
    r3 = runner.invoke(
        main, ["solve", "--config", str(cfg), "--out", str(tmp_path / "c"), "--threads", "4"]
    )
    assert r1.exit_code == 0 and r3.exit_code == 0
    a = (tmp_path / "a" / "apriori.csv").read_bytes()
    c = (tmp_path / "c" / "apriori.csv").read_bytes()
    assert a == c


def test_plot_outputs_and_determinism(runner, tmp_path):
    cfg = tmp_path / "cfg.json"
    _write(cfg, SOLVE_CFG)
    runner.invoke(main, ["solve", "--config", str(cfg), "--out", str(tmp_path / "a")])
    r = runner.invoke(main, ["plot", str(tmp_path / "a"), "--out", str(tmp_path / "p1")])
    assert r.exit_code == 0, r.output
    r = runner.invoke(main, ["plot", str(tmp_path / "a"), "--out", str(tmp_path / "p2")])
    assert r.exit_code == 0
    for name in ("radiation-profile.svg", "apriori-ratio.svg", "convergence-trace.svg"):
        b1 = (tmp_path / "p1" / name).read_bytes()
        b2 = (tmp_path / "p2" / name).read_bytes()
        assert b1 == b2
        assert b1.startswith(b"<svg")


def test_plot_missing_report_exit_1(runner, tmp_path):
    (tmp_path / "empty").mkdir()
    res = runner.invoke(main, ["plot", str(tmp_path / "empty"), "--out", str(tmp_path / "p")])
    assert res.exit_code == 1


def test_solve_zero_source_zero_report(runner, tmp_path):
    cfg_obj = dict(SOLVE_CFG)
    cfg_obj["source"] = {"kind": "constant", "value": 0.0}
    cfg_obj["schedule"] = [1, 2, 4]
    cfg = tmp_path / "cfg.json"
    _write(cfg, cfg_obj)
    res = runner.invoke(main, ["solve", "--config", str(cfg), "--out", str(tmp_path / "z")])
    assert res.exit_code == 0, res.output
    for j in range(3):
        _, vals = load_snapshot(tmp_path / "z", j)
        assert np.all(vals == 0.0)


def test_solve_single_huge_truncation_matches_direct(runner, tmp_path):
    # schedule of length 1 with s far above ||f||_inf equals a plain solve
    cfg_obj = dict(SOLVE_CFG)
    cfg_obj["source"] = {"kind": "constant", "value": 1.0}
    cfg_obj["schedule"] = [1e6]
    cfg_obj["diagnostics"] = {"k_values": [1]}
    cfg = tmp_path / "cfg.json"
    _write(cfg, cfg_obj)
    res = runner.invoke(main, ["solve", "--config", str(cfg), "--out", str(tmp_path / "a")])
    assert res.exit_code == 0, res.output
    _, vals = load_snapshot(tmp_path / "a", 0)

    import orlx.operators as ops
    import orlx.solver as sol
    from orlx.grid import ScalarField, unit_square

    g = unit_square(24)
    X, Y = g.meshgrid()
    spec = ops.weighted_px_laplacian(
        g, 2.15 + 0.35 * np.sin(2 * np.pi * X) * np.sin(2 * np.pi * Y), alpha=0.05
    )
    prob = sol.EllipticProblem(g, spec, ops.matched_modular(spec),
                               ScalarField(g, np.ones(g.shape)))
    u = sol.solve_bounded(prob, ScalarField(g, np.ones(g.shape)), tol=1e-8)
    assert np.max(np.abs(u.values - vals)) < 1e-6
