import json
import math
from pathlib import Path

import numpy as np
import pytest
import yaml

from sirkit.cli import main
from sirkit.config import ConfigError, bundled_config_names, load_config, parse_config
from sirkit.filter_design import FilterPlan, return_loss_from_ripple
from sirkit.sir import SirGeometry
from sirkit.touchstone import parse_nf_csv, parse_touchstone, synthetic_measurement, write_touchstone

F0, FBW = 3.3e9, 0.1
F_LO = F0 * (math.sqrt(1 + FBW**2 / 4) - FBW / 2)
F_HI = F_LO + FBW * F0


def three_pole_config(**tune):
    cfg = {
        "name": "three-pole",
        "substrates": {"air": {"eps_r": 9.4, "h_m": 0.43e-3}},
        "substrate": "air",
        "filter": {"order": 3, "f_lo_hz": F_LO, "f_hi_hz": F_HI, "ripple_db": 0.1, "lossless": True,
                   "stop_offset_hz": 0.2e9},
        "coupling_model": {"k0": 0.5, "s0_m": 1e-3},
        "tune": {"max_il_db": -0.1005, "min_rl_db": return_loss_from_ripple(0.1) + 0.01,
                 "min_rejection_db": -12.0, "budget": 400, "perturbation": 0.0, **tune},
    }
    return cfg


def write_config(tmp_path, cfg, name="cfg.yaml"):
    p = tmp_path / name
    p.write_text(yaml.safe_dump(cfg))
    return str(p)


def run(*args):
    return main([str(a) for a in args])


def test_bundled_config_present():
    assert "paper-sband" in bundled_config_names()
    cfg = load_config("paper-sband")
    assert cfg.filter.order == 11
    assert cfg.resolve_qu() == 7000


def test_config_dir_env(tmp_path, monkeypatch):
    write_config(tmp_path, three_pole_config(), "mine.yaml")
    monkeypatch.setenv("SIRKIT_CONFIG_DIR", str(tmp_path))
    assert load_config("mine").filter.order == 3


def test_missing_profile_names_field(tmp_path, capsys):
    cfg = three_pole_config()
    cfg["substrate"] = "nope"
    assert run("synthesize", "--config", write_config(tmp_path, cfg), "--out", tmp_path) == 1
    assert "substrate" in capsys.readouterr().err


def test_validation_error_has_field_path():
    cfg = three_pole_config()
    cfg["filter"]["order"] = 0
    with pytest.raises(ConfigError, match="filter.order"):
        parse_config(cfg)
    cfg = three_pole_config()
    cfg["filter"]["bogus_hz"] = 1
    with pytest.raises(ConfigError, match="filter.bogus_hz"):
        parse_config(cfg)


def test_unknown_config_ref(capsys):
    assert run("synthesize", "--config", "does-not-exist") == 1


def test_synthesize_bundled(tmp_path, capsys):
    assert run("synthesize", "--config", "paper-sband", "--out", tmp_path) == 0
    plan = FilterPlan.from_dict(json.loads((tmp_path / "plan.json").read_text()))
    assert plan.n == 11
    np.testing.assert_allclose(plan.k_adj, plan.k_adj[::-1], rtol=1e-12)
    assert plan == load_config("paper-sband").plan()
    geom = json.loads((tmp_path / "geometry.json").read_text())
    assert SirGeometry.from_dict(geom["resonator"]).k_ratio == pytest.approx(0.4, rel=1e-3)
    assert len(geom["gaps_m"]) == 10
    assert "footprint" in capsys.readouterr().out


def test_synthesize_single_pole(tmp_path):
    cfg = three_pole_config()
    cfg["filter"]["order"] = 1
    assert run("synthesize", "--config", write_config(tmp_path, cfg), "--out", tmp_path) == 0
    assert json.loads((tmp_path / "plan.json").read_text())["k_adj"] == []


def test_simulate_lossless(tmp_path):
    assert run("simulate", "--config", "paper-sband", "--out", tmp_path, "--lossless") == 0
    m = json.loads((tmp_path / "metrics.json").read_text())
    assert m["unitarity_error"] <= 1e-10
    # reflection zeros fall between 1 MHz grid points
    assert m["metrics"]["il_best_db"] == pytest.approx(0.0, abs=1e-5)
    sw, _ = parse_touchstone((tmp_path / "response.s2p").read_bytes())
    assert len(sw.f) == 1001


def test_simulate_copper_preset(tmp_path):
    assert run("simulate", "--config", "paper-sband", "--out", tmp_path, "--loss-preset", "copper-sapphire") == 0
    m = json.loads((tmp_path / "metrics.json").read_text())
    assert 250 < m["qu"] < 300
    assert -4 <= m["center_il_db"] <= -2
    assert m["midband_il_estimate_db"] == pytest.approx(m["center_il_db"], rel=0.15)


def test_simulate_uses_plan_file(tmp_path):
    run("synthesize", "--config", "paper-sband", "--out", tmp_path)
    assert run("simulate", "--config", "paper-sband", "--out", tmp_path / "a", "--plan", tmp_path / "plan.json") == 0
    assert run("simulate", "--config", "paper-sband", "--out", tmp_path / "b") == 0
    assert (tmp_path / "a" / "response.s2p").read_bytes() == (tmp_path / "b" / "response.s2p").read_bytes()


def test_simulate_grid_error(tmp_path):
    assert run("simulate", "--config", "paper-sband", "--out", tmp_path, "--grid-step", "-1") == 1


def test_simulate_band_off_grid(tmp_path):
    assert run("simulate", "--config", "paper-sband", "--out", tmp_path, "--grid-stop", "3.3e9") == 2


def test_budget(tmp_path, capsys):
    assert run("budget", "--config", "paper-sband", "--out", tmp_path) == 0
    b = json.loads((tmp_path / "budget.json").read_text())
    assert b["cascade_nf_db"] == pytest.approx(0.0693, abs=5e-4)
    assert b["cascade_nf_290k_db"] == pytest.approx(0.1200, abs=5e-4)
    assert b["with_front_nf_db"] == pytest.approx(0.369, abs=1e-3)
    cases = b["radar"]["cases"]
    assert cases["measured_0.37dB"]["improvement"] == pytest.approx(1.2322, abs=5e-4)
    assert cases["measured_0.6dB"]["improvement"] == pytest.approx(1.2162, abs=5e-4)
    trace = parse_nf_csv((tmp_path / "nf_sweep.csv").read_bytes())
    assert len(trace.grid) == 1001


def test_budget_needs_cascade(tmp_path):
    assert run("budget", "--config", write_config(tmp_path, three_pole_config()), "--out", tmp_path) == 1


def model_file(tmp_path):
    run("simulate", "--config", "paper-sband", "--out", tmp_path)
    return tmp_path / "response.s2p"


def test_compare_identical(tmp_path):
    model = model_file(tmp_path)
    assert run("compare", model, model, "--config", "paper-sband", "--out", tmp_path) == 0
    rep = json.loads((tmp_path / "comparison.json").read_text())
    assert rep["max_abs_delta_db"] == 0.0
    assert (tmp_path / "comparison.txt").exists()


def test_compare_threshold_exceeded(tmp_path):
    model = model_file(tmp_path)
    sw, _ = parse_touchstone(model.read_bytes())
    noisy = tmp_path / "noisy.s2p"
    noisy.write_bytes(write_touchstone(synthetic_measurement(sw, amplitude_db=0.03)))
    args = ("compare", model, noisy, "--band-lo", 3.1e9, "--band-hi", 3.5e9, "--out", tmp_path)
    assert run(*args, "--threshold-db", 0.1) == 0
    assert run(*args, "--threshold-db", 0.001) == 3


def test_compare_parse_error_has_file_context(tmp_path, capsys):
    model = model_file(tmp_path)
    bad = tmp_path / "bad.s2p"
    bad.write_text("# GHZ S MA R 50\n3.0 1 2 3\n")
    assert run("compare", model, bad, "--config", "paper-sband", "--out", tmp_path) == 1
    assert "bad.s2p:line 2" in capsys.readouterr().err


def test_compare_needs_band(tmp_path):
    model = model_file(tmp_path)
    assert run("compare", model, model, "--out", tmp_path) == 1


def test_tune_feasible_start(tmp_path):
    cfg = write_config(tmp_path, three_pole_config())
    assert run("tune", "--config", cfg, "--out", tmp_path) == 0
    doc = json.loads((tmp_path / "tune.json").read_text())
    assert doc["converged"] and doc["residual"] == 0.0
    np.testing.assert_allclose(doc["couplings"], doc["ideal_couplings"], rtol=1e-9)


def test_tune_perturbed_recovers(tmp_path):
    cfg = write_config(tmp_path, three_pole_config(perturbation=0.1))
    assert run("tune", "--config", cfg, "--out", tmp_path) == 0
    doc = json.loads((tmp_path / "tune.json").read_text())
    np.testing.assert_allclose(doc["couplings"], doc["ideal_couplings"], rtol=0.02)


def test_tune_infeasible(tmp_path):
    cfg = write_config(tmp_path, three_pole_config(max_il_db=-0.001, min_rl_db=-60.0, budget=30))
    assert run("tune", "--config", cfg, "--out", tmp_path) == 2
    rows = (tmp_path / "tune_trace.csv").read_text().splitlines()
    assert rows[0] == "iteration,best_residual"
    values = [float(r.split(",")[1]) for r in rows[1:]]
    assert values and all(a >= b for a, b in zip(values, values[1:]))


def test_deterministic_outputs(tmp_path):
    for d in ("a", "b"):
        run("synthesize", "--config", "paper-sband", "--out", tmp_path / d)
        run("budget", "--config", "paper-sband", "--out", tmp_path / d)
    for name in ("plan.json", "geometry.json", "budget.json", "nf_sweep.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_no_temp_files_left(tmp_path):
    run("simulate", "--config", "paper-sband", "--out", tmp_path)
    assert sorted(p.name for p in tmp_path.iterdir()) == ["metrics.json", "response.s2p"]
