import json
import os

import numpy as np
import pytest

from wildrefit.cli import main
from wildrefit.core import NumericError
from wildrefit.harness import (
    COLUMNS,
    PRESETS,
    ConfigError,
    config_from_dict,
    format_value,
    load_config,
    resolve_out_dir,
    rows_to_csv,
    run_experiment,
    seed_pair,
    task_keys,
)


def write_config(tmp_path, doc, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return str(path)


def read_csv(path):
    import csv

    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_presets_validate():
    for name, preset in PRESETS.items():
        cfg = config_from_dict({"experiment": preset["experiment"], "preset": name})
        assert cfg.preset == name


def test_seed_pair_deterministic_and_distinct():
    assert seed_pair(3) == seed_pair(3)
    a, b = seed_pair(3)
    assert a != b and seed_pair(4) != (a, b)


@pytest.mark.parametrize(
    "doc",
    [
        [],
        {"experiment": "bogus"},
        {"experiment": "tiktv", "colour": "red"},
        {"experiment": "tiktv", "preset": "sweep"},
        {"experiment": "tiktv", "rho_grid": [1.2, 1.0]},
        {"experiment": "tiktv", "seeds": [-1]},
        {"experiment": "tiktv", "candidates": [{"label": "a", "method": "tikhonov", "lam": -1}]},
        {"experiment": "tiktv", "candidates": [{"label": "a", "method": "spline"}]},
        {"experiment": "sweep", "noise": {"kind": "laplace"}},
        {"experiment": "nrsfm", "scene": {"m": 2, "p": 3, "rank": 9, "sigma": 0.1}},
        {"experiment": "nrsfm", "pilot": {"method": "tv", "lam": 1.0}},
        {"experiment": "oracle", "t": 0},
        {"experiment": "denoise1d", "noise": [{"kind": "gaussian", "sigma": 0.1}]},
    ],
)
def test_config_errors(doc):
    with pytest.raises(ConfigError):
        config_from_dict(doc)


def test_tiktv_cardinality():
    cfg = config_from_dict({"experiment": "tiktv", "gamma_grid": [0.02], "seeds": [0],
                            "rho_grid": [1.0]})
    tables = run_experiment(cfg)
    rows = tables["tiktv"]
    assert len(rows) == 2
    assert {r["label"] for r in rows} == {"tikhonov", "tv"}
    assert rows[0]["selected_label"] == rows[1]["selected_label"]


def test_task_keys_order():
    cfg = config_from_dict({"experiment": "denoise1d", "seeds": [2, 0]})
    assert task_keys(cfg) == [(2, 0), (2, 1), (2, 2), (0, 0), (0, 1), (0, 2)]


def test_noiseless_tiktv_zero_bounds():
    cfg = config_from_dict({"experiment": "tiktv", "preset": "tiktv_noiseless"})
    for row in run_experiment(cfg)["tiktv"]:
        assert row["mse_bound"] == 0.0 and row["true_mse"] == 0.0 and row["r_tilde"] == 0.0


def test_noiseless_oracle():
    cfg = config_from_dict({"experiment": "oracle", "preset": "oracle_noiseless"})
    for row in run_experiment(cfg)["oracle"]:
        assert row["true_optimism"] == 0.0 and row["rhat"] == 0.0 and row["holds"]


def test_sweep_identity_crossing_at_two():
    cfg = config_from_dict({"experiment": "sweep", "preset": "sweep_identity", "seeds": [0, 1]})
    tables = run_experiment(cfg)
    for row in tables["sweep_crossing"]:
        assert row["rho_star"] == pytest.approx(2.0, abs=1e-8)
        assert row["status"] == "crossing"


def test_sweep_tables():
    cfg = config_from_dict({"experiment": "sweep", "seeds": [5]})
    tables = run_experiment(cfg)
    rows = tables["sweep"]
    assert len(rows) == len(cfg.rho_grid)
    r = np.array([row["r_tilde"] for row in rows])
    assert np.all(np.diff(r) >= -1e-8)
    assert len(tables["sweep_crossing"]) == 1


def test_oracle_perfect_pilot():
    cfg = config_from_dict({"experiment": "oracle", "pilot": "fstar", "seeds": [0]})
    row = run_experiment(cfg)["oracle"][0]
    assert row["pilot_error"] == 0.0 and row["pilot_tag"] == "fstar"


def test_format_value():
    assert format_value(None) == "null"
    assert format_value(True) == "true"
    assert format_value(np.float64(0.1)) == "0.1"
    assert format_value(np.int64(7)) == "7"
    with pytest.raises(NumericError):
        format_value(float("nan"))


def test_rows_to_csv_schema():
    cols = COLUMNS["sweep"]
    row = dict.fromkeys(cols, 1.0)
    assert rows_to_csv([row], cols).count("\n") == 2
    with pytest.raises(NumericError):
        rows_to_csv([{"rho": 1.0}], cols)


def test_resolve_out_dir(monkeypatch):
    cfg = config_from_dict({"experiment": "sweep", "out": "from_cfg"})
    monkeypatch.delenv("WILDREFIT_OUT", raising=False)
    assert resolve_out_dir(None, cfg) == "from_cfg"
    assert resolve_out_dir(None, None) == "wildrefit_out"
    monkeypatch.setenv("WILDREFIT_OUT", "from_env")
    assert resolve_out_dir(None, cfg) == "from_env"
    assert resolve_out_dir("from_cli", cfg) == "from_cli"


def test_load_config_seed_count(tmp_path):
    path = write_config(tmp_path, {"experiment": "sweep", "seeds": [9]})
    assert load_config(path, 3).seeds == (0, 1, 2)
    with pytest.raises(ConfigError):
        load_config(path, 0)


# -- command line -------------------------------------------------------------------


def test_cli_writes_csv_and_manifest(tmp_path):
    cfg = write_config(tmp_path, {"experiment": "sweep"})
    out = tmp_path / "out"
    assert main(["sweep", "--config", cfg, "--seed-count", "2", "--out", str(out)]) == 0
    rows = read_csv(out / "sweep.csv")
    assert len(rows) == 2 * 24
    assert list(rows[0]) == list(COLUMNS["sweep"])
    manifest = json.loads((out / "sweep_manifest.json").read_text())
    assert manifest["seeds"] == [0, 1]
    assert manifest["files"]["sweep_crossing.csv"]["rows"] == 2
    assert manifest["versions"]["kernel_backend"] in {"cython", "python"}


def test_cli_byte_identical(tmp_path):
    doc = {"experiment": "tiktv", "gamma_grid": [0.0, 0.05], "seeds": [0, 1, 2]}
    cfg = write_config(tmp_path, doc)
    cfg_par = write_config(tmp_path, dict(doc, workers=2), "par.json")
    for name, path in [("a", cfg), ("b", cfg), ("c", cfg_par)]:
        assert main(["tiktv", "--config", path, "--out", str(tmp_path / name)]) == 0
    a = (tmp_path / "a" / "tiktv.csv").read_bytes()
    assert a == (tmp_path / "b" / "tiktv.csv").read_bytes()
    assert a == (tmp_path / "c" / "tiktv.csv").read_bytes()


def test_cli_env_out(tmp_path, monkeypatch):
    cfg = write_config(tmp_path, {"experiment": "oracle", "seeds": [0]})
    monkeypatch.setenv("WILDREFIT_OUT", str(tmp_path / "envout"))
    assert main(["oracle", "--config", cfg]) == 0
    assert (tmp_path / "envout" / "oracle.csv").exists()


def test_cli_exit_config(tmp_path, capsys):
    bad = write_config(tmp_path, {"experiment": "sweep", "rho_grid": []})
    assert main(["sweep", "--config", bad, "--out", str(tmp_path)]) == 1
    malformed = tmp_path / "bad.json"
    malformed.write_text("{not json")
    assert main(["sweep", "--config", str(malformed), "--out", str(tmp_path)]) == 1
    mismatch = write_config(tmp_path, {"experiment": "oracle"}, "m.json")
    assert main(["sweep", "--config", mismatch, "--out", str(tmp_path)]) == 1
    assert "invalid configuration" in capsys.readouterr().err


def test_cli_exit_io(tmp_path):
    assert main(["sweep", "--config", str(tmp_path / "missing.json")]) == 2
    cfg = write_config(tmp_path, {"experiment": "sweep", "seeds": [0]})
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert main(["sweep", "--config", cfg, "--out", str(blocker / "sub")]) == 2


def test_cli_exit_numeric(tmp_path):
    cfg = write_config(tmp_path, {"experiment": "sweep", "seeds": [0],
                                  "noise": {"kind": "gaussian", "sigma": 1e308}})
    with np.errstate(over="ignore"):
        assert main(["sweep", "--config", cfg, "--out", str(tmp_path / "o")]) == 3


def test_cli_entry_point(tmp_path):
    import subprocess

    cfg = write_config(tmp_path, {"experiment": "sweep", "seeds": [0]})
    env = dict(os.environ, WILDREFIT_OUT=str(tmp_path / "sub"))
    res = subprocess.run(["wildrefit", "sweep", "--config", cfg], env=env,
                         capture_output=True, text=True)
    assert res.returncode == 0, res.stderr
    assert "sweep_manifest.json" in res.stdout
    bad = subprocess.run(["wildrefit", "frobnicate", "--config", cfg], capture_output=True)
    assert bad.returncode == 1


def test_tiktv_trends_over_gamma():
    from scipy.stats import spearmanr

    cfg = config_from_dict({"experiment": "tiktv", "rho_grid": [1.0]})
    rows = run_experiment(cfg)["tiktv"]
    for label, sign in [("tikhonov", -1), ("tv", 1)]:
        means = [np.mean([r["true_mse"] for r in rows if r["label"] == label and r["gamma"] == g])
                 for g in cfg.gamma_grid]
        rho_s = spearmanr(cfg.gamma_grid, means).statistic
        assert sign * rho_s >= 0.8


def test_nrsfm_single_radius():
    cfg = config_from_dict({"experiment": "nrsfm", "radius_scales": [1.0], "seeds": [0],
                            "scene": {"m": 5, "p": 4, "rank": 2, "sigma": 0.25}})
    rows = run_experiment(cfg)["nrsfm"]
    assert len(rows) == 3
    assert all(r["selected_scale"] == 1.0 == r["oracle_scale"] for r in rows)
