import csv

import numpy as np
import pytest
import yaml

from risdetect import experiments as ex
from risdetect.cli import main
from risdetect.detection import min_prob_detection


def tiny(**over):
    base = {"sweep": {"variable": "ptx", "values": [6.0, 7.0]},
            "objectives": ["j2", "quadratic"], "optimizer": {"max_iters": 20},
            "montecarlo": {"trials": 400}, "pattern": {"columns": 6, "rows": 4}}
    return ex.ExperimentConfig.profile("fast", base).with_overrides(over) if over else \
        ex.ExperimentConfig.profile("fast", base)


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_profiles_validate():
    for name in ex.PROFILES:
        cfg = ex.ExperimentConfig.profile(name)
        assert cfg.data["profile"] == name
        assert cfg.scenario().n_cells == (32 if name == "table1" else 8)


def test_yaml_round_trip(tmp_path):
    cfg = tiny(seed=7)
    path = cfg.save(tmp_path / "c.yaml")
    back = ex.ExperimentConfig.load(path)
    assert back.data == cfg.data
    assert back.config_id() == cfg.config_id()
    assert cfg.with_overrides({"out": "elsewhere", "workers": 3}).config_id() == cfg.config_id()
    assert cfg.with_overrides({"seed": 8}).config_id() != cfg.config_id()


@pytest.mark.parametrize("over, err", [
    ({"scenario": {"no_such_key": 1}}, (KeyError, TypeError, ValueError)),
    ({"bogus": 1}, KeyError),
    ({"sweep": {"variable": "nope"}}, ValueError),
    ({"workers": 0}, ValueError),
    ({"optimizer": {"max_iters": 0}}, ValueError),
    ({"objectives": ["j9"]}, ValueError),
])
def test_invalid_config(over, err):
    with pytest.raises(err):
        ex.ExperimentConfig.profile("fast", over)


def test_partial_file_inherits_profile(tmp_path):
    p = tmp_path / "user.yaml"
    p.write_text(yaml.safe_dump({"profile": "fast", "scenario": {"tx_power_dbm": 9.0}}))
    cfg = ex.ExperimentConfig.load(p)
    assert cfg.data["scenario"]["tx_power_dbm"] == 9.0
    assert cfg.data["scenario"]["ux_count"] == ex.load_profile("fast")["scenario"]["ux_count"]


def test_fmt():
    assert ex.fmt(3) == "3"
    assert ex.fmt(np.float64(1 / 3)) == "0.333333333"
    assert ex.fmt(True) == "true" and ex.fmt(None) == ""


def test_sweep_rows_and_determinism(tmp_path):
    cfg = tiny()
    rows, timings = ex.run_sweep(cfg)
    assert [(r["sweep_value"], r["objective"]) for r in rows] == \
        [(6.0, "j2"), (6.0, "quadratic"), (7.0, "j2"), (7.0, "quadratic")]
    assert all(r["status"] in ("ok",) or r["status"].startswith("warning") for r in rows)
    for r in rows:
        assert 0 <= r["min_pd"] <= 1
    a = ex.write_sweep(tmp_path / "a", cfg, rows, timings)
    rows2, timings2 = ex.run_sweep(cfg.with_overrides({"workers": 2}))
    b = ex.write_sweep(tmp_path / "b", cfg, rows2, timings2)
    assert a.read_bytes() == b.read_bytes()
    assert read_rows(a)[0].keys() == set(ex.SWEEP_COLUMNS)
    assert len(read_rows(tmp_path / "a" / "sweep.timing.csv")) == 4
    assert (tmp_path / "a" / "sweep.config.yaml").exists()


def test_sweep_failure_is_a_row():
    cfg = tiny(sweep={"values": [-30.0]}, objectives=["j1"])
    rows, _ = ex.run_sweep(cfg)
    assert rows[0]["status"].startswith("error: SubproblemError")


def test_u_cells_sweep():
    cfg = tiny(sweep={"variable": "u_cells", "values": [8, 16]}, objectives=["quadratic"])
    rows, _ = ex.run_sweep(cfg)
    assert [r["sweep_value"] for r in rows] == [8, 16]


def test_pattern_grid_order():
    cfg = tiny()
    ys, zs = ex.pattern_grid(cfg.data["pattern"])
    assert len(ys) == 6 and len(zs) == 4
    assert np.all(np.diff(ys) > 0) and np.all(np.diff(zs) > 0)
    sc = cfg.scenario()
    rows = ex.export_pattern(cfg, ex.build_design("quadratic", sc)[0], sc)
    assert len(rows) == 24
    assert [r["z"] for r in rows[:6]] == [zs[0]] * 6
    assert [r["y"] for r in rows[:6]] == list(ys)
    assert all(np.isfinite(r["gain_db"]) for r in rows)


def test_design_io(tmp_path):
    sc = tiny().scenario()
    d, _ = ex.build_design("quadratic", sc)
    ex.write_design(tmp_path / "d.csv", d)
    back = ex.read_design(tmp_path / "d.csv")
    np.testing.assert_allclose(back.w, d.w, atol=1e-8)
    (tmp_path / "bad.csv").write_text("a,b\n1,2\n")
    with pytest.raises(ValueError):
        ex.read_design(tmp_path / "bad.csv")


def test_evaluate_rows():
    sc = tiny().scenario()
    d, _ = ex.build_design("quadratic", sc)
    rows = ex.evaluate_design(d, sc)
    assert len(rows) == len(sc.locations)
    assert min(r["pd"] for r in rows) == pytest.approx(
        min_prob_detection(d, sc.statistics, sc.params)[0])


def test_montecarlo_seeded():
    cfg = tiny()
    sc = cfg.scenario()
    d, _ = ex.build_design("quadratic", sc)
    a = ex.run_montecarlo(cfg, d, sc)
    b = ex.run_montecarlo(cfg, d, sc)
    assert a == b
    c = ex.run_montecarlo(cfg.with_overrides({"seed": 1}), d, sc)
    assert [r["pd_empirical"] for r in a] != [r["pd_empirical"] for r in c]
    assert sum(r["within_band"] for r in a) >= len(a) - 1


def test_accuracy_fast():
    cfg = tiny(accuracy={"k_db": [10.0]})
    rows = ex.run_accuracy(cfg)
    assert len(rows) == 1 and rows[0]["k_db"] == 10.0
    assert -1 < rows[0]["eps_j1"] <= 0 and abs(rows[0]["eps_j2"]) < 1


# ---------------------------------------------------------------- CLI

def cli(tmp_path, *args):
    return main([*args, "--profile", "fast", "--out", str(tmp_path), "--set",
                 "optimizer.max_iters=15", "--set", "montecarlo.trials=200",
                 "--set", "pattern.columns=5", "--set", "pattern.rows=3"])


def test_cli_optimize_then_reuse(tmp_path, capsys):
    assert cli(tmp_path, "optimize", "--objective", "j2") == 0
    assert "min P_D" in capsys.readouterr().out
    design = tmp_path / "design_j2.csv"
    assert design.exists() and (tmp_path / "trace_j2.csv").exists()
    assert (tmp_path / "optimize.config.yaml").exists()
    assert cli(tmp_path, "evaluate", "--design", str(design)) == 0
    assert len(read_rows(tmp_path / "evaluate.csv")) == 9
    assert cli(tmp_path, "pattern", "--design", str(design)) == 0
    assert len(read_rows(tmp_path / "pattern_design_j2.csv")) == 15
    assert cli(tmp_path, "montecarlo", "--design", str(design), "--trials", "100") == 0
    rows = read_rows(tmp_path / "montecarlo.csv")
    assert len(rows) == 9 and rows[0]["trials"] == "100"


def test_cli_sweep_and_accuracy(tmp_path):
    assert cli(tmp_path, "sweep", "--variable", "k_db", "--values", "10", "20",
               "--objectives", "quadratic", "--seed", "3") == 0
    rows = read_rows(tmp_path / "sweep.csv")
    assert [r["sweep_value"] for r in rows] == ["10", "20"]
    saved = yaml.safe_load((tmp_path / "sweep.config.yaml").read_text())
    assert saved["seed"] == 3 and saved["sweep"]["variable"] == "k_db"
    assert cli(tmp_path, "accuracy", "--set", "accuracy.k_db=[10]") == 0
    assert len(read_rows(tmp_path / "accuracy.csv")) == 1


def test_cli_shortcuts(tmp_path):
    assert cli(tmp_path, "evaluate", "--objective", "quadratic", "--ptx", "8", "--u-cells",
               "16") == 0
    saved = yaml.safe_load((tmp_path / "evaluate.config.yaml").read_text())
    assert saved["scenario"]["tx_power_dbm"] == 8.0
    assert saved["scenario"]["ux_count"] * saved["scenario"]["uy_count"] == 16


def test_cli_rejects_bad_config(tmp_path, capsys):
    assert cli(tmp_path, "evaluate", "--set", "scenario.n_y=0") == 2
    assert "invalid configuration" in capsys.readouterr().err
    with pytest.raises(SystemExit):
        main(["nosuch"])
