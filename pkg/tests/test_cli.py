import json

import pytest

from capdyn import cli, io

SMALL = ["--set", "abm.n_agents=20", "--set", "abm.t_steps=40", "--set", "abm.equilibrium_window=10"]


def run(tmp_path, *argv):
    return cli.main(list(argv) + ["--out", str(tmp_path), "--threads", "1"])


def test_simulate_writes_manifest(tmp_path):
    assert run(tmp_path, "simulate", *SMALL) == 0
    m = json.loads((tmp_path / "manifest.json").read_text())
    assert m["seed"] == 42 and m["threads"] == 1
    assert {f["file"] for f in m["files"]} == {"abm_trajectory.csv", "abm_summary.csv"}


def test_simulate_ode_json(tmp_path):
    assert run(tmp_path, "simulate", "--ode", "--t-end", "10", "--format", "json") == 0
    rows = io.read_table(tmp_path / "ode_trajectory.json")
    assert len(rows) == 101


def test_unknown_preset_is_usage_error(tmp_path, capsys):
    assert run(tmp_path, "reproduce", "fig99") == 2
    assert "valid presets" in capsys.readouterr().err


def test_bad_config_key(tmp_path, capsys):
    assert run(tmp_path, "simulate", "--set", "params.kappa=1") == 2
    assert "unknown key" in capsys.readouterr().err


def test_unwritable_output(tmp_path, capsys):
    blocker = tmp_path / "f"
    blocker.write_text("")
    assert cli.main(["calibrate", "--out", str(blocker / "x")]) == 1
    assert "not writable" in capsys.readouterr().err


def test_failure_names_stage(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("domain,decline,duration,time_unit\nx,2.0,1,session\n")
    assert run(tmp_path / "o", "calibrate", "--deskill", str(bad)) == 1
    err = capsys.readouterr().err
    assert "calibrate" in err and "line 2" in err


def test_calibrate_and_benchmark(tmp_path):
    assert run(tmp_path / "a", "calibrate") == 0
    assert len(io.read_table(tmp_path / "a" / "beta_eff.csv")) == 4
    assert run(tmp_path / "b", "benchmark") == 0
    assert [r["kbar"] for r in io.read_table(tmp_path / "b" / "kbar.csv")] == [0.57, 0.86, 0.94, 0.94, 0.96]


def test_two_skill(tmp_path):
    assert run(tmp_path, "two-skill", "--t-end", "200") == 0
    rows = io.read_table(tmp_path / "twoskill.csv")
    assert [r["scenario"] for r in rows] == ["A", "B", "C"]


def test_fig6_columns(tmp_path):
    assert run(tmp_path, "reproduce", "fig6-policy", *SMALL, "--set", "sweep.replicates=2") == 0
    files = json.loads((tmp_path / "manifest.json").read_text())["files"]
    table = io.read_table(tmp_path / files[0]["file"])
    assert list(table[0]) == ["practice_fraction", "median_h", "iqr_lo", "iqr_hi"]
    assert len(table) == 5


def test_tab1_rows(tmp_path):
    assert run(tmp_path, "reproduce", "tab1-kbar") == 0
    files = {f["file"]: f["rows"] for f in json.loads((tmp_path / "manifest.json").read_text())["files"]}
    assert 5 in files.values()


def test_missing_subcommand():
    with pytest.raises(SystemExit) as exc:
        cli.main([])
    assert exc.value.code == 2
