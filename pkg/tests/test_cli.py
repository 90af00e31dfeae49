import dataclasses
import json

import pytest

from cqedfeedback import cli
from cqedfeedback.presets import (PRESETS, ConfigError, get_preset, load_config, preset_from_dict,
                                  preset_from_ini, preset_to_dict, preset_to_ini)


def small_preset(**changes):
    base = dataclasses.replace(get_preset("fig2"), name="tiny", n_k=32, t_end=get_preset("fig2").params.tau * 4,
                               snapshot_times=(get_preset("fig2").params.tau * 2,), checks=("norm",))
    return dataclasses.replace(base, **changes)


def write_ini(tmp_path, preset, name="tiny.ini"):
    path = tmp_path / name
    path.write_text(preset_to_ini(preset))
    return path


def test_list_outputs(capsys):
    assert cli.main(["list"]) == 0
    text = capsys.readouterr().out
    assert "fig2" in text and "fig4" in text
    assert cli.main(["list", "--json"]) == 0
    names = {item["name"] for item in json.loads(capsys.readouterr().out)}
    assert set(PRESETS) <= names


@pytest.mark.parametrize("name", sorted(PRESETS))
def test_preset_round_trips(name, tmp_path):
    p = PRESETS[name]
    assert preset_from_ini(preset_to_ini(p)) == p
    assert preset_from_dict(json.loads(json.dumps(cli._clean(preset_to_dict(p))))) == p
    path = tmp_path / "p.json"
    path.write_text(json.dumps(cli._clean(preset_to_dict(p))))
    assert load_config(path) == p


def test_config_errors(tmp_path, capsys):
    assert cli.main(["simulate", "--preset", "nope", "--out-dir", str(tmp_path)]) == 2
    bad = tmp_path / "bad.ini"
    bad.write_text("[physics]\ngamma = abc\n")
    assert cli.main(["simulate", "--config", str(bad), "--out-dir", str(tmp_path)]) == 2
    assert cli.main(["simulate", "--out-dir", str(tmp_path)]) == 2
    assert cli.main(["simulate", "--preset", "fig5", "--nk", "64", "--out-dir", str(tmp_path)]) == 2
    with pytest.raises(ConfigError):
        preset_from_ini("not an ini file")


def test_simulate_writes_deterministic_artifacts(tmp_path, capsys):
    cfg = write_ini(tmp_path, small_preset())
    outs = []
    for i, workers in enumerate(("1", "1", "2")):
        out = tmp_path / f"run{i}"
        assert cli.main(["simulate", "--config", str(cfg), "--out-dir", str(out),
                         "--workers", workers, "--assert"]) == 0
        outs.append(out)
    names = sorted(p.name for p in outs[0].iterdir())
    for expected in ("config.json", "summary.json", "full_timeseries.csv", "full_modes.csv",
                     "reduced_timeseries.csv", "full_snapshots.json",
                     "full_snap000_cgkk_re.csv", "full_snap000_cgk.csv"):
        assert expected in names
    header = (outs[0] / "full_timeseries.csv").read_text().splitlines()[0]
    assert header.startswith("t [time]")
    for other in outs[1:]:
        for name in names:
            assert (outs[0] / name).read_bytes() == (other / name).read_bytes(), name
    summary = json.loads((outs[0] / "summary.json").read_text())
    assert summary["all_passed"] and summary["checks"]["norm"]["passed"]


def test_failed_check_exit_code(tmp_path):
    cfg = write_ini(tmp_path, small_preset(checks=("two_photon_high",), models=("full",)))
    out = tmp_path / "o"
    assert cli.main(["simulate", "--config", str(cfg), "--out-dir", str(out)]) == 0
    assert cli.main(["simulate", "--config", str(cfg), "--out-dir", str(out), "--assert"]) == 4


def test_norm_abort_exit_code(tmp_path, capsys):
    cfg = write_ini(tmp_path, small_preset(norm_bound=1e-300, models=("full",)))
    assert cli.main(["simulate", "--config", str(cfg), "--out-dir", str(tmp_path / "o")]) == 3
    assert "numerical abort" in capsys.readouterr().err


def test_analytic_subcommand(tmp_path, capsys):
    assert cli.main(["analytic", "--preset", "fig2", "--out-dir", str(tmp_path), "--json",
                     "--points", "51"]) == 0
    summary = json.loads(capsys.readouterr().out)
    assert summary["regime"]["phase_label"] == "generic"
    assert (tmp_path / "analytic_timeseries.csv").exists()
    assert cli.main(["analytic", "--preset", "fig5", "--out-dir", str(tmp_path)]) == 2


def test_schmidt_subcommand(tmp_path, capsys):
    assert cli.main(["schmidt", "--preset", "fig3a", "--nk", "64", "--form", "laplace",
                     "--out-dir", str(tmp_path), "--json"]) == 0  # coarse grid: κ sweep unresolved
    summary = json.loads(capsys.readouterr().out)
    assert summary["schmidt_number"] > 1
    assert cli.main(["schmidt", "--preset", "fig2", "--out-dir", str(tmp_path)]) == 2


def test_modes_subcommand(tmp_path, capsys):
    assert cli.main(["modes", "--preset", "fig5", "--out-dir", str(tmp_path), "--json"]) == 0
    summary = json.loads(capsys.readouterr().out)
    assert summary["n_modes"] == 39
    lines = (tmp_path / "modes.csv").read_text().splitlines()
    assert len(lines) == 40 and lines[0].startswith("q [1]")
