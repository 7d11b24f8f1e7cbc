import json

import numpy as np
import pytest

from ramancomb.cli_bench import (
    ConfigError,
    emit_plot,
    leading_subcomb,
    load_config,
    resolve,
    run_bandwidth_sweep,
    run_scenario,
    sweep_points,
    worker_count,
)
from ramancomb.cli_bench.cli import main
from ramancomb.cli_bench.config import parse_override
from ramancomb.spectrum import bands, build_comb, write_launch_profile, flat_launch


def _cfg(tmp_path, **sections):
    doc = {"spectrum": {"bands": ["C"]}, "solver": {"dz_m": 20.0, "timing_repeats": 1},
           "output": {"directory": str(tmp_path / "out"), "plots": True}}
    for key, value in sections.items():
        doc.setdefault(key, {}).update(value)
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(doc))
    return path


# ---------------------------------------------------------------- config


def test_defaults_resolve():
    cfg = resolve({})
    assert cfg["fiber"]["span_length_km"] == 70.0
    assert cfg["spectrum"]["bands"] == ["U", "L", "C", "S", "E"]


def test_negative_span_names_field():
    with pytest.raises(ConfigError) as info:
        resolve({"fiber": {"span_length_km": -5}})
    assert [p for p, _ in info.value.errors] == ["fiber.span_length_km"]


def test_unknown_key_rejected_with_path():
    with pytest.raises(ConfigError) as info:
        resolve({"solver": {"tolerance": 0.1}})
    assert ("solver.tolerance", "unknown key") in info.value.errors


def test_overrides_and_parsing():
    assert parse_override("solver.k_max=6") == (["solver", "k_max"], 6)
    assert parse_override("output.directory=res") == (["output", "directory"], "res")
    cfg = resolve({}, ["solver.k_max=6", 'spectrum.bands=["C"]'])
    assert cfg["solver"]["k_max"] == 6 and cfg["spectrum"]["bands"] == ["C"]
    with pytest.raises(ConfigError):
        resolve({}, ["solver.k_max"])
    with pytest.raises(ConfigError):
        resolve({}, ["solver.k_max.x=1"])


def test_profile_mode_requires_path():
    with pytest.raises(ConfigError) as info:
        resolve({"spectrum": {"launch": {"mode": "profile"}}})
    assert info.value.errors[0][0] == "spectrum.launch.profile_path"


def test_missing_input_file(tmp_path):
    with pytest.raises(ConfigError, match="table_path"):
        resolve({"fiber": {"raman": {"table_path": "nope.txt"}}}, base_dir=tmp_path)


def test_worker_count_env(monkeypatch):
    monkeypatch.setenv("RC_THREADS", "3")
    assert worker_count() == 3
    assert worker_count(2) == 2
    monkeypatch.setenv("RC_THREADS", "x")
    with pytest.raises(ConfigError):
        worker_count()
    monkeypatch.delenv("RC_THREADS")
    assert worker_count() == 1


# ---------------------------------------------------------------- scenario


def test_run_scenario_writes_artifacts(tmp_path):
    cfg = load_config(_cfg(tmp_path))
    res = run_scenario(cfg)
    out = tmp_path / "out"
    names = {p.name for p in res.files}
    assert {"numerical_evolution.csv", "perturbative_evolution.csv", "error_vs_frequency.csv",
            "report.json", "power_vs_freq.svg", "error_vs_freq.svg"} <= names
    report = json.loads((out / "report.json").read_text())
    assert report["config"] == cfg
    assert report["perturbative"]["selected_order"] >= 1
    header = (out / "perturbative_evolution.csv").read_text().splitlines()[0]
    assert header == "channel_index,frequency_THz,z_km,power_dBm,order"
    assert (out / "numerical_evolution.csv").read_text().startswith("channel_index,frequency_THz,z_km,power_dBm\n")


def test_rerun_from_report_is_bit_identical(tmp_path):
    cfg_path = _cfg(tmp_path)
    assert main(["solve", "--config", str(cfg_path)]) == 0
    first = {p: (tmp_path / "out" / p).read_bytes() for p in
             ("numerical_evolution.csv", "perturbative_evolution.csv", "error_vs_frequency.csv", "power_vs_freq.svg")}
    assert main(["solve", "--config", str(tmp_path / "out" / "report.json"),
                 "--override", f"output.directory={tmp_path / 'again'}"]) == 0
    for name, data in first.items():
        assert (tmp_path / "again" / name).read_bytes() == data


def test_launch_profile_config(tmp_path):
    comb = flat_launch(build_comb(bands("C")), -2.0)
    write_launch_profile(comb, tmp_path / "launch.csv")
    cfg = load_config(_cfg(tmp_path, spectrum={"launch": {"mode": "profile", "profile_path": "launch.csv"}}))
    res = run_scenario(cfg)
    assert res.report["comb"]["total_power_dBm"] == pytest.approx(comb.total_power_dbm)


def test_cli_exit_codes(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"fiber": {"span_length_km": -1}}))
    assert main(["validate", "--config", str(bad)]) == 2
    assert "fiber.span_length_km" in capsys.readouterr().err
    assert main(["validate", "--config", str(_cfg(tmp_path))]) == 0
    assert "65 channels" in capsys.readouterr().out


def test_cli_non_convergence_exit(tmp_path, capsys):
    path = _cfg(tmp_path, spectrum={"launch": {"power_dBm": 8.0}}, solver={"k_max": 1, "tolerance_dB": 1e-3, "mode": "perturbative"})
    assert main(["solve", "--config", str(path)]) == 3
    assert "theta" in capsys.readouterr().err


# ------------------------------------------------------------------- sweep


def test_sweep_points():
    assert sweep_points(2.5, 40, 2.5)[-1] == 40.0
    assert len(sweep_points(2.5, 40, 2.5)) == 16
    assert sweep_points(2.5, 3.0, 5.0) == [2.5]
    with pytest.raises(ValueError):
        sweep_points(2.5, 1.0, 1.0)


def test_leading_subcomb_starts_at_lowest_channel():
    full = build_comb(bands("ULCSE"))
    sub = leading_subcomb(full, 2.5)
    assert sub.frequency_hz[0] == full.frequency_hz[0]
    assert len(sub) == 34


def test_single_point_sweep(tmp_path):
    cfg = load_config(_cfg(tmp_path, spectrum={"bands": ["U", "L", "C", "S", "E"]},
                           solver={"reference_dz_m": 10.0}))
    rows = run_bandwidth_sweep(cfg, 2.5, 2.5, 2.5)
    assert [r.solver for r in rows] == ["numerical", "perturbative"]
    assert all(r.status == "ok" and r.wall_time_s > 0 and r.max_error_db <= 0.1 for r in rows)
    out = tmp_path / "out"
    assert (out / "bench.csv").read_text().splitlines()[0].startswith("bandwidth_THz,channels,solver")
    assert (out / "time_vs_bandwidth.svg").exists()


def test_sweep_beyond_comb_raises(tmp_path):
    cfg = load_config(_cfg(tmp_path))
    with pytest.raises(ValueError, match="exceeds"):
        run_bandwidth_sweep(cfg, 2.5, 10.0, 2.5, write=False)


# ------------------------------------------------------------------- plots


def test_one_channel_plot(tmp_path):
    p = emit_plot({"series": [{"label": "x", "x": [193.1], "y": [-1.0]}]}, "power_vs_freq", tmp_path / "p.svg")
    text = p.read_text()
    assert text.lstrip().startswith("<?xml") and "</svg>" in text
    assert "Power [dBm]" in text and "Frequency [THz]" in text


def test_zero_error_plot(tmp_path):
    x = np.linspace(190, 196, 10)
    p = emit_plot({"series": [{"x": x, "y": np.zeros(10)}]}, "error_vs_freq", tmp_path / "e.svg")
    assert "Relative error [dB]" in p.read_text()


def test_plot_errors(tmp_path):
    with pytest.raises(ValueError):
        emit_plot({"series": []}, "power_vs_freq", tmp_path / "x.svg")
    with pytest.raises(ValueError):
        emit_plot({"series": [{"x": [1], "y": [1]}]}, "histogram", tmp_path / "x.svg")
    blocker = tmp_path / "file"
    blocker.write_text("")
    with pytest.raises(OSError):
        emit_plot({"series": [{"x": [1], "y": [1]}]}, "time_vs_bandwidth", blocker / "x.svg")
