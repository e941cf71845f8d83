import json
import textwrap

import pytest

from paraloop.cli import main
from paraloop.config import load_config, parse_config
from paraloop.errors import ConfigError
from paraloop.experiments import crossing_rate, run

BASE = """
[antenna]
outer_side_mm = 150.0
trace_width_mm = 3.0

[configs.LTI]
[configs.DTV]
R_c_ohm = {rc}
[configs.NDTV]
"""

SCENARIOS = """
[scenarios.sweep]
kind = "power_sweep"
configs = ["LTI", "DTV", "NDTV"]
f_lo_MHz = 98.0
f_hi_MHz = 102.0
n_points = 81

[scenarios.const]
kind = "constellation"
configs = ["LTI", "NDTV"]
rate_Msps = 1.0
n_symbols = 256
snr_dB = 30.0
seed = 11

[scenarios.beat]
kind = "beat_demo"
configs = ["DTV"]
f_MHz = 100.1
phases_deg = [0.0, 90.0]
window_us = 10.0

[scenarios.nosave]
kind = "evm_curve"
configs = ["LTI"]
"""


def write(tmp_path, body, name="exp.toml"):
    p = tmp_path / name
    p.write_text(textwrap.dedent(body))
    return p


@pytest.fixture
def config_file(tmp_path):
    return write(tmp_path, BASE.format(rc=25.5) + SCENARIOS)


def test_load_config(config_file):
    cfg = load_config(config_file)
    assert set(cfg.receivers) == {"LTI", "DTV", "NDTV"}
    assert cfg.receivers["DTV"].cap.R_c == 25.5
    assert cfg.receivers["NDTV"].cap.f_p == pytest.approx(669e6)
    assert cfg.scenario("const").seed == 11


@pytest.mark.parametrize("body, match", [
    ("[antenna]\nouter_side_mm = 150\ncolour = 1\n[scenario]\nkind='power_sweep'\n", "unknown"),
    ("[configs.X]\nkind='XYZ'\n[scenario]\nkind='power_sweep'\n", "kind"),
    ("[scenario]\nkind='spectrogram'\n", "scenario kind"),
    ("[scenario]\nkind='power_sweep'\nconfigs=['FOO']\n", "unknown configs"),
    ("[configs.DTV]\nf_p_MHz = 190.0\n[scenario]\nkind='power_sweep'\n", "2 x f_center"),
    ("[antenna]\ntrace_width_mm = 20.0\n[scenario]\nkind='power_sweep'\n", "trace"),
    ("[configs.LTI]\nC0_pF = 'big'\n[scenario]\nkind='power_sweep'\n", "number"),
    ("", "no scenario"),
])
def test_config_errors(tmp_path, body, match):
    with pytest.raises(ConfigError, match=match):
        load_config(write(tmp_path, body))


def test_stochastic_scenario_needs_seed(config_file, tmp_path):
    cfg = load_config(config_file)
    with pytest.raises(ConfigError, match="seed"):
        run(cfg, "nosave", tmp_path / "out")


def test_cli_exit_codes(config_file, tmp_path):
    out = str(tmp_path / "o")
    assert main(["run", str(tmp_path / "missing.toml"), "--out", out]) == 2
    assert main(["run", str(config_file), "--out", out]) == 2  # several scenarios, none chosen
    assert main(["run", str(config_file), "--scenario", "nosave", "--out", out]) == 2
    assert main(["run", str(config_file), "--scenario", "sweep", "--seed", "-1"]) == 2
    assert main(["run", str(config_file), "--scenario", "sweep", "--jobs", "0"]) == 2
    assert main(["run", str(config_file), "--scenario", "sweep", "--out", out]) == 0


def test_cli_solver_failure(tmp_path):
    path = write(tmp_path, BASE.format(rc=5.0) + SCENARIOS)
    out = tmp_path / "o"
    assert main(["run", str(path), "--scenario", "sweep", "--out", str(out)]) == 3
    manifest = json.loads((out / "manifest.json").read_text())
    assert "DTV" in manifest["failures"]
    assert (out / "power_sweep_LTI.csv").exists()


def test_power_sweep_outputs(config_file, tmp_path):
    m = run(load_config(config_file), "sweep", tmp_path)
    names = {f["path"] for f in m["files"]}
    assert {"power_sweep_LTI.csv", "power_sweep_DTV.csv", "bandwidths.csv"} <= names
    header = (tmp_path / "power_sweep_DTV.csv").read_text().splitlines()[0]
    assert header == "frequency_Hz,P_signal_dBW,P_idler_dBW,P_combined_dBW"
    assert m["failures"] == {}


def test_constellation_deterministic(config_file, tmp_path):
    cfg = load_config(config_file)
    a = run(cfg, "const", tmp_path / "a")
    b = run(cfg, "const", tmp_path / "b")
    assert a == b
    for f in a["files"]:
        assert (tmp_path / "a" / f["path"]).read_bytes() == (tmp_path / "b" / f["path"]).read_bytes()
    header = (tmp_path / "a" / "constellation_LTI.csv").read_text().splitlines()[0]
    assert header == "symbol_index,tx_I,tx_Q,rx_I,rx_Q,eq_I,eq_Q"
    c = run(cfg, "const", tmp_path / "c", seed=12)
    assert c["files"] != a["files"]


def test_beat_demo(config_file, tmp_path):
    m = run(load_config(config_file), "beat", tmp_path)
    for f in m["summary"]["beat_frequency_Hz"]:
        assert f == pytest.approx(0.2e6, rel=0.01)


def test_crossing_rate():
    assert crossing_rate([1, 2, 4], [5, 8, 12]) == pytest.approx(2 * 2 ** 0.5)
    assert crossing_rate([1, 2], [1, 2]) != crossing_rate([1, 2], [1, 2])


def test_parse_single_scenario_table():
    cfg = parse_config({"scenario": {"kind": "step_response", "configs": "LTI"}})
    assert cfg.scenario().configs == ("LTI",)
