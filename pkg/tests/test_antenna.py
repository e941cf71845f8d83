import numpy as np
import pytest

from paraloop.antenna import (LoopGeometry, calibrate_resonance, build_receivers,
                              incident_power_density, loop_equivalent, lti_input_reactance,
                              realized_aperture_power, total_efficiency)
from paraloop.circuit import MeshCircuit, table_config
from paraloop.errors import ConfigError

C_LIGHT = 299792458.0


def test_default_ka():
    assert LoopGeometry().ka == pytest.approx(0.22, abs=0.02)


def test_radiation_efficiency_near_quoted():
    ant = loop_equivalent()
    assert 100 * ant.radiation_efficiency(100e6) == pytest.approx(29.1, abs=5.0)


def test_open_circuit_voltage_faraday():
    g = LoopGeometry()
    ant = loop_equivalent(g)
    v = abs(complex(ant.open_circuit_voltage(100e6)))
    assert v == pytest.approx(2 * np.pi * 100e6 * g.mean_side ** 2 / C_LIGHT, rel=1e-12)
    assert v == pytest.approx(45e-3, rel=0.10)


def test_loss_scaling_laws():
    ant = loop_equivalent()
    f = np.array([10e6, 20e6])
    r_rad = ant.radiation_resistance(f)
    r_ohm = ant.ohmic_resistance(f)
    assert r_rad[1] / r_rad[0] == pytest.approx(16.0)
    assert r_ohm[1] / r_ohm[0] == pytest.approx(np.sqrt(2.0))
    assert np.all(r_rad > 0) and np.all(r_ohm > 0)


def test_efficiency_vanishes_at_low_frequency():
    ant = loop_equivalent()
    effs = [ant.radiation_efficiency(f) for f in (100e6, 10e6, 1e6, 1e5)]
    assert np.all(np.diff(effs) < 0) and effs[-1] < 1e-6


@pytest.mark.parametrize("width", [0.015, 0.02])
def test_wide_trace_rejected(width):
    with pytest.raises(ConfigError):
        LoopGeometry(outer_side=0.15, trace_width=width)


def test_calibration_tunes_lti_to_resonance():
    lti = table_config("LTI")
    ant = calibrate_resonance(loop_equivalent(), lti)
    assert abs(lti_input_reactance(ant, lti)) < 1e-6
    assert 0.7 <= ant.L_a / ant.L_analytic <= 1.3


def test_calibrated_scale_within_bounds(antenna):
    assert 0.7 <= antenna.scale <= 1.3
    lti = table_config("LTI")
    assert abs(lti_input_reactance(antenna, lti)) < 1e-6


def test_total_efficiency(receivers):
    eff = total_efficiency(receivers["LTI"])
    mn = float(receivers["LTI"].config.mn.efficiency(100e6))
    assert 100 * eff == pytest.approx(26.8, abs=5.0)
    assert 100 * mn == pytest.approx(92.0, abs=3.0)


def test_reciprocity_aperture(receivers):
    from paraloop.frequency import ac_response, to_dbw
    lti = receivers["LTI"]
    p = ac_response(lti, 100e6).power
    assert to_dbw(p) == pytest.approx(to_dbw(realized_aperture_power(lti)), abs=1.0)
    assert incident_power_density(1.0) == pytest.approx(1 / (2 * 376.730313668), rel=1e-6)


def test_receivers_share_one_antenna(receivers):
    ants = {id(c.antenna) for c in receivers.values()}
    assert len(ants) == 1
    assert set(receivers) == {"LTI", "DTV", "NDTV"}
    assert all(isinstance(c, MeshCircuit) for c in receivers.values())


def test_build_receivers_is_deterministic():
    a, b = build_receivers(), build_receivers()
    assert a["NDTV"].antenna == b["NDTV"].antenna
