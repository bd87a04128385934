import numpy as np
import pytest

from cfpilot.config import SystemConfig, downlink_snr, noise_power, pilot_snr


def test_defaults_are_the_small_scenario():
    c = SystemConfig()
    assert (c.M, c.L, c.K, c.tau_p) == (10, 2, 6, 3)


def test_noise_power_matches_physical_constants():
    # k_B * 290 K * 20 MHz * 10^(9/10) frozen from an independent evaluation.
    c = SystemConfig()
    assert noise_power(c) == pytest.approx(6.360787e-13, rel=1e-6)


def test_snrs_are_power_over_noise():
    c = SystemConfig()
    assert pilot_snr(c) == pytest.approx(0.1 / noise_power(c))
    assert downlink_snr(c) == pytest.approx(0.2 / noise_power(c))
    assert downlink_snr(c) == pytest.approx(2 * pilot_snr(c))


@pytest.mark.parametrize("kwargs", [
    {"M": 0}, {"L": -1}, {"K": 0}, {"tau_p": 0},
    {"M": 2.5}, {"bandwidth_hz": 0.0}, {"pilot_power_mw": -1.0},
    {"sigma_sh_db": -0.1}, {"d0_km": 0.05, "d1_km": 0.05},
])
def test_invalid_configs_rejected(kwargs):
    with pytest.raises(ValueError):
        SystemConfig(**kwargs)


def test_dict_round_trip_and_unknown_fields():
    c = SystemConfig(M=7, K=4, tau_p=2)
    assert SystemConfig.from_dict(c.to_dict()) == c
    with pytest.raises(ValueError, match="unknown config fields"):
        SystemConfig.from_dict({**c.to_dict(), "bogus": 1})


def test_config_hash_distinguishes_scenarios():
    a, b = SystemConfig(), SystemConfig(M=11)
    assert a.config_hash() == SystemConfig().config_hash()
    assert a.config_hash() != b.config_hash()
    assert len(a.config_hash()) == 16


def test_config_is_frozen():
    c = SystemConfig()
    with pytest.raises(AttributeError):
        c.M = 5
