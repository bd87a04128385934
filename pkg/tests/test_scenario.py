import numpy as np
import pytest

from cfpilot.config import SystemConfig, pilot_snr
from cfpilot.scenario import (ChannelStats, channel_stats, generate_topology,
                              lsf_matrix, path_loss_db, power_control,
                              validate_assignment)

CFG = SystemConfig()


# ---------------------------------------------------------------------------
# Geometry
# ---------------------------------------------------------------------------

def test_topology_shapes_and_bounds():
    topo = generate_topology(CFG, seed=3)
    assert topo.ap_positions.shape == (CFG.M, 2)
    assert topo.user_positions.shape == (CFG.K, 2)
    for pos in (topo.ap_positions, topo.user_positions):
        assert np.all(pos >= 0.0) and np.all(pos <= CFG.area_side_m)


def test_topology_deterministic_per_seed():
    a, b = generate_topology(CFG, 11), generate_topology(CFG, 11)
    c = generate_topology(CFG, 12)
    assert np.array_equal(a.ap_positions, b.ap_positions)
    assert np.array_equal(a.user_positions, b.user_positions)
    assert not np.array_equal(a.user_positions, c.user_positions)


def test_topology_mean_coordinate_is_uniform():
    # 10^4 coordinates; the sample mean should land within 3 standard errors
    # of area_side / 2 (uniform distribution statistics).
    cfg = SystemConfig(M=2500, K=2500, tau_p=3)
    topo = generate_topology(cfg, seed=0)
    coords = np.concatenate([topo.ap_positions, topo.user_positions]).ravel()
    se = cfg.area_side_m / np.sqrt(12 * coords.size)
    assert abs(coords.mean() - cfg.area_side_m / 2) < 3 * se


def test_fixed_ap_positions_are_respected():
    aps = generate_topology(CFG, 0).ap_positions
    topo = generate_topology(CFG, 5, ap_positions=aps)
    assert np.array_equal(topo.ap_positions, aps)
    with pytest.raises(ValueError):
        generate_topology(CFG, 5, ap_positions=np.zeros((3, 2)))


# ---------------------------------------------------------------------------
# Path loss
# ---------------------------------------------------------------------------

def test_path_loss_frozen_values():
    # Oracles evaluated by hand from the three-slope constants.
    assert path_loss_db(0.1, CFG) == pytest.approx(-106.0, abs=1e-9)
    assert path_loss_db(1.0, CFG) == pytest.approx(-141.0, abs=1e-9)
    assert path_loss_db(0.05, CFG) == pytest.approx(-95.46395015, abs=1e-6)
    assert path_loss_db(0.01, CFG) == pytest.approx(-81.48455007, abs=1e-6)
    # below d0 the loss saturates
    assert path_loss_db(0.001, CFG) == path_loss_db(0.01, CFG)
    assert path_loss_db(0.0, CFG) == path_loss_db(0.01, CFG)


def test_path_loss_continuous_at_breakpoints():
    for d in (CFG.d0_km, CFG.d1_km):
        lo = path_loss_db(d * (1 - 1e-9), CFG)
        hi = path_loss_db(d * (1 + 1e-9), CFG)
        assert lo == pytest.approx(hi, abs=1e-5)


def test_path_loss_monotone_nonincreasing():
    d = np.linspace(0.0, 2.0, 4001)
    pl = path_loss_db(d, CFG)
    assert np.all(np.diff(pl) <= 1e-12)


def test_path_loss_slopes():
    # 35 dB/decade far, 20 dB/decade mid.
    assert path_loss_db(0.1, CFG) - path_loss_db(1.0, CFG) == pytest.approx(35.0)
    assert path_loss_db(0.02, CFG) - path_loss_db(0.04, CFG) == pytest.approx(
        20.0 * np.log10(2.0))


def test_path_loss_vectorized_matches_scalar():
    d = np.array([0.0, 0.005, 0.03, 0.2, 1.5])
    vec = path_loss_db(d, CFG)
    assert vec.shape == d.shape
    for i, di in enumerate(d):
        assert vec[i] == pytest.approx(path_loss_db(float(di), CFG))


# ---------------------------------------------------------------------------
# Large-scale fading
# ---------------------------------------------------------------------------

def test_lsf_matrix_shape_positive_deterministic():
    topo = generate_topology(CFG, 7)
    b1 = lsf_matrix(topo, CFG, 70)
    b2 = lsf_matrix(topo, CFG, 70)
    b3 = lsf_matrix(topo, CFG, 71)
    assert b1.shape == (CFG.M, CFG.K)
    assert np.all(b1 > 0)
    assert np.array_equal(b1, b2)
    assert not np.array_equal(b1, b3)


def test_lsf_matrix_without_shadowing_is_pure_path_loss():
    cfg = SystemConfig(sigma_sh_db=0.0)
    topo = generate_topology(cfg, 1)
    beta = lsf_matrix(topo, cfg, 2)
    d_km = np.linalg.norm(topo.ap_positions[:, None] - topo.user_positions[None],
                          axis=2) / 1000.0
    expected = 10.0 ** (path_loss_db(d_km, cfg) / 10.0)
    np.testing.assert_allclose(beta, expected, rtol=1e-12)


def test_lsf_shadowing_spread_matches_sigma():
    # Empirical std of the dB-domain shadowing over many draws.
    cfg = SystemConfig(M=50, K=50, tau_p=3)
    topo = generate_topology(cfg, 0)
    d_km = np.linalg.norm(topo.ap_positions[:, None] - topo.user_positions[None],
                          axis=2) / 1000.0
    pl = path_loss_db(d_km, cfg)
    shadow = 10.0 * np.log10(lsf_matrix(topo, cfg, 1)) - pl
    assert shadow.std() == pytest.approx(cfg.sigma_sh_db, rel=0.1)
    assert abs(shadow.mean()) < 3 * cfg.sigma_sh_db / np.sqrt(shadow.size)


# ---------------------------------------------------------------------------
# Assignments, power control, channel statistics
# ---------------------------------------------------------------------------

def test_validate_assignment():
    a = validate_assignment([0, 1, 2, 0, 1, 2], CFG.K, CFG.tau_p)
    assert a.dtype == np.int64
    for bad in ([0, 1], [0, 0, 0, 0, 0, 3], [0, 0, 0, 0, 0, -1],
                [0.5, 0, 0, 0, 0, 0]):
        with pytest.raises(ValueError):
            validate_assignment(bad, CFG.K, CFG.tau_p)


def test_power_control_constraint_identity():
    rng = np.random.default_rng(0)
    for _ in range(50):
        gamma = rng.uniform(1e-14, 1e-9, size=(CFG.M, CFG.K))
        eta = power_control(gamma, CFG.L)
        np.testing.assert_allclose(CFG.L * (eta * gamma).sum(axis=1), 1.0,
                                   rtol=1e-10)
        assert np.all(eta > 0)
        # uniform along users
        assert np.allclose(eta, eta[:, :1])


def test_power_control_single_user_and_homogeneity():
    gamma = np.array([[2.0e-11], [5.0e-12]])
    eta = power_control(gamma, 2)
    np.testing.assert_allclose(eta, 1.0 / (2 * gamma))
    np.testing.assert_allclose(power_control(3.0 * gamma, 2), eta / 3.0)
    with pytest.raises(ValueError):
        power_control(np.zeros((2, 1)), 2)


def test_channel_stats_invariants():
    rng = np.random.default_rng(4)
    for trial in range(20):
        topo = generate_topology(CFG, 100 + trial)
        beta = lsf_matrix(topo, CFG, 200 + trial)
        a = rng.integers(0, CFG.tau_p, CFG.K)
        stats = channel_stats(beta, a, CFG)
        assert isinstance(stats, ChannelStats)
        assert np.all(stats.gamma > 0)
        assert np.all(stats.gamma <= beta)          # estimate quality bound
        assert np.all(stats.c > 0)
        np.testing.assert_allclose(
            CFG.L * (stats.eta * stats.gamma).sum(axis=1), 1.0, rtol=1e-10)


def test_channel_stats_closed_form_single_user_no_contamination():
    # With one user there is no contamination; gamma has the textbook form.
    cfg = SystemConfig(M=3, K=1, tau_p=1)
    beta = np.array([[1e-11], [5e-12], [2e-13]])
    stats = channel_stats(beta, [0], cfg)
    ap2 = cfg.tau_p * pilot_snr(cfg)
    np.testing.assert_allclose(stats.gamma, ap2 * beta**2 / (ap2 * beta + 1),
                               rtol=1e-12)


def test_channel_stats_contamination_lowers_gamma():
    topo = generate_topology(CFG, 9)
    beta = lsf_matrix(topo, CFG, 10)
    alone = channel_stats(beta, [0, 1, 2, 0, 1, 2], CFG)  # balanced sharing
    crowded = channel_stats(beta, [0, 0, 0, 0, 0, 0], CFG)
    assert np.all(crowded.gamma <= alone.gamma + 1e-30)
    assert crowded.gamma.sum() < alone.gamma.sum()


def test_channel_stats_rejects_bad_input():
    beta = np.full((CFG.M, CFG.K), 1e-11)
    with pytest.raises(ValueError):
        channel_stats(beta[:, :3], [0, 1, 2], CFG)
    bad = beta.copy()
    bad[0, 0] = 0.0
    with pytest.raises(ValueError):
        channel_stats(bad, [0] * CFG.K, CFG)
