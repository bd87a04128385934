"""Network geometry, large-scale fading, and LMMSE channel statistics."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import SystemConfig, pilot_snr


@dataclass
class Topology:
    """AP and user positions (meters) inside the [0, area_side]^2 square."""

    ap_positions: np.ndarray   # (M, 2)
    user_positions: np.ndarray  # (K, 2)
    area_side_m: float
    seed: int


@dataclass
class ChannelStats:
    """LMMSE scaling c, channel-estimate second moment gamma, power control eta.

    All arrays are (M, K). eta is constant along k for each AP (uniform rule),
    and satisfies L * sum_k eta[m, k] * gamma[m, k] == 1 per AP.
    """

    c: np.ndarray
    gamma: np.ndarray
    eta: np.ndarray


def generate_topology(config: SystemConfig, seed: int,
                      ap_positions: np.ndarray | None = None) -> Topology:
    """Draw AP and user positions i.i.d. uniform on the square.

    `ap_positions` may be supplied to keep APs fixed across realizations.
    """
    rng = np.random.default_rng(seed)
    if ap_positions is None:
        ap_positions = rng.uniform(0.0, config.area_side_m, size=(config.M, 2))
    else:
        ap_positions = np.asarray(ap_positions, dtype=float)
        if ap_positions.shape != (config.M, 2):
            raise ValueError("ap_positions must have shape (M, 2)")
        rng.uniform(0.0, config.area_side_m, size=(config.M, 2))  # keep stream aligned
    user_positions = rng.uniform(0.0, config.area_side_m, size=(config.K, 2))
    return Topology(ap_positions, user_positions, config.area_side_m, seed)


def path_loss_db(d_km, config: SystemConfig):
    """Three-slope path loss in dB at distance d_km (kilometers). Vectorized."""
    d = np.asarray(d_km, dtype=float)
    pl0 = -config.pl_const_db
    mid = pl0 - 15.0 * np.log10(config.d1_km)
    with np.errstate(divide="ignore"):
        far = pl0 - 35.0 * np.log10(np.maximum(d, config.d1_km))
        near = mid - 20.0 * np.log10(np.clip(d, config.d0_km, config.d1_km))
    const = mid - 20.0 * np.log10(config.d0_km)
    out = np.where(d > config.d1_km, far, np.where(d > config.d0_km, near, const))
    return out if out.shape else float(out)


def lsf_matrix(topology: Topology, config: SystemConfig, seed: int) -> np.ndarray:
    """Large-scale fading beta (M, K): path loss plus log-normal shadowing."""
    rng = np.random.default_rng(seed)
    diff = topology.ap_positions[:, None, :] - topology.user_positions[None, :, :]
    d_km = np.linalg.norm(diff, axis=2) / 1000.0
    pl = path_loss_db(d_km, config)
    shadow = config.sigma_sh_db * rng.standard_normal((config.M, config.K))
    return 10.0 ** ((pl + shadow) / 10.0)


def validate_assignment(assignment, K: int, tau_p: int) -> np.ndarray:
    a = np.asarray(assignment)
    if a.shape != (K,) or not np.issubdtype(a.dtype, np.integer):
        raise ValueError(f"assignment must be {K} integer pilot indices")
    if a.min() < 0 or a.max() >= tau_p:
        raise ValueError(f"pilot indices must lie in [0, {tau_p})")
    return a.astype(np.int64)


def power_control(gamma: np.ndarray, L: int) -> np.ndarray:
    """Uniform power control: eta[m, k] = 1 / (L * sum_k' gamma[m, k'])."""
    row = gamma.sum(axis=1)
    if np.any(row <= 0):
        raise ValueError("degenerate AP with all-zero gamma row")
    return np.repeat((1.0 / (L * row))[:, None], gamma.shape[1], axis=1)


def channel_stats(beta: np.ndarray, assignment, config: SystemConfig) -> ChannelStats:
    """LMMSE statistics under a hard pilot assignment with orthonormal pilots."""
    beta = np.asarray(beta, dtype=float)
    if beta.shape != (config.M, config.K):
        raise ValueError(f"beta must have shape ({config.M}, {config.K})")
    if np.any(beta <= 0) or not np.all(np.isfinite(beta)):
        raise ValueError("beta entries must be positive and finite")
    a = validate_assignment(assignment, config.K, config.tau_p)
    copilot = (a[:, None] == a[None, :]).astype(float)
    return _stats_from_weights(beta, copilot, config)


def _stats_from_weights(beta: np.ndarray, omega: np.ndarray,
                        config: SystemConfig) -> ChannelStats:
    """Shared core of hard and soft statistics; omega is the (K, K) co-pilot weight."""
    ap2 = config.tau_p * pilot_snr(config)
    denom = ap2 * beta @ omega + 1.0
    c = np.sqrt(ap2) * beta / denom
    gamma = np.sqrt(ap2) * beta * c
    eta = power_control(gamma, config.L)
    return ChannelStats(c=c, gamma=gamma, eta=eta)
