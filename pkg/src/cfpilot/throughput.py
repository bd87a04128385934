"""Closed-form downlink ergodic throughput and its differentiable soft relaxation."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import SystemConfig, downlink_snr, pilot_snr
from .scenario import ChannelStats, _stats_from_weights, channel_stats, validate_assignment

LN2 = np.log(2.0)


@dataclass
class RateReport:
    per_user_mbps: np.ndarray  # (K,)
    sum_mbps: float


def copilot_matrix(assignment) -> np.ndarray:
    """(K, K) binary matrix with entry (j, k) = 1 iff users j and k share a pilot."""
    a = np.asarray(assignment)
    return (a[:, None] == a[None, :]).astype(float)


def validate_soft_assignment(q, K: int, tau_p: int, tol: float = 1e-9) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    if q.shape != (K, tau_p):
        raise ValueError(f"soft assignment must have shape ({K}, {tau_p})")
    if np.any(q < -tol) or np.any(np.abs(q.sum(axis=1) - 1.0) > tol):
        raise ValueError("soft assignment rows must be non-negative and sum to 1")
    return q


def _rates_mbps(beta: np.ndarray, stats: ChannelStats, coh_weight: np.ndarray,
                config: SystemConfig) -> np.ndarray:
    """Per-user rates (Mbps).

    coh_weight is the (K, K) weight of the coherent interference term
    (co-pilot indicator for hard assignments, squared soft overlap otherwise);
    its diagonal is ignored. The interference sums run over all M APs.
    """
    if beta.shape != stats.gamma.shape:
        raise ValueError("beta and channel statistics dimensions disagree")
    rho_d, L = downlink_snr(config), config.L
    gamma, eta = stats.gamma, stats.eta
    se = np.sqrt(eta[:, 0])                      # eta is uniform along k
    sig = se @ gamma                             # (K,) coherent signal amplitude
    cross = (se[:, None] * gamma / beta).T @ beta  # (j, k) interference amplitude
    w = coh_weight.copy()
    np.fill_diagonal(w, 0.0)
    coherent = rho_d * L**2 * np.einsum("jk,jk->k", w, cross**2)
    noncoh = rho_d * L * beta.T @ (eta[:, 0] * gamma.sum(axis=1))
    sinr = rho_d * L**2 * sig**2 / (coherent + noncoh + 1.0)
    return config.bandwidth_hz * np.log2(1.0 + sinr) / 1e6


def user_rate(k: int, beta: np.ndarray, stats: ChannelStats, copilot: np.ndarray,
              config: SystemConfig) -> float:
    """Ergodic throughput of user k in Mbps under a hard assignment."""
    return float(_rates_mbps(beta, stats, copilot, config)[k])


def sum_rate(beta: np.ndarray, assignment, config: SystemConfig) -> RateReport:
    """Total network throughput of a hard assignment (recomputes channel stats)."""
    a = validate_assignment(assignment, config.K, config.tau_p)
    stats = channel_stats(beta, a, config)
    rates = _rates_mbps(beta, stats, copilot_matrix(a), config)
    return RateReport(per_user_mbps=rates, sum_mbps=float(rates.sum()))


def soft_channel_stats(beta: np.ndarray, q, config: SystemConfig) -> ChannelStats:
    """Channel statistics with the co-pilot indicator relaxed to omega = q q^T."""
    q = validate_soft_assignment(q, config.K, config.tau_p)
    return _stats_from_weights(np.asarray(beta, dtype=float), q @ q.T, config)


def soft_sum_rate(beta: np.ndarray, q, config: SystemConfig) -> tuple[float, float]:
    """Soft total throughput (Mbps) and the unsupervised loss (its negative)."""
    q = validate_soft_assignment(q, config.K, config.tau_p)
    beta = np.asarray(beta, dtype=float)
    stats = _stats_from_weights(beta, q @ q.T, config)
    rates = _rates_mbps(beta, stats, (q @ q.T) ** 2, config)
    total = float(rates.sum())
    return total, -total


def soft_sum_rate_grad(beta: np.ndarray, q, config: SystemConfig) -> tuple[float, np.ndarray]:
    """Unsupervised loss and its analytic gradient with respect to q.

    Differentiates through the soft contamination inside gamma, the
    recomputed power control, and the squared soft coherent weight.
    """
    q = validate_soft_assignment(q, config.K, config.tau_p)
    beta = np.asarray(beta, dtype=float)
    rho_d, L, B = downlink_snr(config), config.L, config.bandwidth_hz
    ap2 = config.tau_p * pilot_snr(config)

    # Forward pass, keeping intermediates.
    omega = q @ q.T
    denom = ap2 * beta @ omega + 1.0
    gamma = ap2 * beta**2 / denom
    s = gamma.sum(axis=1)                 # (M,)
    eta = 1.0 / (L * s)                   # (M,)
    se = np.sqrt(eta)
    sig = se @ gamma                      # (K,)
    cross = (se[:, None] * gamma / beta).T @ beta  # (j, k)
    w = omega**2
    np.fill_diagonal(w, 0.0)
    coherent = rho_d * L**2 * np.einsum("jk,jk->k", w, cross**2)
    noncoh = rho_d * L * beta.T @ (eta * s)
    den = coherent + noncoh + 1.0
    sinr = rho_d * L**2 * sig**2 / den
    total = float((B * np.log2(1.0 + sinr) / 1e6).sum())

    # Backward pass for d(total)/dq.
    d_sinr = B / (1e6 * LN2 * (1.0 + sinr))          # (K,)
    d_sig = d_sinr * rho_d * L**2 * 2.0 * sig / den
    d_den = -d_sinr * sinr / den                     # grad wrt coherent and noncoh

    g_gamma = se[:, None] * d_sig[None, :]
    g_se = gamma @ d_sig

    g_cross = 2.0 * rho_d * L**2 * w * cross * d_den[None, :]
    g_w = rho_d * L**2 * cross**2 * d_den[None, :]
    np.fill_diagonal(g_w, 0.0)
    g_omega = 2.0 * omega * g_w
    gg = beta @ g_cross.T                            # (M, K) wrt se[:,None]*gamma/beta
    g_gamma += gg * se[:, None] / beta
    g_se += (gg * gamma / beta).sum(axis=1)

    g_v = rho_d * L * beta @ d_den                   # (M,) wrt eta*s
    g_eta = g_v * s
    g_s = g_v * eta

    g_eta += 0.5 * g_se / se
    g_s += -g_eta / (L * s**2)
    g_gamma += g_s[:, None]

    g_denom = -g_gamma * gamma / denom
    g_omega += ap2 * beta.T @ g_denom
    g_q = (g_omega + g_omega.T) @ q
    return -total, -g_q
