"""Model-based pilot assigners: random, greedy, master-AP, location-based, exhaustive."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .config import SystemConfig
from .scenario import Topology, channel_stats
from .throughput import _rates_mbps, copilot_matrix, sum_rate


@dataclass
class AssignerResult:
    assignment: np.ndarray
    sum_mbps: float
    evaluations: int


class SearchSpaceTooLarge(ValueError):
    pass


def random_assignment(K: int, tau_p: int, seed: int) -> np.ndarray:
    """Each user draws a pilot i.i.d. uniform in [0, tau_p)."""
    if tau_p < 1:
        raise ValueError("tau_p must be >= 1")
    rng = np.random.default_rng(seed)
    return rng.integers(0, tau_p, size=K, dtype=np.int64)


def _all_rates(beta, assignment, config):
    stats = channel_stats(beta, assignment, config)
    return _rates_mbps(beta, stats, copilot_matrix(assignment), config)


def greedy_assignment(beta: np.ndarray, config: SystemConfig, seed: int,
                      max_iters: int | None = None) -> AssignerResult:
    """Max-min greedy: repeatedly move the worst user to its best pilot.

    A move is accepted only if it strictly improves the network-wide minimum
    rate, so the minimum rate is non-decreasing over accepted iterations.
    """
    if max_iters is None:
        max_iters = 10 * config.K
    if max_iters < 1:
        raise ValueError("max_iters must be >= 1")
    assignment = random_assignment(config.K, config.tau_p, seed)
    rates = _all_rates(beta, assignment, config)
    evals = 1
    for _ in range(max_iters):
        worst = int(np.argmin(rates))
        best_t, best_rate, best_rates = assignment[worst], -np.inf, None
        for t in range(config.tau_p):
            cand = assignment.copy()
            cand[worst] = t
            cand_rates = _all_rates(beta, cand, config)
            evals += 1
            if cand_rates[worst] > best_rate:
                best_t, best_rate, best_rates = t, cand_rates[worst], cand_rates
        if best_t == assignment[worst] or best_rates.min() <= rates.min():
            break
        assignment[worst] = best_t
        rates = best_rates
    return AssignerResult(assignment, float(rates.sum()), evals)


def master_ap_assignment(beta: np.ndarray, tau_p: int) -> np.ndarray:
    """Assign pilots minimizing contamination seen at each user's strongest AP.

    Users are processed in descending order of their master-AP gain; each takes
    the pilot with the least accumulated co-pilot gain at its master AP, ties
    to the lowest pilot index.
    """
    beta = np.asarray(beta, dtype=float)
    if np.any(beta <= 0):
        raise ValueError("beta entries must be positive")
    K = beta.shape[1]
    master = beta.argmax(axis=0)
    order = np.argsort(-beta[master, np.arange(K)], kind="stable")
    assignment = np.zeros(K, dtype=np.int64)
    on_pilot: list[list[int]] = [[] for _ in range(tau_p)]
    for k in order:
        m = master[k]
        load = np.array([sum(beta[m, j] for j in on_pilot[t]) for t in range(tau_p)])
        t = int(np.argmin(load))
        assignment[k] = t
        on_pilot[t].append(k)
    return assignment


def location_based_assignment(topology: Topology, tau_p: int,
                              subsets: int | None = None) -> np.ndarray:
    """Grid-partitioned assignment: each cell reuses only its own pilot block.

    The area splits into `subsets` cells and the pilots into `subsets` equal
    blocks; users in a cell take pilots from its block round-robin by
    increasing distance to the cell center.
    """
    if subsets is None:
        subsets = 4 if tau_p % 4 == 0 else (2 if tau_p % 2 == 0 else 1)
    if tau_p % subsets != 0:
        raise ValueError(f"subsets={subsets} must divide tau_p={tau_p}")
    root = int(round(np.sqrt(subsets)))
    if subsets not in (1, 2) and root * root != subsets:
        raise ValueError("subsets must be 1, 2, or a perfect square")

    side = topology.area_side_m
    pos = topology.user_positions
    K = pos.shape[0]
    if subsets == 2:
        nx, ny = 2, 1
    else:
        nx = ny = max(root, 1)
    cx = np.minimum((pos[:, 0] / side * nx).astype(int), nx - 1)
    cy = np.minimum((pos[:, 1] / side * ny).astype(int), ny - 1)
    cell = cy * nx + cx
    block = tau_p // subsets

    assignment = np.zeros(K, dtype=np.int64)
    for c in range(subsets):
        members = np.flatnonzero(cell == c)
        if members.size == 0:
            continue
        center = np.array([(c % nx + 0.5) * side / nx, (c // nx + 0.5) * side / ny])
        dist = np.linalg.norm(pos[members] - center, axis=1)
        ordered = members[np.argsort(dist, kind="stable")]
        for i, k in enumerate(ordered):
            assignment[k] = c * block + i % block
    return assignment


def count_canonical(K: int, tau_p: int) -> int:
    """Number of set partitions of K users into at most tau_p non-empty blocks."""
    # Stirling numbers of the second kind, summed over block counts.
    row = [1] + [0] * tau_p
    for _ in range(K):
        new = [0] * (tau_p + 1)
        for b in range(1, tau_p + 1):
            new[b] = row[b - 1] + b * row[b]
        row = new
        row[0] = 0
    return sum(row[1:])


def enumerate_canonical(K: int, tau_p: int) -> Iterator[np.ndarray]:
    """Restricted-growth strings: canonical assignments under pilot relabeling."""
    a = np.zeros(K, dtype=np.int64)

    def rec(k: int, used: int):
        if k == K:
            yield a.copy()
            return
        top = min(used + 1, tau_p)
        for t in range(top):
            a[k] = t
            yield from rec(k + 1, max(used, t + 1))

    yield from rec(1, 1) if K > 0 else iter(())


def exhaustive_search(beta: np.ndarray, config: SystemConfig,
                      limit: int = 10**8) -> AssignerResult:
    """Global optimum over all assignments, enumerated up to pilot relabeling."""
    n = count_canonical(config.K, config.tau_p)
    if n > limit:
        raise SearchSpaceTooLarge(
            f"{n} canonical assignments exceed the enumeration limit {limit}")
    best, best_rate = None, -np.inf
    for cand in enumerate_canonical(config.K, config.tau_p):
        r = sum_rate(beta, cand, config).sum_mbps
        if r > best_rate or (r == best_rate and tuple(cand) < tuple(best)):
            best, best_rate = cand, r
    return AssignerResult(best, float(best_rate), n)
