"""Brute-force references over the joint 2^n harvesting-state space.

Configurations are bitmasks: bit ``i`` set means node ``i`` is in the H state.
Everything here is exponential in ``n`` and only meant for small networks in
tests and acceptance checks.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

from .bayes import ZERO_EVIDENCE_FLOOR, ZeroEvidenceError
from .markov import EhChain

MAX_ENUM_NODES = 12
MAX_FILTER_NODES = 10
MAX_GRID_NODES = 4
GRID_SLACK = 1e-12


def _popcounts(n: int) -> np.ndarray:
    return np.array([bin(c).count("1") for c in range(1 << n)])


def stationary_joint(n: int, chain: EhChain) -> np.ndarray:
    """Product-form stationary law of the joint configuration."""
    k = _popcounts(n)
    return chain.pi_h**k * chain.pi_l ** (n - k)


def marginal_counts(dist: np.ndarray, n: int) -> np.ndarray:
    """Collapse a joint distribution onto the number of active nodes."""
    return np.bincount(_popcounts(n), weights=dist, minlength=n + 1)


def node_transition(chain: EhChain) -> np.ndarray:
    # state 0 = L, 1 = H
    return np.array([[1.0 - chain.p_h, chain.p_h], [chain.p_l, 1.0 - chain.p_l]])


@lru_cache(maxsize=32)
def joint_transition(n: int, chain: EhChain) -> np.ndarray:
    """Joint 2^n x 2^n transition matrix of n independent identical nodes."""
    single = node_transition(chain)
    out = np.ones((1, 1))
    for _ in range(n):
        out = np.kron(out, single)
    out.setflags(write=False)
    return out


def successor_count_law(n: int, chain: EhChain, config: int) -> np.ndarray:
    """Law of the next active count from ``config``, by listing every successor."""
    single = node_transition(chain)
    law = np.zeros(n + 1)
    for nxt in range(1 << n):
        prob = 1.0
        for i in range(n):
            prob *= single[(config >> i) & 1, (nxt >> i) & 1]
        law[bin(nxt).count("1")] += prob
    return law


def enumerate_qbar_rbar(n: int, chain: EhChain, mu) -> tuple[float, float]:
    """Average H-state transmission probability and throughput, by enumeration.

    ``mu[m - 1]`` is the probability used by every active node when ``m`` nodes
    are active.  Node 0 is the tagged node for the conditional average.
    """
    if not 1 <= n <= MAX_ENUM_NODES:
        raise ValueError(f"enumeration supports 1 <= n <= {MAX_ENUM_NODES}, got {n}")
    mu = [float(x) for x in mu]
    q_num = 0.0
    p_tag = 0.0
    r_bar = 0.0
    for config in range(1 << n):
        active = [i for i in range(n) if (config >> i) & 1]
        k = len(active)
        weight = chain.pi_h**k * chain.pi_l ** (n - k)
        if k == 0:
            continue
        u = mu[k - 1]
        if config & 1:
            p_tag += weight
            q_num += weight * u
        # exactly one of the active nodes transmits
        successes = 0.0
        for i in active:
            term = u
            for j in active:
                if j != i:
                    term *= 1.0 - u
            successes += term
        r_bar += weight * successes
    return q_num / p_tag, r_bar


def joint_filter_step(
    dist: np.ndarray, chain: EhChain, mu: float, t: int
) -> np.ndarray:
    """Exact Bayes step on the joint configuration, then independent transitions."""
    dist = np.asarray(dist, dtype=float)
    n = int(round(math.log2(dist.size)))
    if 1 << n != dist.size or n > MAX_FILTER_NODES:
        raise ValueError(f"joint filter needs 2^n entries with n <= {MAX_FILTER_NODES}")
    k = _popcounts(n)
    lik = np.array(
        [math.comb(int(c), t) * mu**t * (1.0 - mu) ** (c - t) if c >= t else 0.0 for c in k]
    )
    weighted = dist * lik
    evidence = weighted.sum()
    if evidence < ZERO_EVIDENCE_FLOOR:
        raise ZeroEvidenceError(f"observation t={t} under mu={mu} has zero probability")
    return (weighted / evidence) @ joint_transition(n, chain)


def grid_search_genie(
    n: int, chain: EhChain, step: float = 0.01
) -> tuple[np.ndarray, float]:
    """Best count-indexed policy on a uniform grid, subject to the H-state budget.

    The search is exhaustive: all grid values of ``mu(1..n-1)`` are listed, and
    for each of them the best admissible grid value of ``mu(n)`` is read from a
    running maximum over the grid (objective and constraint are separable).
    """
    if not 1 <= n <= MAX_GRID_NODES:
        raise ValueError(f"grid search supports 1 <= n <= {MAX_GRID_NODES}, got {n}")
    if step < 0.01:
        raise ValueError(f"grid step must be >= 0.01, got {step}")
    chain.require_no_low_harvest()
    steps = int(round(1.0 / step))
    grid = np.linspace(0.0, 1.0, steps + 1)
    budget = min(1.0, chain.lambda_h / chain.p_tx)

    m = np.arange(1, n + 1)
    q_weight = np.array([math.comb(n - 1, i - 1) for i in m]) * chain.pi_h ** (m - 1) * chain.pi_l ** (n - m)
    r_weight = np.array([math.comb(n, i) for i in m]) * chain.pi_h**m * chain.pi_l ** (n - m)
    # per-coordinate reward tables: gain[i, g] = weight * m mu (1-mu)^(m-1)
    gain = r_weight[:, None] * m[:, None] * grid[None, :] * (1.0 - grid[None, :]) ** (m[:, None] - 1)

    # all combinations of the first n-1 coordinates
    if n > 1:
        idx = np.indices((steps + 1,) * (n - 1)).reshape(n - 1, -1)
    else:
        idx = np.zeros((0, 1), dtype=int)
    spent = np.zeros(idx.shape[1])
    reward = np.zeros(idx.shape[1])
    for i in range(n - 1):
        spent += q_weight[i] * grid[idx[i]]
        reward += gain[i, idx[i]]

    last = n - 1
    best_prefix = np.maximum.accumulate(gain[last])
    arg_prefix = np.zeros(steps + 1, dtype=int)
    for g in range(1, steps + 1):
        arg_prefix[g] = g if gain[last, g] > best_prefix[g - 1] else arg_prefix[g - 1]
    remaining = budget - spent + GRID_SLACK
    # number of last-coordinate grid points affordable with the remaining budget
    n_ok = np.searchsorted(q_weight[last] * grid, remaining, side="right")
    feasible = n_ok > 0
    total = np.full(idx.shape[1], -np.inf)
    total[feasible] = reward[feasible] + best_prefix[n_ok[feasible] - 1]
    best = int(np.argmax(total))
    if not np.isfinite(total[best]):
        raise ValueError("no feasible grid policy")
    mu = np.array([grid[idx[i, best]] for i in range(n - 1)] + [grid[arg_prefix[n_ok[best] - 1]]])
    return mu, float(total[best])
