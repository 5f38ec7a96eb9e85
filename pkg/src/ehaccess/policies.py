"""Transmission policies for the active (H-state) nodes.

Three information structures are covered: a node that only knows its own
harvesting state (``local_optimal``), and a node that is also told the number
of active nodes (``genie_optimal``).  The genie-aided optimum has three regimes
depending on how much power is harvested in the H state:

* ``SINGLE_ACTIVE``: only transmit when alone, with a reduced probability;
* ``CONSTRAINED``: ``mu(1) = 1`` and ``mu(m) < 1/m`` tuned by a common
  multiplier ``phi`` so that the power budget is met with equality;
* ``UNCONSTRAINED``: slotted-ALOHA optimum ``mu(m) = 1/m``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .markov import EhChain, binomial_row

EPS_PHI = 1e-10
EPS_MU = 1e-12


class SolverError(RuntimeError):
    """A numerical solver failed to produce a valid policy."""


class Regime(str, enum.Enum):
    SINGLE_ACTIVE = "SINGLE_ACTIVE"
    CONSTRAINED = "CONSTRAINED"
    UNCONSTRAINED = "UNCONSTRAINED"


@dataclass(frozen=True)
class LocalPolicy:
    mu_h: float
    mu_l: float = 0.0


@dataclass(frozen=True, eq=False)
class GeniePolicy:
    """Transmission probability indexed by the number of active nodes.

    ``mu[m - 1]`` is the probability used by each active node when ``m`` nodes
    are active.  ``phi`` is only meaningful in the ``CONSTRAINED`` regime.
    """

    n: int
    mu: np.ndarray
    regime: Regime
    phi: float = 0.0

    def __post_init__(self):
        mu = np.asarray(self.mu, dtype=float)
        if mu.shape != (self.n,):
            raise ValueError(f"mu must have length n={self.n}, got shape {mu.shape}")
        mu.setflags(write=False)
        object.__setattr__(self, "mu", mu)

    def by_count(self) -> np.ndarray:
        """Probabilities indexed directly by ``m = 0..n`` (``m = 0`` maps to 0)."""
        return np.concatenate(([0.0], self.mu))


def power_budget(chain: EhChain) -> float:
    """Largest admissible average transmission probability in the H state."""
    return min(1.0, chain.lambda_h / chain.p_tx)


def local_optimal(n: int, chain: EhChain) -> LocalPolicy:
    if n < 1:
        raise ValueError(f"node count must be >= 1, got {n}")
    chain.require_no_low_harvest()
    return LocalPolicy(min(1.0, chain.lambda_h / chain.p_tx, 1.0 / (n * chain.pi_h)))


def local_throughput(n: int, q_bar: float) -> float:
    """Network throughput when each node transmits i.i.d. with probability ``q_bar``."""
    return n * q_bar * (1.0 - q_bar) ** (n - 1)


def instantaneous_throughput(q, b: int = 1) -> float:
    """Expected successes in one slot with per-node probabilities ``q`` over ``b`` channels."""
    q = np.asarray(q, dtype=float)
    if b < 1:
        raise ValueError(f"channel count must be >= 1, got {b}")
    free = 1.0 - q / b
    total = 0.0
    for i in range(q.size):
        total += q[i] * np.prod(np.delete(free, i))
    return float(total)


def genie_qbar(policy: GeniePolicy, chain: EhChain) -> float:
    """Average transmission probability of a node given it is in the H state."""
    weights = binomial_row(policy.n - 1, chain.pi_h)
    return float(weights @ policy.mu)


def genie_rbar(policy: GeniePolicy, chain: EhChain) -> float:
    """Average network throughput of a count-indexed policy."""
    n = policy.n
    m = np.arange(1, n + 1)
    weights = binomial_row(n, chain.pi_h)[1:]
    mu = policy.mu
    return float(weights @ (m * mu * (1.0 - mu) ** (m - 1)))


def lambda_h_max(n: int, chain: EhChain) -> float:
    """Harvested power above which the H-state power constraint stops binding."""
    return chain.p_tx / (n * chain.pi_h) * (1.0 - chain.pi_l**n)


def single_active_threshold(n: int, chain: EhChain) -> float:
    """Harvested power up to which only lone active nodes should transmit."""
    return chain.p_tx * chain.pi_l ** (n - 1)


def _stationarity_lhs(u, m):
    # (1-u)^(m-2) (1-m u), with the power taken through log1p for large m.
    return np.exp((m - 2) * np.log1p(-u)) * (1.0 - m * u)


def mu_curve(n: int, phi: float, eps_mu: float = EPS_MU) -> np.ndarray:
    """Solve ``(1-u)^(m-2)(1-m u) = phi`` for every ``m = 2..n`` by bisection.

    Each root is bracketed in ``[0, 1/m]`` where the left side decreases from 1
    to 0.  Brackets are halved until narrower than ``eps_mu``; the midpoint is
    returned.
    """
    m = np.arange(2, n + 1, dtype=float)
    lo = np.zeros_like(m)
    hi = 1.0 / m
    active = (hi - lo) >= eps_mu
    while active.any():
        mid = 0.5 * (lo + hi)
        above = _stationarity_lhs(mid, m) > phi
        lo = np.where(active & above, mid, lo)
        hi = np.where(active & ~above, mid, hi)
        active = (hi - lo) >= eps_mu
    return 0.5 * (lo + hi)


def solve_mu_given_phi(m: int, phi: float, eps_mu: float = EPS_MU) -> float:
    if m < 2:
        raise ValueError(f"m must be >= 2, got {m}")
    if not 0.0 <= phi < 1.0:
        raise ValueError(f"phi must lie in [0, 1), got {phi}")
    if not eps_mu > 0.0:
        raise ValueError("eps_mu must be positive")
    return float(mu_curve(m, phi, eps_mu)[-1])


def _constrained_mu(n: int, phi: float, eps_mu: float) -> np.ndarray:
    return np.concatenate(([1.0], mu_curve(n, phi, eps_mu)))


def solve_phi(
    n: int, chain: EhChain, eps_phi: float = EPS_PHI, eps_mu: float = EPS_MU
) -> tuple[float, np.ndarray]:
    """Find the multiplier ``phi`` that makes the power budget tight.

    Only defined strictly between the two regime thresholds.  The average
    transmission probability decreases in ``phi``, so ``phi`` is bracketed in
    ``[0, 1]`` and bisected.
    """
    low_thr = single_active_threshold(n, chain)
    high_thr = lambda_h_max(n, chain)
    if not low_thr < chain.lambda_h < high_thr:
        raise ValueError(
            f"lambda_h={chain.lambda_h} outside the constrained interval ({low_thr}, {high_thr})"
        )
    target = power_budget(chain)
    weights = binomial_row(n - 1, chain.pi_h)
    phi_min, phi_max = 0.0, 1.0
    while phi_max - phi_min >= eps_phi:
        phi = 0.5 * (phi_min + phi_max)
        q = weights @ _constrained_mu(n, phi, eps_mu)
        # q falls as phi grows: spending below budget means phi is too large
        if q < target:
            phi_max = phi
        else:
            phi_min = phi
    phi = 0.5 * (phi_min + phi_max)
    return phi, _constrained_mu(n, phi, eps_mu)


def genie_optimal(
    n: int, chain: EhChain, eps_phi: float = EPS_PHI, eps_mu: float = EPS_MU
) -> GeniePolicy:
    """Throughput-optimal policy when the active count is known."""
    if n < 1:
        raise ValueError(f"node count must be >= 1, got {n}")
    chain.require_no_low_harvest()
    if not chain.lambda_h > 0.0:
        raise ValueError(f"lambda_h must be > 0, got {chain.lambda_h}")

    low_thr = single_active_threshold(n, chain)
    if chain.lambda_h <= low_thr:
        mu = np.zeros(n)
        mu[0] = chain.lambda_h / low_thr
        return GeniePolicy(n, mu, Regime.SINGLE_ACTIVE)
    if chain.lambda_h >= lambda_h_max(n, chain):
        return GeniePolicy(n, 1.0 / np.arange(1, n + 1), Regime.UNCONSTRAINED)

    phi, mu = solve_phi(n, chain, eps_phi, eps_mu)
    if not (0.0 < phi < 1.0 and np.all(mu[1:] > 0.0)):
        raise SolverError(f"phi bisection degenerated (phi={phi}) at lambda_h={chain.lambda_h}")
    return GeniePolicy(n, mu, Regime.CONSTRAINED, phi)


def zero_policy(n: int) -> GeniePolicy:
    """Never transmit; the limit of the single-active regime as lambda_h -> 0."""
    return GeniePolicy(n, np.zeros(n), Regime.SINGLE_ACTIVE)
