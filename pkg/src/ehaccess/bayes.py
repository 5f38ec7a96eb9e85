"""Gateway-side estimation of the number of active nodes.

The gateway never sees which nodes are active.  It only counts how many nodes
attempted a transmission in each slot, and keeps a posterior (belief) over the
active count.  The broadcast probability is chosen so that the expected network
power under the belief matches the genie-aided policy.
"""

from __future__ import annotations

import logging

import numpy as np

from .markov import CountKernel, EhChain, binomial_pmf, binomial_row, count_kernel
from .policies import GeniePolicy

log = logging.getLogger(__name__)

ZERO_EVIDENCE_FLOOR = 1e-300


class ZeroEvidenceError(ArithmeticError):
    """The observed transmitter count has (numerically) zero probability."""


def belief_init(n: int, chain: EhChain) -> np.ndarray:
    """Stationary binomial(n, pi_H) prior over the active count."""
    if n < 1:
        raise ValueError(f"node count must be >= 1, got {n}")
    prior = binomial_row(n, chain.pi_h)
    return prior / prior.sum()


def obs_likelihood(t: int, mu: float, m: int) -> float:
    """Probability that ``t`` of ``m`` active nodes transmit with probability ``mu``."""
    if t < 0 or m < 0:
        raise ValueError(f"counts must be non-negative, got t={t}, m={m}")
    if t > m:
        return 0.0
    return binomial_pmf(t, m, mu)


def likelihood_vector(t: int, mu: float, n: int) -> np.ndarray:
    """``obs_likelihood(t, mu, m)`` for every ``m = 0..n``."""
    out = np.zeros(n + 1)
    for m in range(t, n + 1):
        out[m] = binomial_pmf(t, m, mu)
    return out


def belief_update(
    belief: np.ndarray, mu: float, t: int, kernel: CountKernel
) -> np.ndarray:
    """One filtering step: condition on ``t`` transmitters, then propagate.

    Raises ``ZeroEvidenceError`` when ``t`` is impossible under ``belief``.
    """
    n = kernel.n
    if not 0 <= t <= n:
        raise ValueError(f"observed count must lie in [0, {n}], got {t}")
    if not 0.0 <= mu <= 1.0:
        raise ValueError(f"mu must lie in [0, 1], got {mu}")
    weighted = belief * likelihood_vector(t, mu, n)
    evidence = weighted.sum()
    if evidence < ZERO_EVIDENCE_FLOOR:
        raise ZeroEvidenceError(f"observation t={t} under mu={mu} has zero probability")
    predicted = (weighted / evidence) @ kernel.matrix
    return predicted / predicted.sum()


def control_mu(belief: np.ndarray, genie: GeniePolicy) -> float:
    """Broadcast probability matching the genie's expected network power."""
    m = np.arange(1, genie.n + 1)
    mass = belief[1:] * m
    denom = mass.sum()
    if denom < ZERO_EVIDENCE_FLOOR:
        return 0.0
    return float(mass @ genie.mu / denom)


def expected_throughput_belief(belief: np.ndarray, mu: float) -> float:
    n = belief.size - 1
    m = np.arange(1, n + 1)
    return float(belief[1:] @ (m * mu * (1.0 - mu) ** (m - 1)))


class BayesController:
    """Belief tracker that picks ``mu_k`` before each slot and learns from ``t_k``.

    Call :meth:`select` at the start of a slot, broadcast the result, then feed
    the observed number of transmitters to :meth:`observe`.
    """

    def __init__(self, n: int, chain: EhChain, genie: GeniePolicy):
        if genie.n != n:
            raise ValueError(f"genie policy is for {genie.n} nodes, expected {n}")
        self.kernel = count_kernel(n, chain)
        self.genie = genie
        self.prior = belief_init(n, chain)
        self.belief = self.prior.copy()
        self.last_mu = 0.0
        self.zero_evidence_resets = 0

    def select(self) -> float:
        self.last_mu = control_mu(self.belief, self.genie)
        return self.last_mu

    def observe(self, t: int) -> np.ndarray:
        try:
            self.belief = belief_update(self.belief, self.last_mu, t, self.kernel)
        except ZeroEvidenceError:
            self.zero_evidence_resets += 1
            log.debug("zero evidence for t=%d, resetting belief to the prior", t)
            self.belief = self.prior @ self.kernel.matrix
        return self.belief
