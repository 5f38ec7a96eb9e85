"""Two-state (L/H) harvesting chain and the induced active-count process."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln

LOW = "L"
HIGH = "H"


@dataclass(frozen=True)
class EhChain:
    """Per-node Markov harvesting model.

    ``p_h`` is the L->H switching probability per slot and ``p_l`` the H->L one.
    ``lambda_h`` / ``lambda_l`` are the mean harvested powers in each state and
    ``p_tx`` is the transmission power, all in the same power units.
    """

    p_h: float
    p_l: float
    lambda_h: float
    lambda_l: float = 0.0
    p_tx: float = 1.0
    pi_h: float = field(init=False, repr=False, compare=False)
    pi_l: float = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not (0.0 < self.p_h and 0.0 < self.p_l and self.p_h + self.p_l < 1.0):
            raise ValueError(
                f"need 0 < p_h, 0 < p_l and p_h + p_l < 1, got p_h={self.p_h}, p_l={self.p_l}"
            )
        if not self.lambda_l >= 0.0:
            raise ValueError(f"lambda_l must be >= 0, got {self.lambda_l}")
        # lambda_h == lambda_l is tolerated so that the degenerate no-harvest
        # network (lambda_h = 0) can still be simulated.
        if not self.lambda_h >= self.lambda_l:
            raise ValueError(
                f"lambda_h must be >= lambda_l, got {self.lambda_h} < {self.lambda_l}"
            )
        if not self.p_tx > 0.0:
            raise ValueError(f"p_tx must be > 0, got {self.p_tx}")
        pi_h = self.p_h / (self.p_h + self.p_l)
        object.__setattr__(self, "pi_h", pi_h)
        object.__setattr__(self, "pi_l", 1.0 - pi_h)

    def require_no_low_harvest(self) -> None:
        if self.lambda_l != 0.0:
            raise ValueError("policy solvers only support lambda_l = 0")

    def with_lambda_h(self, lambda_h: float) -> "EhChain":
        return EhChain(self.p_h, self.p_l, lambda_h, self.lambda_l, self.p_tx)


def steady_state(chain: EhChain) -> tuple[float, float]:
    """Stationary probabilities ``(pi_H, pi_L)``; they sum to exactly one."""
    return chain.pi_h, chain.pi_l


def sample_next_eh(state: str, chain: EhChain, u: float) -> str:
    """Next harvesting state given a uniform draw ``u`` in [0, 1)."""
    if state == LOW:
        return HIGH if u < chain.p_h else LOW
    if state == HIGH:
        return LOW if u < chain.p_l else HIGH
    raise ValueError(f"unknown harvesting state {state!r}")


def binomial_pmf(k: int, n: int, p: float) -> float:
    """``C(n, k) p^k (1-p)^(n-k)``, evaluated in the log domain."""
    if k < 0 or k > n:
        raise ValueError(f"need 0 <= k <= n, got k={k}, n={n}")
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0, 1], got {p}")
    if p == 0.0:
        return 1.0 if k == 0 else 0.0
    if p == 1.0:
        return 1.0 if k == n else 0.0
    log_c = math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1)
    return math.exp(log_c + k * math.log(p) + (n - k) * math.log1p(-p))


def binomial_row(n: int, p: float) -> np.ndarray:
    """Vector of ``binomial_pmf(k, n, p)`` for ``k = 0..n``."""
    k = np.arange(n + 1)
    if p == 0.0 or p == 1.0:
        row = np.zeros(n + 1)
        row[0 if p == 0.0 else n] = 1.0
        return row
    log_c = gammaln(n + 1) - gammaln(k + 1) - gammaln(n - k + 1)
    return np.exp(log_c + k * math.log(p) + (n - k) * math.log1p(-p))


@dataclass(frozen=True, eq=False)
class CountKernel:
    """Transition matrix of the number of H-state nodes.

    ``matrix[m_prev, m]`` is the probability of ``m`` active nodes in the next
    slot given ``m_prev`` in the current one.
    """

    n: int
    matrix: np.ndarray

    def stationary(self) -> np.ndarray:
        """Left eigenvector for eigenvalue one, normalised to a distribution."""
        size = self.n + 1
        a = self.matrix.T - np.eye(size)
        a[-1, :] = 1.0
        b = np.zeros(size)
        b[-1] = 1.0
        return np.linalg.solve(a, b)


def count_kernel(n: int, chain: EhChain) -> CountKernel:
    """Build the active-count kernel for ``n`` i.i.d. nodes.

    Going from ``m_prev`` to ``m`` active nodes, ``x`` of the ``m_prev`` active
    nodes drop to L and ``y = x + m - m_prev`` of the idle ones switch to H.
    Summing over ``x`` is the convolution of the two independent binomial laws
    (survivors among the active, newcomers among the idle).
    """
    if n < 1:
        raise ValueError(f"node count must be >= 1, got {n}")
    matrix = np.empty((n + 1, n + 1))
    for m_prev in range(n + 1):
        stay = binomial_row(m_prev, 1.0 - chain.p_l)
        arrive = binomial_row(n - m_prev, chain.p_h)
        row = np.convolve(stay, arrive)
        matrix[m_prev] = row / row.sum()
    matrix.setflags(write=False)
    return CountKernel(n, matrix)
