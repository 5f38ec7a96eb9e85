"""Slot-level Monte Carlo of the energy-harvesting random access network.

Two evaluation modes are supported.  ``IDEALIZED`` nodes are only bound by the
average power constraint, so any intended transmission goes through.
``BATTERY`` nodes store energy in integer quanta (one quantum pays for one
transmission); an H-state node harvests one quantum per slot with probability
``lambda_h / p_tx``, intents on an empty battery are dropped (outage) and
quanta arriving at a full battery are lost (overflow).

Random numbers come from a counter-based generator: every draw is a hash of
the replication key and its (slot, node, purpose) coordinates, so a
replication's trajectory does not depend on how replications are scheduled.
"""

from __future__ import annotations

import enum
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .bayes import belief_init
from .markov import EhChain, count_kernel
from .policies import GeniePolicy, genie_optimal, local_optimal, zero_policy


class Scheme(str, enum.Enum):
    LOCAL = "local"
    GENIE = "genie"
    BAYESIAN = "bayesian"


class Mode(str, enum.Enum):
    IDEALIZED = "idealized"
    BATTERY = "battery"


_SCHEME_CODE = {Scheme.LOCAL: 0, Scheme.GENIE: 1, Scheme.BAYESIAN: 2}

# draw-purpose tags
_TX, _HARVEST, _EH, _INIT = 0, 1, 2, 3
_N_PURPOSES = 4

_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_TWO_M53 = 1.0 / 9007199254740992.0


@njit(inline="always")
def _mix64(z):
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


@njit(inline="always")
def _uniform(key, slot, n, node, purpose):
    counter = np.uint64((slot * n + node) * _N_PURPOSES + purpose)
    return (_mix64(key + counter * _GAMMA) >> np.uint64(11)) * _TWO_M53


@njit(cache=True)
def _uniform_nb(key, slot, n, node, purpose):
    return _uniform(key, slot, n, node, purpose)


def uniform_draw(key: int, slot: int, n: int, node: int, purpose: int) -> float:
    """Python-callable access to a single draw of the counter generator."""
    return float(_uniform_nb(np.uint64(key), slot, n, node, purpose))


@njit(nogil=True, cache=True)
def control_mu_nb(belief, genie_by_count):
    num = 0.0
    den = 0.0
    for m in range(1, belief.size):
        w = belief[m] * m
        num += w * genie_by_count[m]
        den += w
    if den < 1e-300:
        return 0.0
    return num / den


@njit(nogil=True, cache=True)
def belief_step_nb(belief, mu, t, kernel, comb, prior, out):
    """Filter update written for the compiled loop; returns True on a reset."""
    size = belief.size
    weighted = np.zeros(size)
    evidence = 0.0
    hit = mu**t
    miss = 1.0
    for m in range(t, size):
        w = belief[m] * comb[m, t] * hit * miss
        weighted[m] = w
        evidence += w
        miss *= 1.0 - mu
    reset = evidence < 1e-300
    if reset:
        for m in range(size):
            weighted[m] = prior[m]
        evidence = 1.0
    total = 0.0
    for m in range(size):
        out[m] = 0.0
    for mp in range(size):
        w = weighted[mp] / evidence
        if w == 0.0:
            continue
        for m in range(size):
            out[m] += w * kernel[mp, m]
    for m in range(size):
        total += out[m]
    for m in range(size):
        out[m] /= total
    return reset


@njit(nogil=True, cache=True)
def _replication(
    key, n, p_h, p_l, pi_h, harvest_p, scheme, battery_mode, e_max, slots, burn_in,
    local_mu, genie_by_count, kernel, comb, prior,
):
    eh = np.zeros(n, dtype=np.bool_)
    battery = np.zeros(n, dtype=np.int64)
    harvested = np.zeros(n, dtype=np.int64)
    consumed = np.zeros(n, dtype=np.int64)
    spilled = np.zeros(n, dtype=np.int64)
    for i in range(n):
        eh[i] = _uniform(key, 0, n, i, _INIT) < pi_h
        battery[i] = e_max // 2
    initial = battery.copy()

    belief = prior.copy()
    scratch = np.empty_like(prior)
    successes = 0
    tx_total = 0
    h_slots = 0
    outages = 0
    overflow = 0
    resets = 0
    mu_k = 0.0

    for k in range(slots):
        measuring = k >= burn_in
        nh = 0
        for i in range(n):
            if eh[i]:
                nh += 1
        if scheme == 2:
            mu_k = control_mu_nb(belief, genie_by_count)
        if scheme == 0:
            q = local_mu
        elif scheme == 1:
            q = genie_by_count[nh]
        else:
            q = mu_k

        t = 0
        if q > 0.0:
            for i in range(n):
                if eh[i] and _uniform(key, k, n, i, _TX) < q:
                    if battery_mode and battery[i] == 0:
                        if measuring:
                            outages += 1
                    else:
                        t += 1
                        if battery_mode:
                            battery[i] -= 1
                            consumed[i] += 1

        if battery_mode:
            for i in range(n):
                if eh[i] and _uniform(key, k, n, i, _HARVEST) < harvest_p:
                    harvested[i] += 1
                    if battery[i] < e_max:
                        battery[i] += 1
                    else:
                        spilled[i] += 1
                        if measuring:
                            overflow += 1

        for i in range(n):
            u = _uniform(key, k, n, i, _EH)
            if eh[i]:
                if u < p_l:
                    eh[i] = False
            elif u < p_h:
                eh[i] = True

        if scheme == 2:
            if belief_step_nb(belief, mu_k, t, kernel, comb, prior, scratch):
                resets += 1
            belief, scratch = scratch, belief

        if measuring:
            h_slots += nh
            tx_total += t
            if t == 1:
                successes += 1

    return (successes, tx_total, h_slots, outages, overflow, resets,
            harvested, consumed, spilled, initial, battery)


@dataclass(frozen=True)
class SimConfig:
    n: int
    chain: EhChain
    scheme: Scheme = Scheme.LOCAL
    mode: Mode = Mode.IDEALIZED
    e_max: int = 0
    slots: int = 100_000
    burn_in: int | None = None
    seed: int = 0
    replications: int = 10

    def __post_init__(self):
        object.__setattr__(self, "scheme", Scheme(self.scheme))
        object.__setattr__(self, "mode", Mode(self.mode))
        if self.burn_in is None:
            object.__setattr__(self, "burn_in", default_burn_in(self.chain))
        if self.n < 1:
            raise ValueError(f"node count must be >= 1, got {self.n}")
        if not self.slots > self.burn_in >= 0:
            raise ValueError(f"need slots > burn_in >= 0, got slots={self.slots}, burn_in={self.burn_in}")
        if self.replications < 1:
            raise ValueError("need at least one replication")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        if self.mode is Mode.BATTERY:
            if self.e_max < 1:
                raise ValueError(f"battery mode needs e_max >= 1 quantum, got {self.e_max}")
            if self.chain.lambda_h > self.chain.p_tx:
                raise ValueError("battery mode needs lambda_h <= p_tx (one quantum per slot at most)")


def default_burn_in(chain: EhChain) -> int:
    """About ten mixing times of the harvesting chain."""
    return math.ceil(10.0 / (chain.p_h + chain.p_l))


@dataclass
class ReplicationResult:
    successes: int
    transmissions: int
    h_slots: int
    outages: int
    overflow: int
    resets: int
    measured_slots: int
    harvested: np.ndarray
    consumed: np.ndarray
    spilled: np.ndarray
    initial_battery: np.ndarray
    final_battery: np.ndarray

    @property
    def throughput(self) -> float:
        return self.successes / self.measured_slots

    @property
    def h_transmit_rate(self) -> float:
        return self.transmissions / self.h_slots if self.h_slots else 0.0


@dataclass
class SimReport:
    """Replication-averaged measurements; stderr is taken across replications."""

    throughput: float
    throughput_stderr: float
    power_h: float
    power_h_stderr: float
    outage_events: int
    overflow_quanta: int
    zero_evidence_resets: int
    measured_node_slots: int
    throughput_reps: list[float] = field(default_factory=list)
    power_h_reps: list[float] = field(default_factory=list)

    @property
    def outage_rate(self) -> float:
        return self.outage_events / self.measured_node_slots

    @property
    def overflow_rate(self) -> float:
        return self.overflow_quanta / self.measured_node_slots


def replication_key(seed: int, rep: int) -> int:
    return int(np.random.SeedSequence([seed, rep]).generate_state(1, np.uint64)[0])


def scheme_policy(config: SimConfig) -> tuple[float, GeniePolicy]:
    """Local probability and count-indexed genie policy used by the schemes."""
    chain = config.chain
    local = local_optimal(config.n, chain).mu_h
    if config.scheme is Scheme.LOCAL:
        return local, zero_policy(config.n)
    if chain.lambda_h == 0.0:
        return local, zero_policy(config.n)
    return local, genie_optimal(config.n, chain)


def run_replication(config: SimConfig, rep: int, genie: GeniePolicy | None = None) -> ReplicationResult:
    chain = config.chain
    local, default_genie = scheme_policy(config)
    genie = default_genie if genie is None else genie
    n = config.n
    kernel = count_kernel(n, chain).matrix
    comb = np.array([[math.comb(m, t) for t in range(n + 1)] for m in range(n + 1)], dtype=float)
    prior = belief_init(n, chain)
    battery_mode = config.mode is Mode.BATTERY
    out = _replication(
        np.uint64(replication_key(config.seed, rep)), n, chain.p_h, chain.p_l, chain.pi_h,
        chain.lambda_h / chain.p_tx, _SCHEME_CODE[config.scheme], battery_mode,
        config.e_max if battery_mode else 0, config.slots, config.burn_in,
        local, genie.by_count(), np.ascontiguousarray(kernel), comb, prior,
    )
    return ReplicationResult(*out[:6], config.slots - config.burn_in, *out[6:])


def _stderr(values: np.ndarray) -> float:
    if values.size < 2:
        return float("nan")
    return float(values.std(ddof=1) / math.sqrt(values.size))


def run(config: SimConfig, workers: int | None = None) -> SimReport:
    """Run all replications and aggregate them in replication order."""
    _, genie = scheme_policy(config)
    workers = workers or os.cpu_count() or 1
    reps = range(config.replications)
    if workers == 1 or config.replications == 1:
        results = [run_replication(config, r, genie) for r in reps]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda r: run_replication(config, r, genie), reps))

    thr = np.array([r.throughput for r in results])
    pwr = config.chain.p_tx * np.array([r.h_transmit_rate for r in results])
    return SimReport(
        throughput=float(thr.mean()),
        throughput_stderr=_stderr(thr),
        power_h=float(pwr.mean()),
        power_h_stderr=_stderr(pwr),
        outage_events=sum(r.outages for r in results),
        overflow_quanta=sum(r.overflow for r in results),
        zero_evidence_resets=sum(r.resets for r in results),
        measured_node_slots=config.n * sum(r.measured_slots for r in results),
        throughput_reps=thr.tolist(),
        power_h_reps=pwr.tolist(),
    )


def measure_power_constraint(report: SimReport, chain: EhChain) -> bool:
    """Whether the measured H-state power respects ``lambda_h`` up to 3 stderr."""
    se = report.power_h_stderr if math.isfinite(report.power_h_stderr) else 0.0
    return report.power_h <= chain.lambda_h + 3.0 * se
