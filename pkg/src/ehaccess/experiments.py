"""Parameter sweeps producing the throughput-vs-harvest and throughput-vs-battery tables."""

from __future__ import annotations

import numpy as np

from .markov import EhChain
from .policies import genie_optimal, genie_rbar, lambda_h_max, local_optimal, local_throughput
from .sim import Mode, Scheme, SimConfig, SimReport, run

_SHORT = {Scheme.LOCAL: "local", Scheme.GENIE: "genie", Scheme.BAYESIAN: "bayes"}


def lambda_grid(n: int, chain: EhChain, points: int) -> np.ndarray:
    """``points`` evenly spaced harvest levels in ``(0, lambda_H_max]``."""
    if points < 1:
        raise ValueError(f"need at least one grid point, got {points}")
    top = lambda_h_max(n, chain)
    return top * np.arange(1, points + 1) / points


def _sim(n, chain, scheme, mode, sim_kwargs, e_max=0) -> SimReport:
    return run(SimConfig(n, chain, scheme, mode, e_max=e_max, **sim_kwargs))


def sweep_lambda(n: int, chain: EhChain, points: int, **sim_kwargs) -> list[dict]:
    """Analytic and simulated throughput of the three schemes over the harvest grid.

    ``sim_kwargs`` are forwarded to :class:`SimConfig` (slots, burn_in, seed,
    replications).
    """
    rows = []
    for lam in lambda_grid(n, chain, points):
        c = chain.with_lambda_h(float(lam))
        local = local_optimal(n, c)
        genie = genie_optimal(n, c)
        row = {
            "lambda_H": float(lam),
            "pi_H_lambda_H": c.pi_h * float(lam),
            "regime": genie.regime.value,
            "phi": genie.phi,
            "R_local_analytic": local_throughput(n, c.pi_h * local.mu_h),
            "R_genie_analytic": genie_rbar(genie, c),
        }
        for scheme in Scheme:
            rep = _sim(n, c, scheme, Mode.IDEALIZED, sim_kwargs)
            tag = _SHORT[scheme]
            row[f"R_{tag}_mc"] = rep.throughput
            row[f"R_{tag}_mc_stderr"] = rep.throughput_stderr
            row[f"power_h_{tag}"] = rep.power_h
            row[f"power_h_{tag}_stderr"] = rep.power_h_stderr
        rows.append(row)
    return rows


def sweep_battery(n: int, chain: EhChain, e_max_values, **sim_kwargs) -> list[dict]:
    """Battery-constrained versus idealized throughput for each battery size."""
    ideal = {s: _sim(n, chain, s, Mode.IDEALIZED, sim_kwargs) for s in Scheme}
    rows = []
    for e_max in e_max_values:
        row = {"e_max_quanta": int(e_max)}
        for scheme in Scheme:
            tag = _SHORT[scheme]
            bat = _sim(n, chain, scheme, Mode.BATTERY, sim_kwargs, e_max=int(e_max))
            row[f"R_{tag}_battery"] = bat.throughput
            row[f"R_{tag}_battery_stderr"] = bat.throughput_stderr
            row[f"R_{tag}_ideal"] = ideal[scheme].throughput
            row[f"R_{tag}_ideal_stderr"] = ideal[scheme].throughput_stderr
            row[f"outage_rate_{tag}"] = bat.outage_rate
            row[f"overflow_rate_{tag}"] = bat.overflow_rate
        rows.append(row)
    return rows
