"""Energy-aware random access for energy-harvesting nodes sharing one channel."""

from .markov import EhChain, CountKernel, steady_state, sample_next_eh, count_kernel, binomial_pmf
from .policies import (
    GeniePolicy,
    LocalPolicy,
    Regime,
    SolverError,
    genie_optimal,
    genie_qbar,
    genie_rbar,
    instantaneous_throughput,
    lambda_h_max,
    local_optimal,
    local_throughput,
    single_active_threshold,
    solve_mu_given_phi,
    solve_phi,
)
from .bayes import (
    BayesController,
    ZeroEvidenceError,
    belief_init,
    belief_update,
    control_mu,
    expected_throughput_belief,
    obs_likelihood,
)

__version__ = "0.1.0"
