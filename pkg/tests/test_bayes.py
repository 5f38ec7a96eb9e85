import math

import numpy as np
import pytest

from ehaccess.bayes import (
    BayesController,
    ZeroEvidenceError,
    belief_init,
    belief_update,
    control_mu,
    expected_throughput_belief,
    likelihood_vector,
    obs_likelihood,
)
from ehaccess.markov import EhChain, binomial_row, count_kernel
from ehaccess.oracle import joint_filter_step, marginal_counts, stationary_joint
from ehaccess.policies import GeniePolicy, Regime, genie_optimal, lambda_h_max

BASE = EhChain(4e-3, 20e-3, lambda_h=0.15)


def simulate_counts(n, chain, mu_fn, slots, rng):
    """Ground-truth network trajectory; yields (mu, t) as the gateway sees them."""
    active = rng.random(n) < chain.pi_h
    for _ in range(slots):
        mu = mu_fn()
        t = int(np.sum(active & (rng.random(n) < mu)))
        yield mu, t
        u = rng.random(n)
        active = np.where(active, u >= chain.p_l, u < chain.p_h)


class TestPieces:
    def test_prior_reference(self):
        prior = belief_init(20, BASE)
        assert prior[0] == pytest.approx((5 / 6) ** 20, abs=1e-15)
        assert prior.sum() == pytest.approx(1.0, abs=1e-15)

    def test_prior_two_nodes(self):
        assert np.allclose(belief_init(2, EhChain(0.1, 0.1, 1.0)), [0.25, 0.5, 0.25], atol=1e-15)

    @pytest.mark.parametrize(
        "t,mu,m,expected",
        [(0, 0.3, 2, 0.49), (1, 0.3, 2, 0.42), (2, 0.3, 2, 0.09), (3, 0.3, 2, 0.0), (0, 0.0, 5, 1.0)],
    )
    def test_likelihood_examples(self, t, mu, m, expected):
        assert obs_likelihood(t, mu, m) == pytest.approx(expected, abs=1e-15)

    def test_likelihood_vector(self):
        v = likelihood_vector(1, 0.3, 3)
        assert np.allclose(v, [0.0, 0.3, 0.42, 3 * 0.3 * 0.49], atol=1e-15)

    def test_control_unconstrained_closed_form(self):
        # with mu*(m) = 1/m the power-weighted average is P(m>=1) / E[m]
        n = 10
        genie = GeniePolicy(n, 1.0 / np.arange(1, n + 1), Regime.UNCONSTRAINED)
        belief = belief_init(n, BASE)
        m = np.arange(n + 1)
        assert control_mu(belief, genie) == pytest.approx((1 - belief[0]) / (belief @ m), abs=1e-14)

    def test_control_point_mass(self):
        genie = genie_optimal(20, BASE)
        belief = np.zeros(21)
        belief[7] = 1.0
        assert control_mu(belief, genie) == pytest.approx(genie.mu[6], abs=1e-15)

    def test_control_empty_network(self):
        genie = genie_optimal(4, BASE)
        assert control_mu(np.array([1.0, 0, 0, 0, 0]), genie) == 0.0

    def test_expected_throughput(self):
        belief = np.array([0.25, 0.5, 0.25])
        assert expected_throughput_belief(belief, 0.5) == pytest.approx(0.5 * 0.5 + 0.25 * 0.5, abs=1e-15)


class TestUpdate:
    def test_full_power_reveals_count(self):
        kernel = count_kernel(6, BASE)
        out = belief_update(belief_init(6, BASE), 1.0, 4, kernel)
        assert np.max(np.abs(out - kernel.matrix[4])) <= 1e-15

    def test_silent_slot_is_pure_prediction(self):
        kernel = count_kernel(6, BASE)
        b = np.random.default_rng(0).dirichlet(np.ones(7))
        assert np.max(np.abs(belief_update(b, 0.0, 0, kernel) - b @ kernel.matrix)) <= 1e-15

    def test_impossible_observation_raises(self):
        kernel = count_kernel(3, BASE)
        with pytest.raises(ZeroEvidenceError):
            belief_update(belief_init(3, BASE), 0.0, 2, kernel)
        b = np.array([1.0, 0.0, 0.0, 0.0])
        with pytest.raises(ZeroEvidenceError):
            belief_update(b, 0.5, 1, kernel)

    def test_rejects_bad_inputs(self):
        kernel = count_kernel(3, BASE)
        with pytest.raises(ValueError):
            belief_update(belief_init(3, BASE), 0.5, 4, kernel)
        with pytest.raises(ValueError):
            belief_update(belief_init(3, BASE), 1.5, 1, kernel)

    @pytest.mark.parametrize("n", [1, 2, 3, 4])
    def test_matches_joint_filter(self, n):
        rng = np.random.default_rng(100 + n)
        chain = EhChain(0.07, 0.11, 0.3)
        genie = genie_optimal(n, chain)
        kernel = count_kernel(n, chain)
        belief = belief_init(n, chain)
        joint = stationary_joint(n, chain)
        state = {"b": belief}
        for mu, t in simulate_counts(n, chain, lambda: control_mu(state["b"], genie), 200, rng):
            state["b"] = belief_update(state["b"], mu, t, kernel)
            joint = joint_filter_step(joint, chain, mu, t)
            assert np.max(np.abs(state["b"] - marginal_counts(joint, n))) <= 1e-10

    def test_converges_to_stationary_without_information(self):
        n = 20
        kernel = count_kernel(n, BASE)
        b = np.zeros(n + 1)
        b[n] = 1.0
        for _ in range(math.ceil(10 / (BASE.p_h + BASE.p_l))):
            b = belief_update(b, 0.0, 0, kernel)
        assert np.max(np.abs(b - binomial_row(n, BASE.pi_h))) <= 1e-4
        for _ in range(5000):
            b = belief_update(b, 0.0, 0, kernel)
        assert np.max(np.abs(b - binomial_row(n, BASE.pi_h))) <= 1e-8


class TestController:
    def test_long_run_stays_a_distribution_and_is_deterministic(self):
        n = 20
        chain = BASE.with_lambda_h(0.1)
        runs = []
        for _ in range(2):
            ctrl = BayesController(n, chain, genie_optimal(n, chain))
            rng = np.random.default_rng(42)
            worst = 0.0
            trace = []
            for i, (mu, t) in enumerate(simulate_counts(n, chain, ctrl.select, 100_000, rng)):
                b = ctrl.observe(t)
                if i % 97 == 0:
                    worst = max(worst, abs(b.sum() - 1.0))
                    assert b.min() >= 0.0
                trace.append(mu)
            assert worst <= 1e-12
            runs.append((np.array(trace), ctrl.belief.copy()))
        assert np.array_equal(runs[0][0], runs[1][0])
        assert np.array_equal(runs[0][1], runs[1][1])

    def test_zero_evidence_resets_to_predicted_prior(self):
        chain = EhChain(0.1, 0.1, 0.5)
        ctrl = BayesController(3, chain, genie_optimal(3, chain))
        ctrl.belief = np.array([1.0, 0.0, 0.0, 0.0])
        ctrl.select()
        out = ctrl.observe(2)
        assert ctrl.zero_evidence_resets == 1
        assert np.allclose(out, ctrl.prior @ ctrl.kernel.matrix, atol=1e-15)

    def test_rejects_mismatched_policy(self):
        with pytest.raises(ValueError):
            BayesController(5, BASE, genie_optimal(4, BASE))

    def test_power_matching(self):
        # expected network power under the belief equals the genie's
        n = 8
        chain = BASE.with_lambda_h(0.5 * lambda_h_max(n, BASE))
        genie = genie_optimal(n, chain)
        b = np.random.default_rng(3).dirichlet(np.ones(n + 1))
        mu = control_mu(b, genie)
        m = np.arange(1, n + 1)
        assert b[1:] @ (m * mu) == pytest.approx(b[1:] @ (m * genie.mu), abs=1e-14)
