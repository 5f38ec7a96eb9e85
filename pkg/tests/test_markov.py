import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ehaccess.markov import (
    HIGH,
    LOW,
    EhChain,
    binomial_pmf,
    binomial_row,
    count_kernel,
    sample_next_eh,
    steady_state,
)
from ehaccess.oracle import successor_count_law

BASE_CHAIN = EhChain(p_h=4e-3, p_l=20e-3, lambda_h=1.0)


@st.composite
def chains(draw):
    p_h = draw(st.floats(0.001, 0.9))
    p_l = draw(st.floats(0.001, 0.999 - p_h))
    return EhChain(p_h, p_l, lambda_h=0.5)


class TestChain:
    def test_reference_steady_state(self):
        pi_h, pi_l = steady_state(BASE_CHAIN)
        assert pi_h == pytest.approx(1 / 6, abs=1e-15)
        assert pi_h + pi_l == 1.0

    @pytest.mark.parametrize("p_h,p_l,expected", [(0.1, 0.1, 0.5), (0.3, 0.1, 0.75)])
    def test_simple_steady_states(self, p_h, p_l, expected):
        assert steady_state(EhChain(p_h, p_l, 1.0))[0] == pytest.approx(expected, abs=1e-15)

    @given(chains())
    def test_steady_state_is_stationary(self, chain):
        pi = np.array(steady_state(chain)[::-1])  # (L, H)
        p = np.array([[1 - chain.p_h, chain.p_h], [chain.p_l, 1 - chain.p_l]])
        assert np.max(np.abs(pi @ p - pi)) <= 1e-15

    @pytest.mark.parametrize(
        "kwargs",
        [
            dict(p_h=0.0, p_l=0.1, lambda_h=1.0),
            dict(p_h=0.5, p_l=0.5, lambda_h=1.0),
            dict(p_h=0.1, p_l=0.1, lambda_h=0.2, lambda_l=0.3),
            dict(p_h=0.1, p_l=0.1, lambda_h=1.0, p_tx=0.0),
        ],
    )
    def test_invalid_chain_rejected(self, kwargs):
        with pytest.raises(ValueError):
            EhChain(**kwargs)

    def test_sample_next_eh_thresholds(self):
        assert sample_next_eh(LOW, BASE_CHAIN, 0.003) == HIGH
        assert sample_next_eh(LOW, BASE_CHAIN, 0.004) == LOW
        assert sample_next_eh(HIGH, BASE_CHAIN, 0.5) == HIGH
        assert sample_next_eh(HIGH, BASE_CHAIN, 0.019) == LOW

    def test_sample_next_eh_frequency(self):
        rng = np.random.default_rng(1)
        draws = rng.random(10**6)
        switched = sum(sample_next_eh(HIGH, BASE_CHAIN, u) == LOW for u in draws)
        sigma = math.sqrt(10**6 * 0.02 * 0.98)
        assert abs(switched - 0.02 * 10**6) <= 3 * sigma


class TestBinomial:
    def test_edges(self):
        assert binomial_pmf(0, 5, 0.0) == 1.0
        assert binomial_pmf(2, 2, 0.5) == 0.25
        assert binomial_pmf(3, 3, 1.0) == 1.0

    def test_rejects_k_above_n(self):
        with pytest.raises(ValueError):
            binomial_pmf(3, 2, 0.5)

    def test_normalisation(self):
        assert sum(binomial_pmf(k, 20, 1 / 6) for k in range(21)) == pytest.approx(1.0, abs=1e-12)

    def test_large_n_is_finite(self):
        total = sum(binomial_pmf(k, 1000, 0.3) for k in range(1001))
        assert total == pytest.approx(1.0, abs=1e-10)
        assert binomial_pmf(300, 1000, 0.3) == pytest.approx(
            math.comb(1000, 300) * 0.3**300 * 0.7**700, rel=1e-10
        )

    def test_row_matches_scalar(self):
        row = binomial_row(30, 0.21)
        assert np.allclose(row, [binomial_pmf(k, 30, 0.21) for k in range(31)], rtol=1e-12)


class TestCountKernel:
    def test_single_node(self):
        k = count_kernel(1, BASE_CHAIN).matrix
        assert k[1, 0] == pytest.approx(0.02, abs=1e-15)
        assert k[1, 1] == pytest.approx(0.98, abs=1e-15)
        assert k[0, 1] == pytest.approx(0.004, abs=1e-15)

    def test_two_nodes_single_term(self):
        c = EhChain(0.13, 0.07, 1.0)
        assert count_kernel(2, c).matrix[1, 2] == pytest.approx((1 - 0.07) * 0.13, abs=1e-15)

    def test_rejects_empty_network(self):
        with pytest.raises(ValueError):
            count_kernel(0, BASE_CHAIN)

    @pytest.mark.parametrize("n", [1, 2, 3, 5, 8, 10])
    def test_matches_joint_enumeration(self, n):
        rng = np.random.default_rng(n)
        for _ in range(5):
            p_h, p_l = rng.uniform(0.01, 0.49, size=2)
            chain = EhChain(p_h, p_l, 1.0)
            kernel = count_kernel(n, chain).matrix
            for m_prev in range(n + 1):
                config = (1 << m_prev) - 1  # first m_prev nodes active
                law = successor_count_law(n, chain, config)
                assert np.max(np.abs(kernel[m_prev] - law)) <= 1e-12

    def test_representative_configuration_is_irrelevant(self):
        chain = EhChain(0.2, 0.3, 1.0)
        a = successor_count_law(5, chain, 0b00111)
        b = successor_count_law(5, chain, 0b10101)
        assert np.max(np.abs(a - b)) <= 1e-15

    @settings(max_examples=100, deadline=None)
    @given(chains(), st.integers(1, 64))
    def test_rows_are_stochastic(self, chain, n):
        kernel = count_kernel(n, chain).matrix
        assert np.all((kernel >= 0.0) & (kernel <= 1.0))
        assert np.max(np.abs(kernel.sum(axis=1) - 1.0)) <= 1e-12

    def test_all_sizes_up_to_64(self):
        rng = np.random.default_rng(3)
        for n in range(1, 65):
            p_h, p_l = rng.uniform(0.001, 0.499, size=2)
            kernel = count_kernel(n, EhChain(p_h, p_l, 1.0)).matrix
            assert np.max(np.abs(kernel.sum(axis=1) - 1.0)) <= 1e-12

    @pytest.mark.parametrize("n", [1, 4, 20, 40])
    def test_stationary_law_is_binomial(self, n):
        kernel = count_kernel(n, BASE_CHAIN)
        beta = kernel.stationary()
        expected = [binomial_pmf(m, n, BASE_CHAIN.pi_h) for m in range(n + 1)]
        assert np.max(np.abs(beta - expected)) <= 1e-9
