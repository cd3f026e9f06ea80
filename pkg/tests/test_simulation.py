import numpy as np
import pytest

from ssp_opi.dp import apply_T_mu_k, bellman_T_mu, exact_policy_value
from ssp_opi.exceptions import LambdaOutOfRange, TruncatedSample
from ssp_opi.instances import InstanceSpec, gen_random_proper
from ssp_opi.mdp import validate_mdp
from ssp_opi.simulation import (
    RngStream,
    TrajectorySample,
    sample_targets,
    sample_trajectory,
    td_lambda_target,
    trajectory_cost,
)

from oracles import all_policies, one_step_expectation, rows_of

N = 10**5


def test_stream_reproducible():
    a = RngStream(3, 7, 2).uniforms(1000)
    b = RngStream(3, 7, 2).uniforms(1000)
    np.testing.assert_array_equal(a, b)
    assert np.all((a >= 0) & (a < 1))
    assert not np.array_equal(a, RngStream(3, 8, 2).uniforms(1000))
    assert not np.array_equal(a, RngStream(3, 7, 1).uniforms(1000))


def test_stream_uniformity():
    u = RngStream(0, 0, 1).uniforms(N)
    counts, _ = np.histogram(u, bins=10, range=(0, 1))
    # chi-square with 9 dof; 99.9% quantile is 27.9
    chi2 = np.sum((counts - N / 10) ** 2 / (N / 10))
    assert chi2 < 27.9


class TestTrajectories:
    def test_chain2_from_2(self, CHAIN2):
        s = sample_trajectory(CHAIN2, (0, 0), 2, RngStream(0, 0, 2))
        assert s.states == (2, 1, 0) and s.costs == (1.0, 1.0) and s.steps == 2
        assert not s.truncated
        assert trajectory_cost(s) == 2

    def test_chain2_from_1(self, CHAIN2):
        s = sample_trajectory(CHAIN2, (0, 0), 1, RngStream(0, 0, 1))
        assert s.states == (1, 0) and s.costs == (1.0,) and s.steps == 1
        assert trajectory_cost(s) == 1

    def test_truncation(self, TRAP):
        s = sample_trajectory(TRAP, (0, 0), 2, RngStream(0, 0, 2), cutoff=50)
        assert s.truncated and s.steps == 50
        assert set(s.states) == {2}
        with pytest.raises(TruncatedSample):
            trajectory_cost(s)

    def test_same_stream_same_sample(self):
        m = gen_random_proper(InstanceSpec(n=5, seed=1))
        mu = all_policies(m)[17]
        a = sample_trajectory(m, mu, 3, RngStream(9, 4, 3))
        b = sample_trajectory(m, mu, 3, RngStream(9, 4, 3))
        assert a == b

    def test_transitions_follow_support(self):
        m = gen_random_proper(InstanceSpec(n=6, seed=2))
        mu = all_policies(m)[5]
        rows = rows_of(m)
        for t in range(200):
            s = sample_trajectory(m, mu, 1 + t % 6, RngStream(0, t, 1 + t % 6))
            assert len(s.costs) == s.steps and s.states[-1] == 0
            for a, b in zip(s.states[:-1], s.states[1:]):
                _, succ, term = rows[(a, mu[a - 1])]
                assert (b == 0 and term > 0) or succ.get(b, 0) > 0

    def test_empirical_transition_frequencies(self):
        m = validate_mdp({1: {0: (1.0, {1: 0.3, 2: 0.6997})}, 2: {0: (1.0, {1: 0.8, 2: 0.1998})}})
        counts = {}
        steps = 0
        t = 0
        while steps < N:
            s = sample_trajectory(m, (0, 0), 1, RngStream(5, t, 1))
            for a, b in zip(s.states[:-1], s.states[1:]):
                counts[(a, b)] = counts.get((a, b), 0) + 1
            steps += s.steps
            t += 1
        rows = rows_of(m)
        for i in (1, 2):
            visits = sum(c for (a, _), c in counts.items() if a == i)
            _, succ, term = rows[(i, 0)]
            for j, p in list(succ.items()) + [(0, term)]:
                sigma = np.sqrt(visits * p * (1 - p))
                assert abs(counts.get((i, j), 0) - visits * p) <= 3 * sigma + 1

    def test_loop_half_mean_steps(self, LOOP_HALF):
        mc, _, steps = sample_targets(LOOP_HALF, (0,), 1, N, seed=0)
        # geometric(0.5): mean 2, variance 2
        assert abs(steps.mean() - 2) <= 3 * np.sqrt(2) / np.sqrt(N)
        assert abs(mc.mean() - 2) <= 3 * mc.std(ddof=1) / np.sqrt(N)

    def test_no_truncation_under_proper_policies(self):
        m = gen_random_proper(InstanceSpec(n=5, seed=0))
        for mu in all_policies(m)[:3]:
            sample_targets(m, mu, 1, N, seed=1)  # raises on truncation


class TestTargets:
    def test_td_zero_at_fixed_point(self, CHAIN2):
        s = sample_trajectory(CHAIN2, (0, 0), 2, RngStream(0, 0, 2))
        for lam in (0.0, 0.3, 0.9):
            assert td_lambda_target(s, [1.0, 2.0], lam) == 0.0

    def test_td_hand_value(self, CHAIN2):
        s = sample_trajectory(CHAIN2, (0, 0), 2, RngStream(0, 0, 2))
        assert td_lambda_target(s, [0.0, 0.0], 0.5) == 1.5

    def test_lambda_range(self, CHAIN2):
        s = sample_trajectory(CHAIN2, (0, 0), 2, RngStream(0, 0, 2))
        for lam in (1.0, -0.1, 1.5):
            with pytest.raises(LambdaOutOfRange):
                td_lambda_target(s, [0, 0], lam)

    def test_truncated_rejected(self):
        s = TrajectorySample((1, 1), (1.0,), True)
        with pytest.raises(TruncatedSample):
            td_lambda_target(s, [0.0], 0.5)

    def test_kernel_targets_match_python_targets(self):
        m = gen_random_proper(InstanceSpec(n=5, seed=4))
        mu = all_policies(m)[40]
        J = np.random.default_rng(0).normal(size=5)
        mc, td, _ = sample_targets(m, mu, 2, 50, J=J, lam=0.7, seed=3)
        for k in range(50):
            s = sample_trajectory(m, mu, 2, RngStream(3, k, 2))
            assert trajectory_cost(s) == pytest.approx(mc[k], abs=1e-12)
            assert td_lambda_target(s, J, 0.7) == pytest.approx(td[k], abs=1e-12)

    def test_td0_mean_is_one_step_residual(self):
        m = gen_random_proper(InstanceSpec(n=4, seed=6))
        mu = all_policies(m)[3]
        J = np.random.default_rng(1).uniform(-3, 3, size=4)
        for i in range(1, 5):
            _, td, _ = sample_targets(m, mu, i, N, J=J, lam=0.0, seed=i)
            expected = one_step_expectation(m, mu, J, i)
            assert abs(td.mean() - expected) <= 3 * td.std(ddof=1) / np.sqrt(N) + 1e-12
            assert expected == pytest.approx((bellman_T_mu(m, mu, J) - J)[i - 1], abs=1e-12)

    def test_mc_unbiased_small_instances(self):
        for seed in range(3):
            m = gen_random_proper(InstanceSpec(n=int(3 + seed), seed=seed))
            mu = all_policies(m)[seed]
            J_mu = exact_policy_value(m, mu)
            for i in range(1, m.n + 1):
                mc, _, _ = sample_targets(m, mu, i, N, seed=seed)
                assert abs(mc.mean() - J_mu[i - 1]) <= 4 * mc.std(ddof=1) / np.sqrt(N)

    def test_td_lambda_mean_matches_vector_form(self):
        m = gen_random_proper(InstanceSpec(n=4, seed=8))
        mu = all_policies(m)[7]
        J = np.random.default_rng(2).uniform(-2, 2, size=4)
        lam = 0.5
        expected = np.zeros(4)
        TkJ = J.copy()
        for k in range(64):
            TkJ = apply_T_mu_k(m, mu, TkJ, 1)
            expected += (1 - lam) * lam**k * TkJ
        for i in range(1, 5):
            _, td, _ = sample_targets(m, mu, i, N, J=J, lam=lam, seed=10 + i)
            assert abs(J[i - 1] + td.mean() - expected[i - 1]) <= 4 * td.std(ddof=1) / np.sqrt(N)
