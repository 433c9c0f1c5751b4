"""Exp4 and uniform baselines."""

import numpy as np
import pytest

from relaxcb import (
    PolicyClass,
    best_policy_loss,
    exp4_distribution,
    exp4_step,
    exp4_update,
    make_adversary,
    make_exp4_state,
    random_policy_class,
    uniform_step,
)


class TestExp4:
    def test_uniform_weights_and_balanced_class_give_uniform_play(self):
        # two policies per action at the only context: profile is uniform,
        # and mixing uniform with uniform stays uniform
        table = np.array([[1], [1], [2], [2], [3], [3]])
        pc = PolicyClass(table=table, num_actions=3)
        state = make_exp4_state(pc, horizon=100)
        dist = exp4_distribution(state, 0)
        np.testing.assert_allclose(dist.probs, 1 / 3)

    def test_single_policy_plays_its_action_mixed_with_floor(self):
        pc = PolicyClass(table=np.array([[2, 2]]), num_actions=3)
        state = make_exp4_state(pc, horizon=50)
        dist = exp4_distribution(state, 1)
        gamma = state.exploration
        np.testing.assert_allclose(
            dist.probs, [gamma / 3, 1 - gamma + gamma / 3, gamma / 3]
        )

    def test_update_only_charges_matching_policies(self):
        table = np.array([[1], [2]])
        pc = PolicyClass(table=table, num_actions=2)
        state = make_exp4_state(pc, horizon=10)
        rng = np.random.default_rng(0)
        dist, action = exp4_step(state, 0, rng)
        exp4_update(state, 0, dist, action, 1.0)
        w = state.log_weights
        # the policy that played the action lost weight relative to the other
        assert w[action - 1] < w[2 - action]

    def test_log_weights_stay_finite_under_adversarial_costs(self):
        rng = np.random.default_rng(1)
        pc = random_policy_class(8, 3, 3, rng)
        state = make_exp4_state(pc, horizon=500)
        for t in range(500):
            x = int(rng.integers(3))
            dist, action = exp4_step(state, x, rng)
            exp4_update(state, x, dist, action, float(rng.integers(2)))
            assert np.all(np.isfinite(state.log_weights))

    def test_sublinear_on_gap_instance(self):
        """Regret per round shrinks between T=500 and T=2000 on a 2-action gap."""
        rng_pc = np.random.default_rng(2)
        pc = random_policy_class(10, 2, 2, rng_pc)
        sched = make_adversary(
            {"type": "stochastic-gap", "delta": 0.2}, pc, 2000, np.random.default_rng(3)
        )
        rng_ctx = np.random.default_rng(4)
        contexts = rng_ctx.integers(0, 2, size=2000)

        def run(horizon, seed):
            rng = np.random.default_rng(seed)
            state = make_exp4_state(pc, horizon)
            expected = 0.0
            for t in range(1, horizon + 1):
                x = int(contexts[t - 1])
                cvec = sched.costs[t - 1]
                dist, action = exp4_step(state, x, rng)
                exp4_update(state, x, dist, action, float(cvec[action - 1]))
                expected += float(dist.probs @ cvec)
            comparator = best_policy_loss(pc, contexts[:horizon], sched.costs[:horizon])
            return expected - comparator

        reps = 5
        r500 = np.mean([run(500, 100 + i) for i in range(reps)]) / 500
        r2000 = np.mean([run(2000, 200 + i) for i in range(reps)]) / 2000
        assert r2000 < r500


class TestUniform:
    def test_distribution(self):
        rng = np.random.default_rng(0)
        dist, action = uniform_step(4, rng)
        np.testing.assert_allclose(dist.probs, 0.25)
        assert 1 <= action <= 4

    def test_action_frequencies(self):
        rng = np.random.default_rng(1)
        n = 100_000
        counts = np.bincount([uniform_step(4, rng)[1] - 1 for _ in range(n)], minlength=4)
        sigma = np.sqrt(0.25 * 0.75 / n)
        assert np.all(np.abs(counts / n - 0.25) <= 3 * sigma)

    def test_expected_regret_on_fixed_gap_instance(self):
        # against constant policies covering every action, the expected-cost
        # regret of uniform play is exactly (mean cost - best cost) per round
        k, horizon = 3, 400
        constants = np.array([[a + 1, a + 1] for a in range(k)])
        pc = PolicyClass(table=constants, num_actions=k)
        costs = np.tile(np.array([0.1, 0.5, 0.9]), (horizon, 1))
        contexts = np.zeros(horizon, dtype=int)
        per_round = costs[0].mean() - costs[0].min()
        rng = np.random.default_rng(2)
        expected = 0.0
        for t in range(horizon):
            dist, _ = uniform_step(k, rng)
            expected += float(dist.probs @ costs[t])
        regret = expected - best_policy_loss(pc, contexts, costs)
        assert regret == pytest.approx(per_round * horizon, abs=1e-9)
