"""Finite-population rollouts, reproducible random streams, prediction-gap
measurements, and the exact count-state oracle."""
import math

import numpy as np
import pytest

from mftg import (
    CapacityError,
    Distribution,
    InvalidInputError,
    JointCountState,
    SimplexGrid,
    TeamStrategy,
    empirical_distribution,
    estimate_value,
    exact_blue_optimum_example2,
    exact_red_best_response,
    example2_matching_strategy,
    induced_identical_strategy,
    load_fixture,
    measure_iid_gap,
    measure_mf_gap,
    simulate_episode,
    solve_lower,
    suboptimality_sweep,
)
from mftg.simulator import labeled_red_best_response_value
from mftg.solver import CoordinationStrategy
from mftg.cli import random_affine_spec


def pure_strategy(action, num_actions, label):
    row = np.zeros(num_actions)
    row[action] = 1.0
    return TeamStrategy.identical(lambda t, x, mu, nu: row, label=label)


def uniform_strategy(num_actions):
    row = np.full(num_actions, 1.0 / num_actions)
    return TeamStrategy.identical(lambda t, x, mu, nu: row, label="uniform")


class TestEpisodeMechanics:
    def test_log_shape_and_bookkeeping(self, two_node):
        log = simulate_episode(
            two_node.model, 3, 2, pure_strategy(1, 2, "move"),
            pure_strategy(0, 2, "stay"), [0, 0, 1], [0, 1], seed=5,
        )
        assert len(log.steps) == two_node.model.horizon + 1
        assert log.total == pytest.approx(sum(s.reward for s in log.steps))
        for step in log.steps:
            ed = empirical_distribution(step.blue_states, 2)
            assert np.array_equal(step.mu, ed.weights)
            ed = empirical_distribution(step.red_states, 2)
            assert np.array_equal(step.nu, ed.weights)

    def test_bit_identical_replay(self, two_node):
        args = (
            two_node.model, 2, 2, pure_strategy(1, 2, "move"),
            pure_strategy(0, 2, "stay"), [0, 0], [0, 1],
        )
        assert simulate_episode(*args, seed=9, episode=3) == simulate_episode(
            *args, seed=9, episode=3
        )

    def test_episode_index_changes_draws(self, two_node):
        args = (
            two_node.model, 4, 4, uniform_strategy(2), uniform_strategy(2),
            [0, 0, 1, 1], [0, 1, 0, 1],
        )
        logs = [simulate_episode(*args, seed=2, episode=e) for e in range(8)]
        assert len({tuple(l.steps[1].blue_states) for l in logs}) > 1

    def test_distribution_inits_are_sampled(self, two_node):
        log = simulate_episode(
            two_node.model, 50, 50, uniform_strategy(2), uniform_strategy(2),
            Distribution([0.5, 0.5]), Distribution([1.0, 0.0]), seed=3,
        )
        assert set(log.steps[0].red_states) == {0}
        assert 0 < sum(log.steps[0].blue_states) < 50

    def test_strategy_size_mismatch_rejected(self, two_node):
        per_agent = TeamStrategy.per_agent(
            [lambda t, x, mu, nu: np.array([1.0, 0.0])] * 3
        )
        with pytest.raises(InvalidInputError):
            simulate_episode(
                two_node.model, 2, 2, per_agent, pure_strategy(0, 2, "stay"),
                [0, 0], [0, 1], seed=0,
            )


class TestValueEstimation:
    def test_matches_manual_average(self, two_node):
        args = (
            two_node.model, 2, 2, pure_strategy(1, 2, "move"),
            pure_strategy(0, 2, "stay"), [0, 0], [0, 1],
        )
        totals = [simulate_episode(*args, seed=4, episode=e).total for e in range(32)]
        mean, se = estimate_value(*args, episodes=32, seed=4)
        assert mean == pytest.approx(np.mean(totals))
        assert se == pytest.approx(np.std(totals, ddof=1) / math.sqrt(32))

    def test_thread_count_invariance(self, two_node):
        args = (
            two_node.model, 3, 3, uniform_strategy(2), uniform_strategy(2),
            [0, 0, 0], [1, 1, 1],
        )
        m1, s1 = estimate_value(*args, episodes=48, seed=6, threads=1)
        m3, s3 = estimate_value(*args, episodes=48, seed=6, threads=3)
        assert (m1, s1) == (m3, s3)

    def test_branch_frequencies_match_exact_probabilities(self, two_node):
        expected = np.array(two_node.reference["ed_branch_probs"].value)
        episodes = 3000
        counts = np.zeros(3)
        for e in range(episodes):
            log = simulate_episode(
                two_node.model, 2, 2, pure_strategy(1, 2, "move"),
                pure_strategy(0, 2, "stay"), [0, 0], [0, 1], seed=13, episode=e,
            )
            counts[int(round(log.steps[1].mu[1] * 2))] += 1
        freq = counts / episodes
        sigma = np.sqrt(expected * (1 - expected) / episodes)
        assert np.all(np.abs(freq - expected) <= 3 * sigma + 1e-12)

    def test_coordinator_rollout_tracks_solved_value(self, two_node):
        bg = SimplexGrid(2, 8)
        grid = solve_lower(two_node.model, bg, bg)
        blue = induced_identical_strategy(
            CoordinationStrategy(grid, two_node.model, kind="blue")
        )
        mean, se = estimate_value(
            two_node.model, 64, 8, blue, pure_strategy(0, 2, "stay"),
            Distribution([1.0, 0.0]), Distribution([0.5, 0.5]), 400, seed=21,
        )
        want = two_node.reference["value"].value
        assert abs(mean - want) <= 4 * se + 0.05


class TestPredictionGaps:
    def test_iid_gap_respects_weak_law_bound(self):
        rng = np.random.default_rng(31)
        for n in (4, 16, 64, 256):
            p = rng.dirichlet(np.ones(3))
            mean, se = measure_iid_gap(p, n, 4000, seed=n)
            assert mean <= 0.5 * math.sqrt(3 / n) + 3 * se

    def test_iid_gap_shrinks_with_population(self):
        p = np.array([0.3, 0.3, 0.4])
        means = [measure_iid_gap(p, n, 4000, seed=1)[0] for n in (4, 64, 1024)]
        assert means[0] > means[1] > means[2]

    def test_one_step_gap_within_bound_on_random_models(self):
        rng = np.random.default_rng(32)
        for _ in range(3):
            model = random_affine_spec(rng, horizon=2).to_model()
            n1 = int(rng.integers(2, 9))
            n2 = int(rng.integers(2, 9))
            report = measure_mf_gap(
                model, n1, n2, uniform_strategy(model.num_blue_actions),
                uniform_strategy(model.num_red_actions),
                Distribution(rng.dirichlet(np.ones(model.num_blue_states))),
                Distribution(rng.dirichlet(np.ones(model.num_red_states))),
                400, int(rng.integers(0, 2**32)),
            )
            assert report.blue_mean <= model.num_blue_states / 2 * math.sqrt(1 / n1) + 3 * report.blue_se
            assert report.red_mean <= model.num_red_states / 2 * math.sqrt(1 / n2) + 3 * report.red_se


class TestCountStateOracle:
    def test_count_state_accessors(self):
        state = JointCountState(blue_counts=(2, 1), red_counts=(0, 4))
        assert state.n1 == 3
        assert state.n2 == 4
        assert state.mu().weights.tolist() == [2 / 3, 1 / 3]
        assert state.nu().weights.tolist() == [0.0, 1.0]

    def test_matches_labeled_brute_force(self):
        rng = np.random.default_rng(33)
        for _ in range(3):
            model = random_affine_spec(rng, horizon=2).to_model()
            blue = uniform_strategy(model.num_blue_actions)
            init = JointCountState(blue_counts=(1, 1), red_counts=(2, 0))
            value_counts, policy = exact_red_best_response(model, 2, 2, blue, init)
            value_labeled = labeled_red_best_response_value(model, blue, [0, 1], [0, 0])
            assert value_counts == pytest.approx(value_labeled, abs=1e-10)
            assert policy

    def test_capacity_cap_enforced(self, ex2):
        blue = example2_matching_strategy()
        init = JointCountState(blue_counts=(2000, 0), red_counts=(1500, 500))
        with pytest.raises(CapacityError):
            exact_red_best_response(ex2.model, 2000, 2000, blue, init, cap=10**6)

    def test_matching_strategy_value_uses_frozen_leak(self, ex2):
        # Identical mixed play leaves the stay-count binomial; the exact DP
        # must land on the frozen expected leak.
        init = JointCountState(blue_counts=(3, 0), red_counts=(3, 2))
        value, _ = exact_red_best_response(ex2.model, 3, 5, example2_matching_strategy(), init)
        nu0 = np.array([0.6, 0.4])
        want = -nu0[0] - ex2.reference["n3_expected_leak"].value * nu0[1]
        assert value == pytest.approx(want, abs=1e-12)


class TestExactOptimum:
    def test_frozen_best_deterministic_leaks(self, ex2):
        nu0 = np.array([0.6, 0.4])
        for n1, key in ((3, "n3_best_deterministic_leak"), (1, "n1_best_deterministic_leak")):
            value = exact_blue_optimum_example2(n1, nu0)
            leak = ex2.reference[key].value
            assert value == pytest.approx(-nu0[0] - leak * nu0[1], abs=1e-12)

    def test_rejects_bad_population(self):
        with pytest.raises(InvalidInputError):
            exact_blue_optimum_example2(0, [0.6, 0.4])


class TestSuboptimalitySweep:
    def test_exact_mode_matches_frozen_gap(self, ex2):
        rows = suboptimality_sweep(ex2.model, [3], [0.6, 0.4])
        assert len(rows) == 1
        row = rows[0]
        assert row.n1 == 3
        assert row.n2 == 5
        assert row.stderr == 0.0
        assert row.gap == pytest.approx(ex2.reference["n3_gap"].value, abs=1e-9)

    def test_monte_carlo_mode_agrees_with_exact(self, ex2):
        exact = suboptimality_sweep(ex2.model, [3], [0.6, 0.4])[0]
        mc = suboptimality_sweep(ex2.model, [3], [0.6, 0.4], episodes=400, seed=17)[0]
        assert mc.stderr > 0.0
        assert abs(mc.coord_value - exact.coord_value) <= 5 * mc.stderr

    def test_gaps_decrease_with_team_size(self, ex2):
        rows = suboptimality_sweep(ex2.model, [3, 6, 12], [0.6, 0.4])
        gaps = [r.gap for r in rows]
        assert gaps[0] > gaps[1] > gaps[2] > 0
