"""Fixture catalog: model integrity and the frozen reference numbers."""
import math

import numpy as np
import pytest

from mftg import (
    CatalogError,
    InvalidInputError,
    LocalPolicy,
    eval_blue_kernel_row,
    eval_red_kernel_row,
    eval_reward,
    fixture_names,
    load_fixture,
    mf_step_blue,
    tv_distance,
)
from mftg.examples import example2_coordination_rule


class TestCatalog:
    def test_names_are_sorted_and_complete(self):
        names = fixture_names()
        assert list(names) == sorted(names)
        assert set(names) == {
            "discontinuous",
            "example1",
            "example2",
            "info_counterexample",
            "pairwise",
            "two_node",
        }

    def test_unknown_name_raises(self):
        with pytest.raises(CatalogError):
            load_fixture("nope")

    def test_every_fixture_model_validates(self):
        for name in fixture_names():
            fixture = load_fixture(name)
            assert fixture.model.horizon >= 1
            assert fixture.name == name

    def test_two_node_rho_parameter(self):
        assert load_fixture("two_node", rho=0.25).model.rho == 0.25
        with pytest.raises(InvalidInputError):
            load_fixture("two_node", rho=1.5)

    def test_unknown_parameter_rejected(self):
        with pytest.raises(InvalidInputError):
            load_fixture("two_node", bananas=1)


class TestTwoNodeReferences:
    def test_move_probability(self, two_node):
        # All Blue on the first node, Red split evenly, move action.
        row = eval_blue_kernel_row(two_node.model, 0, 0, 1, [1.0, 0.0], [0.5, 0.5])
        assert row[1] == pytest.approx(two_node.reference["move_prob"].value, abs=1e-12)

    def test_reward_is_second_node_mass(self, two_node):
        assert eval_reward(two_node.model, 0, [0.3, 0.7], [0.5, 0.5]) == pytest.approx(0.7)

    def test_red_mirror_sign(self, two_node):
        # The Red move bonus flips the drift sign, so when Blue's move
        # succeeds more than half the time Red's succeeds less.
        mu = np.array([0.8, 0.2])
        nu = np.array([0.2, 0.8])
        blue = eval_blue_kernel_row(two_node.model, 0, 0, 1, mu, nu)
        red = eval_red_kernel_row(two_node.model, 0, 0, 1, mu, nu)
        assert blue[1] > 0.5 > red[1]
        assert blue[1] - 0.5 == pytest.approx(0.5 - red[1], abs=1e-12)


class TestExample1References:
    def test_kernel_spot_value(self, ex1):
        mu = np.array([0.5, 0.5])
        assert ex1.model.blue_kernel(0, 0, 0, 0, mu, mu) == pytest.approx(
            ex1.reference["kernel_spot"].value, abs=1e-12
        )

    def test_reward_only_at_the_horizon(self, ex1):
        mu = np.array([0.2, 0.8])
        nu = np.array([0.5, 0.5])
        assert eval_reward(ex1.model, 0, mu, nu) == 0.0
        assert eval_reward(ex1.model, 1, mu, nu) == 0.0
        assert eval_reward(ex1.model, 2, mu, nu) == pytest.approx(0.8)

    def test_initial_point_reference(self, ex1):
        mu0, nu0 = ex1.reference["initial_point"].value
        assert mu0 == (0.96, 0.04)
        assert nu0 == (0.04, 0.96)


class TestExample2References:
    def test_leak_probability_shape(self, ex2):
        q = 1 / math.sqrt(2)
        nu = np.array([0.6, 0.4])
        # Leak from the second Red state under the leaking action: zero at
        # the matching point, frozen value from the all-first-state start.
        at_match = ex2.model.red_kernel(1, 0, 1, 1, np.array([q, 1 - q]), nu)
        assert at_match == pytest.approx(0.0, abs=1e-12)
        at_vertex = ex2.model.red_kernel(1, 0, 1, 1, np.array([1.0, 0.0]), nu)
        assert at_vertex == pytest.approx(
            ex2.reference["n1_best_deterministic_leak"].value, abs=1e-12
        )

    def test_leak_saturates_at_one(self, ex2):
        nu = np.array([0.5, 0.5])
        assert ex2.model.red_kernel(1, 0, 1, 1, np.array([0.0, 1.0]), nu) == 1.0

    def test_red_frozen_outside_leak_step(self, ex2):
        nu = np.array([0.6, 0.4])
        mu = np.array([1.0, 0.0])
        # At t=0 every Red action keeps the state.
        for y in range(2):
            for v in range(2):
                row = eval_red_kernel_row(ex2.model, 0, y, v, mu, nu)
                assert row[y] == pytest.approx(1.0, abs=1e-12)

    def test_blue_moves_are_deterministic(self, ex2):
        mu = np.array([0.3, 0.7])
        nu = np.array([0.6, 0.4])
        stay = eval_blue_kernel_row(ex2.model, 0, 0, 0, mu, nu)
        swap = eval_blue_kernel_row(ex2.model, 0, 0, 1, mu, nu)
        assert stay.weights.tolist() == [1.0, 0.0]
        assert swap.weights.tolist() == [0.0, 1.0]

    def test_reward_is_minus_first_red_mass_at_horizon(self, ex2):
        mu = np.array([0.5, 0.5])
        nu = np.array([0.6, 0.4])
        assert eval_reward(ex2.model, 2, mu, nu) == pytest.approx(-0.6)
        assert eval_reward(ex2.model, 1, mu, nu) == 0.0

    def test_count_probabilities_are_binomial(self, ex2):
        q = 1 / math.sqrt(2)
        probs = ex2.reference["n3_count_probs"].value
        for k, p in enumerate(probs):
            want = math.comb(3, k) * q**k * (1 - q) ** (3 - k)
            assert p == pytest.approx(want, abs=1e-12)
        assert sum(probs) == pytest.approx(1.0, abs=1e-12)

    def test_expected_leak_consistent_with_counts(self, ex2):
        q = 1 / math.sqrt(2)
        probs = ex2.reference["n3_count_probs"].value
        total = 0.0
        for k, p in enumerate(probs):
            total += p * min(10 * (k / 3 - q) ** 2, 1.0)
        assert total == pytest.approx(ex2.reference["n3_expected_leak"].value, abs=1e-12)


class TestCoordinationRule:
    def test_rows_are_action_distributions(self):
        rng = np.random.default_rng(40)
        for _ in range(25):
            mu = rng.dirichlet(np.ones(2))
            for t in (0, 1):
                rows = example2_coordination_rule(t, mu)
                LocalPolicy(rows)  # validates stochasticity

    def test_hits_target_when_reachable(self, ex2):
        q = ex2.reference["target"].value[0]
        rng = np.random.default_rng(41)
        nu = np.array([0.6, 0.4])
        for _ in range(25):
            w = rng.uniform()
            mu = np.array([w, 1 - w])
            if max(w, 1 - w) < q:  # matching point unreachable in one step
                continue
            rows = example2_coordination_rule(0, mu)
            image = mf_step_blue(ex2.model, 0, mu, nu, LocalPolicy(rows))
            assert tv_distance(image, np.array([q, 1 - q])) <= 1e-12

    def test_identity_after_first_step(self, ex2):
        mu = np.array([0.3, 0.7])
        rows = example2_coordination_rule(1, mu)
        image = mf_step_blue(ex2.model, 1, mu, np.array([0.6, 0.4]), LocalPolicy(rows))
        assert np.allclose(image.weights, mu, atol=1e-12)


class TestDiscontinuousFixture:
    def test_reward_ball_and_grid_indices(self):
        fixture = load_fixture("discontinuous")
        target = np.array(fixture.reference["target"].value)
        radius = fixture.reference["ball_radius"].value
        bins = fixture.reference["designated_bins"].value
        inside = [
            i
            for i in range(bins + 1)
            if tv_distance(np.array([i / bins, 1 - i / bins]), target) <= radius
        ]
        assert tuple(inside) == fixture.reference["rewarded_grid_indices"].value
        mu_in = np.array([inside[0] / bins, 1 - inside[0] / bins])
        nu = np.array([1.0])
        assert eval_reward(fixture.model, 1, mu_in, nu) == 1.0
        assert eval_reward(fixture.model, 0, mu_in, nu) == 0.0
        assert eval_reward(fixture.model, 1, np.array([0.5, 0.5]), nu) == 0.0

    def test_no_small_team_reaches_the_ball(self):
        fixture = load_fixture("discontinuous")
        target = np.array(fixture.reference["target"].value)
        radius = fixture.reference["ball_radius"].value
        for n in range(1, 17):
            for k in range(n + 1):
                ed = np.array([k / n, 1 - k / n])
                assert tv_distance(ed, target) > radius


class TestInfoCounterexampleFixture:
    def test_reference_shapes(self):
        fixture = load_fixture("info_counterexample")
        assignments = fixture.reference["agent_assignments"].value
        outcomes = fixture.reference["outcomes"].value
        assert len(assignments) == 2
        assert set(outcomes.values()) == {0.0, 0.5}
