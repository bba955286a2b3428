"""Simplex-grid backward induction: grids, fast/generic agreement, recorded
successors, rollouts, and the derived sensitivity constants."""
import math

import numpy as np
import pytest

from mftg import (
    CoordinationStrategy,
    DegenerateGridError,
    GameModel,
    InvalidInputError,
    LipschitzBundle,
    SimplexGrid,
    SolveOptions,
    eval_reward,
    exploit_announced_move,
    greedy_policy,
    iter_compositions,
    lipschitz_value_constant,
    load_fixture,
    mf_step_blue,
    solve_lower,
    solve_upper,
    tv_distance,
)
from mftg.cli import random_affine_spec


class TestCompositions:
    def test_count_and_sums(self):
        combos = list(iter_compositions(5, 3))
        assert len(combos) == math.comb(5 + 2, 2)
        assert all(sum(c) == 5 for c in combos)

    def test_lexicographic_order(self):
        combos = list(iter_compositions(4, 2))
        assert combos == sorted(combos)
        assert combos[0] == (0, 4)
        assert combos[-1] == (4, 0)


class TestSimplexGrid:
    def test_two_state_layout(self):
        grid = SimplexGrid(2, 4)
        assert len(grid) == 5
        assert grid.points[0].tolist() == [0.0, 1.0]
        assert grid.points[4].tolist() == [1.0, 0.0]
        assert grid.point(2).tolist() == [0.5, 0.5]

    def test_three_state_count(self):
        assert len(SimplexGrid(3, 6)) == math.comb(6 + 2, 2)

    def test_snap_nearest_and_tie_rule(self):
        grid = SimplexGrid(2, 4)
        assert grid.snap([0.3, 0.7]) == 1
        # 0.375 sits exactly between 0.25 and 0.5; the lower index wins.
        assert grid.snap([0.375, 0.625]) == 1

    def test_snap_dimension_mismatch(self):
        with pytest.raises(InvalidInputError):
            SimplexGrid(2, 4).snap([0.2, 0.3, 0.5])

    def test_distribution_round_trip(self):
        grid = SimplexGrid(3, 5)
        for idx in (0, 7, len(grid) - 1):
            assert grid.snap(grid.distribution(idx)) == idx


class TestBackwardInduction:
    def test_two_node_exact_value(self, two_node):
        bg = SimplexGrid(2, 8)
        rg = SimplexGrid(2, 8)
        grid = solve_lower(two_node.model, bg, rg)
        # 0.375 is on the grid, so the discretized optimum is exact.
        got = grid.value_at(0, [1.0, 0.0], [0.5, 0.5])
        assert got == pytest.approx(two_node.reference["value"].value, abs=1e-12)

    def test_lower_below_upper(self, ex1_grids_60):
        lower, upper = ex1_grids_60
        assert np.all(lower.values <= upper.values + 1e-9)

    def test_values_bounded_by_cumulative_reward(self, ex1, ex1_grids_60):
        lower, upper = ex1_grids_60
        cap = (ex1.model.horizon + 1) * ex1.model.r_max
        for grid in (lower, upper):
            assert np.max(np.abs(grid.values)) <= cap + 1e-9

    def test_terminal_layer_is_the_reward(self, ex1, ex1_grids_60):
        lower, _ = ex1_grids_60
        T = ex1.model.horizon
        for i in (0, 30, 60):
            for j in (0, 30, 60):
                want = eval_reward(
                    ex1.model, T, lower.blue_grid.points[i], lower.red_grid.points[j]
                )
                assert lower.values[T, i, j] == pytest.approx(want, abs=1e-12)

    def test_fast_path_equals_generic_bitwise(self, ex1):
        bg = SimplexGrid(2, 12)
        rg = SimplexGrid(2, 12)
        for solve in (solve_lower, solve_upper):
            fast = solve(ex1.model, bg, rg)
            slow = solve(ex1.model, bg, rg, SolveOptions(force_generic=True))
            assert np.array_equal(fast.values, slow.values)
            assert np.array_equal(fast.successors, slow.successors)

    def test_fast_path_equals_generic_on_random_model(self):
        rng = np.random.default_rng(21)
        model = random_affine_spec(rng, horizon=2).to_model()
        bg = SimplexGrid(2, 10)
        rg = SimplexGrid(2, 10)
        fast = solve_lower(model, bg, rg)
        slow = solve_lower(model, bg, rg, SolveOptions(force_generic=True))
        assert np.array_equal(fast.values, slow.values)
        assert np.array_equal(fast.successors, slow.successors)

    def test_thread_count_does_not_change_output(self, ex1):
        bg = SimplexGrid(2, 12)
        rg = SimplexGrid(2, 12)
        one = solve_lower(ex1.model, bg, rg, SolveOptions(threads=1))
        four = solve_lower(ex1.model, bg, rg, SolveOptions(threads=4))
        assert np.array_equal(one.values, four.values)
        assert np.array_equal(one.successors, four.successors)

    def test_successor_record_shape_and_range(self, ex1, ex1_grids_60):
        lower, _ = ex1_grids_60
        T = ex1.model.horizon
        assert lower.successors.shape == (T, 61, 61, 2)
        assert lower.successors.min() >= 0
        assert lower.successors.max() < 61

    def test_record_successors_off(self, two_node):
        bg = SimplexGrid(2, 6)
        grid = solve_lower(two_node.model, bg, bg, SolveOptions(record_successors=False))
        assert grid.successors is None
        with pytest.raises(InvalidInputError):
            CoordinationStrategy(grid, two_node.model, kind="blue")

    def test_grid_dimension_mismatch_rejected(self, ex1):
        with pytest.raises(InvalidInputError):
            solve_lower(ex1.model, SimplexGrid(3, 5), SimplexGrid(2, 5))

    def test_unreachable_cells_raise_degenerate_error(self):
        # A kernel whose image is never on the grid leaves zero candidates
        # once the membership slack is removed.
        model = GameModel(
            num_blue_states=2,
            num_red_states=2,
            num_blue_actions=2,
            num_red_actions=2,
            horizon=1,
            rho=0.5,
            blue_kernel=lambda t, nxt, s, a, mu, nu: (1 / 3, 2 / 3)[nxt],
            red_kernel=lambda t, nxt, s, a, mu, nu: 1.0 if nxt == s else 0.0,
            reward=lambda t, mu, nu: 0.0,
        )
        grid = SimplexGrid(2, 10)
        with pytest.raises(DegenerateGridError):
            solve_lower(model, grid, grid, SolveOptions(membership_tol=0.0))


class TestValueLookup:
    def test_off_grid_points_snap(self, ex1_grids_60):
        lower, _ = ex1_grids_60
        on_grid = lower.value_at(0, [0.5, 0.5], [0.5, 0.5])
        nearby = lower.value_at(0, [0.501, 0.499], [0.499, 0.501])
        assert on_grid == nearby

    def test_interpolation_matches_grid_at_nodes(self, ex1_grids_60):
        lower, _ = ex1_grids_60
        mu = lower.blue_grid.points[17]
        nu = lower.red_grid.points[40]
        assert lower.value_at(1, mu, nu, interpolate=True) == pytest.approx(
            lower.values[1, 17, 40], abs=1e-12
        )

    def test_bad_timestep_rejected(self, ex1_grids_60):
        lower, _ = ex1_grids_60
        with pytest.raises(InvalidInputError):
            lower.value_at(5, [0.5, 0.5], [0.5, 0.5])


class TestRecordedPolicies:
    def test_greedy_policy_reaches_recorded_successor(self, ex1, ex1_grids_60):
        lower, _ = ex1_grids_60
        rng = np.random.default_rng(9)
        for _ in range(20):
            i = int(rng.integers(0, 61))
            j = int(rng.integers(0, 61))
            t = int(rng.integers(0, ex1.model.horizon))
            mu = lower.blue_grid.points[i]
            nu = lower.red_grid.points[j]
            policy, target = greedy_policy(lower, ex1.model, t, mu, nu, team="blue")
            image = mf_step_blue(ex1.model, t, mu, nu, policy)
            # The recorded successor may sit off the hull by the membership
            # slack; the extracted policy lands within that slack of it.
            assert tv_distance(image, target) <= lower.membership_tol_blue + 1e-9

    def test_coordination_strategy_caches_policies(self, ex1, ex1_grids_60):
        lower, _ = ex1_grids_60
        coord = CoordinationStrategy(lower, ex1.model, kind="blue")
        a = coord.policy_at(0, [0.5, 0.5], [0.5, 0.5])
        b = coord.policy_at(0, [0.5001, 0.4999], [0.5, 0.5])
        assert a is b  # both snap to the same cell

    def test_successor_at_reports_grid_point(self, ex1, ex1_grids_60):
        lower, _ = ex1_grids_60
        coord = CoordinationStrategy(lower, ex1.model, kind="blue")
        succ = coord.successor_at(0, [0.5, 0.5], [0.5, 0.5])
        i = lower.blue_grid.snap([0.5, 0.5])
        j = lower.red_grid.snap([0.5, 0.5])
        bi = lower.successors[0, i, j, 0]
        assert np.array_equal(succ.weights, lower.blue_grid.points[bi])

    def test_flat_optimum_records_lowest_index(self, ex2, ex2_grids_200):
        # At t=0 the solve sees a plateau of first moves whose discretized
        # continuation ties exactly; the recorded successor is the plateau's
        # lowest-index grid point, the left edge of the window where the
        # opponent's best reply registers zero on the 1/(2G) scale.
        lower, _ = ex2_grids_200
        i = lower.blue_grid.snap([1.0, 0.0])
        j = lower.red_grid.snap([0.6, 0.4])
        bi = int(lower.successors[0, i, j, 0])
        succ = float(lower.blue_grid.points[bi][0])
        assert succ == pytest.approx(0.685, abs=1e-12)
        leak = ex2.model.red_kernel(1, 0, 1, 1, np.array([succ, 1 - succ]), np.array([0.6, 0.4]))
        prev = ex2.model.red_kernel(1, 0, 1, 1, np.array([succ - 0.005, 1 - succ + 0.005]), np.array([0.6, 0.4]))
        half_cell = 1.0 / (2 * 200)
        assert leak * 0.4 < half_cell  # inside the zero-registered window
        assert prev * 0.4 > half_cell  # one cell left is already outside


class TestAnnouncedMoveExploit:
    def test_revealing_never_helps_the_revealer(self, ex1, ex1_grids_60):
        lower, _ = ex1_grids_60
        mu0, nu0 = ex1.reference["initial_point"].value
        exploit = exploit_announced_move(ex1.model, lower, mu0, nu0)
        assert exploit.total >= lower.value_at(0, mu0, nu0) - 1e-9

    def test_moves_are_grid_points(self, ex1, ex1_grids_60):
        lower, _ = ex1_grids_60
        exploit = exploit_announced_move(ex1.model, lower, [0.5, 0.5], [0.5, 0.5])
        assert exploit.blue_move.weights[0] in lower.blue_grid.points[:, 0]
        assert exploit.red_move.weights[0] in lower.red_grid.points[:, 0]


class TestValueSensitivityConstant:
    def test_hand_expanded_cases(self):
        bundle = LipschitzBundle(l_f=1.0, l_g=1.0, l_r=1.0)
        assert lipschitz_value_constant(bundle, 2, 2) == pytest.approx(1.0)
        assert lipschitz_value_constant(bundle, 1, 2) == pytest.approx(4.0)
        assert lipschitz_value_constant(bundle, 0, 2) == pytest.approx(13.0)

    def test_scales_with_reward_constant(self):
        bundle = LipschitzBundle(l_f=1.0, l_g=1.0, l_r=2.5)
        assert lipschitz_value_constant(bundle, 0, 2) == pytest.approx(2.5 * 13.0)

    def test_argument_validation(self):
        bundle = LipschitzBundle(l_f=1.0, l_g=1.0, l_r=1.0)
        with pytest.raises(InvalidInputError):
            lipschitz_value_constant(bundle, 3, 2)
        with pytest.raises(InvalidInputError):
            lipschitz_value_constant(None, 0, 2)
