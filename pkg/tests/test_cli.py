"""Command surface: canonical serialization, the affine model format, artifact
round trips, strategy specs, and process exit codes."""
import json
import math

import numpy as np
import pytest

from mftg import (
    InvalidInputError,
    ModelValidationError,
    SimplexGrid,
    lipschitz_violations,
    load_fixture,
    solve_lower,
    tv_distance,
)
from mftg.cli import (
    AffineModelSpec,
    canonical_json,
    load_value_grid,
    main,
    random_affine_spec,
    resolve_model,
    resolve_strategy,
    save_value_grid,
    write_value_grid_csv,
)


class TestCanonicalJson:
    def test_sorted_keys_and_compact_separators(self):
        assert canonical_json({"b": 1, "a": 2}) == '{"a":2,"b":1}'

    def test_floats_round_trip_exactly(self):
        values = [0.1, 1 / 3, 1e-17, 123456.789, -2.5e300, 1 / math.sqrt(2)]
        text = canonical_json(values)
        assert json.loads(text) == values

    def test_numpy_arrays_and_scalars(self):
        text = canonical_json({"v": np.array([1.0, 0.5]), "n": np.int64(3)})
        assert json.loads(text) == {"v": [1.0, 0.5], "n": 3}

    def test_deterministic_output(self):
        payload = {"z": [1.5, {"y": 0.25, "x": [True, None]}], "a": "s"}
        assert canonical_json(payload) == canonical_json(json.loads(canonical_json(payload)))


class TestAffineModelSpec:
    @staticmethod
    def _spec(seed=7, **kwargs):
        return random_affine_spec(np.random.default_rng(seed), **kwargs)

    def test_serialization_is_byte_stable(self):
        spec = self._spec()
        text = spec.to_canonical_json()
        again = AffineModelSpec.from_dict(json.loads(text))
        assert again.to_canonical_json() == text

    def test_asymmetric_sizes_validate(self):
        spec = self._spec(
            num_blue_states=3, num_red_states=2, num_blue_actions=2,
            num_red_actions=3, horizon=2,
        )
        model = spec.to_model()
        assert model.num_blue_states == 3
        assert model.num_red_actions == 3

    def test_model_matches_tables_pointwise(self):
        spec = self._spec(seed=11)
        model = spec.to_model()
        rng = np.random.default_rng(1)
        base = np.asarray(spec.blue_base)
        mw = np.asarray(spec.blue_mu_weights)
        nw = np.asarray(spec.blue_nu_weights)
        for _ in range(20):
            mu = rng.dirichlet(np.ones(2))
            nu = rng.dirichlet(np.ones(2))
            t = int(rng.integers(0, spec.horizon))
            x = int(rng.integers(0, 2))
            u = int(rng.integers(0, 2))
            xn = int(rng.integers(0, 2))
            want = base[t, x, u, xn] + mw[t, x, u, xn] @ mu + nw[t, x, u, xn] @ nu
            assert model.blue_kernel(t, xn, x, u, mu, nu) == pytest.approx(want, abs=1e-15)

    def test_derived_constants_are_certified(self):
        model = self._spec(seed=13).to_model()
        assert lipschitz_violations(model, num_pairs=100, seed=2) == []

    def test_base_rows_must_be_stochastic(self):
        raw = json.loads(self._spec().to_canonical_json())
        raw["blue_kernel"]["base"][0][0][0][0] += 0.5
        with pytest.raises(ModelValidationError):
            AffineModelSpec.from_dict(raw)

    def test_weight_slices_must_sum_to_zero(self):
        raw = json.loads(self._spec().to_canonical_json())
        raw["blue_kernel"]["mu_weights"][0][0][0][0][0] += 0.25
        with pytest.raises(ModelValidationError):
            AffineModelSpec.from_dict(raw)

    def test_vertex_negativity_rejected(self):
        raw = json.loads(self._spec().to_canonical_json())
        # Push one weight so a vertex pair turns a probability negative while
        # the zero-sum slice constraint still holds.
        w = raw["blue_kernel"]["mu_weights"][0][0][0]
        w[0][0] -= 2.0
        w[1][0] += 2.0
        with pytest.raises(ModelValidationError):
            AffineModelSpec.from_dict(raw)

    def test_missing_section_rejected(self):
        raw = json.loads(self._spec().to_canonical_json())
        del raw["reward"]
        with pytest.raises(ModelValidationError):
            AffineModelSpec.from_dict(raw)


class TestArtifactRoundTrip:
    def test_value_grid_survives_save_load(self, two_node, tmp_path):
        bg = SimplexGrid(2, 6)
        grid = solve_lower(two_node.model, bg, bg)
        path = str(tmp_path / "g.npz")
        save_value_grid(path, grid, {"tool": "mftg"})
        back = load_value_grid(path)
        assert back.kind == grid.kind
        assert np.array_equal(back.values, grid.values)
        assert np.array_equal(back.successors, grid.successors)
        assert back.membership_tol_blue == grid.membership_tol_blue
        assert back.blue_grid.bins == 6

    def test_missing_artifact_raises(self, tmp_path):
        with pytest.raises(InvalidInputError):
            load_value_grid(str(tmp_path / "absent.npz"))

    def test_csv_layout(self, two_node, tmp_path):
        bg = SimplexGrid(2, 4)
        grid = solve_lower(two_node.model, bg, bg)
        path = str(tmp_path / "g.csv")
        write_value_grid_csv(path, grid, {"seed": 0})
        lines = open(path).read().splitlines()
        assert lines[0].startswith("# mftg")
        assert lines[1].startswith("# provenance: ")
        json.loads(lines[1].split("# provenance: ", 1)[1])
        assert lines[2] == "t,mu_index,nu_index,mu_0,mu_1,nu_0,nu_1,value"
        assert len(lines) == 3 + (grid.horizon + 1) * 25
        first = lines[3].split(",")
        assert first[:3] == ["0", "0", "0"]
        assert float(first[-1]) == grid.values[0, 0, 0]


class TestModelAndStrategyResolution:
    def test_fixture_names_resolve(self):
        model, fixture, source = resolve_model("two_node")
        assert fixture is not None
        assert source == "fixture:two_node"
        assert model.num_blue_states == 2

    def test_json_files_resolve(self, tmp_path):
        spec = random_affine_spec(np.random.default_rng(3))
        path = tmp_path / "m.json"
        path.write_text(spec.to_canonical_json())
        model, fixture, source = resolve_model(str(path))
        assert fixture is None
        assert source == f"json:{path}"

    def test_unknown_model_lists_catalog(self):
        with pytest.raises(InvalidInputError) as exc:
            resolve_model("missing_model")
        assert "two_node" in str(exc.value)

    def test_builtin_strategies(self, two_node):
        mu = np.array([0.5, 0.5])
        uniform = resolve_strategy("uniform", "blue", two_node.model)
        assert uniform.action_dist(0, 0, 0, mu, mu).tolist() == [0.5, 0.5]
        stay = resolve_strategy("stay", "red", two_node.model)
        assert stay.action_dist(0, 0, 0, mu, mu).tolist() == [1.0, 0.0]
        move = resolve_strategy("move", "blue", two_node.model)
        assert move.action_dist(0, 0, 1, mu, mu).tolist() == [0.0, 1.0]

    def test_matching_strategy_requires_example2_shape(self, ex2, two_node):
        assert resolve_strategy("matching", "blue", ex2.model).identical_flag
        with pytest.raises(InvalidInputError):
            resolve_strategy("matching", "red", ex2.model)

    def test_unknown_strategy_rejected(self, two_node):
        with pytest.raises(InvalidInputError):
            resolve_strategy("wander", "blue", two_node.model)


class TestProcessInterface:
    def test_solve_writes_artifacts_and_summary(self, tmp_path, capsys):
        out = str(tmp_path / "run")
        rc = main([
            "solve", "--model", "two_node", "--bins", "8", "--kind", "lower",
            "--out", out, "--query-mu", "1,0", "--query-nu", "0.5,0.5",
        ])
        assert rc == 0
        summary = json.loads(open(out + ".json").read())
        assert summary["value_at"]["lower"] == pytest.approx(0.625, abs=1e-12)
        assert summary["provenance"]["tool"] == "mftg"
        assert summary["provenance"]["flags"]["bins"] == 8
        grid = load_value_grid(out + ".lower.npz")
        assert grid.kind == "lower"
        assert open(out + ".lower.csv").readline().startswith("# mftg")

    def test_solve_without_out_prints_summary(self, capsys):
        rc = main(["solve", "--model", "two_node", "--bins", "4", "--kind", "upper"])
        assert rc == 0
        summary = json.loads(capsys.readouterr().out)
        assert summary["kind"] == "upper"
        assert summary["files"] == {}

    def test_simulate_logs_are_reproducible(self, tmp_path):
        argv = [
            "simulate", "--model", "two_node", "--n1", "4", "--n2", "4",
            "--blue", "move", "--red", "stay", "--episodes", "20", "--seed", "9",
        ]
        a = str(tmp_path / "a")
        b = str(tmp_path / "b")
        assert main(argv + ["--out", a]) == 0
        assert main(argv + ["--out", b]) == 0
        assert open(a + ".jsonl").read() == open(b + ".jsonl").read()
        sa = json.loads(open(a + ".json").read())
        sb = json.loads(open(b + ".json").read())
        assert sa["mean"] == sb["mean"]
        assert sa["stderr"] == sb["stderr"]
        first = json.loads(open(a + ".jsonl").readline())
        assert first["episode"] == 0
        assert len(first["steps"]) == 2

    def test_sweep_csv_matches_exact_oracle(self, tmp_path, ex2):
        from mftg import suboptimality_sweep

        out = str(tmp_path / "sweep")
        rc = main([
            "sweep", "--model", "example2", "--n-list", "3,6",
            "--nu0", "0.6,0.4", "--seed", "0", "--out", out,
        ])
        assert rc == 0
        rows = [
            line.split(",")
            for line in open(out + ".csv").read().splitlines()
            if line and not line.startswith("#")
        ][1:]
        want = suboptimality_sweep(ex2.model, [3, 6], [0.6, 0.4])
        assert len(rows) == 2
        for got, exact in zip(rows, want):
            assert int(got[0]) == exact.n1
            assert float(got[2]) == pytest.approx(exact.gap, abs=1e-12)

    def test_policy_query_round_trip(self, tmp_path, capsys):
        out = str(tmp_path / "run")
        assert main(["solve", "--model", "example1", "--bins", "40",
                     "--kind", "lower", "--out", out]) == 0
        capsys.readouterr()
        rc = main([
            "policy", "--model", "example1", "--solve-artifact", out + ".lower.npz",
            "--t", "0", "--mu", "0.96,0.04", "--nu", "0.04,0.96", "--kind", "blue",
        ])
        assert rc == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["residual"] <= 1.0 / 80 + 1e-12
        rows = np.array(payload["policy_rows"])
        assert rows.shape == (2, 2)
        assert np.allclose(rows.sum(axis=1), 1.0, atol=1e-9)
        assert sum(payload["successor"]) == pytest.approx(1.0, abs=1e-12)

    def test_exit_code_validation_error(self, capsys):
        rc = main(["solve", "--model", "no_such_model", "--bins", "4", "--kind", "lower"])
        assert rc == 2
        err = json.loads(capsys.readouterr().err)
        assert err["error"] == "InvalidInputError"

    def test_exit_code_capacity_error(self, capsys):
        rc = main(["sweep", "--model", "example2", "--n-list", "999999", "--seed", "0"])
        assert rc == 3
        err = json.loads(capsys.readouterr().err)
        assert err["error"] == "CapacityError"
        assert err["cap"] == 10**6

    def test_exit_code_unreachable_successor(self, tmp_path, two_node, capsys):
        # A tampered artifact pointing at an unreachable successor must fail
        # the feasibility gate, not silently extract something else.
        bg = SimplexGrid(2, 4)
        grid = solve_lower(two_node.model, bg, bg)
        grid.successors[0, :, :, 0] = 0  # grid point [0, 1]
        path = str(tmp_path / "bad.npz")
        save_value_grid(path, grid, {})
        rc = main([
            "policy", "--model", "two_node", "--solve-artifact", path,
            "--t", "0", "--mu", "1,0", "--nu", "0.5,0.5", "--kind", "blue",
        ])
        assert rc == 4
        err = json.loads(capsys.readouterr().err)
        assert err["error"] == "ReachabilityError"
        assert err["residual"] > 0.1

    def test_verify_core_suite_is_green(self, capsys):
        rc = main(["verify", "--suite", "core", "--seed", "0"])
        assert rc == 0
        out = capsys.readouterr().out
        assert out.startswith("1..")
        assert "not ok" not in out
