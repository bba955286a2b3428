"""Command-line surface: model serialization, solving, simulation, sweeps,
verification suites, and policy queries.

Artifacts are reproducible byte for byte: JSON uses sorted keys and fixed
17-significant-digit float formatting, CSVs carry a provenance comment block,
and every run embeds the tool version, seed, and the full flag set.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
import time
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import __version__
from .core import (
    Distribution,
    GameModel,
    LipschitzBundle,
    LocalPolicy,
    TeamStrategy,
    empirical_distribution,
    eval_blue_kernel_row,
    tv_distance,
)
from .errors import (
    CapacityError,
    CatalogError,
    DegenerateGridError,
    InvalidInputError,
    MftgError,
    ModelValidationError,
    ReachabilityError,
)
from .examples import Fixture, fixture_names, load_fixture
from .meanfield import (
    extract_policy,
    hausdorff_distance,
    hull_membership,
    mf_step_blue,
    reachable_set_blue,
    reachable_set_red,
)
from .simulator import (
    JointCountState,
    estimate_value,
    exact_red_best_response,
    example2_matching_strategy,
    induced_identical_strategy,
    labeled_red_best_response_value,
    measure_iid_gap,
    measure_mf_gap,
    simulate_episode,
    suboptimality_sweep,
)
from .solver import (
    CoordinationStrategy,
    SimplexGrid,
    SolveOptions,
    ValueGrid,
    exploit_announced_move,
    solve_lower,
    solve_upper,
)

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_CAPACITY = 3
EXIT_INFEASIBLE = 4


# ---------------------------------------------------------------------------
# Canonical JSON


def canonical_json(obj) -> str:
    """Serialize with sorted keys and '%.17g' floats; bit-stable across runs."""
    out: List[str] = []
    _canon_write(obj, out)
    return "".join(out)


def _canon_write(obj, out: List[str]) -> None:
    if obj is None:
        out.append("null")
    elif isinstance(obj, bool):
        out.append("true" if obj else "false")
    elif isinstance(obj, (int, np.integer)):
        out.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        out.append("%.17g" % float(obj))
    elif isinstance(obj, str):
        out.append(json.dumps(obj, ensure_ascii=True))
    elif isinstance(obj, dict):
        out.append("{")
        for i, key in enumerate(sorted(obj)):
            if not isinstance(key, str):
                raise InvalidInputError("canonical JSON keys must be strings")
            if i:
                out.append(",")
            out.append(json.dumps(key, ensure_ascii=True))
            out.append(":")
            _canon_write(obj[key], out)
        out.append("}")
    elif isinstance(obj, (list, tuple)) or isinstance(obj, np.ndarray):
        seq = obj.tolist() if isinstance(obj, np.ndarray) else obj
        out.append("[")
        for i, item in enumerate(seq):
            if i:
                out.append(",")
            _canon_write(item, out)
        out.append("]")
    else:
        raise InvalidInputError(f"cannot canonicalize {type(obj).__name__}")


def _provenance(args: argparse.Namespace, seed: Optional[int]) -> Dict:
    flags = {k: v for k, v in sorted(vars(args).items()) if k != "func"}
    return {
        "tool": "mftg",
        "version": __version__,
        "seed": seed,
        "flags": {k: (list(v) if isinstance(v, tuple) else v) for k, v in flags.items()},
    }


def _write_json(path: Optional[str], payload: Dict) -> None:
    text = canonical_json(payload) + "\n"
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


# ---------------------------------------------------------------------------
# Affine JSON models


@dataclass(frozen=True)
class AffineModelSpec:
    """User-defined model whose kernels and reward are affine in (mu, nu).

    Row sums of 1 for every mean-field pair are decidable for this class:
    each base row must sum to 1 and each weight slice to 0, and
    non-negativity only needs checking at simplex-vertex pairs because an
    affine function attains its extremes there.
    """

    num_blue_states: int
    num_red_states: int
    num_blue_actions: int
    num_red_actions: int
    horizon: int
    rho: float
    blue_base: np.ndarray
    blue_mu_weights: np.ndarray
    blue_nu_weights: np.ndarray
    red_base: np.ndarray
    red_mu_weights: np.ndarray
    red_nu_weights: np.ndarray
    reward_base: np.ndarray
    reward_mu_coeffs: np.ndarray
    reward_nu_coeffs: np.ndarray
    lipschitz: Optional[Dict[str, float]]

    @classmethod
    def from_dict(cls, raw: Dict) -> "AffineModelSpec":
        try:
            sizes = raw["sizes"]
            nx, ny = int(sizes["X"]), int(sizes["Y"])
            nu_, nv = int(sizes["U"]), int(sizes["V"])
            horizon = int(sizes["T"])
            rho = float(raw["rho"])
            bk, rk, rw = raw["blue_kernel"], raw["red_kernel"], raw["reward"]
            spec = cls(
                num_blue_states=nx,
                num_red_states=ny,
                num_blue_actions=nu_,
                num_red_actions=nv,
                horizon=horizon,
                rho=rho,
                blue_base=np.asarray(bk["base"], dtype=np.float64),
                blue_mu_weights=np.asarray(bk["mu_weights"], dtype=np.float64),
                blue_nu_weights=np.asarray(bk["nu_weights"], dtype=np.float64),
                red_base=np.asarray(rk["base"], dtype=np.float64),
                red_mu_weights=np.asarray(rk["mu_weights"], dtype=np.float64),
                red_nu_weights=np.asarray(rk["nu_weights"], dtype=np.float64),
                reward_base=np.asarray(rw["base"], dtype=np.float64),
                reward_mu_coeffs=np.asarray(rw["mu_coeffs"], dtype=np.float64),
                reward_nu_coeffs=np.asarray(rw["nu_coeffs"], dtype=np.float64),
                lipschitz=(
                    {k: float(v) for k, v in raw["lipschitz"].items()}
                    if raw.get("lipschitz") is not None
                    else None
                ),
            )
        except (KeyError, TypeError, ValueError) as err:
            raise ModelValidationError(f"malformed affine model JSON: {err}") from err
        spec.validate()
        return spec

    def validate(self) -> None:
        nx, ny = self.num_blue_states, self.num_red_states
        nu_, nv = self.num_blue_actions, self.num_red_actions
        t_ = self.horizon
        if min(nx, ny, nu_, nv) < 1 or t_ < 0:
            raise ModelValidationError("sizes must be positive (horizon >= 0)")
        if not 0.0 < self.rho < 1.0:
            raise ModelValidationError(f"rho must be in (0, 1), got {self.rho}")
        shapes = [
            ("blue_kernel.base", self.blue_base, (t_, nx, nu_, nx)),
            ("blue_kernel.mu_weights", self.blue_mu_weights, (t_, nx, nu_, nx, nx)),
            ("blue_kernel.nu_weights", self.blue_nu_weights, (t_, nx, nu_, nx, ny)),
            ("red_kernel.base", self.red_base, (t_, ny, nv, ny)),
            ("red_kernel.mu_weights", self.red_mu_weights, (t_, ny, nv, ny, nx)),
            ("red_kernel.nu_weights", self.red_nu_weights, (t_, ny, nv, ny, ny)),
            ("reward.base", self.reward_base, (t_ + 1,)),
            ("reward.mu_coeffs", self.reward_mu_coeffs, (t_ + 1, nx)),
            ("reward.nu_coeffs", self.reward_nu_coeffs, (t_ + 1, ny)),
        ]
        for name, arr, want in shapes:
            if arr.shape != want:
                raise ModelValidationError(
                    f"{name} has shape {arr.shape}, expected {want}"
                )
            if not np.all(np.isfinite(arr)):
                raise ModelValidationError(f"{name} contains non-finite entries")
        for team, base, mw, nw in (
            ("blue_kernel", self.blue_base, self.blue_mu_weights, self.blue_nu_weights),
            ("red_kernel", self.red_base, self.red_mu_weights, self.red_nu_weights),
        ):
            row_sums = base.sum(axis=-1)
            if np.max(np.abs(row_sums - 1.0), initial=0.0) > 1e-9:
                raise ModelValidationError(f"{team} base rows must each sum to 1")
            for label, w in (("mu_weights", mw), ("nu_weights", nw)):
                slice_sums = w.sum(axis=-2)
                if np.max(np.abs(slice_sums), initial=0.0) > 1e-9:
                    raise ModelValidationError(
                        f"{team} {label} slices must each sum to 0 over next states"
                    )
            # Affine in (mu, nu) jointly, so minima sit at vertex pairs.
            vertex_vals = (
                base[..., None, None] + mw[..., :, None] + nw[..., None, :]
            )
            if vertex_vals.size and float(vertex_vals.min()) < -1e-9:
                raise ModelValidationError(
                    f"{team} goes negative at a simplex-vertex pair "
                    f"(min {float(vertex_vals.min()):.3e})"
                )
        if self.lipschitz is not None:
            for key in self.lipschitz:
                if key not in ("l_f", "l_g", "l_r", "r_max"):
                    raise ModelValidationError(f"unknown lipschitz key {key!r}")

    def canonical_dict(self) -> Dict:
        payload = {
            "sizes": {
                "X": self.num_blue_states,
                "Y": self.num_red_states,
                "U": self.num_blue_actions,
                "V": self.num_red_actions,
                "T": self.horizon,
            },
            "rho": self.rho,
            "blue_kernel": {
                "base": self.blue_base,
                "mu_weights": self.blue_mu_weights,
                "nu_weights": self.blue_nu_weights,
            },
            "red_kernel": {
                "base": self.red_base,
                "mu_weights": self.red_mu_weights,
                "nu_weights": self.red_nu_weights,
            },
            "reward": {
                "base": self.reward_base,
                "mu_coeffs": self.reward_mu_coeffs,
                "nu_coeffs": self.reward_nu_coeffs,
            },
        }
        if self.lipschitz is not None:
            payload["lipschitz"] = dict(self.lipschitz)
        return payload

    def to_canonical_json(self) -> str:
        return canonical_json(self.canonical_dict()) + "\n"

    def _derived_bundle(self) -> LipschitzBundle:
        if self.lipschitz is not None:
            return LipschitzBundle(
                l_f=self.lipschitz.get("l_f", 0.0),
                l_g=self.lipschitz.get("l_g", 0.0),
                l_r=self.lipschitz.get("l_r", 0.0),
            )

        def kernel_constant(w: np.ndarray) -> float:
            # Worst TV response of a row to moving one unit of mass between
            # two vertices of the other simplex.
            if w.shape[-1] < 2:
                return 0.0
            diff = w[..., :, None] - w[..., None, :]
            return float(np.abs(diff).sum(axis=-3).max())

        l_f = max(
            kernel_constant(self.blue_mu_weights),
            kernel_constant(self.blue_nu_weights),
        )
        l_g = max(
            kernel_constant(self.red_mu_weights),
            kernel_constant(self.red_nu_weights),
        )
        l_r = max(
            float(np.ptp(self.reward_mu_coeffs, axis=-1).max(initial=0.0)),
            float(np.ptp(self.reward_nu_coeffs, axis=-1).max(initial=0.0)),
        )
        return LipschitzBundle(l_f=l_f, l_g=l_g, l_r=l_r)

    def to_model(self) -> GameModel:
        bb, bmw, bnw = self.blue_base, self.blue_mu_weights, self.blue_nu_weights
        rb, rmw, rnw = self.red_base, self.red_mu_weights, self.red_nu_weights
        rw_b, rw_m, rw_n = self.reward_base, self.reward_mu_coeffs, self.reward_nu_coeffs

        def blue_kernel(t, xn, x, u, mu, nu):
            return float(bb[t, x, u, xn] + bmw[t, x, u, xn] @ mu + bnw[t, x, u, xn] @ nu)

        def red_kernel(t, yn, y, v, mu, nu):
            return float(rb[t, y, v, yn] + rmw[t, y, v, yn] @ mu + rnw[t, y, v, yn] @ nu)

        def reward(t, mu, nu):
            return float(rw_b[t] + rw_m[t] @ mu + rw_n[t] @ nu)

        vertex_rewards = rw_b[:, None, None] + rw_m[:, :, None] + rw_n[:, None, :]
        r_max = float(np.abs(vertex_rewards).max())
        if self.lipschitz is not None and "r_max" in self.lipschitz:
            r_max = float(self.lipschitz["r_max"])
        return GameModel(
            num_blue_states=self.num_blue_states,
            num_red_states=self.num_red_states,
            num_blue_actions=self.num_blue_actions,
            num_red_actions=self.num_red_actions,
            horizon=self.horizon,
            rho=self.rho,
            blue_kernel=blue_kernel,
            red_kernel=red_kernel,
            reward=reward,
            declared_lipschitz=self._derived_bundle(),
            r_max=r_max,
        )


def random_affine_spec(
    rng: np.random.Generator,
    num_blue_states: int = 2,
    num_red_states: int = 2,
    num_blue_actions: int = 2,
    num_red_actions: int = 2,
    horizon: int = 2,
) -> AffineModelSpec:
    """A random valid affine model: each kernel averages vertex-indexed
    stochastic tables, which makes every constraint hold by construction."""

    def kernel_blocks(states, actions):
        # a is indexed by blue-ED vertices, b by red-ED vertices; each row is a
        # distribution over this side's next states.
        a = rng.dirichlet(np.ones(states), size=(horizon, states, actions, num_blue_states))
        b = rng.dirichlet(np.ones(states), size=(horizon, states, actions, num_red_states))
        # value(x') = 0.5*(sum_z mu(z) a[z, x'] + sum_w nu(w) b[w, x'])
        base = 0.5 * (a[:, :, :, 0, :] + b[:, :, :, 0, :])
        mw = 0.5 * np.moveaxis(a - a[:, :, :, :1, :], 3, 4)
        nw = 0.5 * np.moveaxis(b - b[:, :, :, :1, :], 3, 4)
        return base, mw, nw

    bb, bmw, bnw = kernel_blocks(num_blue_states, num_blue_actions)
    rb, rmw, rnw = kernel_blocks(num_red_states, num_red_actions)
    raw = {
        "sizes": {
            "X": num_blue_states,
            "Y": num_red_states,
            "U": num_blue_actions,
            "V": num_red_actions,
            "T": horizon,
        },
        "rho": float(rng.uniform(0.2, 0.8)),
        "blue_kernel": {"base": bb, "mu_weights": bmw, "nu_weights": bnw},
        "red_kernel": {"base": rb, "mu_weights": rmw, "nu_weights": rnw},
        "reward": {
            "base": rng.uniform(-0.5, 0.5, size=horizon + 1),
            "mu_coeffs": rng.uniform(-1.0, 1.0, size=(horizon + 1, num_blue_states)),
            "nu_coeffs": rng.uniform(-1.0, 1.0, size=(horizon + 1, num_red_states)),
        },
    }
    return AffineModelSpec.from_dict(raw)


def resolve_model(name_or_path: str) -> Tuple[GameModel, Optional[Fixture], str]:
    """Named fixture, else a JSON file path holding an affine model."""
    if name_or_path in fixture_names():
        fixture = load_fixture(name_or_path)
        return fixture.model, fixture, f"fixture:{name_or_path}"
    try:
        with open(name_or_path) as fh:
            raw = json.load(fh)
    except FileNotFoundError as err:
        raise InvalidInputError(
            f"model {name_or_path!r} is neither a known fixture "
            f"({', '.join(fixture_names())}) nor a readable file"
        ) from err
    except json.JSONDecodeError as err:
        raise ModelValidationError(f"model file is not valid JSON: {err}") from err
    spec = AffineModelSpec.from_dict(raw)
    return spec.to_model(), None, f"json:{name_or_path}"


# ---------------------------------------------------------------------------
# Solve artifacts


def save_value_grid(path: str, grid: ValueGrid, provenance: Dict) -> None:
    np.savez_compressed(
        path,
        kind=np.array(grid.kind),
        values=grid.values,
        successors=(
            grid.successors
            if grid.successors is not None
            else np.zeros((0, 0, 0, 2), dtype=np.int32)
        ),
        blue_bins=np.array(grid.blue_grid.bins),
        red_bins=np.array(grid.red_grid.bins),
        blue_dim=np.array(grid.blue_grid.dim),
        red_dim=np.array(grid.red_grid.dim),
        membership_tol=np.array([grid.membership_tol_blue, grid.membership_tol_red]),
        provenance=np.array(canonical_json(provenance)),
    )


def load_value_grid(path: str) -> ValueGrid:
    try:
        with np.load(path, allow_pickle=False) as data:
            kind = str(data["kind"])
            values = data["values"]
            successors = data["successors"]
            blue_grid = SimplexGrid(int(data["blue_dim"]), int(data["blue_bins"]))
            red_grid = SimplexGrid(int(data["red_dim"]), int(data["red_bins"]))
            tol_b, tol_r = (float(x) for x in data["membership_tol"])
    except FileNotFoundError as err:
        raise InvalidInputError(f"solve artifact {path!r} not found") from err
    except (KeyError, ValueError, OSError) as err:
        raise InvalidInputError(f"unreadable solve artifact {path!r}: {err}") from err
    return ValueGrid(
        kind=kind,
        blue_grid=blue_grid,
        red_grid=red_grid,
        values=values,
        successors=successors if successors.size else None,
        membership_tol_blue=tol_b,
        membership_tol_red=tol_r,
    )


def write_value_grid_csv(path: str, grid: ValueGrid, provenance: Dict) -> None:
    db, dr = grid.blue_grid.dim, grid.red_grid.dim
    header = (
        ["t", "mu_index", "nu_index"]
        + [f"mu_{i}" for i in range(db)]
        + [f"nu_{j}" for j in range(dr)]
        + ["value"]
    )
    with open(path, "w") as fh:
        fh.write(f"# mftg {__version__} value grid ({grid.kind})\n")
        fh.write(f"# provenance: {canonical_json(provenance)}\n")
        fh.write(",".join(header) + "\n")
        bp, rp = grid.blue_grid.points, grid.red_grid.points
        for t in range(grid.values.shape[0]):
            for i in range(bp.shape[0]):
                mu_cols = ",".join("%.17g" % x for x in bp[i])
                for j in range(rp.shape[0]):
                    nu_cols = ",".join("%.17g" % x for x in rp[j])
                    fh.write(
                        f"{t},{i},{j},{mu_cols},{nu_cols},"
                        + ("%.17g" % grid.values[t, i, j])
                        + "\n"
                    )


# ---------------------------------------------------------------------------
# Strategy specs


def _pure_strategy(action: int, num_actions: int, label: str) -> TeamStrategy:
    if action >= num_actions:
        raise InvalidInputError(
            f"strategy {label!r} needs at least {action + 1} actions"
        )
    row = np.zeros(num_actions)
    row[action] = 1.0

    def evaluator(t, x, mu, nu):
        return row

    return TeamStrategy.identical(evaluator, label=label)


def resolve_strategy(
    spec: str, team: str, model: GameModel
) -> TeamStrategy:
    """Parse a --blue/--red strategy spec.

    Accepted forms: ``uniform``, ``stay`` (action 0), ``move`` (action 1),
    ``matching`` (the closed-form leak-killing rule; Blue on 2-state models
    only), ``coordinator:PATH`` (policies extracted from a solve artifact).
    """
    num_actions = (
        model.num_blue_actions if team == "blue" else model.num_red_actions
    )
    if spec == "uniform":
        row = np.full(num_actions, 1.0 / num_actions)
        return TeamStrategy.identical(lambda t, x, mu, nu: row, label="uniform")
    if spec == "stay":
        return _pure_strategy(0, num_actions, "stay")
    if spec == "move":
        return _pure_strategy(1, num_actions, "move")
    if spec == "matching":
        if team != "blue" or model.num_blue_states != 2 or num_actions != 2:
            raise InvalidInputError(
                "the matching rule is a Blue strategy for 2-state, "
                "2-action models"
            )
        return example2_matching_strategy()
    if spec.startswith("coordinator:"):
        path = spec.split(":", 1)[1]
        if not path:
            raise InvalidInputError("coordinator spec needs a path: coordinator:PATH")
        grid = load_value_grid(path)
        coord = CoordinationStrategy(grid, model, kind=team)
        return induced_identical_strategy(coord)
    raise InvalidInputError(
        f"unknown strategy spec {spec!r}; use uniform|stay|move|matching|"
        f"coordinator:PATH"
    )


def _parse_floats(text: str) -> np.ndarray:
    try:
        return np.array([float(x) for x in text.split(",") if x.strip() != ""])
    except ValueError as err:
        raise InvalidInputError(f"expected comma-separated floats, got {text!r}") from err


def _parse_ints(text: str) -> List[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip() != ""]
    except ValueError as err:
        raise InvalidInputError(f"expected comma-separated integers, got {text!r}") from err


def _parse_init(text: Optional[str], n: int, num_states: int):
    """Agent states when the list has n integers, else a weight vector."""
    if text is None:
        return Distribution(np.full(num_states, 1.0 / num_states))
    parts = [p for p in text.split(",") if p.strip() != ""]
    if len(parts) == n and all(_is_int(p) for p in parts):
        return np.array([int(p) for p in parts], dtype=np.int64)
    w = _parse_floats(text)
    if w.shape[0] != num_states:
        raise InvalidInputError(
            f"init {text!r} is neither {n} integer states nor a "
            f"{num_states}-weight distribution"
        )
    return Distribution(w)


def _is_int(text: str) -> bool:
    try:
        int(text)
        return True
    except ValueError:
        return False


# ---------------------------------------------------------------------------
# Subcommands


def cmd_solve(args: argparse.Namespace) -> int:
    model, _, source = resolve_model(args.model)
    if args.bins < 2:
        raise InvalidInputError("--bins must be at least 2")
    provenance = _provenance(args, seed=None)
    blue_grid = SimplexGrid(model.num_blue_states, args.bins)
    red_grid = SimplexGrid(model.num_red_states, args.bins)
    options = SolveOptions(
        membership_tol=args.membership_tol, threads=args.threads
    )
    kinds = ["lower", "upper"] if args.kind == "both" else [args.kind]
    summary: Dict = {
        "provenance": provenance,
        "model": source,
        "bins": args.bins,
        "kind": args.kind,
        "files": {},
    }
    solved: Dict[str, ValueGrid] = {}
    start = time.monotonic()
    for kind in kinds:
        solve = solve_lower if kind == "lower" else solve_upper
        grid = solve(model, blue_grid, red_grid, options)
        solved[kind] = grid
        if args.out:
            csv_path = f"{args.out}.{kind}.csv"
            npz_path = f"{args.out}.{kind}.npz"
            write_value_grid_csv(csv_path, grid, provenance)
            save_value_grid(npz_path, grid, provenance)
            summary["files"][kind] = {"csv": csv_path, "grid": npz_path}
    summary["runtime_seconds"] = time.monotonic() - start
    if args.query_mu is not None or args.query_nu is not None:
        if args.query_mu is None or args.query_nu is None:
            raise InvalidInputError("--query-mu and --query-nu go together")
        mu = _parse_floats(args.query_mu)
        nu = _parse_floats(args.query_nu)
        summary["value_at"] = {
            "mu": mu,
            "nu": nu,
            **{k: g.value_at(0, mu, nu) for k, g in solved.items()},
        }
    else:
        summary["value_at"] = None
    _write_json(f"{args.out}.json" if args.out else None, summary)
    return EXIT_OK


def cmd_simulate(args: argparse.Namespace) -> int:
    model, _, source = resolve_model(args.model)
    if args.episodes < 1:
        raise InvalidInputError("--episodes must be at least 1")
    blue = resolve_strategy(args.blue, "blue", model)
    red = resolve_strategy(args.red, "red", model)
    init_blue = _parse_init(args.init_blue, args.n1, model.num_blue_states)
    init_red = _parse_init(args.init_red, args.n2, model.num_red_states)
    provenance = _provenance(args, seed=args.seed)
    logs_path = f"{args.out}.jsonl" if args.out else None
    totals = []
    lines = []
    for episode in range(args.episodes):
        log = simulate_episode(
            model,
            args.n1,
            args.n2,
            blue,
            red,
            init_blue,
            init_red,
            args.seed,
            episode,
        )
        totals.append(log.total)
        if logs_path:
            lines.append(
                canonical_json(
                    {
                        "episode": log.episode,
                        "seed": log.seed,
                        "blue": log.blue_label,
                        "red": log.red_label,
                        "total": log.total,
                        "steps": [
                            {
                                "t": s.t,
                                "blue_states": list(s.blue_states),
                                "red_states": list(s.red_states),
                                "mu": s.mu.weights,
                                "nu": s.nu.weights,
                                "reward": s.reward,
                            }
                            for s in log.steps
                        ],
                    }
                )
            )
    if logs_path:
        with open(logs_path, "w") as fh:
            fh.write("\n".join(lines) + "\n")
    arr = np.array(totals)
    mean = float(arr.mean())
    stderr = (
        float(arr.std(ddof=1) / math.sqrt(len(totals))) if len(totals) > 1 else 0.0
    )
    summary = {
        "provenance": provenance,
        "model": source,
        "mean": mean,
        "stderr": stderr,
        "episodes": args.episodes,
        "files": {"episodes": logs_path},
    }
    _write_json(f"{args.out}.json" if args.out else None, summary)
    return EXIT_OK


def cmd_sweep(args: argparse.Namespace) -> int:
    model, fixture, source = resolve_model(args.model)
    if fixture is None or fixture.name != "example2":
        raise InvalidInputError(
            "the sweep needs a model with an exact finite-population optimum; "
            "only the example2 fixture ships one"
        )
    n_list = _parse_ints(args.n_list)
    nu0 = _parse_floats(args.nu0)
    coordination = None
    if args.solve_artifact:
        grid = load_value_grid(args.solve_artifact)
        coordination = CoordinationStrategy(grid, model, kind="blue")
    provenance = _provenance(args, seed=args.seed)
    rows = suboptimality_sweep(
        model,
        n_list,
        nu0,
        episodes=args.episodes,
        seed=args.seed,
        coordination=coordination,
    )
    envelope_k = rows[0].gap * math.sqrt(rows[0].n1) if rows else 0.0
    if args.out:
        csv_path = f"{args.out}.csv"
        with open(csv_path, "w") as fh:
            fh.write(f"# mftg {__version__} suboptimality sweep\n")
            fh.write(f"# provenance: {canonical_json(provenance)}\n")
            fh.write("n1,n2,gap,stderr,exact_opt,coord_value\n")
            for row in rows:
                fh.write(
                    f"{row.n1},{row.n2},"
                    + ",".join(
                        "%.17g" % x
                        for x in (row.gap, row.stderr, row.exact_opt, row.coord_value)
                    )
                    + "\n"
                )
    summary = {
        "provenance": provenance,
        "model": source,
        "envelope_constant": envelope_k,
        "rows": [
            {
                "n1": r.n1,
                "n2": r.n2,
                "gap": r.gap,
                "stderr": r.stderr,
                "exact_opt": r.exact_opt,
                "coord_value": r.coord_value,
            }
            for r in rows
        ],
        "files": {"table": f"{args.out}.csv" if args.out else None},
    }
    _write_json(f"{args.out}.json" if args.out else None, summary)
    return EXIT_OK


def cmd_policy(args: argparse.Namespace) -> int:
    model, _, source = resolve_model(args.model)
    grid = load_value_grid(args.solve_artifact)
    mu = _parse_floats(args.mu)
    nu = _parse_floats(args.nu)
    coord = CoordinationStrategy(grid, model, kind=args.kind)
    target = coord.successor_at(args.t, mu, nu)
    if args.kind == "blue":
        reachable = reachable_set_blue(model, args.t, mu, nu)
        tol = grid.membership_tol_blue
    else:
        reachable = reachable_set_red(model, args.t, mu, nu)
        tol = grid.membership_tol_red
    feasibility = hull_membership(reachable, target, tol)
    if not feasibility.feasible:
        raise ReachabilityError(
            f"recorded successor is unreachable from the queried point "
            f"(residual {feasibility.residual:.3e} > tol {tol:.3e})",
            residual=feasibility.residual,
        )
    policy = extract_policy(
        model, args.t, mu, nu, target, team=args.kind, tol=tol
    )
    payload = {
        "provenance": _provenance(args, seed=None),
        "model": source,
        "t": args.t,
        "kind": args.kind,
        "successor": target.weights,
        "policy_rows": policy.rows,
        "residual": feasibility.residual,
    }
    _write_json(args.out, payload)
    return EXIT_OK


# ---------------------------------------------------------------------------
# Verification suites


class _Tap:
    def __init__(self):
        self.results: List[Tuple[str, bool, str]] = []

    def check(self, name: str, ok: bool, detail: str = "") -> None:
        self.results.append((name, bool(ok), detail))

    def render(self) -> Tuple[str, bool]:
        lines = [f"1..{len(self.results)}"]
        all_ok = True
        for idx, (name, ok, detail) in enumerate(self.results, start=1):
            mark = "ok" if ok else "not ok"
            all_ok &= ok
            suffix = f" # {detail}" if (detail and not ok) else ""
            lines.append(f"{mark} {idx} - {name}{suffix}")
        return "\n".join(lines) + "\n", all_ok


def _suite_core(tap: _Tap, seed: int) -> None:
    rng = np.random.default_rng(seed)
    ok = True
    for _ in range(50):
        a = rng.dirichlet(np.ones(4))
        b = rng.dirichlet(np.ones(4))
        c = rng.dirichlet(np.ones(4))
        ok &= abs(tv_distance(a, b) - tv_distance(b, a)) < 1e-12
        ok &= tv_distance(a, c) <= tv_distance(a, b) + tv_distance(b, c) + 1e-12
        ok &= tv_distance(a, a) == 0.0
        ok &= -1e-15 <= tv_distance(a, b) <= 1.0 + 1e-15
    tap.check("tv-distance-metric-axioms", ok)

    try:
        for name in fixture_names():
            load_fixture(name)
        tap.check("fixture-models-validate", True)
    except MftgError as err:
        tap.check("fixture-models-validate", False, str(err))

    ok = True
    for _ in range(20):
        n = int(rng.integers(1, 12))
        states = rng.integers(0, 3, size=n)
        dist = empirical_distribution(states, 3)
        counts = np.bincount(states, minlength=3)
        ok &= np.array_equal(dist.weights * n, counts.astype(np.float64))
    tap.check("empirical-distribution-exact-fractions", ok)

    two = load_fixture("two_node", rho=0.5)
    pair = load_fixture("pairwise")
    ok = True
    for _ in range(10):
        mu = rng.dirichlet(np.ones(2))
        nu = rng.dirichlet(np.ones(2))
        for x in range(2):
            for u in range(2):
                row_a = eval_blue_kernel_row(two.model, 0, x, u, mu, nu).weights
                row_b = eval_blue_kernel_row(pair.model, 0, x, u, mu, nu).weights
                ok &= np.max(np.abs(row_a - row_b)) < 1e-12
        ok &= (
            abs(two.model.reward(0, mu, nu) - pair.model.reward(0, mu, nu)) < 1e-12
        )
    tap.check("pairwise-tables-reduce-to-two-node", ok)


def _suite_meanfield(tap: _Tap, seed: int) -> None:
    rng = np.random.default_rng(seed + 1)
    fixture = load_fixture("example1")
    model = fixture.model

    ok = True
    for _ in range(20):
        mu = rng.dirichlet(np.ones(2))
        nu = rng.dirichlet(np.ones(2))
        rows_a = rng.dirichlet(np.ones(2), size=2)
        rows_b = rng.dirichlet(np.ones(2), size=2)
        w = rng.uniform()
        mixed = LocalPolicy(w * rows_a + (1 - w) * rows_b)
        img = mf_step_blue(model, 0, mu, nu, mixed).weights
        img_mix = (
            w * mf_step_blue(model, 0, mu, nu, LocalPolicy(rows_a)).weights
            + (1 - w) * mf_step_blue(model, 0, mu, nu, LocalPolicy(rows_b)).weights
        )
        ok &= np.max(np.abs(img - img_mix)) < 1e-12
    tap.check("propagation-linear-in-policy", ok)

    ok = True
    for _ in range(20):
        mu1 = rng.dirichlet(np.ones(2))
        mu2 = rng.dirichlet(np.ones(2))
        nu = rng.dirichlet(np.ones(2))
        rows = rng.dirichlet(np.ones(2), size=2)
        a = mf_step_blue(model, 0, mu1, nu, LocalPolicy(rows))
        b = mf_step_blue(model, 0, mu2, nu, LocalPolicy(rows))
        ok &= tv_distance(a, b) <= tv_distance(mu1, mu2) + 1e-12
    tap.check("propagation-non-expansive", ok)

    ok = True
    worst = 0.0
    for _ in range(200):
        mu = rng.dirichlet(np.ones(2))
        nu = rng.dirichlet(np.ones(2))
        t = int(rng.integers(0, model.horizon))
        rows = rng.dirichlet(np.ones(2), size=2)
        image = mf_step_blue(model, t, mu, nu, LocalPolicy(rows))
        reach = reachable_set_blue(model, t, mu, nu)
        res = hull_membership(reach, image, tol=1e-8)
        worst = max(worst, res.residual)
        ok &= res.feasible
    tap.check("mixed-policy-images-inside-hull", ok, f"worst residual {worst:.2e}")

    bundle = model.declared_lipschitz
    ok = True
    for _ in range(50):
        mu1 = rng.dirichlet(np.ones(2))
        mu2 = rng.dirichlet(np.ones(2))
        nu1 = rng.dirichlet(np.ones(2))
        nu2 = rng.dirichlet(np.ones(2))
        d_in = tv_distance(mu1, mu2) + tv_distance(nu1, nu2)
        r1 = reachable_set_blue(model, 0, mu1, nu1)
        r2 = reachable_set_blue(model, 0, mu2, nu2)
        bound = (1.0 + 0.5 * bundle.lf_at(0)) * d_in
        ok &= hausdorff_distance(r1, r2) <= bound + 1e-9
    tap.check("reachable-set-shift-bounded-by-inputs", ok)

    ok = True
    for _ in range(100):
        mu = rng.dirichlet(np.ones(2))
        nu = rng.dirichlet(np.ones(2))
        rows = rng.dirichlet(np.ones(2), size=2)
        target = mf_step_blue(model, 0, mu, nu, LocalPolicy(rows))
        pol = extract_policy(model, 0, mu, nu, target, team="blue")
        back = mf_step_blue(model, 0, mu, nu, pol)
        ok &= tv_distance(back, target) <= 1e-8
    tap.check("policy-extraction-round-trip", ok)

    two = load_fixture("two_node", rho=0.5)
    reach = reachable_set_blue(two.model, 0, [1.0, 0.0], [0.5, 0.5])
    firsts = sorted(reach.vertex_array[:, 0])
    lo, hi = two.reference["hull_at_all_first"].value
    ok = abs(firsts[0] - lo) < 1e-12 and abs(firsts[-1] - hi) < 1e-12
    res = hull_membership(reach, np.array([0.2, 0.8]), tol=1e-9)
    ok &= not res.feasible
    ok &= abs(res.residual - two.reference["membership_residual_02"].value) < 1e-9
    tap.check("two-node-reachable-interval-frozen-values", ok)


def _suite_solver(tap: _Tap, seed: int) -> None:
    fixture = load_fixture("example1")
    model = fixture.model
    blue = SimplexGrid(2, 12)
    red = SimplexGrid(2, 12)
    fast = solve_lower(model, blue, red)
    generic = solve_lower(model, blue, red, SolveOptions(force_generic=True))
    ok = np.array_equal(fast.values, generic.values) and np.array_equal(
        fast.successors, generic.successors
    )
    tap.check("fast-path-equals-generic-path", ok)

    upper = solve_upper(model, blue, red)
    ok = bool(np.all(fast.values <= upper.values + 1e-9))
    tap.check("lower-surface-below-upper-surface", ok)

    bound = (model.horizon + 1) * model.r_max
    ok = bool(np.max(np.abs(fast.values)) <= bound + 1e-9)
    tap.check("values-within-cumulative-reward-bound", ok)

    ex2 = load_fixture("example2").model
    g2 = SimplexGrid(2, 40)
    low2 = solve_lower(ex2, g2, g2)
    up2 = solve_upper(ex2, g2, g2)
    gap = float(np.max(np.abs(up2.values[0] - low2.values[0])))
    tap.check(
        "coincident-values-when-game-has-a-value",
        gap <= 2.0 / 40 + 1e-9,
        f"gap {gap:.4f}",
    )

    exploit = exploit_announced_move(model, fast, [0.96, 0.04], [0.04, 0.96])
    lower_val = fast.value_at(0, [0.96, 0.04], [0.04, 0.96])
    tap.check(
        "revealing-first-move-never-helps-red",
        exploit.total >= lower_val - 1e-9,
        f"exploit {exploit.total:.4f} vs lower {lower_val:.4f}",
    )


def _suite_simulator(tap: _Tap, seed: int) -> None:
    rng = np.random.default_rng(seed + 3)
    two = load_fixture("two_node", rho=0.5)
    blue = _pure_strategy(1, 2, "move")
    red = _pure_strategy(0, 2, "stay")
    init_blue = np.array([0, 0])
    init_red = np.array([0, 1])

    log_a = simulate_episode(two.model, 2, 2, blue, red, init_blue, init_red, seed, 7)
    log_b = simulate_episode(two.model, 2, 2, blue, red, init_blue, init_red, seed, 7)
    tap.check("episodes-bit-identical-for-same-seed", log_a == log_b)

    mean1, _ = estimate_value(
        two.model, 2, 2, blue, red, init_blue, init_red, 64, seed, threads=1
    )
    mean4, _ = estimate_value(
        two.model, 2, 2, blue, red, init_blue, init_red, 64, seed, threads=4
    )
    tap.check("estimates-independent-of-thread-count", mean1 == mean4)

    episodes = 2000
    counts = np.zeros(3)
    for e in range(episodes):
        log = simulate_episode(
            two.model, 2, 2, blue, red, init_blue, init_red, seed + 11, e
        )
        counts[int(round(log.steps[1].mu[1] * 2))] += 1
    freq = counts / episodes
    expected = np.array(two.reference["ed_branch_probs"].value)
    sigma = np.sqrt(expected * (1 - expected) / episodes)
    tap.check(
        "move-branch-frequencies-match-exact-probabilities",
        bool(np.all(np.abs(freq - expected) <= 3 * sigma + 1e-12)),
    )

    ok = True
    for n in (4, 16, 64, 256):
        p = rng.dirichlet(np.ones(3))
        mean, se = measure_iid_gap(p, n, 4000, seed + n)
        ok &= mean <= 0.5 * math.sqrt(3 / n) + 3 * se
    tap.check("iid-sampling-respects-weak-law-bound", ok)

    ok = True
    for _ in range(3):
        spec = random_affine_spec(rng, horizon=2)
        model = spec.to_model()
        n1 = int(rng.integers(2, 9))
        n2 = int(rng.integers(2, 9))
        gaps = measure_mf_gap(
            model,
            n1,
            n2,
            resolve_strategy("uniform", "blue", model),
            resolve_strategy("uniform", "red", model),
            Distribution(rng.dirichlet(np.ones(model.num_blue_states))),
            Distribution(rng.dirichlet(np.ones(model.num_red_states))),
            400,
            int(rng.integers(0, 2**32)),
        )
        ok &= gaps.blue_mean <= model.num_blue_states / 2 * math.sqrt(1 / n1) + 3 * gaps.blue_se
        ok &= gaps.red_mean <= model.num_red_states / 2 * math.sqrt(1 / n2) + 3 * gaps.red_se
    tap.check("one-step-prediction-gap-within-bound", ok)

    spec = random_affine_spec(rng, horizon=2)
    model = spec.to_model()
    blue_rand = resolve_strategy("uniform", "blue", model)
    init = JointCountState(blue_counts=(1, 1), red_counts=(2, 0))
    value_counts, _ = exact_red_best_response(model, 2, 2, blue_rand, init)
    value_labeled = labeled_red_best_response_value(
        model, blue_rand, [0, 1], [0, 0]
    )
    tap.check(
        "count-reduction-matches-labeled-brute-force",
        abs(value_counts - value_labeled) < 1e-10,
        f"{value_counts:.12f} vs {value_labeled:.12f}",
    )

    info = load_fixture("info_counterexample")
    assignments = info.reference["agent_assignments"].value
    strat = TeamStrategy.per_agent(
        [
            (lambda a: lambda t, x, mu, nu: np.eye(2)[a[x]])(assign)
            for assign in assignments
        ],
        label="two-agent-split",
    )
    outcomes = info.reference["outcomes"].value
    ok = True
    for start, want in outcomes.items():
        log = simulate_episode(
            info.model, 2, 1, strat, _pure_strategy(0, 1, "stay"),
            np.array(start), np.array([0]), seed, 0,
        )
        ok &= log.total == want
    tap.check("equal-eds-still-split-outcomes-for-nonidentical-teams", ok)


def cmd_verify(args: argparse.Namespace) -> int:
    tap = _Tap()
    suites = {
        "core": _suite_core,
        "meanfield": _suite_meanfield,
        "solver": _suite_solver,
        "simulator": _suite_simulator,
    }
    chosen = list(suites) if args.suite == "all" else [args.suite]
    for name in chosen:
        suites[name](tap, args.seed)
    report, all_ok = tap.render()
    sys.stdout.write(report)
    return EXIT_OK if all_ok else 1


# ---------------------------------------------------------------------------
# Entry point


def _error_payload(err: Exception) -> Dict:
    payload = {"error": type(err).__name__, "message": str(err)}
    residual = getattr(err, "residual", None)
    if residual is not None:
        payload["residual"] = float(residual)
    cap = getattr(err, "cap", None)
    if cap is not None:
        payload["cap"] = int(cap)
    return payload


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mftg",
        description="Solve, simulate, and verify zero-sum mean-field team games.",
    )
    parser.add_argument("--version", action="version", version=f"mftg {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="grid backward induction; writes CSV/NPZ/JSON")
    p.add_argument("--model", required=True, help="fixture name or JSON model path")
    p.add_argument("--bins", type=int, required=True, help="simplex grid resolution")
    p.add_argument("--kind", choices=("lower", "upper", "both"), default="both")
    p.add_argument("--out", default=None, help="artifact path prefix")
    p.add_argument("--membership-tol", type=float, default=None)
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("--query-mu", default=None, help="comma floats; report value here")
    p.add_argument("--query-nu", default=None)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("simulate", help="finite-population Monte Carlo")
    p.add_argument("--model", required=True)
    p.add_argument("--n1", type=int, required=True)
    p.add_argument("--n2", type=int, required=True)
    p.add_argument("--blue", required=True, help="uniform|stay|move|matching|coordinator:PATH")
    p.add_argument("--red", required=True)
    p.add_argument("--init-blue", default=None, help="agent states or weights")
    p.add_argument("--init-red", default=None)
    p.add_argument("--episodes", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="finite-population suboptimality table")
    p.add_argument("--model", default="example2")
    p.add_argument("--n-list", required=True, help="comma-separated Blue sizes")
    p.add_argument("--nu0", default="0.6,0.4")
    p.add_argument("--episodes", type=int, default=0, help="0 = exact oracle values")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--solve-artifact", default=None, help="NPZ grid for the coordinator")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("verify", help="run property suites, TAP output")
    p.add_argument(
        "--suite",
        choices=("core", "meanfield", "solver", "simulator", "all"),
        default="all",
    )
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("policy", help="query a local policy from a solve artifact")
    p.add_argument("--model", required=True)
    p.add_argument("--solve-artifact", required=True)
    p.add_argument("--t", type=int, required=True)
    p.add_argument("--mu", required=True)
    p.add_argument("--nu", required=True)
    p.add_argument("--kind", choices=("blue", "red"), default="blue")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_policy)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (CapacityError,) as err:
        sys.stderr.write(canonical_json(_error_payload(err)) + "\n")
        return EXIT_CAPACITY
    except (ReachabilityError, DegenerateGridError) as err:
        sys.stderr.write(canonical_json(_error_payload(err)) + "\n")
        return EXIT_INFEASIBLE
    except (InvalidInputError, ModelValidationError, CatalogError, ValueError) as err:
        sys.stderr.write(canonical_json(_error_payload(err)) + "\n")
        return EXIT_VALIDATION
    except OSError as err:
        sys.stderr.write(canonical_json(_error_payload(err)) + "\n")
        return EXIT_VALIDATION
