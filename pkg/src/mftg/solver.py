"""Backward induction for the two-coordinator game on simplex grids.

The Blue and Red coordinators play a zero-sum game over population
distributions.  Discretizing both simplices into lattice grids turns each
backward-induction step into a max-min (lower value) or min-max (upper value)
over the grid points lying inside the teams' one-step reachable sets.  For
two-state teams the reachable sets are intervals in the first coordinate, and
the inner optimization collapses to range queries answered by sparse tables;
general state counts fall back to explicit membership solves per candidate
(practical only for coarse grids, roughly state counts <= 3 and bins <= 40).
"""
from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterator, List, Optional, Tuple

import numpy as np

from .core import (
    Distribution,
    GameModel,
    LipschitzBundle,
    LocalPolicy,
    _weights_of,
    eval_reward,
)
from .errors import (
    DegenerateGridError,
    InvalidInputError,
    ModelValidationError,
    ReachabilityError,
)
from .meanfield import (
    PURE_POLICY_CAP,
    extract_policy,
    hull_membership,
    nearest_hull_point,
    reachable_set_blue,
    reachable_set_red,
)
from .rmq import SparseRangeTable

# Guard added to window comparisons so float round-off at a window edge never
# drops a candidate that exact arithmetic would keep.
EDGE_GUARD = 1e-12


def iter_compositions(total: int, parts: int) -> Iterator[Tuple[int, ...]]:
    """All non-negative integer vectors of the given length summing to total,
    in lexicographic order."""
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in iter_compositions(total - first, parts - 1):
            yield (first,) + rest


class SimplexGrid:
    """Lattice discretization of a probability simplex.

    Points have coordinates that are multiples of 1/bins and are stored in
    lexicographic order, so index lookups and tie-breaking are deterministic.
    For dimension 2 the point at index i is simply [i/bins, 1 - i/bins].
    """

    __slots__ = ("dim", "bins", "points")

    def __init__(self, dim: int, bins: int):
        if not isinstance(dim, (int, np.integer)) or dim < 1:
            raise InvalidInputError(f"dim must be a positive integer, got {dim!r}")
        if not isinstance(bins, (int, np.integer)) or bins < 1:
            raise InvalidInputError(f"bins must be a positive integer, got {bins!r}")
        self.dim = int(dim)
        self.bins = int(bins)
        lattice = np.array(list(iter_compositions(self.bins, self.dim)), dtype=np.float64)
        points = lattice / self.bins
        points.setflags(write=False)
        self.points = points

    def __len__(self) -> int:
        return self.points.shape[0]

    def point(self, index: int) -> np.ndarray:
        return self.points[index]

    def distribution(self, index: int) -> Distribution:
        return Distribution(self.points[index])

    def snap(self, weights) -> int:
        """Index of the nearest grid point in total variation.

        Ties resolve to the lexicographically smallest point, which is the
        first minimizer in storage order.
        """
        w = _weights_of(weights)
        if w.shape[0] != self.dim:
            raise InvalidInputError(
                f"dimension mismatch: point has {w.shape[0]}, grid has {self.dim}"
            )
        dists = np.abs(self.points - w).sum(axis=1)
        return int(np.argmin(dists))

    def __repr__(self) -> str:
        return f"SimplexGrid(dim={self.dim}, bins={self.bins}, points={len(self)})"


@dataclass(frozen=True)
class SolveOptions:
    """Tuning knobs for the grid solves.

    ``membership_tol`` is the hull-membership slack used when collecting
    candidate successors; None means half a grid cell (1/(2*bins)) per side.
    ``force_generic`` disables the two-state acceleration (used by the
    cross-check suite).  ``threads`` splits each timestep's row sweep across
    worker threads; output is independent of the worker count.
    """

    membership_tol: Optional[float] = None
    record_successors: bool = True
    force_generic: bool = False
    pure_policy_cap: int = PURE_POLICY_CAP
    threads: Optional[int] = None


@dataclass(frozen=True)
class ValueGrid:
    """Solved value surfaces with optional argmax/argmin successor records."""

    kind: str
    blue_grid: SimplexGrid
    red_grid: SimplexGrid
    values: np.ndarray
    successors: Optional[np.ndarray]
    membership_tol_blue: float
    membership_tol_red: float

    @property
    def horizon(self) -> int:
        return self.values.shape[0] - 1

    def value_at(self, t: int, mu, nu, interpolate: bool = False) -> float:
        """Value lookup; off-grid points snap, or bilinear for 2-state grids."""
        if not 0 <= t <= self.horizon:
            raise InvalidInputError(f"timestep {t} outside [0, {self.horizon}]")
        mw = _weights_of(mu)
        nw = _weights_of(nu)
        if interpolate:
            if self.blue_grid.dim != 2 or self.red_grid.dim != 2:
                raise InvalidInputError(
                    "interpolation is available only for 2-state grids"
                )
            return self._bilinear(t, float(mw[0]), float(nw[0]))
        i = self.blue_grid.snap(mw)
        j = self.red_grid.snap(nw)
        return float(self.values[t, i, j])

    def _bilinear(self, t: int, mu0: float, nu0: float) -> float:
        gb, gr = self.blue_grid.bins, self.red_grid.bins
        ci = min(max(mu0, 0.0), 1.0) * gb
        cj = min(max(nu0, 0.0), 1.0) * gr
        i0 = min(int(math.floor(ci)), gb - 1)
        j0 = min(int(math.floor(cj)), gr - 1)
        a = ci - i0
        b = cj - j0
        v = self.values[t]
        return float(
            (1 - a) * (1 - b) * v[i0, j0]
            + a * (1 - b) * v[i0 + 1, j0]
            + (1 - a) * b * v[i0, j0 + 1]
            + a * b * v[i0 + 1, j0 + 1]
        )


def _resolve_tols(options: SolveOptions, bg: SimplexGrid, rg: SimplexGrid):
    if options.membership_tol is not None:
        if options.membership_tol < 0:
            raise InvalidInputError("membership_tol must be non-negative")
        return float(options.membership_tol), float(options.membership_tol)
    return 0.5 / bg.bins, 0.5 / rg.bins


def _norm_next_prob(v0: float, v1: float, what: str) -> float:
    """First-coordinate transition probability from a two-entry kernel row."""
    if not (math.isfinite(v0) and math.isfinite(v1)):
        raise ModelValidationError(f"{what}: non-finite kernel entry")
    if min(v0, v1) < -1e-12:
        raise ModelValidationError(f"{what}: entry {min(v0, v1)} below the clamp")
    v0 = max(v0, 0.0)
    v1 = max(v1, 0.0)
    total = v0 + v1
    if abs(total - 1.0) > 1e-6:
        raise ModelValidationError(f"{what}: row sums to {total}")
    return v0 / total


def _interval_blue(model: GameModel, t: int, mu: np.ndarray, nu: np.ndarray):
    """Reachable interval of next mu(x0) for a 2-state Blue team.

    Pure policies pick actions per state independently, so the interval
    endpoints combine the per-state extremes of the stay-at-x0 probability.
    """
    lo = hi = 0.0
    kernel = model.blue_kernel
    for x in range(2):
        pmin = math.inf
        pmax = -math.inf
        for u in range(model.num_blue_actions):
            p = _norm_next_prob(
                kernel(t, 0, x, u, mu, nu),
                kernel(t, 1, x, u, mu, nu),
                f"blue kernel t={t} x={x} u={u}",
            )
            if p < pmin:
                pmin = p
            if p > pmax:
                pmax = p
        lo += mu[x] * pmin
        hi += mu[x] * pmax
    return lo, hi


def _interval_red(model: GameModel, t: int, mu: np.ndarray, nu: np.ndarray):
    lo = hi = 0.0
    kernel = model.red_kernel
    for y in range(2):
        pmin = math.inf
        pmax = -math.inf
        for v in range(model.num_red_actions):
            p = _norm_next_prob(
                kernel(t, 0, y, v, mu, nu),
                kernel(t, 1, y, v, mu, nu),
                f"red kernel t={t} y={y} v={v}",
            )
            if p < pmin:
                pmin = p
            if p > pmax:
                pmax = p
        lo += nu[y] * pmin
        hi += nu[y] * pmax
    return lo, hi


def _interval_window(coords: np.ndarray, lo: float, hi: float, tol: float):
    """Grid indices whose coordinate lies within tol of the interval [lo, hi]."""
    left = int(np.searchsorted(coords, lo - tol - EDGE_GUARD, side="left"))
    right = int(np.searchsorted(coords, hi + tol + EDGE_GUARD, side="right")) - 1
    return left, right


def _generic_candidates(reachable, grid: SimplexGrid, tol: float) -> np.ndarray:
    """Grid points passing hull membership, by explicit feasibility solves."""
    verts = reachable.vertex_array
    lo = verts.min(axis=0) - tol - EDGE_GUARD
    hi = verts.max(axis=0) + tol + EDGE_GUARD
    box = np.all((grid.points >= lo) & (grid.points <= hi), axis=1)
    found = []
    for idx in np.nonzero(box)[0]:
        if hull_membership(reachable, grid.points[idx], tol).feasible:
            found.append(int(idx))
    return np.asarray(found, dtype=np.int64)


def _degenerate(kind: str, t: int, i: int, j: int, side: str) -> DegenerateGridError:
    return DegenerateGridError(
        f"{kind} solve at t={t}, grid cell ({i}, {j}): the {side} reachable set "
        f"contains no grid points within the membership tolerance; use a finer "
        f"grid (larger bins)"
    )


def _sweep_rows_fast(
    model, t, bg, rg, W, kind, tol_b, tol_r, table, out_vals, out_succ, rows
):
    pb = np.ascontiguousarray(bg.points[:, 0])
    pr = np.ascontiguousarray(rg.points[:, 0])
    reward = model.reward
    for i in rows:
        mu = bg.points[i]
        for j in range(len(rg)):
            nu = rg.points[j]
            blo, bhi = _interval_blue(model, t, mu, nu)
            rlo, rhi = _interval_red(model, t, mu, nu)
            b0, b1 = _interval_window(pb, blo, bhi, tol_b)
            if b0 > b1:
                raise _degenerate(kind, t, i, j, "blue")
            r0, r1 = _interval_window(pr, rlo, rhi, tol_r)
            if r0 > r1:
                raise _degenerate(kind, t, i, j, "red")
            if kind == "lower":
                per_row_min = table.query(r0, r1)
                seg = per_row_min[b0 : b1 + 1]
                rel = int(np.argmax(seg))
                best = float(seg[rel])
                bi = b0 + rel
                if out_succ is not None:
                    row = W[bi, r0 : r1 + 1]
                    bj = r0 + int(np.argmax(row == best))
                    out_succ[i, j, 0] = bi
                    out_succ[i, j, 1] = bj
            else:
                per_col_max = table.query(b0, b1)
                seg = per_col_max[r0 : r1 + 1]
                rel = int(np.argmin(seg))
                best = float(seg[rel])
                bj = r0 + rel
                if out_succ is not None:
                    col = W[b0 : b1 + 1, bj]
                    bi = b0 + int(np.argmax(col == best))
                    out_succ[i, j, 0] = bi
                    out_succ[i, j, 1] = bj
            out_vals[i, j] = float(reward(t, mu, nu)) + best


def _sweep_rows_generic(
    model, t, bg, rg, W, kind, tol_b, tol_r, out_vals, out_succ, rows, cap, caches
):
    blue_cache, red_cache = caches
    for i in rows:
        mu = bg.points[i]
        for j in range(len(rg)):
            nu = rg.points[j]
            rs_b = reachable_set_blue(model, t, mu, nu, cap)
            key_b = rs_b.vertex_array.tobytes()
            cand_b = blue_cache.get(key_b)
            if cand_b is None:
                cand_b = _generic_candidates(rs_b, bg, tol_b)
                blue_cache[key_b] = cand_b
            if cand_b.size == 0:
                raise _degenerate(kind, t, i, j, "blue")
            rs_r = reachable_set_red(model, t, mu, nu, cap)
            key_r = rs_r.vertex_array.tobytes()
            cand_r = red_cache.get(key_r)
            if cand_r is None:
                cand_r = _generic_candidates(rs_r, rg, tol_r)
                red_cache[key_r] = cand_r
            if cand_r.size == 0:
                raise _degenerate(kind, t, i, j, "red")
            sub = W[np.ix_(cand_b, cand_r)]
            if kind == "lower":
                per_row_min = sub.min(axis=1)
                rel = int(np.argmax(per_row_min))
                best = float(per_row_min[rel])
                bi = int(cand_b[rel])
                bj = int(cand_r[int(np.argmax(sub[rel] == best))])
            else:
                per_col_max = sub.max(axis=0)
                rel = int(np.argmin(per_col_max))
                best = float(per_col_max[rel])
                bj = int(cand_r[rel])
                bi = int(cand_b[int(np.argmax(sub[:, rel] == best))])
            if out_succ is not None:
                out_succ[i, j, 0] = bi
                out_succ[i, j, 1] = bj
            out_vals[i, j] = eval_reward(model, t, mu, nu) + best


def _solve(model: GameModel, blue_grid, red_grid, kind: str, options) -> ValueGrid:
    if options is None:
        options = SolveOptions()
    if not isinstance(blue_grid, SimplexGrid) or not isinstance(red_grid, SimplexGrid):
        raise InvalidInputError("blue_grid and red_grid must be SimplexGrid instances")
    if blue_grid.dim != model.num_blue_states or red_grid.dim != model.num_red_states:
        raise InvalidInputError(
            f"grid dimensions ({blue_grid.dim}, {red_grid.dim}) do not match model "
            f"state counts ({model.num_blue_states}, {model.num_red_states})"
        )
    tol_b, tol_r = _resolve_tols(options, blue_grid, red_grid)
    T = model.horizon
    nb, nr = len(blue_grid), len(red_grid)
    values = np.empty((T + 1, nb, nr))
    for i in range(nb):
        mu = blue_grid.points[i]
        for j in range(nr):
            values[T, i, j] = model.reward(T, mu, red_grid.points[j])
    if not np.all(np.isfinite(values[T])):
        raise ModelValidationError("terminal reward produced non-finite values")
    successors = (
        np.full((T, nb, nr, 2), -1, dtype=np.int32)
        if options.record_successors
        else None
    )
    fast = (
        not options.force_generic
        and model.num_blue_states == 2
        and model.num_red_states == 2
    )
    workers = options.threads if options.threads and options.threads > 1 else 1
    for t in range(T - 1, -1, -1):
        W = values[t + 1]
        succ_t = successors[t] if successors is not None else None
        if fast:
            table = SparseRangeTable(W, axis=1 if kind == "lower" else 0,
                                     mode="min" if kind == "lower" else "max")
            run = lambda rows: _sweep_rows_fast(
                model, t, blue_grid, red_grid, W, kind, tol_b, tol_r, table,
                values[t], succ_t, rows
            )
        else:
            caches = ({}, {})
            run = lambda rows: _sweep_rows_generic(
                model, t, blue_grid, red_grid, W, kind, tol_b, tol_r,
                values[t], succ_t, rows, options.pure_policy_cap, caches
            )
        all_rows = range(nb)
        if workers == 1:
            run(all_rows)
        else:
            # Each worker owns a disjoint slice of rows; every cell's result
            # depends only on the immutable t+1 surface, so the outcome is
            # identical for any worker count.
            chunks = [list(all_rows)[k::workers] for k in range(workers)]
            with ThreadPoolExecutor(max_workers=workers) as pool:
                list(pool.map(run, chunks))
    return ValueGrid(
        kind=kind,
        blue_grid=blue_grid,
        red_grid=red_grid,
        values=values,
        successors=successors,
        membership_tol_blue=tol_b,
        membership_tol_red=tol_r,
    )


def solve_lower(
    model: GameModel,
    blue_grid: SimplexGrid,
    red_grid: SimplexGrid,
    options: Optional[SolveOptions] = None,
) -> ValueGrid:
    """Max-min backward induction: Blue commits first at every step."""
    return _solve(model, blue_grid, red_grid, "lower", options)


def solve_upper(
    model: GameModel,
    blue_grid: SimplexGrid,
    red_grid: SimplexGrid,
    options: Optional[SolveOptions] = None,
) -> ValueGrid:
    """Min-max backward induction: Red commits first at every step."""
    return _solve(model, blue_grid, red_grid, "upper", options)


def candidate_indices(
    model: GameModel,
    t: int,
    mu,
    nu,
    grid: SimplexGrid,
    team: str,
    tol: float,
    cap: int = PURE_POLICY_CAP,
    force_generic: bool = False,
) -> np.ndarray:
    """Grid points inside the team's one-step reachable set, up to tol."""
    mw = _weights_of(mu)
    nw = _weights_of(nu)
    if team not in ("blue", "red"):
        raise InvalidInputError(f"team must be 'blue' or 'red', got {team!r}")
    two_state = model.num_blue_states == 2 and model.num_red_states == 2
    if two_state and grid.dim == 2 and not force_generic:
        if team == "blue":
            lo, hi = _interval_blue(model, t, mw, nw)
        else:
            lo, hi = _interval_red(model, t, mw, nw)
        coords = np.ascontiguousarray(grid.points[:, 0])
        left, right = _interval_window(coords, lo, hi, tol)
        return np.arange(left, right + 1, dtype=np.int64)
    reachable = (
        reachable_set_blue(model, t, mw, nw, cap)
        if team == "blue"
        else reachable_set_red(model, t, mw, nw, cap)
    )
    return _generic_candidates(reachable, grid, tol)


def _recorded_successor(value_grid: ValueGrid, t: int, mu, nu):
    if value_grid.successors is None:
        raise InvalidInputError("value grid was solved without successor records")
    if not 0 <= t < value_grid.horizon:
        raise InvalidInputError(
            f"timestep {t} outside the transition range [0, {value_grid.horizon})"
        )
    i = value_grid.blue_grid.snap(mu)
    j = value_grid.red_grid.snap(nu)
    bi, bj = value_grid.successors[t, i, j]
    return i, j, int(bi), int(bj)


def greedy_policy(
    value_grid: ValueGrid, model: GameModel, t: int, mu, nu, team: str = "blue"
) -> Tuple[LocalPolicy, Distribution]:
    """The recorded one-step optimizer at (t, mu, nu) and a policy reaching it.

    (mu, nu) snap to the nearest grid cell for the successor lookup.  The
    recorded successor may sit just outside the true reachable hull (by up to
    the membership tolerance the solve ran with); in that case the extraction
    silently re-solves against the nearest hull point.  Misses beyond that
    tolerance are unexpected and emit a warning.
    """
    _, _, bi, bj = _recorded_successor(value_grid, t, mu, nu)
    if team == "blue":
        target = value_grid.blue_grid.points[bi]
        slack = value_grid.membership_tol_blue
    elif team == "red":
        target = value_grid.red_grid.points[bj]
        slack = value_grid.membership_tol_red
    else:
        raise InvalidInputError(f"team must be 'blue' or 'red', got {team!r}")
    try:
        policy = extract_policy(model, t, mu, nu, target, team=team)
    except ReachabilityError as err:
        reachable = (
            reachable_set_blue(model, t, mu, nu)
            if team == "blue"
            else reachable_set_red(model, t, mu, nu)
        )
        projected = nearest_hull_point(reachable, target)
        if err.residual > slack + 1e-9:
            warnings.warn(
                f"recorded successor misses the {team} reachable set by "
                f"{err.residual:.3e} (membership tolerance {slack:.3e}); "
                "extracting the nearest hull point instead",
                stacklevel=2,
            )
        policy = extract_policy(model, t, mu, nu, projected, team=team, tol=1e-7)
    return policy, Distribution(target)


class CoordinationStrategy:
    """Grid-indexed local policies recovered lazily from a solved value grid.

    ``policy_at`` snaps (mu, nu) to the grid, looks up the recorded successor
    for its team, and extracts (then caches) a policy whose one-step image is
    that successor.
    """

    def __init__(self, value_grid: ValueGrid, model: GameModel, kind: str):
        if kind not in ("blue", "red"):
            raise InvalidInputError(f"kind must be 'blue' or 'red', got {kind!r}")
        if value_grid.successors is None:
            raise InvalidInputError(
                "coordination strategies need successor records; re-solve with "
                "record_successors=True"
            )
        self.value_grid = value_grid
        self.model = model
        self.kind = kind
        self._cache = {}

    def successor_at(self, t: int, mu, nu) -> Distribution:
        _, _, bi, bj = _recorded_successor(self.value_grid, t, mu, nu)
        grid = self.value_grid.blue_grid if self.kind == "blue" else self.value_grid.red_grid
        return Distribution(grid.points[bi if self.kind == "blue" else bj])

    def policy_at(self, t: int, mu, nu) -> LocalPolicy:
        i, j, bi, bj = _recorded_successor(self.value_grid, t, mu, nu)
        key = (t, i, j)
        cached = self._cache.get(key)
        if cached is not None:
            return cached
        grid_mu = self.value_grid.blue_grid.points[i]
        grid_nu = self.value_grid.red_grid.points[j]
        policy, _ = greedy_policy(
            self.value_grid, self.model, t, grid_mu, grid_nu, team=self.kind
        )
        self._cache[key] = policy
        return policy


def rollout_coordinator(
    model: GameModel,
    blue_strategy: CoordinationStrategy,
    red_strategy: CoordinationStrategy,
    mu0,
    nu0,
) -> Tuple[List[Tuple[Distribution, Distribution]], float]:
    """Deterministic joint trajectory under the two coordination strategies."""
    from .meanfield import mf_step_blue, mf_step_red

    mu = Distribution(_weights_of(mu0))
    nu = Distribution(_weights_of(nu0))
    trajectory = [(mu, nu)]
    total = 0.0
    for t in range(model.horizon):
        total += eval_reward(model, t, mu, nu)
        pi = blue_strategy.policy_at(t, mu.weights, nu.weights)
        sigma = red_strategy.policy_at(t, mu.weights, nu.weights)
        mu_next = mf_step_blue(model, t, mu, nu, pi)
        nu_next = mf_step_red(model, t, mu, nu, sigma)
        mu, nu = mu_next, nu_next
        trajectory.append((mu, nu))
    total += eval_reward(model, model.horizon, mu, nu)
    return trajectory, total


@dataclass(frozen=True)
class AnnouncedMoveExploit:
    """Outcome of letting one team announce its first move and the other reply."""

    total: float
    blue_move: Distribution
    red_move: Distribution


def exploit_announced_move(
    model: GameModel, value_grid: ValueGrid, mu0, nu0
) -> AnnouncedMoveExploit:
    """Best Blue reply when Red announces its recorded first move.

    Red reveals the minimizer recorded at the (snapped) initial cell; Blue
    re-optimizes its own first move against that fixed choice, and play
    continues with the solved values from the resulting cell.  Against a
    max-min (lower) grid this is exactly the first-mover disadvantage probe:
    the result is at least the lower value at the initial cell.
    """
    i, j, _, bj = _recorded_successor(value_grid, 0, mu0, nu0)
    mu = value_grid.blue_grid.points[i]
    nu = value_grid.red_grid.points[j]
    cand = candidate_indices(
        model, 0, mu, nu, value_grid.blue_grid, "blue", value_grid.membership_tol_blue
    )
    if cand.size == 0:
        raise DegenerateGridError(
            "no Blue grid candidates at the initial cell; use a finer grid"
        )
    continuation = value_grid.values[1][cand, bj]
    rel = int(np.argmax(continuation))
    bi = int(cand[rel])
    total = eval_reward(model, 0, mu, nu) + float(continuation[rel])
    return AnnouncedMoveExploit(
        total=total,
        blue_move=Distribution(value_grid.blue_grid.points[bi]),
        red_move=Distribution(value_grid.red_grid.points[bj]),
    )


def lipschitz_value_constant(bundle: LipschitzBundle, t: int, horizon: int) -> float:
    """How fast the t-th value surface can move per unit of TV perturbation.

    Accumulates the per-step reachable-set constants (1 + half the kernel
    constant, per team) into the cumulative-reward sensitivity at time t.
    """
    if bundle is None or not isinstance(bundle, LipschitzBundle):
        raise InvalidInputError("a complete LipschitzBundle is required")
    if not isinstance(t, (int, np.integer)) or not isinstance(horizon, (int, np.integer)):
        raise InvalidInputError("t and horizon must be integers")
    if not 0 <= t <= horizon:
        raise InvalidInputError(f"need 0 <= t <= horizon, got t={t}, horizon={horizon}")
    total = 1.0
    acc = 1.0
    for k in range(t, horizon):
        acc *= (1.0 + 0.5 * bundle.lf_at(k)) + (1.0 + 0.5 * bundle.lg_at(k))
        total += acc
    return bundle.l_r * total
