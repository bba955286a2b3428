"""Population-level dynamics: transition matrices, reachable sets, membership.

Once a team fixes a local policy, its population distribution evolves by a
row-stochastic matrix that depends on the current pair of distributions.  The
set of next distributions a team can reach by varying its policy is the convex
hull of the images of the finitely many deterministic policies; this module
builds those hulls, answers membership queries against them with an exact
phase-one simplex, and recovers a mixing policy for any attainable target.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from .core import (
    Distribution,
    GameModel,
    LocalPolicy,
    PurePolicy,
    _weights_of,
    eval_blue_kernel_row,
    eval_red_kernel_row,
)
from .errors import (
    CapacityError,
    InvalidInputError,
    ReachabilityError,
)

# Pivot / zero tolerance for the membership simplex.
SIMPLEX_TOL = 1e-9
# Default cap on deterministic-policy enumeration.
PURE_POLICY_CAP = 4096


@dataclass(frozen=True)
class TransitionMatrix:
    """A population transition matrix with the context it was built from."""

    entries: np.ndarray
    team: str
    t: int

    def __post_init__(self):
        arr = np.asarray(self.entries, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise InvalidInputError(f"expected a square matrix, got shape {arr.shape}")
        if arr.min() < 0:
            raise InvalidInputError("transition matrix entries must be non-negative")
        worst = float(np.abs(arr.sum(axis=1) - 1.0).max())
        if worst > 1e-9:
            raise InvalidInputError(
                f"transition matrix rows deviate from stochastic by {worst}"
            )
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "entries", arr)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]


def _policy_rows(policy, num_states: int, num_actions: int) -> np.ndarray:
    if isinstance(policy, PurePolicy):
        policy = policy.as_local()
    if not isinstance(policy, LocalPolicy):
        raise InvalidInputError("policy must be a LocalPolicy or PurePolicy")
    if policy.num_states != num_states or policy.num_actions != num_actions:
        raise InvalidInputError(
            f"policy shape ({policy.num_states}, {policy.num_actions}) does not "
            f"match ({num_states}, {num_actions})"
        )
    return policy.rows


def _kernel_rows_blue(model: GameModel, t: int, mu, nu) -> np.ndarray:
    """All Blue transition rows at (t, mu, nu): shape (states, actions, states)."""
    s, a = model.num_blue_states, model.num_blue_actions
    rows = np.empty((s, a, s))
    for x in range(s):
        for u in range(a):
            rows[x, u] = eval_blue_kernel_row(model, t, x, u, mu, nu).weights
    return rows


def _kernel_rows_red(model: GameModel, t: int, mu, nu) -> np.ndarray:
    s, a = model.num_red_states, model.num_red_actions
    rows = np.empty((s, a, s))
    for y in range(s):
        for v in range(a):
            rows[y, v] = eval_red_kernel_row(model, t, y, v, mu, nu).weights
    return rows


def build_blue_matrix(
    model: GameModel, t: int, mu, nu, policy
) -> TransitionMatrix:
    """The Blue population matrix induced by a local policy at (t, mu, nu)."""
    rows = _policy_rows(policy, model.num_blue_states, model.num_blue_actions)
    kernel_rows = _kernel_rows_blue(model, t, mu, nu)
    entries = np.einsum("xu,xuq->xq", rows, kernel_rows)
    return TransitionMatrix(entries=entries, team="blue", t=t)


def build_red_matrix(
    model: GameModel, t: int, mu, nu, policy
) -> TransitionMatrix:
    """Red counterpart of :func:`build_blue_matrix`."""
    rows = _policy_rows(policy, model.num_red_states, model.num_red_actions)
    kernel_rows = _kernel_rows_red(model, t, mu, nu)
    entries = np.einsum("yv,yvq->yq", rows, kernel_rows)
    return TransitionMatrix(entries=entries, team="red", t=t)


def mf_step_blue(model: GameModel, t: int, mu, nu, policy) -> Distribution:
    """Propagate the Blue distribution one step under a local policy."""
    matrix = build_blue_matrix(model, t, mu, nu, policy)
    return Distribution(_weights_of(mu) @ matrix.entries)


def mf_step_red(model: GameModel, t: int, mu, nu, policy) -> Distribution:
    """Propagate the Red distribution one step under a local policy."""
    matrix = build_red_matrix(model, t, mu, nu, policy)
    return Distribution(_weights_of(nu) @ matrix.entries)


def enumerate_pure_policies(
    num_states: int, num_actions: int, cap: int = PURE_POLICY_CAP
) -> List[PurePolicy]:
    """All deterministic local policies, in lexicographic assignment order.

    The first element always maps every state to action 0.  Raises
    CapacityError before enumerating if the count ``num_actions **
    num_states`` would exceed ``cap``.
    """
    if num_states < 1 or num_actions < 1:
        raise InvalidInputError("state and action counts must be positive")
    count = num_actions**num_states
    if count > cap:
        raise CapacityError(
            f"{count} deterministic policies exceed the cap of {cap}", cap=cap
        )
    return [
        PurePolicy(assignment=assign, num_actions=num_actions)
        for assign in itertools.product(range(num_actions), repeat=num_states)
    ]


class ReachableSet:
    """Convex hull of one-step images of a distribution under pure policies.

    ``vertex_array`` stacks the images (one row per deterministic policy, in
    the same lexicographic order as :func:`enumerate_pure_policies`), so the
    hull may list coincident vertices; geometry routines work on the raw
    array.
    """

    __slots__ = ("vertex_array", "pure_policies", "source")

    def __init__(self, vertex_array: np.ndarray, pure_policies, source):
        arr = np.asarray(vertex_array, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[0] == 0:
            raise InvalidInputError(f"vertex array must be 2-D, got shape {arr.shape}")
        if arr.shape[0] != len(pure_policies):
            raise InvalidInputError(
                f"{arr.shape[0]} vertices for {len(pure_policies)} pure policies"
            )
        self.vertex_array = arr
        self.pure_policies = tuple(pure_policies)
        self.source = source

    @property
    def vertices(self) -> Tuple[Distribution, ...]:
        return tuple(Distribution(row) for row in self.vertex_array)

    @property
    def dim(self) -> int:
        return self.vertex_array.shape[1]

    def __len__(self) -> int:
        return self.vertex_array.shape[0]


def _images_from_rows(mu: np.ndarray, kernel_rows: np.ndarray, pures) -> np.ndarray:
    assigns = np.array([p.assignment for p in pures])
    num_states = kernel_rows.shape[0]
    selected = kernel_rows[np.arange(num_states)[None, :], assigns, :]
    return np.einsum("x,kxq->kq", mu, selected)


def reachable_set_blue(
    model: GameModel, t: int, mu, nu, cap: int = PURE_POLICY_CAP
) -> ReachableSet:
    """One-step reachable distributions for Blue from (t, mu, nu)."""
    pures = enumerate_pure_policies(model.num_blue_states, model.num_blue_actions, cap)
    kernel_rows = _kernel_rows_blue(model, t, mu, nu)
    images = _images_from_rows(_weights_of(mu), kernel_rows, pures)
    return ReachableSet(images, pures, source=("blue", t))


def reachable_set_red(
    model: GameModel, t: int, mu, nu, cap: int = PURE_POLICY_CAP
) -> ReachableSet:
    """One-step reachable distributions for Red from (t, mu, nu)."""
    pures = enumerate_pure_policies(model.num_red_states, model.num_red_actions, cap)
    kernel_rows = _kernel_rows_red(model, t, mu, nu)
    images = _images_from_rows(_weights_of(nu), kernel_rows, pures)
    return ReachableSet(images, pures, source=("red", t))


@dataclass(frozen=True)
class FeasibilityResult:
    """Outcome of a hull membership query.

    ``weights`` are convex-combination coefficients over the hull vertices,
    ``residual`` is the infinity-norm defect of the reproduced target (weight
    -sum row included), and ``objective`` is the total 1-norm infeasibility
    the phase-one solve could not remove (0 for points inside the hull).
    """

    weights: np.ndarray
    residual: float
    status: str
    objective: float

    @property
    def feasible(self) -> bool:
        return self.status == "feasible"


def _phase_one(A: np.ndarray, b: np.ndarray, tol: float = SIMPLEX_TOL):
    """Minimize the 1-norm of (b - A @ lam) over lam >= 0.

    Phase-one simplex with signed artificial columns and Bland's rule, so
    termination is guaranteed and near-degenerate hulls (coincident vertices)
    are handled without cycling.  Returns (lam, objective).
    """
    m, n = A.shape
    ncols = n + 2 * m
    tableau = np.empty((m, ncols + 1))
    tableau[:, :n] = A
    tableau[:, n : n + m] = np.eye(m)
    tableau[:, n + m : ncols] = -np.eye(m)
    tableau[:, -1] = b
    # Start from the positive artificials; flip rows with negative rhs onto
    # the negative ones so the basis stays feasible.
    basis = []
    for i in range(m):
        if tableau[i, -1] < 0:
            tableau[i] = -tableau[i]
            basis.append(n + m + i)
        else:
            basis.append(n + i)
    cost = np.zeros(ncols)
    cost[n:] = 1.0
    # Objective row: reduced costs and (negated) objective value.
    zrow = np.empty(ncols + 1)
    zrow[:ncols] = cost
    zrow[-1] = 0.0
    zrow -= tableau.sum(axis=0)

    max_iter = 2000 + 40 * (ncols + m)
    for _ in range(max_iter):
        entering = -1
        for j in range(ncols):
            if zrow[j] < -tol:
                entering = j
                break
        if entering < 0:
            break
        col = tableau[:, entering]
        leave = -1
        best = np.inf
        for i in range(m):
            if col[i] > tol:
                ratio = tableau[i, -1] / col[i]
                if ratio < best - 1e-12 or (
                    ratio < best + 1e-12 and (leave < 0 or basis[i] < basis[leave])
                ):
                    best = ratio
                    leave = i
        if leave < 0:
            # The objective is bounded below by zero, so an unbounded ray can
            # only arise from round-off; stop at the current basis.
            break
        pivot = tableau[leave, entering]
        tableau[leave] /= pivot
        factor = tableau[:, entering].copy()
        factor[leave] = 0.0
        tableau -= np.outer(factor, tableau[leave])
        zrow -= zrow[entering] * tableau[leave]
        basis[leave] = entering
    lam = np.zeros(n)
    objective = 0.0
    for i, var in enumerate(basis):
        value = max(0.0, float(tableau[i, -1]))
        if var < n:
            lam[var] = value
        else:
            objective += value
    return lam, objective


def hull_membership(
    reachable: ReachableSet, target, tol: float
) -> FeasibilityResult:
    """Test whether ``target`` lies in the hull, up to ``tol`` in infinity norm.

    The returned weights always describe the best 1-norm approximation the
    hull admits; when that approximation misses the target by more than
    ``tol`` in any coordinate (or in total weight) the result is infeasible
    and carries the unremovable defect.
    """
    tw = _weights_of(target)
    if tw.shape[0] != reachable.dim:
        raise InvalidInputError(
            f"target dimension {tw.shape[0]} does not match hull dimension "
            f"{reachable.dim}"
        )
    if tol < 0:
        raise InvalidInputError("tol must be non-negative")
    M = reachable.vertex_array.T
    d, k = M.shape
    A = np.vstack([M, np.ones((1, k))])
    b = np.concatenate([tw, [1.0]])
    lam, objective = _phase_one(A, b)
    total = float(lam.sum())
    if total > 1e-12:
        # Report true convex-combination coefficients; the phase-one vertex
        # already satisfies the weight-sum row to within tol, so this nudge
        # cannot move the residual past the acceptance slack.
        lam = lam / total
    residual = float(np.abs(b - A @ lam).max())
    status = "feasible" if residual <= tol + 1e-12 else "infeasible"
    return FeasibilityResult(
        weights=lam, residual=residual, status=status, objective=objective
    )


def _mix_pure_policies(pures, lam: np.ndarray) -> LocalPolicy:
    num_states = len(pures[0].assignment)
    num_actions = pures[0].num_actions
    rows = np.zeros((num_states, num_actions))
    for weight, pure in zip(lam, pures):
        if weight <= 0.0:
            continue
        for s, a in enumerate(pure.assignment):
            rows[s, a] += weight
    # Weight drift from the membership solve is at most the residual; fold it
    # back into each row so the policy invariant holds exactly.
    sums = rows.sum(axis=1, keepdims=True)
    rows = np.where(sums > 0, rows / np.where(sums > 0, sums, 1.0), 0.0)
    empty = rows.sum(axis=1) == 0
    if np.any(empty):
        rows[empty] = 1.0 / num_actions
    return LocalPolicy(rows)


def extract_policy(
    model: GameModel,
    t: int,
    mu,
    nu,
    target,
    team: str = "blue",
    tol: float = SIMPLEX_TOL,
    cap: int = PURE_POLICY_CAP,
) -> LocalPolicy:
    """Recover a local policy steering the team's distribution to ``target``.

    Mixes the deterministic policies with the membership weights; because the
    one-step map is affine in the policy, the mixture reproduces any point the
    membership solve reproduces.  Raises ReachabilityError (with the residual)
    when the target sits outside the reachable hull by more than ``tol``.
    """
    if team == "blue":
        reachable = reachable_set_blue(model, t, mu, nu, cap)
    elif team == "red":
        reachable = reachable_set_red(model, t, mu, nu, cap)
    else:
        raise InvalidInputError(f"team must be 'blue' or 'red', got {team!r}")
    result = hull_membership(reachable, target, tol)
    if not result.feasible:
        raise ReachabilityError(
            f"target is outside the {team} reachable set "
            f"(residual {result.residual:.3e} > tol {tol:.3e})",
            residual=result.residual,
        )
    return _mix_pure_policies(reachable.pure_policies, result.weights)


def nearest_hull_point(reachable: ReachableSet, target) -> np.ndarray:
    """The hull point closest to ``target`` in total variation."""
    tw = _weights_of(target)
    if tw.shape[0] != reachable.dim:
        raise InvalidInputError("target dimension does not match hull dimension")
    if reachable.dim == 2:
        lo = float(reachable.vertex_array[:, 0].min())
        hi = float(reachable.vertex_array[:, 0].max())
        c = min(max(float(tw[0]), lo), hi)
        return np.array([c, 1.0 - c])
    lam = _tv_projection_weights(reachable.vertex_array, tw)
    return reachable.vertex_array.T @ lam


def _tv_projection_weights(vertex_array: np.ndarray, target: np.ndarray) -> np.ndarray:
    """Convex weights of the TV-nearest hull point, via a small LP."""
    from scipy.optimize import linprog

    k, d = vertex_array.shape
    M = vertex_array.T
    # Variables [lam (k); s (d)]: minimize 0.5 * sum(s) subject to
    # |target - M lam| <= s componentwise and lam on the simplex.
    c = np.concatenate([np.zeros(k), np.full(d, 0.5)])
    A_ub = np.vstack(
        [
            np.hstack([M, -np.eye(d)]),
            np.hstack([-M, -np.eye(d)]),
        ]
    )
    b_ub = np.concatenate([target, -target])
    A_eq = np.concatenate([np.ones(k), np.zeros(d)])[None, :]
    res = linprog(
        c,
        A_ub=A_ub,
        b_ub=b_ub,
        A_eq=A_eq,
        b_eq=[1.0],
        bounds=[(0, None)] * (k + d),
        method="highs",
    )
    if not res.success:
        raise ReachabilityError(
            f"TV projection LP failed: {res.message}", residual=float("nan")
        )
    lam = np.clip(res.x[:k], 0.0, None)
    return lam / lam.sum()


def _point_to_hull_tv(vertex_array: np.ndarray, point: np.ndarray) -> float:
    lam = _tv_projection_weights(vertex_array, point)
    return 0.5 * float(np.abs(point - vertex_array.T @ lam).sum())


def hausdorff_distance(a: ReachableSet, b: ReachableSet) -> float:
    """Hausdorff distance between two hulls under total variation.

    Two-state hulls are intervals in their first coordinate, where the
    distance is exact endpoint arithmetic; higher dimensions solve one small
    linear program per vertex.
    """
    if a.dim != b.dim:
        raise InvalidInputError(f"dimension mismatch: {a.dim} vs {b.dim}")
    if a.dim == 2:
        a_lo, a_hi = float(a.vertex_array[:, 0].min()), float(a.vertex_array[:, 0].max())
        b_lo, b_hi = float(b.vertex_array[:, 0].min()), float(b.vertex_array[:, 0].max())
        return max(abs(a_lo - b_lo), abs(a_hi - b_hi))
    forward = max(_point_to_hull_tv(b.vertex_array, v) for v in a.vertex_array)
    backward = max(_point_to_hull_tv(a.vertex_array, v) for v in b.vertex_array)
    return max(forward, backward)
