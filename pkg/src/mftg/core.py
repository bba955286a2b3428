"""Core domain types for two-team population games.

A game couples a Blue team and a Red team of finite-state agents through the
empirical state distributions of the two populations.  This module holds the
shared vocabulary: probability vectors, the game model (per-agent transition
kernels plus a scalar team reward), local policies, and team strategies.  The
mean-field propagation and solving machinery lives in sibling modules.

Conventions
-----------
* Distributions are row vectors over a finite state set.
* Kernel evaluators have signature ``kernel(t, next_state, state, action,
  mu, nu) -> float`` where ``mu`` / ``nu`` are plain 1-D float arrays (the
  Blue / Red population distributions).
* The reward evaluator has signature ``reward(t, mu, nu) -> float`` and is
  defined for every ``t`` from 0 through the horizon inclusive.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .errors import InvalidInputError, ModelValidationError

# Tolerances used across the package.  Weight entries may dip this far below
# zero before being treated as errors rather than round-off.
WEIGHT_CLAMP = 1e-12
# Probability vectors handed to Distribution must sum to 1 this tightly.
SUM_TOL = 1e-9
# Kernel rows evaluated at arbitrary (mu, nu) get a looser budget before they
# are rejected; rows inside that budget are renormalized.
ROW_SUM_TOL = 1e-6

KernelFn = Callable[[int, int, int, int, np.ndarray, np.ndarray], float]
RewardFn = Callable[[int, np.ndarray, np.ndarray], float]


def _as_weight_array(values) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 1 or arr.size == 0:
        raise InvalidInputError(
            f"expected a non-empty 1-D weight vector, got shape {arr.shape}"
        )
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError("weight vector contains non-finite entries")
    return arr


class Distribution:
    """A probability vector over a finite state set.

    Entries in ``[-1e-12, 0)`` are clamped to zero; anything more negative is
    rejected.  The total mass must be 1 within ``1e-9``.  The stored array is
    read-only so a Distribution can be shared safely.
    """

    __slots__ = ("_weights",)

    def __init__(self, weights):
        arr = _as_weight_array(weights).copy()
        low = arr.min()
        if low < -WEIGHT_CLAMP:
            raise InvalidInputError(
                f"weight {low} is below the -{WEIGHT_CLAMP} clamp threshold"
            )
        np.clip(arr, 0.0, None, out=arr)
        total = float(arr.sum())
        if abs(total - 1.0) > SUM_TOL:
            raise InvalidInputError(
                f"weights sum to {total}, expected 1 within {SUM_TOL}"
            )
        arr.setflags(write=False)
        self._weights = arr

    @property
    def weights(self) -> np.ndarray:
        return self._weights

    @property
    def dim(self) -> int:
        return self._weights.shape[0]

    def __len__(self) -> int:
        return self._weights.shape[0]

    def __getitem__(self, idx: int) -> float:
        return float(self._weights[idx])

    def __iter__(self):
        return iter(self._weights.tolist())

    def __eq__(self, other) -> bool:
        if not isinstance(other, Distribution):
            return NotImplemented
        return self._weights.shape == other._weights.shape and bool(
            np.array_equal(self._weights, other._weights)
        )

    def __repr__(self) -> str:
        body = ", ".join(f"{w:.6g}" for w in self._weights)
        return f"Distribution([{body}])"


def empirical_distribution(states: Sequence[int], num_states: int) -> Distribution:
    """Empirical distribution of a list of agent states.

    Counts are divided by the population size with exact rational arithmetic
    before conversion to float, so e.g. three agents spread over three states
    give weights that sum to 1 within float round-off of the exact thirds.
    """
    if num_states < 1:
        raise InvalidInputError("num_states must be at least 1")
    states_arr = np.asarray(states, dtype=np.int64)
    if states_arr.ndim != 1 or states_arr.size == 0:
        raise InvalidInputError("states must be a non-empty 1-D integer sequence")
    if states_arr.min() < 0 or states_arr.max() >= num_states:
        raise InvalidInputError(
            f"state labels must lie in [0, {num_states}), got range "
            f"[{states_arr.min()}, {states_arr.max()}]"
        )
    counts = np.bincount(states_arr, minlength=num_states)
    n = int(states_arr.size)
    weights = [float(Fraction(int(c), n)) for c in counts]
    return Distribution(weights)


def _weights_of(value) -> np.ndarray:
    if isinstance(value, Distribution):
        return value.weights
    return _as_weight_array(value)


def tv_distance(a, b) -> float:
    """Total-variation distance: half the 1-norm of the difference."""
    wa = _weights_of(a)
    wb = _weights_of(b)
    if wa.shape != wb.shape:
        raise InvalidInputError(
            f"dimension mismatch: {wa.shape[0]} vs {wb.shape[0]}"
        )
    return 0.5 * float(np.abs(wa - wb).sum())


@dataclass(frozen=True)
class LipschitzBundle:
    """Declared Lipschitz constants for a model.

    ``l_f`` and ``l_g`` bound how strongly a kernel row moves (in 1-norm) per
    unit of total-variation change in ``(mu, nu)``; ``l_r`` bounds the reward
    the same way.  ``l_f`` / ``l_g`` may be scalars or per-timestep sequences.
    """

    l_f: Union[float, tuple]
    l_g: Union[float, tuple]
    l_r: float

    def __post_init__(self):
        object.__setattr__(self, "l_f", _normalize_lip(self.l_f, "l_f"))
        object.__setattr__(self, "l_g", _normalize_lip(self.l_g, "l_g"))
        if not (math.isfinite(self.l_r) and self.l_r >= 0):
            raise InvalidInputError("l_r must be finite and non-negative")

    def lf_at(self, t: int) -> float:
        return _lip_at(self.l_f, t)

    def lg_at(self, t: int) -> float:
        return _lip_at(self.l_g, t)


def _normalize_lip(value, name):
    if np.isscalar(value):
        v = float(value)
        if not (math.isfinite(v) and v >= 0):
            raise InvalidInputError(f"{name} must be finite and non-negative")
        return v
    vals = tuple(float(v) for v in value)
    if not vals:
        raise InvalidInputError(f"{name} sequence must be non-empty")
    for v in vals:
        if not (math.isfinite(v) and v >= 0):
            raise InvalidInputError(f"{name} entries must be finite and non-negative")
    return vals


def _lip_at(value, t: int) -> float:
    if isinstance(value, tuple):
        if not 0 <= t < len(value):
            raise InvalidInputError(
                f"timestep {t} outside declared constant range [0, {len(value)})"
            )
        return value[t]
    return value


class LocalPolicy:
    """A state-conditioned action distribution: one stochastic row per state."""

    __slots__ = ("_rows",)

    def __init__(self, rows):
        arr = np.asarray(rows, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[0] == 0 or arr.shape[1] == 0:
            raise InvalidInputError(
                f"expected a 2-D (states x actions) array, got shape {arr.shape}"
            )
        if not np.all(np.isfinite(arr)):
            raise InvalidInputError("policy rows contain non-finite entries")
        arr = arr.copy()
        if arr.min() < -WEIGHT_CLAMP:
            raise InvalidInputError(
                f"policy entry {arr.min()} is below the -{WEIGHT_CLAMP} clamp"
            )
        np.clip(arr, 0.0, None, out=arr)
        sums = arr.sum(axis=1)
        worst = float(np.abs(sums - 1.0).max())
        if worst > SUM_TOL:
            raise InvalidInputError(
                f"policy row sums deviate from 1 by {worst} (limit {SUM_TOL})"
            )
        arr.setflags(write=False)
        self._rows = arr

    @property
    def rows(self) -> np.ndarray:
        return self._rows

    @property
    def num_states(self) -> int:
        return self._rows.shape[0]

    @property
    def num_actions(self) -> int:
        return self._rows.shape[1]

    def row(self, state: int) -> np.ndarray:
        return self._rows[state]

    @classmethod
    def from_pure(cls, pure: "PurePolicy") -> "LocalPolicy":
        rows = np.zeros((len(pure.assignment), pure.num_actions))
        for s, a in enumerate(pure.assignment):
            rows[s, a] = 1.0
        return cls(rows)

    def __repr__(self) -> str:
        return f"LocalPolicy({self._rows.tolist()!r})"


@dataclass(frozen=True)
class PurePolicy:
    """A deterministic local policy: a total map from states to actions."""

    assignment: tuple
    num_actions: int

    def __post_init__(self):
        if len(self.assignment) == 0:
            raise InvalidInputError("assignment must cover at least one state")
        if self.num_actions < 1:
            raise InvalidInputError("num_actions must be at least 1")
        for s, a in enumerate(self.assignment):
            if not isinstance(a, (int, np.integer)) or not 0 <= a < self.num_actions:
                raise InvalidInputError(
                    f"action {a!r} for state {s} outside [0, {self.num_actions})"
                )
        object.__setattr__(self, "assignment", tuple(int(a) for a in self.assignment))

    def as_local(self) -> LocalPolicy:
        return LocalPolicy.from_pure(self)


class TeamStrategy:
    """Per-agent, time-indexed behavior rules for one team.

    Each agent ``i`` at time ``t`` observes its own state together with both
    population distributions and returns a distribution over its actions.
    When ``identical_flag`` is set every agent shares the same evaluator
    object, which is what lets a finite team follow a single coordination
    rule.
    """

    __slots__ = ("_evaluators", "_shared", "identical_flag", "label")

    def __init__(self, *, shared=None, per_agent=None, label: Optional[str] = None):
        if (shared is None) == (per_agent is None):
            raise InvalidInputError(
                "provide exactly one of a shared evaluator or a per-agent list"
            )
        if shared is not None:
            if not callable(shared):
                raise InvalidInputError("shared evaluator must be callable")
            self._shared = shared
            self._evaluators = None
            self.identical_flag = True
        else:
            evaluators = list(per_agent)
            if not evaluators or not all(callable(e) for e in evaluators):
                raise InvalidInputError(
                    "per-agent evaluators must be a non-empty list of callables"
                )
            self._shared = None
            self._evaluators = evaluators
            self.identical_flag = False
        self.label = label if label is not None else "strategy"

    @classmethod
    def identical(cls, evaluator, label: Optional[str] = None) -> "TeamStrategy":
        return cls(shared=evaluator, label=label)

    @classmethod
    def per_agent(cls, evaluators, label: Optional[str] = None) -> "TeamStrategy":
        return cls(per_agent=evaluators, label=label)

    @property
    def num_agents(self) -> Optional[int]:
        """Agent count for per-agent strategies; None when any count works."""
        if self._evaluators is None:
            return None
        return len(self._evaluators)

    def evaluator_for(self, agent: int):
        if self._shared is not None:
            return self._shared
        if not 0 <= agent < len(self._evaluators):
            raise InvalidInputError(
                f"agent index {agent} outside [0, {len(self._evaluators)})"
            )
        return self._evaluators[agent]

    def action_dist(
        self, agent: int, t: int, state: int, mu: np.ndarray, nu: np.ndarray
    ) -> np.ndarray:
        row = np.asarray(self.evaluator_for(agent)(t, state, mu, nu), dtype=np.float64)
        return row

    def __repr__(self) -> str:
        kind = "identical" if self.identical_flag else f"per-agent x{self.num_agents}"
        return f"TeamStrategy({self.label!r}, {kind})"


def _halton(index: int, base: int) -> float:
    result = 0.0
    f = 1.0
    i = index
    while i > 0:
        f /= base
        result += f * (i % base)
        i //= base
    return result


_HALTON_BASES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29)


def _simplex_sample(dim: int, count: int = 64) -> np.ndarray:
    """Deterministic simplex sample: vertices, centroid, low-discrepancy interior.

    Interior points map Halton points in the unit cube to the simplex through
    sorted-gap spacings, which keeps the sample spread out for any dimension.
    """
    points = [np.eye(dim)[i] for i in range(dim)]
    points.append(np.full(dim, 1.0 / dim))
    if dim > 1:
        if dim - 1 > len(_HALTON_BASES):
            raise InvalidInputError(f"simplex sampling supports dim <= {len(_HALTON_BASES) + 1}")
        for k in range(1, count + 1):
            cube = np.array([_halton(k, _HALTON_BASES[j]) for j in range(dim - 1)])
            knots = np.sort(np.concatenate(([0.0], cube, [1.0])))
            points.append(np.diff(knots))
    return np.array(points)


class GameModel:
    """A finite two-team game coupled through population distributions.

    Blue agents share a state set of size ``num_blue_states`` and an action
    set of size ``num_blue_actions``; Red mirrors with its own sizes.  ``rho``
    is the Blue fraction of the total population.  ``blue_kernel`` and
    ``red_kernel`` give per-agent transition probabilities as a function of
    time, own transition, own action, and both population distributions;
    ``reward`` is the scalar team objective Blue maximizes and Red minimizes.

    On construction the kernels and reward are checked on a deterministic
    sample of distribution pairs (simplex vertices, centroid, and 64
    low-discrepancy interior points): kernel rows must be stochastic within
    1e-9 and the reward bounded by ``r_max``.  Pass ``validate=False`` to
    skip the sweep when constructing many models programmatically.
    """

    def __init__(
        self,
        num_blue_states: int,
        num_red_states: int,
        num_blue_actions: int,
        num_red_actions: int,
        horizon: int,
        rho: float,
        blue_kernel: KernelFn,
        red_kernel: KernelFn,
        reward: RewardFn,
        declared_lipschitz: Optional[LipschitzBundle] = None,
        r_max: Optional[float] = None,
        validate: bool = True,
    ):
        for name, v in (
            ("num_blue_states", num_blue_states),
            ("num_red_states", num_red_states),
            ("num_blue_actions", num_blue_actions),
            ("num_red_actions", num_red_actions),
        ):
            if not isinstance(v, (int, np.integer)) or v < 1:
                raise InvalidInputError(f"{name} must be a positive integer, got {v!r}")
        if not isinstance(horizon, (int, np.integer)) or horizon < 0:
            raise InvalidInputError(f"horizon must be a non-negative integer, got {horizon!r}")
        if not (0.0 < rho < 1.0):
            raise InvalidInputError(f"rho must lie strictly between 0 and 1, got {rho}")
        if declared_lipschitz is not None and not isinstance(
            declared_lipschitz, LipschitzBundle
        ):
            raise InvalidInputError("declared_lipschitz must be a LipschitzBundle")
        self.num_blue_states = int(num_blue_states)
        self.num_red_states = int(num_red_states)
        self.num_blue_actions = int(num_blue_actions)
        self.num_red_actions = int(num_red_actions)
        self.horizon = int(horizon)
        self.rho = float(rho)
        self.blue_kernel = blue_kernel
        self.red_kernel = red_kernel
        self.reward = reward
        self.declared_lipschitz = declared_lipschitz
        self._declared_r_max = None if r_max is None else float(r_max)
        self.r_max = self._declared_r_max
        if validate:
            self._validate_on_sample()
        elif self.r_max is None:
            # Unvalidated models still need some bound; probe the centroid.
            mu = np.full(self.num_blue_states, 1.0 / self.num_blue_states)
            nu = np.full(self.num_red_states, 1.0 / self.num_red_states)
            self.r_max = max(
                abs(float(self.reward(t, mu, nu))) for t in range(self.horizon + 1)
            )

    def _validate_on_sample(self):
        blue_pts = _simplex_sample(self.num_blue_states)
        red_pts = _simplex_sample(self.num_red_states)
        # Pair vertices exhaustively (they exercise the extremes), then walk
        # the interior samples in lock-step to keep the sweep linear.
        pairs = []
        nb, nr = self.num_blue_states, self.num_red_states
        for i in range(nb):
            for j in range(nr):
                pairs.append((blue_pts[i], red_pts[j]))
        pairs.append((blue_pts[nb] if nb > 1 else blue_pts[0], red_pts[nr] if nr > 1 else red_pts[0]))
        extra_b = blue_pts[nb + 1 :] if len(blue_pts) > nb + 1 else blue_pts[nb:nb + 1]
        extra_r = red_pts[nr + 1 :] if len(red_pts) > nr + 1 else red_pts[nr:nr + 1]
        m = max(len(extra_b), len(extra_r))
        for k in range(m):
            pairs.append((extra_b[k % len(extra_b)], extra_r[k % len(extra_r)]))

        observed_r = 0.0
        for t in range(self.horizon):
            for mu, nu in pairs:
                for x in range(self.num_blue_states):
                    for u in range(self.num_blue_actions):
                        row = np.array(
                            [
                                self.blue_kernel(t, xn, x, u, mu, nu)
                                for xn in range(self.num_blue_states)
                            ]
                        )
                        _check_kernel_row(row, SUM_TOL, f"blue kernel t={t} x={x} u={u}")
                for y in range(self.num_red_states):
                    for v in range(self.num_red_actions):
                        row = np.array(
                            [
                                self.red_kernel(t, yn, y, v, mu, nu)
                                for yn in range(self.num_red_states)
                            ]
                        )
                        _check_kernel_row(row, SUM_TOL, f"red kernel t={t} y={y} v={v}")
        for t in range(self.horizon + 1):
            for mu, nu in pairs:
                r = float(self.reward(t, mu, nu))
                if not math.isfinite(r):
                    raise ModelValidationError(f"reward at t={t} is not finite")
                observed_r = max(observed_r, abs(r))
        if self._declared_r_max is not None:
            if observed_r > self._declared_r_max + 1e-9:
                raise ModelValidationError(
                    f"sampled reward magnitude {observed_r} exceeds declared bound "
                    f"{self._declared_r_max}"
                )
        else:
            self.r_max = observed_r

    def __repr__(self) -> str:
        return (
            f"GameModel(X={self.num_blue_states}, Y={self.num_red_states}, "
            f"U={self.num_blue_actions}, V={self.num_red_actions}, "
            f"T={self.horizon}, rho={self.rho})"
        )


def _check_kernel_row(row: np.ndarray, tol: float, what: str) -> None:
    if not np.all(np.isfinite(row)):
        raise ModelValidationError(f"{what}: row contains non-finite entries")
    if row.min() < -WEIGHT_CLAMP:
        raise ModelValidationError(
            f"{what}: entry {row.min()} below the -{WEIGHT_CLAMP} clamp"
        )
    total = float(np.clip(row, 0.0, None).sum())
    if abs(total - 1.0) > tol:
        raise ModelValidationError(
            f"{what}: row sums to {total}, expected 1 within {tol}"
        )


def _eval_kernel_row(
    kernel: KernelFn,
    t: int,
    state: int,
    action: int,
    mu: np.ndarray,
    nu: np.ndarray,
    num_next: int,
    what: str,
) -> Distribution:
    row = np.empty(num_next)
    for nxt in range(num_next):
        row[nxt] = kernel(t, nxt, state, action, mu, nu)
    _check_kernel_row(row, ROW_SUM_TOL, what)
    np.clip(row, 0.0, None, out=row)
    row /= row.sum()
    return Distribution(row)


def eval_blue_kernel_row(
    model: GameModel, t: int, state: int, action: int, mu, nu
) -> Distribution:
    """One Blue transition row, validated and renormalized.

    The row over next states must sum to 1 within 1e-6 (else the model is
    rejected); the returned Distribution is exactly stochastic.
    """
    _check_step_args(model, t, state, action, model.num_blue_states, model.num_blue_actions)
    return _eval_kernel_row(
        model.blue_kernel,
        t,
        state,
        action,
        _weights_of(mu),
        _weights_of(nu),
        model.num_blue_states,
        f"blue kernel t={t} x={state} u={action}",
    )


def eval_red_kernel_row(
    model: GameModel, t: int, state: int, action: int, mu, nu
) -> Distribution:
    """Red counterpart of :func:`eval_blue_kernel_row`."""
    _check_step_args(model, t, state, action, model.num_red_states, model.num_red_actions)
    return _eval_kernel_row(
        model.red_kernel,
        t,
        state,
        action,
        _weights_of(mu),
        _weights_of(nu),
        model.num_red_states,
        f"red kernel t={t} y={state} v={action}",
    )


def _check_step_args(model, t, state, action, num_states, num_actions):
    if not 0 <= t < model.horizon:
        raise InvalidInputError(
            f"timestep {t} outside the transition range [0, {model.horizon})"
        )
    if not 0 <= state < num_states:
        raise InvalidInputError(f"state {state} outside [0, {num_states})")
    if not 0 <= action < num_actions:
        raise InvalidInputError(f"action {action} outside [0, {num_actions})")


def eval_reward(model: GameModel, t: int, mu, nu) -> float:
    """The team reward at time ``t`` (terminal time allowed)."""
    if not 0 <= t <= model.horizon:
        raise InvalidInputError(f"timestep {t} outside [0, {model.horizon}]")
    r = float(model.reward(t, _weights_of(mu), _weights_of(nu)))
    if not math.isfinite(r):
        raise ModelValidationError(f"reward at t={t} is not finite")
    return r


def _pairwise_table(raw, horizon: int, name: str) -> np.ndarray:
    arr = np.asarray(raw, dtype=np.float64)
    if arr.ndim == 4:
        arr = np.broadcast_to(arr, (horizon,) + arr.shape).copy()
    if arr.ndim != 5:
        raise InvalidInputError(
            f"{name} must be a 4-D table (state, action, peer, next) or a 5-D "
            f"per-timestep stack, got ndim {arr.ndim}"
        )
    if arr.shape[0] != horizon:
        raise InvalidInputError(
            f"{name} has {arr.shape[0]} timesteps, expected {horizon}"
        )
    if not np.all(np.isfinite(arr)) or arr.min() < 0:
        raise ModelValidationError(f"{name} entries must be finite and non-negative")
    sums = arr.sum(axis=-1)
    worst = float(np.abs(sums - 1.0).max())
    if worst > SUM_TOL:
        raise ModelValidationError(
            f"{name} rows deviate from stochastic by {worst} (limit {SUM_TOL})"
        )
    return arr


def _pairwise_reward_table(raw, horizon: int, size: int, name: str) -> np.ndarray:
    arr = np.asarray(raw, dtype=np.float64)
    if arr.ndim == 1:
        arr = np.broadcast_to(arr, (horizon + 1,) + arr.shape).copy()
    if arr.ndim != 2 or arr.shape != (horizon + 1, size):
        raise InvalidInputError(
            f"{name} must have shape ({horizon + 1}, {size}) or ({size},), "
            f"got {np.asarray(raw).shape}"
        )
    if not np.all(np.isfinite(arr)):
        raise ModelValidationError(f"{name} entries must be finite")
    return arr


def build_pairwise_coupled_model(
    f1,
    f2,
    g1,
    g2,
    r1,
    r2,
    rho: float,
    horizon: int,
) -> GameModel:
    """Assemble a model whose coupling is an average of pairwise interactions.

    ``f1[t][x][u][z][x']`` is the chance a Blue agent at ``x`` playing ``u``
    moves to ``x'`` under the influence of one Blue peer at ``z``; ``f2``
    covers the influence of one Red peer, and ``g1`` / ``g2`` mirror for Red.
    Averaging over the influencing populations produces kernels that are
    affine in ``(mu, nu)`` with the Blue share weighted by ``rho``:

        blue row = rho * (mu @ f1 row) + (1 - rho) * (nu @ f2 row)

    Per-agent reward tables ``r1`` (Blue, per state) and ``r2`` (Red) combine
    into the zero-sum team objective  rho * <mu, r1> - (1 - rho) * <nu, r2>.
    Tables may be time-invariant (no leading time axis) or stacked per
    timestep.
    """
    if not isinstance(horizon, (int, np.integer)) or horizon < 1:
        raise InvalidInputError("horizon must be a positive integer")
    f1 = _pairwise_table(f1, horizon, "f1")
    f2 = _pairwise_table(f2, horizon, "f2")
    g1 = _pairwise_table(g1, horizon, "g1")
    g2 = _pairwise_table(g2, horizon, "g2")
    nx, nu_actions = f1.shape[1], f1.shape[2]
    ny, nv_actions = g1.shape[1], g1.shape[2]
    if f1.shape[3:] != (nx, nx) or f2.shape[1:] != (nx, nu_actions, ny, nx):
        raise InvalidInputError(
            "f1 must be (x, u, x, x') and f2 (x, u, y, x') with matching sizes"
        )
    if g1.shape[3:] != (nx, ny) or g2.shape[1:] != (ny, nv_actions, ny, ny):
        raise InvalidInputError(
            "g1 must be (y, v, x, y') and g2 (y, v, y, y') with matching sizes"
        )
    r1 = _pairwise_reward_table(r1, horizon, nx, "r1")
    r2 = _pairwise_reward_table(r2, horizon, ny, "r2")

    def blue_kernel(t, xn, x, u, mu, nu):
        return rho * float(mu @ f1[t, x, u, :, xn]) + (1.0 - rho) * float(
            nu @ f2[t, x, u, :, xn]
        )

    def red_kernel(t, yn, y, v, mu, nu):
        return rho * float(mu @ g1[t, y, v, :, yn]) + (1.0 - rho) * float(
            nu @ g2[t, y, v, :, yn]
        )

    def reward(t, mu, nu):
        return rho * float(mu @ r1[t]) - (1.0 - rho) * float(nu @ r2[t])

    r1_max = float(np.abs(r1).max())
    r2_max = float(np.abs(r2).max())
    bundle = LipschitzBundle(l_f=2.0, l_g=2.0, l_r=2.0 * max(r1_max, r2_max))
    return GameModel(
        num_blue_states=nx,
        num_red_states=ny,
        num_blue_actions=nu_actions,
        num_red_actions=nv_actions,
        horizon=int(horizon),
        rho=float(rho),
        blue_kernel=blue_kernel,
        red_kernel=red_kernel,
        reward=reward,
        declared_lipschitz=bundle,
        r_max=rho * r1_max + (1.0 - rho) * r2_max,
    )


def lipschitz_violations(
    model: GameModel, num_pairs: int = 200, seed: int = 0
) -> list:
    """Probe a model's declared Lipschitz constants on random distribution pairs.

    Returns a list of human-readable violation records (empty when the
    declaration holds on the sample).  A reported violation flags the
    declaration, not the sampler.
    """
    if model.declared_lipschitz is None:
        raise InvalidInputError("model declares no Lipschitz constants to check")
    bundle = model.declared_lipschitz
    rng = np.random.default_rng(seed)
    violations = []
    slack = 1e-9
    for k in range(num_pairs):
        mu1 = rng.dirichlet(np.ones(model.num_blue_states))
        mu2 = rng.dirichlet(np.ones(model.num_blue_states))
        nu1 = rng.dirichlet(np.ones(model.num_red_states))
        nu2 = rng.dirichlet(np.ones(model.num_red_states))
        gap = tv_distance(mu1, mu2) + tv_distance(nu1, nu2)
        for t in range(model.horizon):
            lf = bundle.lf_at(t)
            for x in range(model.num_blue_states):
                for u in range(model.num_blue_actions):
                    d = _row_l1_gap(
                        model.blue_kernel, t, x, u, mu1, nu1, mu2, nu2, model.num_blue_states
                    )
                    if d > lf * gap + slack:
                        violations.append(
                            f"blue kernel t={t} x={x} u={u}: row moved {d:.3e} "
                            f"> {lf} * {gap:.3e}"
                        )
            lg = bundle.lg_at(t)
            for y in range(model.num_red_states):
                for v in range(model.num_red_actions):
                    d = _row_l1_gap(
                        model.red_kernel, t, y, v, mu1, nu1, mu2, nu2, model.num_red_states
                    )
                    if d > lg * gap + slack:
                        violations.append(
                            f"red kernel t={t} y={y} v={v}: row moved {d:.3e} "
                            f"> {lg} * {gap:.3e}"
                        )
        for t in range(model.horizon + 1):
            dr = abs(
                float(model.reward(t, mu1, nu1)) - float(model.reward(t, mu2, nu2))
            )
            if dr > bundle.l_r * gap + slack:
                violations.append(
                    f"reward t={t}: moved {dr:.3e} > {bundle.l_r} * {gap:.3e}"
                )
    return violations


def _row_l1_gap(kernel, t, s, a, mu1, nu1, mu2, nu2, num_next) -> float:
    total = 0.0
    for nxt in range(num_next):
        total += abs(
            float(kernel(t, nxt, s, a, mu1, nu1)) - float(kernel(t, nxt, s, a, mu2, nu2))
        )
    return total
