"""Finite-population simulation and exact small-population oracles.

Covers stochastic episode rollout with counter-based reproducible randomness,
Monte Carlo measurement of the gap between empirical distributions and their
mean-field predictions, and exact best-response computations on count states
for small populations (used to quantify how suboptimal the coordinator-induced
identical strategy is at finite sizes).
"""
from __future__ import annotations

import itertools
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .core import (
    Distribution,
    GameModel,
    LocalPolicy,
    TeamStrategy,
    _weights_of,
    empirical_distribution,
    eval_blue_kernel_row,
    eval_red_kernel_row,
    eval_reward,
    tv_distance,
)
from .errors import CapacityError, InvalidInputError, ModelValidationError
from .examples import SQRT2_INV, example2_coordination_rule
from .meanfield import mf_step_blue, mf_step_red
from .solver import CoordinationStrategy, iter_compositions

DEFAULT_COUNT_CAP = 10**6

# Fixed second key word so streams drawn here never collide with another
# tool using plain sequential seeding of the same generator family.
_STREAM_SALT = 0x6D667467
_IID_SALT = 0x69696467


def _agent_stream(seed: int, episode: int, t_slot: int, agent: int):
    """Counter-based stream for one (episode, timestep, agent) cell.

    The first counter word is the in-stream position and starts at zero; the
    remaining words pin the cell, so draws depend only on (seed, episode, t,
    agent) and never on execution order or thread count.
    """
    bg = np.random.Philox(
        key=[np.uint64(seed & 0xFFFFFFFFFFFFFFFF), np.uint64(_STREAM_SALT)],
        counter=[0, agent, t_slot, episode],
    )
    return np.random.Generator(bg)


def _sample_index(row: np.ndarray, u: float) -> int:
    cum = np.cumsum(row)
    idx = int(np.searchsorted(cum, u * cum[-1], side="right"))
    return min(idx, row.shape[0] - 1)


def _clean_prob_row(row: np.ndarray, what: str) -> np.ndarray:
    row = np.asarray(row, dtype=np.float64)
    if row.ndim != 1 or not np.all(np.isfinite(row)) or np.any(row < -1e-12):
        raise ModelValidationError(f"{what} is not a probability row: {row!r}")
    total = float(row.sum())
    if abs(total - 1.0) > 1e-6:
        raise ModelValidationError(f"{what} sums to {total}, expected 1")
    return np.clip(row, 0.0, None) / max(float(np.clip(row, 0.0, None).sum()), 1e-300)


@dataclass(frozen=True)
class StepRecord:
    """One logged timestep: agent states, their EDs, and the step reward."""

    t: int
    blue_states: Tuple[int, ...]
    red_states: Tuple[int, ...]
    mu: Distribution
    nu: Distribution
    reward: float


@dataclass(frozen=True)
class EpisodeLog:
    seed: int
    episode: int
    blue_label: str
    red_label: str
    steps: Tuple[StepRecord, ...]

    @property
    def total(self) -> float:
        return float(sum(step.reward for step in self.steps))

    @property
    def horizon(self) -> int:
        return len(self.steps) - 1


def _coerce_init_states(init, n: int, num_states: int, what: str) -> Optional[np.ndarray]:
    """Explicit agent states pass through; a distribution returns None to
    signal per-episode iid sampling."""
    if isinstance(init, Distribution):
        return None
    arr = np.asarray(init)
    if arr.ndim == 1 and arr.shape[0] == n and np.issubdtype(arr.dtype, np.integer):
        states = arr.astype(np.int64)
        if np.any(states < 0) or np.any(states >= num_states):
            raise InvalidInputError(f"{what} initial states out of range")
        return states
    if arr.ndim == 1 and arr.shape[0] == num_states:
        return None  # weight vector: sample iid
    raise InvalidInputError(
        f"{what} init must be {n} integer states or a distribution over "
        f"{num_states} states"
    )


def _init_weights(init, num_states: int) -> np.ndarray:
    w = _weights_of(init)
    if w.shape[0] != num_states:
        raise InvalidInputError("initial distribution has the wrong dimension")
    return w


def _sample_init(
    init, n: int, num_states: int, seed: int, episode: int, t_slot: int, base: int
) -> np.ndarray:
    w = _init_weights(init, num_states)
    states = np.empty(n, dtype=np.int64)
    for i in range(n):
        u = float(_agent_stream(seed, episode, t_slot, base + i).random())
        states[i] = _sample_index(w, u)
    return states


def _policy_rows_for(
    strategy: TeamStrategy, n: int, t: int, num_states: int, mu, nu
) -> List[np.ndarray]:
    """Sampling-ready policy rows per agent per state (shared when identical)."""
    if strategy.identical_flag:
        shared = [
            _clean_prob_row(
                strategy.action_dist(0, t, x, mu, nu), f"policy row at t={t}, x={x}"
            )
            for x in range(num_states)
        ]
        return [shared] * n
    rows = []
    for i in range(n):
        rows.append(
            [
                _clean_prob_row(
                    strategy.action_dist(i, t, x, mu, nu),
                    f"agent {i} policy row at t={t}, x={x}",
                )
                for x in range(num_states)
            ]
        )
    return rows


def simulate_episode(
    model: GameModel,
    n1: int,
    n2: int,
    blue: TeamStrategy,
    red: TeamStrategy,
    init_blue,
    init_red,
    seed: int,
    episode: int = 0,
) -> EpisodeLog:
    """Roll one finite-population episode and log states, EDs, and rewards.

    Each agent first samples an action from its policy row at (own state,
    blue ED, red ED), then its next state from the kernel row for that pair.
    Blue agents use global stream indices 0..n1-1 and Red n1..n1+n2-1; the
    initial iid draw (when inits are distributions) occupies the otherwise
    unused timestep slot T.
    """
    if n1 < 1 or n2 < 1:
        raise InvalidInputError("population sizes must be at least 1")
    for team, strat, n in (("blue", blue, n1), ("red", red, n2)):
        if strat.num_agents is not None and strat.num_agents != n:
            raise InvalidInputError(
                f"{team} strategy is defined for {strat.num_agents} agents, "
                f"got {n}"
            )
    blue_states = _coerce_init_states(init_blue, n1, model.num_blue_states, "blue")
    if blue_states is None:
        blue_states = _sample_init(
            init_blue, n1, model.num_blue_states, seed, episode, model.horizon, 0
        )
    red_states = _coerce_init_states(init_red, n2, model.num_red_states, "red")
    if red_states is None:
        red_states = _sample_init(
            init_red, n2, model.num_red_states, seed, episode, model.horizon, n1
        )

    steps = []
    for t in range(model.horizon):
        mu = empirical_distribution(blue_states, model.num_blue_states)
        nu = empirical_distribution(red_states, model.num_red_states)
        reward = eval_reward(model, t, mu, nu)
        steps.append(
            StepRecord(
                t=t,
                blue_states=tuple(int(x) for x in blue_states),
                red_states=tuple(int(y) for y in red_states),
                mu=mu,
                nu=nu,
                reward=reward,
            )
        )
        mu_w, nu_w = mu.weights, nu.weights
        blue_rows = _policy_rows_for(blue, n1, t, model.num_blue_states, mu_w, nu_w)
        red_rows = _policy_rows_for(red, n2, t, model.num_red_states, mu_w, nu_w)
        blue_kernel = {}
        red_kernel = {}
        next_blue = np.empty_like(blue_states)
        for i in range(n1):
            x = int(blue_states[i])
            stream = _agent_stream(seed, episode, t, i)
            draws = stream.random(2)
            u = _sample_index(blue_rows[i][x], float(draws[0]))
            key = (x, u)
            if key not in blue_kernel:
                blue_kernel[key] = eval_blue_kernel_row(
                    model, t, x, u, mu_w, nu_w
                ).weights
            next_blue[i] = _sample_index(blue_kernel[key], float(draws[1]))
        next_red = np.empty_like(red_states)
        for j in range(n2):
            y = int(red_states[j])
            stream = _agent_stream(seed, episode, t, n1 + j)
            draws = stream.random(2)
            v = _sample_index(red_rows[j][y], float(draws[0]))
            key = (y, v)
            if key not in red_kernel:
                red_kernel[key] = eval_red_kernel_row(
                    model, t, y, v, mu_w, nu_w
                ).weights
            next_red[j] = _sample_index(red_kernel[key], float(draws[1]))
        blue_states, red_states = next_blue, next_red

    mu = empirical_distribution(blue_states, model.num_blue_states)
    nu = empirical_distribution(red_states, model.num_red_states)
    steps.append(
        StepRecord(
            t=model.horizon,
            blue_states=tuple(int(x) for x in blue_states),
            red_states=tuple(int(y) for y in red_states),
            mu=mu,
            nu=nu,
            reward=eval_reward(model, model.horizon, mu, nu),
        )
    )
    return EpisodeLog(
        seed=int(seed),
        episode=int(episode),
        blue_label=blue.label,
        red_label=red.label,
        steps=tuple(steps),
    )


def _resolve_threads(threads: Optional[int]) -> int:
    if threads is None:
        env = os.environ.get("MFTG_THREADS", "")
        threads = int(env) if env.strip() else 1
    if threads < 1:
        raise InvalidInputError("threads must be at least 1")
    return threads


def estimate_value(
    model: GameModel,
    n1: int,
    n2: int,
    blue: TeamStrategy,
    red: TeamStrategy,
    init_blue,
    init_red,
    episodes: int,
    seed: int,
    threads: Optional[int] = None,
) -> Tuple[float, float]:
    """Monte Carlo mean episode total and its standard error.

    Episodes are independent work units; the counter-based streams make the
    result identical for any thread count.
    """
    if episodes < 1:
        raise InvalidInputError("episodes must be at least 1")
    threads = _resolve_threads(threads)

    def run(episode: int) -> float:
        return simulate_episode(
            model, n1, n2, blue, red, init_blue, init_red, seed, episode
        ).total

    if threads == 1:
        totals = np.array([run(e) for e in range(episodes)])
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            totals = np.array(list(pool.map(run, range(episodes))))
    mean = float(totals.mean())
    se = float(totals.std(ddof=1) / math.sqrt(episodes)) if episodes > 1 else 0.0
    return mean, se


def induced_identical_strategy(coord: CoordinationStrategy) -> TeamStrategy:
    """Identical team strategy that queries a coordination policy at the EDs.

    Off-grid observations snap to the nearest grid point inside ``policy_at``,
    ties resolving to the lexicographically smaller point.
    """

    def evaluator(t, x, mu, nu):
        return coord.policy_at(t, mu, nu).rows[x]

    label = f"coordinator-{coord.kind}-{coord.value_grid.kind}"
    return TeamStrategy.identical(evaluator, label=label)


def approx_local_policy(
    model: GameModel,
    strategy: TeamStrategy,
    t: int,
    blue_states: Sequence[int],
    red_states: Sequence[int],
    team: str = "blue",
) -> LocalPolicy:
    """State-wise average of the agents' policy rows; uniform at empty states.

    This is the single local policy whose mean-field flow best mimics a
    non-identical team from the current joint state.
    """
    if team not in ("blue", "red"):
        raise InvalidInputError(f"team must be 'blue' or 'red', got {team!r}")
    blue_states = np.asarray(blue_states, dtype=np.int64)
    red_states = np.asarray(red_states, dtype=np.int64)
    mu = empirical_distribution(blue_states, model.num_blue_states)
    nu = empirical_distribution(red_states, model.num_red_states)
    if team == "blue":
        own_states, num_states = blue_states, model.num_blue_states
        num_actions = model.num_blue_actions
    else:
        own_states, num_states = red_states, model.num_red_states
        num_actions = model.num_red_actions
    rows = np.full((num_states, num_actions), 1.0 / num_actions)
    for x in range(num_states):
        members = np.nonzero(own_states == x)[0]
        if members.size == 0:
            continue
        acc = np.zeros(num_actions)
        for i in members:
            acc += _clean_prob_row(
                strategy.action_dist(int(i), t, x, mu.weights, nu.weights),
                f"agent {i} policy row at t={t}, x={x}",
            )
        rows[x] = acc / members.size
    return LocalPolicy(rows)


@dataclass(frozen=True)
class MfGapReport:
    """Per-team Monte Carlo means and standard errors of the one-step TV gap."""

    blue_mean: float
    blue_se: float
    red_mean: float
    red_se: float


def _mean_se(samples: np.ndarray) -> Tuple[float, float]:
    mean = float(samples.mean())
    se = float(samples.std(ddof=1) / math.sqrt(samples.size)) if samples.size > 1 else 0.0
    return mean, se


def measure_mf_gap(
    model: GameModel,
    n1: int,
    n2: int,
    blue: TeamStrategy,
    red: TeamStrategy,
    init_blue,
    init_red,
    episodes: int,
    seed: int,
) -> MfGapReport:
    """TV distance between realized next EDs and their one-step predictions.

    For an identical team the prediction propagates the current ED through
    the shared policy; for a non-identical team it uses the state-wise
    averaged policy, which is the tightest single-policy surrogate.  Samples
    pool every (episode, timestep) pair.
    """
    if episodes < 1:
        raise InvalidInputError("episodes must be at least 1")
    if model.horizon < 1:
        raise InvalidInputError("mean-field gap needs at least one transition")
    blue_gaps = []
    red_gaps = []
    for episode in range(episodes):
        log = simulate_episode(
            model, n1, n2, blue, red, init_blue, init_red, seed, episode
        )
        for step, nxt in zip(log.steps[:-1], log.steps[1:]):
            mu_w, nu_w = step.mu.weights, step.nu.weights
            if blue.identical_flag:
                rows = [
                    blue.action_dist(0, step.t, x, mu_w, nu_w)
                    for x in range(model.num_blue_states)
                ]
                blue_policy = LocalPolicy(np.vstack(rows))
            else:
                blue_policy = approx_local_policy(
                    model, blue, step.t, step.blue_states, step.red_states, "blue"
                )
            if red.identical_flag:
                rows = [
                    red.action_dist(0, step.t, y, mu_w, nu_w)
                    for y in range(model.num_red_states)
                ]
                red_policy = LocalPolicy(np.vstack(rows))
            else:
                red_policy = approx_local_policy(
                    model, red, step.t, step.blue_states, step.red_states, "red"
                )
            pred_mu = mf_step_blue(model, step.t, step.mu, step.nu, blue_policy)
            pred_nu = mf_step_red(model, step.t, step.mu, step.nu, red_policy)
            blue_gaps.append(tv_distance(nxt.mu, pred_mu))
            red_gaps.append(tv_distance(nxt.nu, pred_nu))
    blue_mean, blue_se = _mean_se(np.array(blue_gaps))
    red_mean, red_se = _mean_se(np.array(red_gaps))
    return MfGapReport(blue_mean, blue_se, red_mean, red_se)


def measure_iid_gap(
    p, n: int, samples: int, seed: int
) -> Tuple[float, float]:
    """Mean TV distance between the ED of n iid draws from p and p itself.

    Vectorized multinomial sampling on its own salted stream; returns the
    Monte Carlo mean and standard error.
    """
    w = _weights_of(p)
    if n < 1 or samples < 1:
        raise InvalidInputError("n and samples must be at least 1")
    bg = np.random.Philox(
        key=[np.uint64(seed & 0xFFFFFFFFFFFFFFFF), np.uint64(_IID_SALT)]
    )
    rng = np.random.Generator(bg)
    counts = rng.multinomial(n, w / w.sum(), size=samples)
    gaps = 0.5 * np.abs(counts / n - w).sum(axis=1)
    return _mean_se(gaps)


@dataclass(frozen=True)
class JointCountState:
    """Team populations summarized by per-state occupancy counts."""

    blue_counts: Tuple[int, ...]
    red_counts: Tuple[int, ...]

    def __post_init__(self):
        for name, counts in (("blue", self.blue_counts), ("red", self.red_counts)):
            if not counts or any(
                (not isinstance(c, (int, np.integer))) or c < 0 for c in counts
            ):
                raise InvalidInputError(
                    f"{name} counts must be non-negative integers, got {counts!r}"
                )
        object.__setattr__(self, "blue_counts", tuple(int(c) for c in self.blue_counts))
        object.__setattr__(self, "red_counts", tuple(int(c) for c in self.red_counts))

    @property
    def n1(self) -> int:
        return sum(self.blue_counts)

    @property
    def n2(self) -> int:
        return sum(self.red_counts)

    def mu(self) -> Distribution:
        return Distribution(np.array(self.blue_counts) / self.n1)

    def nu(self) -> Distribution:
        return Distribution(np.array(self.red_counts) / self.n2)


def _counts_to_dist(counts: Tuple[int, ...], n: int) -> np.ndarray:
    return np.array(counts, dtype=np.float64) / n


def _branch_counts(
    laws: Sequence[Tuple[int, np.ndarray]], num_states: int
) -> Dict[Tuple[int, ...], float]:
    """Distribution of summed next-state counts for independent groups.

    Each (count, row) entry branches multinomially; groups convolve.  Tiny
    probabilities are kept: exactness matters more than sparsity here.
    """
    acc: Dict[Tuple[int, ...], float] = {tuple([0] * num_states): 1.0}
    for count, row in laws:
        if count == 0:
            continue
        support = [s for s in range(num_states) if row[s] > 0.0]
        if len(support) == 1:
            shift = support[0]
            moved: Dict[Tuple[int, ...], float] = {}
            for key, prob in acc.items():
                nk = list(key)
                nk[shift] += count
                moved[tuple(nk)] = moved.get(tuple(nk), 0.0) + prob
            acc = moved
            continue
        log_row = {s: math.log(row[s]) for s in support}
        lg = math.lgamma(count + 1)
        group: List[Tuple[Tuple[int, ...], float]] = []
        for comp in iter_compositions(count, len(support)):
            logp = lg
            for k, s in zip(comp, support):
                logp += k * log_row[s] - math.lgamma(k + 1)
            full = [0] * num_states
            for k, s in zip(comp, support):
                full[s] = k
            group.append((tuple(full), math.exp(logp)))
        nxt: Dict[Tuple[int, ...], float] = {}
        for key, prob in acc.items():
            for add, q in group:
                nk = tuple(a + b for a, b in zip(key, add))
                nxt[nk] = nxt.get(nk, 0.0) + prob * q
        acc = nxt
    return acc


def _red_compositions(red_counts: Tuple[int, ...], num_actions: int):
    """Per-state action compositions, lexicographic within and across states."""
    per_state = [list(iter_compositions(c, num_actions)) for c in red_counts]
    return list(itertools.product(*per_state))


def _count_space_size(n: int, states: int) -> int:
    return math.comb(n + states - 1, states - 1)


def exact_red_best_response(
    model: GameModel,
    n1: int,
    n2: int,
    blue: TeamStrategy,
    init: JointCountState,
    cap: int = DEFAULT_COUNT_CAP,
) -> Tuple[float, Dict]:
    """Exact Red minimization against a fixed Blue team, on count states.

    Because kernels and rewards see populations only through their EDs, and
    the Blue team plays one shared rule, occupancy counts are a sufficient
    joint state; Red's decision each step is a composition assigning, per Red
    state, how many of its agents take each action.  A centralized Red of
    this form weakly beats every decentralized one, so the returned value is
    a conservative lower bound in comparisons.  Returns the value from
    ``init`` and the minimizing composition per visited (t, counts) cell.

    A non-identical Blue team is handled by running the Blue side on labeled
    state tuples (agents fill states in index order at ``init``), since
    counts alone then carry too little information.
    """
    if init.n1 != n1 or init.n2 != n2:
        raise InvalidInputError(
            f"init counts sum to ({init.n1}, {init.n2}), expected ({n1}, {n2})"
        )
    if len(init.blue_counts) != model.num_blue_states:
        raise InvalidInputError("blue counts dimension does not match the model")
    if len(init.red_counts) != model.num_red_states:
        raise InvalidInputError("red counts dimension does not match the model")
    labeled = not blue.identical_flag
    if labeled:
        blue_space = model.num_blue_states**n1
    else:
        blue_space = _count_space_size(n1, model.num_blue_states)
    red_space = _count_space_size(n2, model.num_red_states)
    if blue_space * red_space > cap:
        raise CapacityError(
            f"count-state space {blue_space * red_space} exceeds cap {cap}",
            cap=cap,
        )

    if labeled:
        states = []
        for x, c in enumerate(init.blue_counts):
            states.extend([x] * c)
        init_blue_key: Tuple[int, ...] = tuple(states)
    else:
        init_blue_key = init.blue_counts

    def blue_mu(key: Tuple[int, ...]) -> np.ndarray:
        if labeled:
            counts = np.bincount(np.array(key), minlength=model.num_blue_states)
            return counts / n1
        return _counts_to_dist(key, n1)

    def blue_branch(
        t: int, key: Tuple[int, ...], mu: np.ndarray, nu: np.ndarray
    ) -> Dict[Tuple[int, ...], float]:
        if labeled:
            per_agent = []
            for i, x in enumerate(key):
                row = _clean_prob_row(
                    blue.action_dist(i, t, x, mu, nu),
                    f"agent {i} policy row at t={t}, x={x}",
                )
                law = np.zeros(model.num_blue_states)
                for u, pu in enumerate(row):
                    if pu > 0.0:
                        law += pu * eval_blue_kernel_row(model, t, x, u, mu, nu).weights
                per_agent.append(law)
            acc: Dict[Tuple[int, ...], float] = {(): 1.0}
            for law in per_agent:
                nxt: Dict[Tuple[int, ...], float] = {}
                support = [s for s in range(model.num_blue_states) if law[s] > 0.0]
                for prefix, prob in acc.items():
                    for s in support:
                        nxt_key = prefix + (s,)
                        nxt[nxt_key] = nxt.get(nxt_key, 0.0) + prob * law[s]
                acc = nxt
            return acc
        laws = []
        for x, c in enumerate(key):
            if c == 0:
                continue
            row = _clean_prob_row(
                blue.action_dist(0, t, x, mu, nu), f"policy row at t={t}, x={x}"
            )
            law = np.zeros(model.num_blue_states)
            for u, pu in enumerate(row):
                if pu > 0.0:
                    law += pu * eval_blue_kernel_row(model, t, x, u, mu, nu).weights
            laws.append((c, law))
        return _branch_counts(laws, model.num_blue_states)

    def red_branch(
        t: int, comp, mu: np.ndarray, nu: np.ndarray
    ) -> Dict[Tuple[int, ...], float]:
        laws = []
        for y, assignment in enumerate(comp):
            for v, c in enumerate(assignment):
                if c == 0:
                    continue
                laws.append((c, eval_red_kernel_row(model, t, y, v, mu, nu).weights))
        return _branch_counts(laws, model.num_red_states)

    # Forward pass: the joint cells actually reachable from init, per step.
    horizon = model.horizon
    live: List[Dict[Tuple[Tuple[int, ...], Tuple[int, ...]], None]] = [
        {(init_blue_key, init.red_counts): None}
    ]
    branch_cache: Dict = {}
    for t in range(horizon):
        nxt_cells: Dict = {}
        for bkey, rkey in live[t]:
            mu = blue_mu(bkey)
            nu = _counts_to_dist(rkey, n2)
            bb = blue_branch(t, bkey, mu, nu)
            branch_cache[(t, bkey, rkey)] = bb
            red_next_union: Dict[Tuple[int, ...], None] = {}
            for comp in _red_compositions(rkey, model.num_red_actions):
                for rk in red_branch(t, comp, mu, nu):
                    red_next_union[rk] = None
            for bk in bb:
                for rk in red_next_union:
                    nxt_cells[(bk, rk)] = None
        live.append(nxt_cells)
        if len(nxt_cells) > cap:
            raise CapacityError(
                f"reachable joint cells {len(nxt_cells)} exceed cap {cap}", cap=cap
            )

    # Backward pass over the reachable cells only.
    values: Dict = {}
    for bkey, rkey in live[horizon]:
        mu = blue_mu(bkey)
        nu = _counts_to_dist(rkey, n2)
        values[(horizon, bkey, rkey)] = eval_reward(model, horizon, mu, nu)
    policy: Dict = {}
    for t in range(horizon - 1, -1, -1):
        for bkey, rkey in live[t]:
            mu = blue_mu(bkey)
            nu = _counts_to_dist(rkey, n2)
            reward = eval_reward(model, t, mu, nu)
            bb = branch_cache[(t, bkey, rkey)]
            best = None
            best_comp = None
            for comp in _red_compositions(rkey, model.num_red_actions):
                rb = red_branch(t, comp, mu, nu)
                expect = 0.0
                for bk, pb in bb.items():
                    for rk, pr in rb.items():
                        expect += pb * pr * values[(t + 1, bk, rk)]
                if best is None or expect < best - 1e-12:
                    best = expect
                    best_comp = comp
            values[(t, bkey, rkey)] = reward + best
            policy[(t, bkey, rkey)] = best_comp
    return values[(0, init_blue_key, init.red_counts)], policy


def labeled_red_best_response_value(
    model: GameModel,
    blue: TeamStrategy,
    init_blue_states: Sequence[int],
    init_red_states: Sequence[int],
) -> float:
    """Brute-force DP on fully labeled joint states; Red picks one action per
    agent each step.

    Exponential in the population sizes, so only suitable as a small-scale
    cross-check that the count-state reduction loses nothing.
    """
    blue_states = tuple(int(x) for x in init_blue_states)
    red_states = tuple(int(y) for y in init_red_states)
    n1, n2 = len(blue_states), len(red_states)
    if model.num_blue_states**n1 * model.num_red_states**n2 > 10**5:
        raise CapacityError("labeled joint space too big for the brute force", cap=10**5)

    def step_law(states, team, t, mu, nu, actions):
        laws = []
        for i, (s, a) in enumerate(zip(states, actions)):
            if team == "blue":
                laws.append(eval_blue_kernel_row(model, t, s, a, mu, nu).weights)
            else:
                laws.append(eval_red_kernel_row(model, t, s, a, mu, nu).weights)
        return laws

    def expand(laws):
        acc = {(): 1.0}
        for law in laws:
            nxt = {}
            for prefix, prob in acc.items():
                for s, ps in enumerate(law):
                    if ps > 0.0:
                        key = prefix + (s,)
                        nxt[key] = nxt.get(key, 0.0) + prob * ps
            acc = nxt
        return acc

    memo: Dict = {}

    def value(t: int, bs: Tuple[int, ...], rs: Tuple[int, ...]) -> float:
        key = (t, bs, rs)
        if key in memo:
            return memo[key]
        mu = empirical_distribution(np.array(bs), model.num_blue_states).weights
        nu = empirical_distribution(np.array(rs), model.num_red_states).weights
        reward = eval_reward(model, t, Distribution(mu), Distribution(nu))
        if t == model.horizon:
            memo[key] = reward
            return reward
        blue_laws = []
        for i, x in enumerate(bs):
            row = _clean_prob_row(
                blue.action_dist(i, t, x, mu, nu), f"agent {i} policy row"
            )
            law = np.zeros(model.num_blue_states)
            for u, pu in enumerate(row):
                if pu > 0.0:
                    law += pu * eval_blue_kernel_row(model, t, x, u, mu, nu).weights
            blue_laws.append(law)
        blue_next = expand(blue_laws)
        best = None
        for red_actions in itertools.product(range(model.num_red_actions), repeat=n2):
            red_next = expand(step_law(rs, "red", t, mu, nu, red_actions))
            expect = 0.0
            for bn, pb in blue_next.items():
                for rn, pr in red_next.items():
                    expect += pb * pr * value(t + 1, bn, rn)
            if best is None or expect < best - 1e-12:
                best = expect
        memo[key] = reward + best
        return memo[key]

    return value(0, blue_states, red_states)


def example2_matching_strategy() -> TeamStrategy:
    """Identical Blue strategy following the closed-form leak-killing rule."""

    def evaluator(t, x, mu, nu):
        return example2_coordination_rule(t, mu)[x]

    return TeamStrategy.identical(evaluator, label="matching")


def exact_blue_optimum_example2(n1: int, nu0) -> float:
    """Best achievable finite-population value in the frozen-Red leak game.

    The best Blue can do with n1 agents is park the nearest achievable
    fraction n*/n1 at the first state; the residual leak is the clipped
    quadratic evaluated there.
    """
    if n1 < 1:
        raise InvalidInputError("n1 must be at least 1")
    w = _weights_of(nu0)
    if w.shape[0] != 2:
        raise InvalidInputError("nu0 must be a two-state distribution")
    q = SQRT2_INV
    fractions = np.arange(n1 + 1) / n1
    n_star = int(np.argmin((fractions - q) ** 2))
    mu1 = fractions[n_star]
    leak = min(5.0 * ((mu1 - q) ** 2 + ((1.0 - mu1) - (1.0 - q)) ** 2), 1.0)
    return float(-w[0] - leak * w[1])


@dataclass(frozen=True)
class SweepRow:
    n1: int
    n2: int
    gap: float
    stderr: float
    exact_opt: float
    coord_value: float


def _integer_red_counts(nu0: np.ndarray, limit: int = 10**4) -> Tuple[int, ...]:
    """Smallest population size that realizes nu0 exactly as counts."""
    fracs = [Fraction(float(x)).limit_denominator(limit) for x in nu0]
    denom = 1
    for f in fracs:
        denom = denom * f.denominator // math.gcd(denom, f.denominator)
    counts = [round(float(x) * denom) for x in nu0]
    if sum(counts) != denom or any(
        abs(c / denom - float(x)) > 1e-9 for c, x in zip(counts, nu0)
    ):
        raise InvalidInputError(
            f"nu0 {nu0!r} is not realizable by at most {limit} agents"
        )
    return tuple(counts)


def _rollout_vs_count_policy(
    model: GameModel,
    n1: int,
    n2: int,
    blue: TeamStrategy,
    policy: Dict,
    init: JointCountState,
    seed: int,
    episode: int,
) -> float:
    """One episode against the oracle's composition policy.

    Red agents in a state are ranked by index; the recorded composition for
    the visited (t, counts) cell is dealt out action by action in rank order.
    Cells never visited by the oracle's forward pass fall back to action 0.
    """
    blue_states = []
    for x, c in enumerate(init.blue_counts):
        blue_states.extend([x] * c)
    red_states = []
    for y, c in enumerate(init.red_counts):
        red_states.extend([y] * c)
    blue_states = np.array(blue_states, dtype=np.int64)
    red_states = np.array(red_states, dtype=np.int64)
    labeled = not blue.identical_flag
    total = 0.0
    for t in range(model.horizon):
        mu = empirical_distribution(blue_states, model.num_blue_states)
        nu = empirical_distribution(red_states, model.num_red_states)
        total += eval_reward(model, t, mu, nu)
        mu_w, nu_w = mu.weights, nu.weights
        bkey = (
            tuple(int(x) for x in blue_states)
            if labeled
            else tuple(np.bincount(blue_states, minlength=model.num_blue_states))
        )
        rkey = tuple(np.bincount(red_states, minlength=model.num_red_states))
        comp = policy.get((t, bkey, rkey))
        if comp is None:
            comp = tuple(
                (c,) + (0,) * (model.num_red_actions - 1) for c in rkey
            )
        red_actions = np.zeros(n2, dtype=np.int64)
        for y in range(model.num_red_states):
            members = np.nonzero(red_states == y)[0]
            dealt = []
            for v, c in enumerate(comp[y]):
                dealt.extend([v] * c)
            for rank, j in enumerate(members):
                red_actions[j] = dealt[rank]
        blue_rows = _policy_rows_for(blue, n1, t, model.num_blue_states, mu_w, nu_w)
        kernel_cache = {}
        next_blue = np.empty_like(blue_states)
        for i in range(n1):
            x = int(blue_states[i])
            stream = _agent_stream(seed, episode, t, i)
            draws = stream.random(2)
            u = _sample_index(blue_rows[i][x], float(draws[0]))
            key = ("blue", x, u)
            if key not in kernel_cache:
                kernel_cache[key] = eval_blue_kernel_row(
                    model, t, x, u, mu_w, nu_w
                ).weights
            next_blue[i] = _sample_index(kernel_cache[key], float(draws[1]))
        next_red = np.empty_like(red_states)
        for j in range(n2):
            y = int(red_states[j])
            v = int(red_actions[j])
            stream = _agent_stream(seed, episode, t, n1 + j)
            draws = stream.random(2)
            key = ("red", y, v)
            if key not in kernel_cache:
                kernel_cache[key] = eval_red_kernel_row(
                    model, t, y, v, mu_w, nu_w
                ).weights
            next_red[j] = _sample_index(kernel_cache[key], float(draws[1]))
        blue_states, red_states = next_blue, next_red
    mu = empirical_distribution(blue_states, model.num_blue_states)
    nu = empirical_distribution(red_states, model.num_red_states)
    return total + eval_reward(model, model.horizon, mu, nu)


def suboptimality_sweep(
    model: GameModel,
    n_list: Sequence[int],
    nu0,
    episodes: int = 0,
    seed: int = 0,
    coordination: Optional[CoordinationStrategy] = None,
    exact_optimum: Callable[[int, np.ndarray], float] = exact_blue_optimum_example2,
    mu0=None,
    cap: int = DEFAULT_COUNT_CAP,
) -> List[SweepRow]:
    """Finite-population price of following the coordinator's identical rule.

    For each n1: gap = exact optimum - value of the coordinator-induced
    identical strategy under exact Red best response.  With ``episodes`` = 0
    the coordinator value comes from the count DP directly (stderr 0);
    otherwise it is Monte Carlo against the oracle's recorded policy.  Red
    population size is the smallest realizing nu0 exactly.
    """
    nu0_w = _weights_of(nu0)
    red_counts = _integer_red_counts(nu0_w)
    n2 = sum(red_counts)
    if coordination is None:
        blue = example2_matching_strategy()
    else:
        blue = induced_identical_strategy(coordination)
    rows = []
    for n1 in n_list:
        if n1 < 1:
            raise InvalidInputError("population sizes must be at least 1")
        if mu0 is None:
            blue_counts = (n1,) + (0,) * (model.num_blue_states - 1)
        else:
            mu0_w = _weights_of(mu0)
            blue_counts = tuple(round(float(x) * n1) for x in mu0_w)
            if sum(blue_counts) != n1:
                raise InvalidInputError(f"mu0 {mu0!r} is not realizable by {n1} agents")
        init = JointCountState(blue_counts=blue_counts, red_counts=red_counts)
        opt = float(exact_optimum(n1, nu0_w))
        coord_value, policy = exact_red_best_response(model, n1, n2, blue, init, cap)
        stderr = 0.0
        if episodes > 0:
            totals = np.array(
                [
                    _rollout_vs_count_policy(
                        model, n1, n2, blue, policy, init, seed, e
                    )
                    for e in range(episodes)
                ]
            )
            coord_value, stderr = _mean_se(totals)
        rows.append(
            SweepRow(
                n1=int(n1),
                n2=int(n2),
                gap=float(opt - coord_value),
                stderr=float(stderr),
                exact_opt=float(opt),
                coord_value=float(coord_value),
            )
        )
    return rows
