"""Exact policy evaluation.

Finite-horizon total and discounted performance are computed by forward
propagation of state distributions (one distribution per realized
observation history for history-dependent policies), never by float
arithmetic.  Infinite-horizon discounted values solve the rational
linear system V = R + beta*P*V; long-run average reward decomposes the
induced chain into recurrent classes and weights class gains by exact
absorption probabilities.

Reward timing: the reward r(s, a) accrues at every step i = 0..h-1 at
which the state is occupied, step 0 included.  A state whose chosen
action has an all-zero transition row pays its reward on arrival and
then swallows the remaining mass (the process halts there).
"""

from __future__ import annotations

from fractions import Fraction
from typing import Sequence

from .model import (
    Average,
    FiniteDiscounted,
    FiniteMemoryPolicy,
    FiniteTotal,
    HistoryPolicy,
    InfiniteDiscounted,
    Labels,
    Metric,
    Policy,
    Pomdp,
    StateDistribution,
    StationaryPolicy,
    TimeDependentPolicy,
    ONE,
    ZERO,
)


def successor_table(m: Pomdp) -> dict[tuple[int, int], list[tuple[int, Fraction]]]:
    """Adjacency view of the transition map: (s, a) -> [(s', p), ...]."""
    table: dict[tuple[int, int], list[tuple[int, Fraction]]] = {}
    for (s, a, s2), p in m.trans.items():
        if p != 0:
            table.setdefault((s, a), []).append((s2, p))
    return table


def _check_policy_domain(m: Pomdp, policy: Policy) -> None:
    if isinstance(policy, StationaryPolicy):
        if len(policy.act) != m.n_obs:
            raise ValueError(f"policy covers {len(policy.act)} observations, model has {m.n_obs}")
        bad = [a for a in policy.act if not (0 <= a < m.n_actions)]
    elif isinstance(policy, TimeDependentPolicy):
        if any(len(row) != m.n_obs for row in policy.act):
            raise ValueError("time-dependent policy rows must cover every observation")
        bad = [a for row in policy.act for a in row if not (0 <= a < m.n_actions)]
    elif isinstance(policy, HistoryPolicy):
        bad = [a for a in policy.act.values() if not (0 <= a < m.n_actions)]
    elif isinstance(policy, FiniteMemoryPolicy):
        for o in range(m.n_obs):
            for q in range(policy.n_memory):
                if (o, q) not in policy.step:
                    raise ValueError(f"finite-memory policy undefined on (obs={o}, mem={q})")
        bad = [a for (a, _) in policy.step.values() if not (0 <= a < m.n_actions)]
    else:
        raise TypeError(f"unsupported policy type {type(policy).__name__}")
    if bad:
        raise ValueError(f"policy uses action(s) {sorted(set(bad))} outside [0, {m.n_actions})")


def finite_horizon_performance(m: Pomdp, policy: Policy, metric: Metric) -> Fraction:
    """Expected (optionally discounted) total reward over a finite horizon."""
    if isinstance(metric, FiniteTotal):
        horizon, beta = metric.horizon, ONE
    elif isinstance(metric, FiniteDiscounted):
        horizon, beta = metric.horizon, metric.beta
    else:
        raise ValueError(f"finite-horizon evaluation needs a finite metric, got {type(metric).__name__}")
    _check_policy_domain(m, policy)
    if isinstance(policy, (TimeDependentPolicy, HistoryPolicy)) and policy.horizon < horizon:
        raise ValueError(f"policy horizon {policy.horizon} shorter than evaluation horizon {horizon}")
    if isinstance(policy, FiniteMemoryPolicy):
        product, stationary = finite_memory_cross_product(m, policy)
        return finite_horizon_performance(product, stationary, metric)
    succ = successor_table(m)

    if isinstance(policy, HistoryPolicy):
        return _history_performance(m, policy, horizon, beta, succ)

    def action_at(s: int, step: int) -> int:
        if isinstance(policy, StationaryPolicy):
            return policy.action(m.obs[s])
        return policy.action(m.obs[s], step)

    dist: StateDistribution = {m.initial: ONE}
    total = ZERO
    disc = ONE
    for step in range(horizon):
        if not dist:
            break
        nxt: StateDistribution = {}
        for s, mass in dist.items():
            a = action_at(s, step)
            total += disc * mass * m.reward_at(s, a)
            for s2, p in succ.get((s, a), ()):
                nxt[s2] = nxt.get(s2, ZERO) + mass * p
        dist = nxt
        disc *= beta
    return total


def _history_performance(
    m: Pomdp,
    policy: HistoryPolicy,
    horizon: int,
    beta: Fraction,
    succ: dict[tuple[int, int], list[tuple[int, Fraction]]],
) -> Fraction:
    # One distribution per realized observation string; zero-probability
    # branches are never created.
    branches: dict[tuple[int, ...], StateDistribution] = {(m.obs[m.initial],): {m.initial: ONE}}
    total = ZERO
    disc = ONE
    for _step in range(horizon):
        if not branches:
            break
        nxt: dict[tuple[int, ...], StateDistribution] = {}
        for hist, dist in branches.items():
            a = policy.action(hist)
            for s, mass in dist.items():
                total += disc * mass * m.reward_at(s, a)
                for s2, p in succ.get((s, a), ()):
                    key = hist + (m.obs[s2],)
                    branch = nxt.setdefault(key, {})
                    branch[s2] = branch.get(s2, ZERO) + mass * p
        branches = nxt
        disc *= beta
    return total


def distribution_after(m: Pomdp, policy: Policy, steps: int) -> StateDistribution:
    """State occupation measure after exactly ``steps`` steps under ``policy``."""
    _check_policy_domain(m, policy)
    succ = successor_table(m)
    if isinstance(policy, FiniteMemoryPolicy):
        product, stationary = finite_memory_cross_product(m, policy)
        product_dist = distribution_after(product, stationary, steps)
        merged: StateDistribution = {}
        for sq, mass in product_dist.items():
            s = sq // policy.n_memory
            merged[s] = merged.get(s, ZERO) + mass
        return merged
    if isinstance(policy, HistoryPolicy):
        branches: dict[tuple[int, ...], StateDistribution] = {(m.obs[m.initial],): {m.initial: ONE}}
        for _ in range(steps):
            nxt: dict[tuple[int, ...], StateDistribution] = {}
            for hist, dist in branches.items():
                a = policy.action(hist)
                for s, mass in dist.items():
                    for s2, p in succ.get((s, a), ()):
                        key = hist + (m.obs[s2],)
                        branch = nxt.setdefault(key, {})
                        branch[s2] = branch.get(s2, ZERO) + mass * p
            branches = nxt
        merged = {}
        for dist in branches.values():
            for s, mass in dist.items():
                merged[s] = merged.get(s, ZERO) + mass
        return merged
    dist: StateDistribution = {m.initial: ONE}
    for step in range(steps):
        nxt: StateDistribution = {}
        for s, mass in dist.items():
            a = policy.action(m.obs[s]) if isinstance(policy, StationaryPolicy) else policy.action(m.obs[s], step)
            for s2, p in succ.get((s, a), ()):
                nxt[s2] = nxt.get(s2, ZERO) + mass * p
        dist = nxt
    return dist


# ---------------------------------------------------------------------------
# Rational linear algebra (Gaussian elimination; systems here are tiny)

def solve_linear(a: list[list[Fraction]], b: list[Fraction]) -> list[Fraction]:
    n = len(a)
    aug = [row[:] + [b[i]] for i, row in enumerate(a)]
    for col in range(n):
        pivot = next((r for r in range(col, n) if aug[r][col] != 0), None)
        if pivot is None:
            raise ValueError("singular system")
        if pivot != col:
            aug[col], aug[pivot] = aug[pivot], aug[col]
        inv = ONE / aug[col][col]
        aug[col] = [x * inv for x in aug[col]]
        for r in range(n):
            if r != col and aug[r][col] != 0:
                factor = aug[r][col]
                aug[r] = [x - factor * y for x, y in zip(aug[r], aug[col])]
    return [aug[i][n] for i in range(n)]


def _chain_under(m: Pomdp, policy: StationaryPolicy) -> tuple[list[list[tuple[int, Fraction]]], list[Fraction]]:
    """Markov chain (sparse rows) and reward vector induced by a stationary policy."""
    _check_policy_domain(m, policy)
    succ = successor_table(m)
    rows: list[list[tuple[int, Fraction]]] = []
    rewards: list[Fraction] = []
    for s in range(m.n_states):
        a = policy.action(m.obs[s])
        rows.append(succ.get((s, a), []))
        rewards.append(m.reward_at(s, a))
    return rows, rewards


def discounted_performance_stationary(m: Pomdp, policy: StationaryPolicy, beta: Fraction) -> Fraction:
    """Exact infinite-horizon discounted performance from the initial state.

    Solves V = R + beta * P * V over the rationals; the system is always
    nonsingular for 0 < beta < 1 because every row of P sums to at most 1.
    """
    if not (0 < beta < 1):
        raise ValueError("discount must satisfy 0 < beta < 1")
    rows, rewards = _chain_under(m, policy)
    n = m.n_states
    a = [[ONE if i == j else ZERO for j in range(n)] for i in range(n)]
    for s, row in enumerate(rows):
        for s2, p in row:
            a[s][s2] -= beta * p
    v = solve_linear(a, rewards)
    return v[m.initial]


def average_performance_stationary(m: Pomdp, policy: StationaryPolicy) -> Fraction:
    """Exact long-run average reward (Cesaro limit) from the initial state.

    The induced finite chain is decomposed into recurrent classes
    (communicating classes closed under transitions); each class's gain
    is its stationary distribution dotted with the rewards, and the
    result is the absorption-probability-weighted sum of gains.  States
    whose row sums to 0 halt the process and contribute gain 0.
    """
    rows, rewards = _chain_under(m, policy)
    n = m.n_states
    succ_sets = [frozenset(s2 for s2, _ in row) for row in rows]

    reach: list[set[int]] = []
    for s in range(n):
        seen = {s}
        stack = [s]
        while stack:
            u = stack.pop()
            for v in succ_sets[u]:
                if v not in seen:
                    seen.add(v)
                    stack.append(v)
        reach.append(seen)

    assigned = [False] * n
    classes: list[list[int]] = []
    for s in range(n):
        if assigned[s]:
            continue
        cls = sorted(t for t in reach[s] if s in reach[t])
        for t in cls:
            assigned[t] = True
        classes.append(cls)

    recurrent: list[list[int]] = []
    for cls in classes:
        members = set(cls)
        if all(succ_sets[s] <= members for s in cls):
            recurrent.append(cls)
    in_recurrent: dict[int, int] = {}
    for idx, cls in enumerate(recurrent):
        for s in cls:
            in_recurrent[s] = idx

    gains: list[Fraction] = []
    for cls in recurrent:
        if len(cls) == 1 and not rows[cls[0]]:
            gains.append(ZERO)  # halted mass: no further reward
            continue
        k = len(cls)
        pos = {s: i for i, s in enumerate(cls)}
        # x P = x restricted to the class, with the last equation
        # replaced by the normalization sum(x) = 1.
        a = [[ZERO] * k for _ in range(k)]
        for s in cls:
            for s2, p in rows[s]:
                a[pos[s2]][pos[s]] += p
        for i in range(k):
            a[i][i] -= ONE
        b = [ZERO] * k
        a[k - 1] = [ONE] * k
        b[k - 1] = ONE
        x = solve_linear(a, b)
        gains.append(sum((x[pos[s]] * rewards[s] for s in cls), ZERO))

    if m.initial in in_recurrent:
        return gains[in_recurrent[m.initial]]

    transient = [s for s in range(n) if s not in in_recurrent]
    pos_t = {s: i for i, s in enumerate(transient)}
    total = ZERO
    for idx, cls in enumerate(recurrent):
        if gains[idx] == 0:
            continue
        members = set(cls)
        k = len(transient)
        a = [[ONE if i == j else ZERO for j in range(k)] for i in range(k)]
        b = [ZERO] * k
        for s in transient:
            for s2, p in rows[s]:
                if s2 in pos_t:
                    a[pos_t[s]][pos_t[s2]] -= p
                elif s2 in members:
                    b[pos_t[s]] += p
        h = solve_linear(a, b)
        total += h[pos_t[m.initial]] * gains[idx]
    return total


def finite_memory_cross_product(m: Pomdp, policy: FiniteMemoryPolicy) -> tuple[Pomdp, StationaryPolicy]:
    """Fold a finite-memory policy into the state space.

    Returns the product process over (state, memory) pairs, whose
    observation reveals (observation, memory), together with the
    stationary policy the transducer induces on it.  Product state
    (s, q) has index s * |M| + q; product observation (o, q) has index
    o * |M| + q.  Evaluating the pair under any metric equals direct
    simulation of the transducer on the original model.
    """
    _check_policy_domain(m, policy)
    nm = policy.n_memory
    n_states = m.n_states * nm
    obs = tuple(m.obs[sq // nm] * nm + sq % nm for sq in range(n_states))
    trans: dict[tuple[int, int, int], Fraction] = {}
    reward: dict[tuple[int, int], Fraction] = {}
    for s in range(m.n_states):
        for q in range(nm):
            sq = s * nm + q
            for a in range(m.n_actions):
                r = m.reward_at(s, a)
                if r != 0:
                    reward[(sq, a)] = r
    for (s, a, s2), p in m.trans.items():
        for q in range(nm):
            _, q2 = policy.step[(m.obs[s], q)]
            trans[(s * nm + q, a, s2 * nm + q2)] = p
    labels = None
    if m.labels is not None and m.labels.states is not None:
        labels = Labels(states=tuple(f"{m.labels.states[sq // nm]}|m{sq % nm}" for sq in range(n_states)))
    product = Pomdp(
        n_states=n_states,
        initial=m.initial * nm + policy.initial_memory,
        n_actions=m.n_actions,
        n_obs=m.n_obs * nm,
        obs=obs,
        trans=trans,
        reward=reward,
        labels=labels,
    )
    act = tuple(policy.step[(oq // nm, oq % nm)][0] for oq in range(m.n_obs * nm))
    return product, StationaryPolicy(act)


def evaluate(m: Pomdp, policy: Policy, metric: Metric) -> Fraction:
    """Evaluate any policy under any metric (dispatching on the metric)."""
    if isinstance(metric, (FiniteTotal, FiniteDiscounted)):
        return finite_horizon_performance(m, policy, metric)
    if isinstance(policy, FiniteMemoryPolicy):
        product, stationary = finite_memory_cross_product(m, policy)
        return evaluate(product, stationary, metric)
    if not isinstance(policy, StationaryPolicy):
        raise ValueError(f"infinite-horizon evaluation requires a stationary policy, got {type(policy).__name__}")
    if isinstance(metric, InfiniteDiscounted):
        return discounted_performance_stationary(m, policy, metric.beta)
    if isinstance(metric, Average):
        return average_performance_stationary(m, policy)
    raise TypeError(f"unknown metric {metric!r}")
