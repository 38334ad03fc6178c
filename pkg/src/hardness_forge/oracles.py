"""Brute-force and exact reference computations.

These are the ground-truth side of every dichotomy check: optimal
values by exhaustive policy enumeration, the exact history-dependent
value by search over observation histories, exhaustive CNF/SSAT
solvers, topological circuit evaluation, and flatteners for the two
factored representations.  Everything is exact and deterministic;
enumeration order is fixed so witnesses are reproducible.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

from . import caps
from .evaluation import evaluate, finite_horizon_performance, successor_table
from .model import (
    AND,
    Average,
    Circuit,
    Cnf,
    CONST0,
    CONST1,
    EXISTS,
    FiniteDiscounted,
    FiniteTotal,
    InfiniteDiscounted,
    Labels,
    Metric,
    NOT,
    OR,
    Pomdp,
    SsatFormula,
    StationaryPolicy,
    SuccinctReward,
    Tbn,
    TimeDependentPolicy,
    bits_of,
    int_of_bits,
    ONE,
    ZERO,
)


def brute_force_stationary_value(
    m: Pomdp, metric: Metric, cap: int | None = None
) -> tuple[Fraction, StationaryPolicy]:
    """Exact optimal stationary value and a witness policy.

    Enumerates all n_actions**n_obs stationary policies; ties break
    toward the lexicographically smallest action tuple (observations
    ordered by index), so repeated runs return identical witnesses.
    """
    count = m.n_actions**m.n_obs
    caps.check(count, caps.policy_cap(cap), "stationary policy enumeration")
    best: Fraction | None = None
    witness: tuple[int, ...] | None = None
    for act in itertools.product(range(m.n_actions), repeat=m.n_obs):
        value = evaluate(m, StationaryPolicy(act), metric)
        if best is None or value > best:
            best, witness = value, act
    assert best is not None and witness is not None
    return best, StationaryPolicy(witness)


def brute_force_time_dependent_value(
    m: Pomdp, horizon: int, metric: Metric | None = None, cap: int | None = None
) -> tuple[Fraction, TimeDependentPolicy]:
    """Exact optimal time-dependent value over the given horizon.

    The policy space has n_actions**(n_obs*horizon) members (for an
    unobservable model, n_actions**horizon).  Slots are ordered by
    (step, observation) for the lexicographic tie-break.
    """
    if metric is None:
        metric = FiniteTotal(horizon)
    if not isinstance(metric, (FiniteTotal, FiniteDiscounted)) or metric.horizon != horizon:
        raise ValueError("metric must be finite with the same horizon")
    slots = m.n_obs * horizon
    caps.check(m.n_actions**slots, caps.policy_cap(cap), "time-dependent policy enumeration")
    best: Fraction | None = None
    witness: tuple[tuple[int, ...], ...] | None = None
    for flat in itertools.product(range(m.n_actions), repeat=slots):
        table = tuple(flat[t * m.n_obs : (t + 1) * m.n_obs] for t in range(horizon))
        value = finite_horizon_performance(m, TimeDependentPolicy(horizon, table), metric)
        if best is None or value > best:
            best, witness = value, table
    assert best is not None and witness is not None
    return best, TimeDependentPolicy(horizon, witness)


def exact_history_value(m: Pomdp, metric: Metric, cap: int | None = None) -> Fraction:
    """Exact optimal history-dependent value under a finite metric.

    Recursion over observation-history nodes: at each node, for each
    action, the immediate expected reward plus the values of the
    successor nodes (one per observation with positive mass).  Beliefs
    are kept unnormalized so no division is needed.  Actions inducing
    identical immediate reward and successor branches are explored
    once.  The node budget is the policy cap.
    """
    if isinstance(metric, FiniteTotal):
        horizon, beta = metric.horizon, ONE
    elif isinstance(metric, FiniteDiscounted):
        horizon, beta = metric.horizon, metric.beta
    else:
        raise ValueError("history value is computed for finite metrics only")
    succ = successor_table(m)
    budget = caps.policy_cap(cap)
    visited = 0

    def go(belief: dict[int, Fraction], depth: int, disc: Fraction) -> Fraction:
        nonlocal visited
        if depth == horizon or not belief:
            return ZERO
        visited += 1
        if visited > budget:
            raise caps.CapExceeded(f"history search: more than {budget} nodes")
        best: Fraction | None = None
        seen: set[tuple] = set()
        for a in range(m.n_actions):
            immediate = ZERO
            branches: dict[int, dict[int, Fraction]] = {}
            for s, mass in belief.items():
                immediate += mass * m.reward_at(s, a)
                for s2, p in succ.get((s, a), ()):
                    branch = branches.setdefault(m.obs[s2], {})
                    branch[s2] = branch.get(s2, ZERO) + mass * p
            key = (immediate, tuple(sorted((o, tuple(sorted(b.items()))) for o, b in branches.items())))
            if key in seen:
                continue
            seen.add(key)
            value = immediate * disc
            for branch in branches.values():
                value += go(branch, depth + 1, disc * beta)
            if best is None or value > best:
                best = value
        assert best is not None
        return best

    return go({m.initial: ONE}, 0, ONE)


# ---------------------------------------------------------------------------
# Formula and circuit ground truth

@dataclass(frozen=True)
class SatResult:
    satisfiable: bool
    best_assignment: tuple[int, ...]
    max_satisfied: int


def satisfied_clauses(cnf: Cnf, assignment: Sequence[int]) -> int:
    count = 0
    for clause in cnf.clauses:
        if any(assignment[var - 1] == signum for var, signum in clause):
            count += 1
    return count


def sat_enumerate(cnf: Cnf, cap: int | None = None) -> SatResult:
    """Exhaustive sweep of all 2**n assignments (first maximizer wins)."""
    caps.check(2**cnf.n_vars, caps.policy_cap(cap), "assignment sweep")
    best = -1
    best_assignment: tuple[int, ...] = ()
    for raw in range(2**cnf.n_vars):
        assignment = bits_of(raw, cnf.n_vars)
        count = satisfied_clauses(cnf, assignment)
        if count > best:
            best, best_assignment = count, assignment
    return SatResult(best == cnf.n_clauses, best_assignment, best)


def ssat_value(phi: SsatFormula, prefix: Sequence[int] = (), cap: int | None = None) -> Fraction:
    """Optimal satisfaction probability of the quantified game.

    Existential variables maximize, random variables average the two
    subtrees.  ``prefix`` optionally fixes the first variables, giving
    the value of the corresponding subgame.
    """
    n = phi.n_vars
    caps.check(2 ** (n - len(prefix)), caps.policy_cap(cap), "quantified game tree")

    def go(assignment: list[int]) -> Fraction:
        i = len(assignment)
        if i == n:
            sat = satisfied_clauses(phi.matrix, assignment) == phi.matrix.n_clauses
            return ONE if sat else ZERO
        if phi.quantifier(i + 1) == EXISTS:
            return max(go(assignment + [0]), go(assignment + [1]))
        return (go(assignment + [0]) + go(assignment + [1])) / 2

    return go(list(prefix))


def ssat_optimal_bit(phi: SsatFormula, prefix: Sequence[int]) -> int:
    """Value-maximizing choice for the next existential variable (ties: 0)."""
    v0 = ssat_value(phi, tuple(prefix) + (0,))
    v1 = ssat_value(phi, tuple(prefix) + (1,))
    return 1 if v1 > v0 else 0


def circuit_eval(circuit: Circuit, inputs: Sequence[int] | None = None) -> tuple[int, ...]:
    """Evaluate a circuit topologically; returns the declared outputs.

    ``inputs`` optionally overrides the stored bits of the leading
    CONST gates (in declaration order); trailing CONST gates keep their
    stored values, so internal constants coexist with formal inputs.
    """
    by_id = {g.gid: g for g in circuit.gates}
    override: dict[str, int] = {}
    if inputs is not None:
        const_gates = circuit.input_gates
        if len(inputs) > len(const_gates):
            raise ValueError(f"{len(inputs)} input bits for {len(const_gates)} input gates")
        for g, bit in zip(const_gates, inputs):
            if bit not in (0, 1):
                raise ValueError(f"input bit {bit!r} is not 0/1")
            override[g.gid] = bit
    values: dict[str, int] = {}
    for gid in circuit.topo_order():
        g = by_id[gid]
        if g.kind == CONST0:
            values[gid] = override.get(gid, 0)
        elif g.kind == CONST1:
            values[gid] = override.get(gid, 1)
        elif g.kind == NOT:
            values[gid] = 1 - values[g.inputs[0]]
        elif g.kind == AND:
            values[gid] = values[g.inputs[0]] & values[g.inputs[1]]
        else:
            values[gid] = values[g.inputs[0]] | values[g.inputs[1]]
    return tuple(values[o] for o in circuit.outputs)


def reward_bit(sr: SuccinctReward, state_bits: Sequence[int], action: int, index: int) -> int:
    """Bit ``index`` of the reward of (state, action); 0 beyond the width."""
    if index < 0:
        raise ValueError("negative reward bit index")
    if index >= sr.width:
        return 0
    inputs = tuple(state_bits) + bits_of(action, sr.action_bits) + bits_of(index, sr.index_bits)
    return circuit_eval(sr.circuit, inputs)[0]


def assemble_reward(sr: SuccinctReward, state_bits: Sequence[int], action: int, cap: int | None = None) -> Fraction:
    """Materialize the full reward integer (only sane for small widths)."""
    caps.check(sr.width, caps.state_cap(cap), "reward width")
    total = 0
    for b in range(sr.width):
        if reward_bit(sr, state_bits, action, b):
            total += 1 << b
    return Fraction(total)


# ---------------------------------------------------------------------------
# Factored-model expansion

def _tbn_successors(
    tbn: Tbn, action: int, bits: tuple[int, ...], order: tuple[int, ...]
) -> list[tuple[tuple[int, ...], Fraction]]:
    """All successor bit vectors with probabilities, branching fluent by fluent."""
    dyn = tbn.actions[action]
    outcomes: list[tuple[dict[int, int], Fraction]] = [({}, ONE)]
    for k in order:
        key_async = tuple(bits[i] for i in dyn.async_parents[k])
        nxt: list[tuple[dict[int, int], Fraction]] = []
        for partial, prob in outcomes:
            key = key_async + tuple(partial[i] for i in dyn.sync_parents[k])
            p1 = dyn.cpts[k][key]
            if p1 != 0:
                nxt.append(({**partial, k: 1}, prob * p1))
            if p1 != 1:
                nxt.append(({**partial, k: 0}, prob * (1 - p1)))
        outcomes = nxt
    merged: dict[tuple[int, ...], Fraction] = {}
    for partial, prob in outcomes:
        key_bits = tuple(partial[k] for k in range(tbn.n_fluents))
        merged[key_bits] = merged.get(key_bits, ZERO) + prob
    return sorted(merged.items())


def _sync_order(tbn: Tbn, action: int) -> tuple[int, ...]:
    from graphlib import TopologicalSorter

    graph = {k: tbn.actions[action].sync_parents[k] for k in range(tbn.n_fluents)}
    return tuple(TopologicalSorter(graph).static_order())


def _materialize_reward(tbn: Tbn, bits: tuple[int, ...], action: int, cap: int | None) -> Fraction:
    if tbn.reward is None:
        return ZERO
    if isinstance(tbn.reward, SuccinctReward):
        return assemble_reward(tbn.reward, bits, action, cap)
    return tbn.reward.get((bits, action), ZERO)


def expand_2tbn(tbn: Tbn, reachable_only: bool = False, cap: int | None = None) -> Pomdp:
    """Flatten a factored model into an explicit, fully observable process.

    States are fluent bit vectors (least-significant fluent first in the
    index); the transition probability of bits -> bits' is the product
    of the per-fluent conditional probabilities, synchronous parents
    evaluated in topological order.  With ``reachable_only`` the state
    space is restricted to what the declared initial state can reach,
    which keeps large gadgets tractable.
    """
    n = tbn.n_fluents
    limit = caps.state_cap(cap)
    orders = [_sync_order(tbn, a) for a in range(tbn.n_actions)]
    initial_bits = tbn.initial if tbn.initial is not None else tuple([0] * n)

    if reachable_only:
        index: dict[tuple[int, ...], int] = {initial_bits: 0}
        worklist = [initial_bits]
        trans: dict[tuple[int, int, int], Fraction] = {}
        reward: dict[tuple[int, int], Fraction] = {}
        while worklist:
            bits = worklist.pop(0)
            s = index[bits]
            for a in range(tbn.n_actions):
                r = _materialize_reward(tbn, bits, a, cap)
                if r != 0:
                    reward[(s, a)] = r
                for bits2, p in _tbn_successors(tbn, a, bits, orders[a]):
                    if bits2 not in index:
                        caps.check(len(index) + 1, limit, "reachable expansion")
                        index[bits2] = len(index)
                        worklist.append(bits2)
                    key = (s, a, index[bits2])
                    trans[key] = trans.get(key, ZERO) + p
        states = sorted(index, key=index.get)
        labels = Labels(states=tuple("".join(map(str, b)) for b in states))
        return Pomdp(
            n_states=len(states),
            initial=0,
            n_actions=tbn.n_actions,
            n_obs=len(states),
            obs=tuple(range(len(states))),
            trans=trans,
            reward=reward,
            labels=labels,
        )

    caps.check(2**n, limit, "full expansion")
    n_states = 2**n
    trans = {}
    reward = {}
    for raw in range(n_states):
        bits = bits_of(raw, n)
        for a in range(tbn.n_actions):
            r = _materialize_reward(tbn, bits, a, cap)
            if r != 0:
                reward[(raw, a)] = r
            for bits2, p in _tbn_successors(tbn, a, bits, orders[a]):
                key = (raw, a, int_of_bits(bits2))
                trans[key] = trans.get(key, ZERO) + p
    labels = Labels(states=tuple("".join(map(str, bits_of(raw, n))) for raw in range(n_states)))
    return Pomdp(
        n_states=n_states,
        initial=int_of_bits(initial_bits),
        n_actions=tbn.n_actions,
        n_obs=n_states,
        obs=tuple(range(n_states)),
        trans=trans,
        reward=reward,
        labels=labels,
    )


def expand_succinct_mdp(
    ct: Circuit,
    cr: SuccinctReward,
    state_bits: int,
    action_bits: int,
    prob_bits: int,
    cap: int | None = None,
) -> Pomdp:
    """Flatten a bitwise-encoded process into an explicit one.

    ``ct`` produces bit ``i`` of the transition probability
    t(s, a, s') on inputs (s bits, a bits, s' bits, i bits), all
    least-significant-first; probability bit ``i`` has weight 2**-i, so
    bit 0 is the integer part and exact probability 1 is representable.
    ``cr`` produces the reward bits.  Rows whose assembled sum is
    neither 0 nor 1 mark a malformed instance and are rejected.
    """
    index_bits = max(1, (prob_bits - 1).bit_length()) if prob_bits > 1 else 1
    expected = 2 * state_bits + action_bits + index_bits
    if len(ct.input_gates) != expected:
        raise ValueError(f"transition circuit has {len(ct.input_gates)} inputs, expected {expected}")
    if len(ct.outputs) != 1:
        raise ValueError("transition circuit must have exactly one output")
    n_states = 2**state_bits
    n_actions = 2**action_bits
    caps.check(n_states, caps.state_cap(cap), "bitwise expansion")

    trans: dict[tuple[int, int, int], Fraction] = {}
    reward: dict[tuple[int, int], Fraction] = {}
    for s in range(n_states):
        sb = bits_of(s, state_bits)
        for a in range(n_actions):
            ab = bits_of(a, action_bits)
            row_sum = ZERO
            for s2 in range(n_states):
                s2b = bits_of(s2, state_bits)
                p = ZERO
                for i in range(prob_bits):
                    bit = circuit_eval(ct, sb + ab + s2b + bits_of(i, index_bits))[0]
                    if bit:
                        p += Fraction(1, 2**i)
                if p != 0:
                    trans[(s, a, s2)] = p
                    row_sum += p
            if row_sum not in (ZERO, ONE):
                raise ValueError(f"malformed instance: row (s={s}, a={a}) sums to {row_sum}")
            r = assemble_reward(cr, sb, a, cap)
            if r != 0:
                reward[(s, a)] = r
    return Pomdp(
        n_states=n_states,
        initial=0,
        n_actions=n_actions,
        n_obs=n_states,
        obs=tuple(range(n_states)),
        trans=trans,
        reward=reward,
    )
