"""Core domain types: flat and factored decision processes, policies,
performance metrics, and the source languages (CNF formulas, stochastic
formulas, Boolean circuits) consumed by the gadget compilers.

Every probability, reward, and value in this package is an exact
rational (``fractions.Fraction``); nothing ever rounds.  All types are
immutable after construction and safe to share across threads.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from fractions import Fraction
from graphlib import CycleError, TopologicalSorter
from typing import Mapping, Optional, Union

# Exact rational scalar.  Fraction already keeps lowest terms and a
# positive denominator, which is exactly the contract we need.
Rat = Fraction

ZERO = Fraction(0)
ONE = Fraction(1)

# A (sub-)probability measure over state indices.  Values are >= 0 and
# sum to at most 1: rows with all-zero transitions swallow mass.
StateDistribution = dict[int, Fraction]


class ObservabilityClass(enum.Enum):
    FULLY_OBSERVABLE = "fully-observable"
    UNOBSERVABLE = "unobservable"
    GENERAL = "general"


@dataclass(frozen=True)
class Labels:
    """Optional human-readable names; ignored by equality on models."""

    states: Optional[tuple[str, ...]] = None
    actions: Optional[tuple[str, ...]] = None
    observations: Optional[tuple[str, ...]] = None


@dataclass(frozen=True)
class Pomdp:
    """Flat partially observable decision process.

    ``obs`` maps every state to its observation index (observations are
    deterministic per state).  ``trans`` maps (state, action, state') to
    an exact probability; absent keys are 0.  For every (s, a) the row
    sum must be exactly 0 (action not applicable; mass halts) or 1.
    ``reward`` maps (state, action) to an exact reward; absent keys are
    0.  Rewards do not depend on the successor state.

    Construction is permissive; use :func:`validate_pomdp` to collect
    invariant violations as data.
    """

    n_states: int
    initial: int
    n_actions: int
    n_obs: int
    obs: tuple[int, ...]
    trans: Mapping[tuple[int, int, int], Fraction]
    reward: Mapping[tuple[int, int], Fraction]
    labels: Optional[Labels] = field(default=None, compare=False)

    def trans_prob(self, s: int, a: int, s2: int) -> Fraction:
        return self.trans.get((s, a, s2), ZERO)

    def reward_at(self, s: int, a: int) -> Fraction:
        return self.reward.get((s, a), ZERO)

    def state_label(self, s: int) -> str:
        if self.labels is not None and self.labels.states is not None:
            return self.labels.states[s]
        return str(s)


def validate_pomdp(m: Pomdp) -> list[str]:
    """Return every invariant violation (empty list = valid model).

    Violations are data, not failures: callers that must reject invalid
    models raise on a non-empty result.
    """
    bad: list[str] = []
    if not (0 <= m.initial < m.n_states):
        bad.append(f"initial state {m.initial} out of range [0, {m.n_states})")
    if len(m.obs) != m.n_states:
        bad.append(f"obs map covers {len(m.obs)} states, expected {m.n_states}")
    for s, o in enumerate(m.obs):
        if not (0 <= o < m.n_obs):
            bad.append(f"obs({s}) = {o} out of range [0, {m.n_obs})")
    row_sums: dict[tuple[int, int], Fraction] = {}
    for (s, a, s2), p in m.trans.items():
        if not (0 <= s < m.n_states and 0 <= s2 < m.n_states):
            bad.append(f"transition ({s},{a},{s2}) references unknown state")
            continue
        if not (0 <= a < m.n_actions):
            bad.append(f"transition ({s},{a},{s2}) references unknown action")
            continue
        if p < 0 or p > 1:
            bad.append(f"transition ({s},{a},{s2}) probability {p} outside [0,1]")
        row_sums[(s, a)] = row_sums.get((s, a), ZERO) + p
    for (s, a), total in sorted(row_sums.items()):
        if total != 0 and total != 1:
            bad.append(f"row-sum: transitions from (s={s}, a={a}) sum to {total}, expected 0 or 1")
    for (s, a) in m.reward:
        if not (0 <= s < m.n_states and 0 <= a < m.n_actions):
            bad.append(f"reward ({s},{a}) references unknown state or action")
    return bad


def classify_observability(m: Pomdp) -> ObservabilityClass:
    if m.n_obs == m.n_states and sorted(m.obs) == list(range(m.n_states)):
        return ObservabilityClass.FULLY_OBSERVABLE
    if m.n_obs == 1:
        return ObservabilityClass.UNOBSERVABLE
    return ObservabilityClass.GENERAL


# ---------------------------------------------------------------------------
# Policies

@dataclass(frozen=True)
class StationaryPolicy:
    """Maps each observation index to an action index."""

    act: tuple[int, ...]

    def action(self, obs: int) -> int:
        return self.act[obs]


@dataclass(frozen=True)
class TimeDependentPolicy:
    """Maps (observation, step) to an action; ``act[step][obs]``."""

    horizon: int
    act: tuple[tuple[int, ...], ...]

    def __post_init__(self) -> None:
        if len(self.act) != self.horizon:
            raise ValueError(f"action table has {len(self.act)} rows, horizon {self.horizon}")

    def action(self, obs: int, step: int) -> int:
        return self.act[step][obs]


@dataclass(frozen=True)
class HistoryPolicy:
    """Maps observation prefixes to actions.

    Keys of ``act`` are tuples of observation indices; the key for the
    action taken at step k is the sequence of the k+1 observations made
    so far (the current state's observation included).  The key set is
    the node set of the policy's decision tree.  It must cover every
    observation sequence realizable in the target model up to
    ``horizon`` steps.
    """

    horizon: int
    act: Mapping[tuple[int, ...], int]

    def action(self, history: tuple[int, ...]) -> int:
        try:
            return self.act[history]
        except KeyError:
            raise ValueError(f"history policy undefined for realizable observation sequence {history}") from None


@dataclass(frozen=True)
class FiniteMemoryPolicy:
    """Finite transducer: (observation, memory) -> (action, memory')."""

    n_memory: int
    initial_memory: int
    step: Mapping[tuple[int, int], tuple[int, int]]

    def __post_init__(self) -> None:
        if not (0 <= self.initial_memory < self.n_memory):
            raise ValueError("initial memory state out of range")
        for (o, q), (a, q2) in self.step.items():
            if not (0 <= q < self.n_memory and 0 <= q2 < self.n_memory):
                raise ValueError(f"memory index out of range in step({o},{q})")


Policy = Union[StationaryPolicy, TimeDependentPolicy, HistoryPolicy, FiniteMemoryPolicy]


# ---------------------------------------------------------------------------
# Performance metrics

@dataclass(frozen=True)
class FiniteTotal:
    horizon: int

    def __post_init__(self) -> None:
        if self.horizon < 0:
            raise ValueError("horizon must be >= 0")


@dataclass(frozen=True)
class FiniteDiscounted:
    beta: Fraction
    horizon: int

    def __post_init__(self) -> None:
        if not (0 < self.beta < 1):
            raise ValueError("discount must satisfy 0 < beta < 1")
        if self.horizon < 0:
            raise ValueError("horizon must be >= 0")


@dataclass(frozen=True)
class InfiniteDiscounted:
    beta: Fraction

    def __post_init__(self) -> None:
        if not (0 < self.beta < 1):
            raise ValueError("discount must satisfy 0 < beta < 1")


@dataclass(frozen=True)
class Average:
    pass


Metric = Union[FiniteTotal, FiniteDiscounted, InfiniteDiscounted, Average]


# ---------------------------------------------------------------------------
# Source languages

# A literal is (variable, signum): signum 1 for x_i, 0 for the negation.
Literal = tuple[int, int]


@dataclass(frozen=True)
class Cnf:
    """CNF formula with 1..3 literals per clause, variables numbered 1..n.

    A variable may appear at most once per clause (tautological clauses
    and duplicated variables are rejected outright: the clause-walk
    gadgets rely on one state per occurrence).
    """

    n_vars: int
    clauses: tuple[tuple[Literal, ...], ...]

    def __post_init__(self) -> None:
        if self.n_vars < 0:
            raise ValueError("negative variable count")
        for j, clause in enumerate(self.clauses, start=1):
            if not (1 <= len(clause) <= 3):
                raise ValueError(f"clause {j} has {len(clause)} literals, expected 1..3")
            seen: set[int] = set()
            for var, signum in clause:
                if not (1 <= var <= self.n_vars):
                    raise ValueError(f"clause {j} references variable {var} out of range")
                if signum not in (0, 1):
                    raise ValueError(f"clause {j} has bad signum {signum}")
                if var in seen:
                    raise ValueError(f"clause {j} repeats variable {var}")
                seen.add(var)

    @property
    def n_clauses(self) -> int:
        return len(self.clauses)


EXISTS = "e"
RANDOM = "r"


@dataclass(frozen=True)
class SsatFormula:
    """Quantified CNF: prefix of exists/random quantifiers over a matrix.

    Variables are numbered in quantification order: the i-th prefix
    entry must quantify variable i.  The random quantifier draws its
    variable uniformly from {0, 1}.
    """

    prefix: tuple[tuple[int, str], ...]
    matrix: Cnf

    def __post_init__(self) -> None:
        n = len(self.prefix)
        for pos, (var, quant) in enumerate(self.prefix, start=1):
            if quant not in (EXISTS, RANDOM):
                raise ValueError(f"unknown quantifier {quant!r} for variable {var}")
            if var != pos:
                raise ValueError(f"prefix position {pos} quantifies variable {var}; variables must be numbered in quantification order")
        if self.matrix.n_vars != n:
            raise ValueError(f"matrix declares {self.matrix.n_vars} variables, prefix quantifies {n}")

    @property
    def n_vars(self) -> int:
        return len(self.prefix)

    def quantifier(self, var: int) -> str:
        return self.prefix[var - 1][1]


# Gate kinds.  CONST gates double as the circuit's formal inputs: their
# stored bit is the default input value, and evaluation may override it.
AND = "AND"
OR = "OR"
NOT = "NOT"
CONST0 = "CONST0"
CONST1 = "CONST1"

GATE_KINDS = (AND, OR, NOT, CONST0, CONST1)
GateId = str


@dataclass(frozen=True)
class Gate:
    gid: GateId
    kind: str
    inputs: tuple[GateId, ...]


@dataclass(frozen=True)
class Circuit:
    """Boolean circuit as a gate list; validated to be an arity-correct DAG."""

    gates: tuple[Gate, ...]
    outputs: tuple[GateId, ...]

    def __post_init__(self) -> None:
        by_id: dict[GateId, Gate] = {}
        for g in self.gates:
            if g.kind not in GATE_KINDS:
                raise ValueError(f"gate {g.gid}: unknown kind {g.kind}")
            if g.gid in by_id:
                raise ValueError(f"duplicate gate id {g.gid}")
            by_id[g.gid] = g
        arity = {AND: 2, OR: 2, NOT: 1, CONST0: 0, CONST1: 0}
        graph: dict[GateId, tuple[GateId, ...]] = {}
        for g in self.gates:
            if len(g.inputs) != arity[g.kind]:
                raise ValueError(f"gate {g.gid}: {g.kind} takes {arity[g.kind]} inputs, got {len(g.inputs)}")
            for ref in g.inputs:
                if ref not in by_id:
                    raise ValueError(f"gate {g.gid}: unknown input {ref}")
            graph[g.gid] = g.inputs
        try:
            tuple(TopologicalSorter(graph).static_order())
        except CycleError as exc:
            raise ValueError(f"cycle in circuit: {exc.args[1]}") from None
        if not self.outputs:
            raise ValueError("circuit declares no outputs")
        for ref in self.outputs:
            if ref not in by_id:
                raise ValueError(f"unknown output gate {ref}")

    def gate(self, gid: GateId) -> Gate:
        for g in self.gates:
            if g.gid == gid:
                return g
        raise KeyError(gid)

    @property
    def input_gates(self) -> tuple[Gate, ...]:
        """CONST gates in declaration order; these are the formal inputs."""
        return tuple(g for g in self.gates if g.kind in (CONST0, CONST1))

    def topo_order(self) -> tuple[GateId, ...]:
        graph = {g.gid: g.inputs for g in self.gates}
        return tuple(TopologicalSorter(graph).static_order())


# ---------------------------------------------------------------------------
# Factored models

@dataclass(frozen=True)
class TbnAction:
    """Per-action dynamics of a factored model.

    For fluent k, ``async_parents[k]`` lists fluent indices read at time
    t and ``sync_parents[k]`` fluent indices read at time t+1 (their
    freshly computed values; these edges must form a DAG).  ``cpts[k]``
    maps each parent bit assignment (async bits first, then sync bits)
    to Pr[fluent_k' = 1].
    """

    async_parents: tuple[tuple[int, ...], ...]
    sync_parents: tuple[tuple[int, ...], ...]
    cpts: tuple[Mapping[tuple[int, ...], Fraction], ...]


@dataclass(frozen=True)
class Tbn:
    """Two-phase temporal network over binary fluents.

    ``reward`` is either None (all rewards 0), an explicit map from
    (state bit vector, action) to a reward, or a :class:`SuccinctReward`
    producing individual reward bits.  ``initial`` optionally fixes the
    represented process' start state.
    """

    fluents: tuple[str, ...]
    actions: tuple[TbnAction, ...]
    reward: Union[None, Mapping[tuple[tuple[int, ...], int], Fraction], "SuccinctReward"] = None
    initial: Optional[tuple[int, ...]] = None

    def __post_init__(self) -> None:
        n = len(self.fluents)
        if not self.actions:
            raise ValueError("factored model needs at least one action")
        for a, dyn in enumerate(self.actions):
            if not (len(dyn.async_parents) == len(dyn.sync_parents) == len(dyn.cpts) == n):
                raise ValueError(f"action {a}: dynamics must cover all {n} fluents")
            graph: dict[int, tuple[int, ...]] = {}
            for k in range(n):
                for parent in dyn.async_parents[k] + dyn.sync_parents[k]:
                    if not (0 <= parent < n):
                        raise ValueError(f"action {a}, fluent {k}: parent {parent} out of range")
                graph[k] = dyn.sync_parents[k]
                n_parents = len(dyn.async_parents[k]) + len(dyn.sync_parents[k])
                cpt = dyn.cpts[k]
                if len(cpt) != 2**n_parents:
                    raise ValueError(f"action {a}, fluent {k}: CPT has {len(cpt)} rows, expected {2**n_parents}")
                for bits, p in cpt.items():
                    if len(bits) != n_parents or any(b not in (0, 1) for b in bits):
                        raise ValueError(f"action {a}, fluent {k}: bad CPT row key {bits}")
                    if p < 0 or p > 1:
                        raise ValueError(f"action {a}, fluent {k}: CPT value {p} outside [0,1]")
            try:
                tuple(TopologicalSorter(graph).static_order())
            except CycleError as exc:
                raise ValueError(f"action {a}: synchronous cycle {exc.args[1]}") from None
        if self.initial is not None:
            if len(self.initial) != n or any(b not in (0, 1) for b in self.initial):
                raise ValueError("initial state must assign one bit per fluent")

    @property
    def n_fluents(self) -> int:
        return len(self.fluents)

    @property
    def n_actions(self) -> int:
        return len(self.actions)


@dataclass(frozen=True)
class SuccinctReward:
    """Bitwise reward: circuit(state bits, action bits, index bits) -> one bit.

    Bit ``b`` of the reward of (state, action) is the circuit's output
    on the state bits, the action in binary, and ``b`` in binary (all
    least-significant-first).  Indices at or beyond ``width`` are 0, so
    every reward is an integer below 2**width.
    """

    circuit: Circuit
    state_bits: int
    action_bits: int
    index_bits: int
    width: int

    def __post_init__(self) -> None:
        expected = self.state_bits + self.action_bits + self.index_bits
        if len(self.circuit.input_gates) < expected:
            raise ValueError(f"reward circuit has {len(self.circuit.input_gates)} inputs, expected {expected}")
        if len(self.circuit.outputs) != 1:
            raise ValueError("reward circuit must have exactly one output")
        if self.width < 1 or self.width > 2**self.index_bits:
            raise ValueError("declared width must fit the index bit count")


@dataclass(frozen=True)
class SuccinctCircuitInstance:
    """Implicitly described circuit: S(gate index, neighbor selector) -> (gate index, gate type).

    The first ``gate_bits`` + 2 CONST gates of ``circuit`` are its
    inputs (gate index least-significant-first, then the two selector
    bits); the outputs are the neighbor's index followed by 3 type-code
    bits for the neighbor's kind.  Gate 0 is the fictitious sink.
    ``output_gate`` is the described circuit's output gate and
    ``output_type`` its kind (not recoverable from S in general).
    """

    circuit: Circuit
    gate_bits: int
    output_gate: int
    output_type: str

    def __post_init__(self) -> None:
        if self.gate_bits < 1:
            raise ValueError("gate index width must be >= 1")
        if len(self.circuit.input_gates) < self.gate_bits + 2:
            raise ValueError(f"descriptor circuit has {len(self.circuit.input_gates)} inputs, needs at least {self.gate_bits + 2}")
        if len(self.circuit.outputs) != self.gate_bits + 3:
            raise ValueError(f"descriptor circuit has {len(self.circuit.outputs)} outputs, expected {self.gate_bits + 3}")
        if not (0 < self.output_gate < 2**self.gate_bits):
            raise ValueError("output gate index out of range (0 is the sink)")
        if self.output_type not in GATE_KINDS:
            raise ValueError(f"unknown output gate type {self.output_type}")


# Gate type codes used by the indexed-gadget fluents (3 bits, LSB first).
# CONST0 is deliberately 0 so masking to the sink zeroes the type.
TYPE_CODES = {CONST0: 0, CONST1: 1, AND: 2, OR: 3, NOT: 4}
TYPE_FROM_CODE = {v: k for k, v in TYPE_CODES.items()}


def bits_of(value: int, width: int) -> tuple[int, ...]:
    """Little-endian bit vector of ``value`` in ``width`` bits."""
    if value < 0 or value >= 2**width:
        raise ValueError(f"{value} does not fit in {width} bits")
    return tuple((value >> i) & 1 for i in range(width))


def int_of_bits(bits: tuple[int, ...]) -> int:
    return sum(b << i for i, b in enumerate(bits))
