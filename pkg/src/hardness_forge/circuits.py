"""Circuit-side compilers.

Covers the parity-product reduction from circuit evaluation to a fully
observable process, the one-step simulation of a circuit by a factored
model, and the implicitly-described variant where the circuit itself is
given by a descriptor circuit and the factored model's reward is only
accessible bit by bit.
"""

from __future__ import annotations

import itertools
from fractions import Fraction
from typing import Sequence

from .model import (
    AND,
    CONST0,
    CONST1,
    Circuit,
    FiniteTotal,
    Gate,
    GateId,
    Labels,
    NOT,
    OR,
    Pomdp,
    SuccinctCircuitInstance,
    SuccinctReward,
    Tbn,
    TbnAction,
    TYPE_CODES,
    TYPE_FROM_CODE,
    bits_of,
    int_of_bits,
    ONE,
    ZERO,
)
from .oracles import circuit_eval
from .reductions import DichotomyClaim, GadgetOutput

_HALF = Fraction(1, 2)

_IDENTITY_CPT = {(0,): ZERO, (1,): ONE}


def cvp_to_mdp(circuit: Circuit, k_gap: int) -> GadgetOutput:
    """Parity-product process over (gate, parity) pairs.

    The walk starts at the output gate and moves backward through the
    wires: actions pick the predecessor at an OR gate on even parity
    (an AND gate on odd parity), a fair coin picks it in the dual
    cases, and NOT gates flip the parity.  Leaving an input gate whose
    value matches the parity pays 2**(|gates|+k+1); everything then
    sinks.  The optimal value hits the full reward exactly when the
    circuit evaluates to 1 and otherwise falls short by at least 2k.
    """
    if k_gap < 1:
        raise ValueError("gap parameter must be >= 1")
    if len(circuit.outputs) != 1:
        raise ValueError("reduction needs a single-output circuit")
    gates = circuit.gates
    pos = {g.gid: i for i, g in enumerate(gates)}
    n_gates = len(gates)
    sink = 2 * n_gates
    big = Fraction(2 ** (n_gates + k_gap + 1))

    trans: dict[tuple[int, int, int], Fraction] = {}
    reward: dict[tuple[int, int], Fraction] = {}

    def add(s: int, a: int, s2: int, p: Fraction) -> None:
        trans[(s, a, s2)] = trans.get((s, a, s2), ZERO) + p

    for g in gates:
        for p_bit in (0, 1):
            s = 2 * pos[g.gid] + p_bit
            if g.kind in (CONST0, CONST1):
                for a in (0, 1):
                    add(s, a, sink, ONE)
                value = 1 if g.kind == CONST1 else 0
                if (value, p_bit) in ((1, 0), (0, 1)):
                    for a in (0, 1):
                        reward[(s, a)] = big
            elif g.kind == NOT:
                nxt = 2 * pos[g.inputs[0]] + (1 - p_bit)
                for a in (0, 1):
                    add(s, a, nxt, ONE)
            elif (g.kind == OR and p_bit == 0) or (g.kind == AND and p_bit == 1):
                for a in (0, 1):
                    add(s, a, 2 * pos[g.inputs[a]] + p_bit, ONE)
            else:  # OR on odd parity / AND on even parity: fair coin
                for a in (0, 1):
                    add(s, a, 2 * pos[g.inputs[0]] + p_bit, _HALF)
                    add(s, a, 2 * pos[g.inputs[1]] + p_bit, _HALF)
    for a in (0, 1):
        add(sink, a, sink, ONE)

    labels = tuple(
        f"{g.gid}|{'even' if p_bit == 0 else 'odd'}" for g in gates for p_bit in (0, 1)
    ) + ("sink",)
    n_states = 2 * n_gates + 1
    model = Pomdp(
        n_states=n_states,
        initial=2 * pos[circuit.outputs[0]],
        n_actions=2,
        n_obs=n_states,
        obs=tuple(range(n_states)),
        trans=trans,
        reward=reward,
        labels=Labels(states=labels),
    )
    horizon = 2 * n_gates + 1
    return GadgetOutput(
        model=model,
        recommended_horizon=horizon,
        recommended_metric=FiniteTotal(horizon),
        claim=DichotomyClaim(
            "eq-or-below",
            yes_value=big,
            no_bound=big - 2 * k_gap,
            params={"k_gap": k_gap, "gates": n_gates},
        ),
    )


# ---------------------------------------------------------------------------
# One-step simulation of a circuit by a factored model

_GATE_FUNC = {
    AND: lambda bits: bits[0] & bits[1],
    OR: lambda bits: bits[0] | bits[1],
    NOT: lambda bits: 1 - bits[0],
}


def _gate_cpt(kind: str, key_to_input: Sequence[int]) -> dict[tuple[int, ...], Fraction]:
    """Deterministic CPT for a gate whose parents arrive in key order.

    ``key_to_input[pos]`` is the gate-input slot the pos-th key bit
    feeds (async parents precede sync parents in the key).
    """
    func = _GATE_FUNC[kind]
    n = len(key_to_input)
    rows: dict[tuple[int, ...], Fraction] = {}
    for bits in itertools.product((0, 1), repeat=n):
        ordered = [0] * n
        for key_pos, in_pos in enumerate(key_to_input):
            ordered[in_pos] = bits[key_pos]
        rows[bits] = ONE if func(ordered) else ZERO
    return rows


def circuit_to_2tbn(circuit: Circuit) -> Tbn:
    """Simulate a circuit by a single-action factored model.

    The circuit's CONST gates act as its n formal inputs.  Fluent slots
    0..max(n, n')-1 carry the inputs at time t and receive the n'
    outputs at time t+1; every internal gate gets its own fluent wired
    along the circuit's edges (inputs read asynchronously, internal
    results synchronously), so one step propagates the inputs all the
    way to the outputs.  The fluent count is at most twice the gate
    count.
    """
    input_ids = [g.gid for g in circuit.input_gates]
    n_in = len(input_ids)
    n_out = len(circuit.outputs)
    io_slots = max(n_in, n_out)
    input_slot = {gid: i for i, gid in enumerate(input_ids)}

    internal = [gid for gid in circuit.topo_order() if gid not in input_slot]
    fluent_of = {gid: io_slots + i for i, gid in enumerate(internal)}
    names = [f"io{q}" for q in range(io_slots)] + [f"g:{gid}" for gid in internal]
    n_fluents = len(names)

    by_id = {g.gid: g for g in circuit.gates}
    async_parents: list[tuple[int, ...]] = [()] * n_fluents
    sync_parents: list[tuple[int, ...]] = [()] * n_fluents
    cpts: list[dict[tuple[int, ...], Fraction]] = [{}] * n_fluents

    def wire(ref: GateId) -> tuple[str, int]:
        """(edge kind, fluent index) for reading the value of gate ``ref``."""
        if ref in input_slot:
            return ("async", input_slot[ref])
        return ("sync", fluent_of[ref])

    for q in range(io_slots):
        if q < n_out:
            kind, parent = wire(circuit.outputs[q])
        else:
            kind, parent = "async", q  # plain input slot: keep its value
        if kind == "async":
            async_parents[q], sync_parents[q] = (parent,), ()
        else:
            async_parents[q], sync_parents[q] = (), (parent,)
        cpts[q] = dict(_IDENTITY_CPT)

    for gid in internal:
        g = by_id[gid]
        f = fluent_of[gid]
        a_parents: list[int] = []
        s_parents: list[int] = []
        key_to_input: list[int] = []
        for in_pos, ref in enumerate(g.inputs):
            kind, parent = wire(ref)
            if kind == "async":
                a_parents.append(parent)
                key_to_input.append(in_pos)
        for in_pos, ref in enumerate(g.inputs):
            kind, parent = wire(ref)
            if kind == "sync":
                s_parents.append(parent)
                key_to_input.append(in_pos)
        async_parents[f], sync_parents[f] = tuple(a_parents), tuple(s_parents)
        cpts[f] = _gate_cpt(g.kind, key_to_input)

    action = TbnAction(tuple(async_parents), tuple(sync_parents), tuple(cpts))
    return Tbn(fluents=tuple(names), actions=(action,))


# ---------------------------------------------------------------------------
# Circuit construction helpers

class CircuitBuilder:
    """Incremental circuit construction with fresh gate ids."""

    def __init__(self, prefix: str = "") -> None:
        self.gates: list[Gate] = []
        self._n = 0
        self._prefix = prefix

    def _emit(self, kind: str, *inputs: GateId) -> GateId:
        gid = f"{self._prefix}n{self._n}"
        self._n += 1
        self.gates.append(Gate(gid, kind, tuple(inputs)))
        return gid

    def const(self, bit: int) -> GateId:
        return self._emit(CONST1 if bit else CONST0)

    def and_(self, a: GateId, b: GateId) -> GateId:
        return self._emit(AND, a, b)

    def or_(self, a: GateId, b: GateId) -> GateId:
        return self._emit(OR, a, b)

    def not_(self, a: GateId) -> GateId:
        return self._emit(NOT, a)

    def and_all(self, wires: Sequence[GateId]) -> GateId:
        if not wires:
            return self.const(1)
        out = wires[0]
        for w in wires[1:]:
            out = self.and_(out, w)
        return out

    def or_all(self, wires: Sequence[GateId]) -> GateId:
        if not wires:
            return self.const(0)
        out = wires[0]
        for w in wires[1:]:
            out = self.or_(out, w)
        return out

    def match(self, wires: Sequence[GateId], value: int) -> GateId:
        """Wire that is 1 exactly when the wires spell ``value`` (LSB first)."""
        literals = []
        for i, w in enumerate(wires):
            literals.append(w if (value >> i) & 1 else self.not_(w))
        return self.and_all(literals)

    def build(self, outputs: Sequence[GateId]) -> Circuit:
        return Circuit(tuple(self.gates), tuple(outputs))


def normalize_fanout(circuit: Circuit, max_out: int = 2) -> Circuit:
    """Rewrite the circuit so no gate feeds more than ``max_out`` others.

    Excess consumers are rerouted through double-negation buffers,
    preserving every gate's value.
    """
    kinds = {g.gid: g.kind for g in circuit.gates}
    inputs = {g.gid: list(g.inputs) for g in circuit.gates}
    order = [g.gid for g in circuit.gates]
    counter = 0

    def fresh() -> GateId:
        nonlocal counter
        while True:
            gid = f"buf{counter}"
            counter += 1
            if gid not in kinds:
                return gid

    while True:
        consumers: dict[GateId, list[tuple[GateId, int]]] = {}
        for gid in order:
            for pos, ref in enumerate(inputs[gid]):
                consumers.setdefault(ref, []).append((gid, pos))
        overloaded = next((gid for gid in order if len(consumers.get(gid, ())) > max_out), None)
        if overloaded is None:
            break
        users = consumers[overloaded]
        moved = users[max_out - 1 :]
        b1, b2 = fresh(), fresh()
        kinds[b1], inputs[b1] = NOT, [overloaded]
        kinds[b2], inputs[b2] = NOT, [b1]
        at = order.index(overloaded) + 1
        order[at:at] = [b1, b2]
        for ugid, pos in moved:
            inputs[ugid][pos] = b2
    return Circuit(
        tuple(Gate(gid, kinds[gid], tuple(inputs[gid])) for gid in order), circuit.outputs
    )


# ---------------------------------------------------------------------------
# Implicit (descriptor-circuit) representation

def build_succinct_instance(circuit: Circuit) -> SuccinctCircuitInstance:
    """Describe a small circuit by a table-lookup descriptor.

    Gates are numbered 1..G in declaration order (0 is the fictitious
    sink); the descriptor maps (gate index, neighbor selector) to the
    selected neighbor's index and type code.  Selectors 0 and 1 name a
    gate's inputs, selectors 2 and 3 the gates it feeds (gates may feed
    at most two others; normalize first if needed).
    """
    if len(circuit.outputs) != 1:
        raise ValueError("instance needs a single-output circuit")
    number = {g.gid: i + 1 for i, g in enumerate(circuit.gates)}
    n_gates = len(circuit.gates)
    gate_bits = max(1, n_gates.bit_length())

    consumers: dict[GateId, list[GateId]] = {}
    for g in circuit.gates:
        for ref in g.inputs:
            consumers.setdefault(ref, []).append(g.gid)
    for gid, users in consumers.items():
        if len(users) > 2:
            raise ValueError(f"gate {gid} feeds {len(users)} gates; normalize fan-out to 2 first")

    def entry(g: Gate, selector: int) -> tuple[int, int]:
        if selector < 2:
            refs = g.inputs
            target = number[refs[selector]] if selector < len(refs) else 0
        else:
            users = consumers.get(g.gid, [])
            target = number[users[selector - 2]] if selector - 2 < len(users) else 0
        if target == 0:
            return 0, TYPE_CODES[CONST0]
        return target, TYPE_CODES[circuit.gates[target - 1].kind]

    builder = CircuitBuilder()
    i_wires = [builder.const(0) for _ in range(gate_bits)]
    k_wires = [builder.const(0) for _ in range(2)]

    out_bits: list[list[GateId]] = [[] for _ in range(gate_bits + 3)]
    for g in circuit.gates:
        for selector in range(4):
            target, code = entry(g, selector)
            word = target | (code << gate_bits)
            if word == 0:
                continue
            row = builder.and_(
                builder.match(i_wires, number[g.gid]), builder.match(k_wires, selector)
            )
            for b in range(gate_bits + 3):
                if (word >> b) & 1:
                    out_bits[b].append(row)
    outputs = [builder.or_all(rows) for rows in out_bits]
    descriptor = builder.build(outputs)
    out_gate = circuit.outputs[0]
    return SuccinctCircuitInstance(
        circuit=descriptor,
        gate_bits=gate_bits,
        output_gate=number[out_gate],
        output_type=circuit.gates[number[out_gate] - 1].kind,
    )


def query_descriptor(inst: SuccinctCircuitInstance, i: int, k: int) -> tuple[int, int]:
    """Descriptor output (neighbor index, neighbor type code) on (i, k)."""
    inputs = bits_of(i, inst.gate_bits) + bits_of(k, 2)
    out = circuit_eval(inst.circuit, inputs)
    return int_of_bits(out[: inst.gate_bits]), int_of_bits(out[inst.gate_bits :])


def described_circuit(inst: SuccinctCircuitInstance) -> Circuit:
    """Reconstruct the described circuit by querying the descriptor."""
    types: dict[int, str] = {inst.output_gate: inst.output_type}
    preds: dict[int, tuple[int, ...]] = {}
    stack = [inst.output_gate]
    while stack:
        i = stack.pop()
        kind = types[i]
        arity = 2 if kind in (AND, OR) else (1 if kind == NOT else 0)
        refs = []
        for k in range(arity):
            j, code = query_descriptor(inst, i, k)
            if j == 0:
                raise ValueError(f"gate {i} ({kind}) is missing predecessor {k}")
            if code not in TYPE_FROM_CODE:
                raise ValueError(f"descriptor returned unknown type code {code}")
            t = TYPE_FROM_CODE[code]
            if j in types and types[j] != t:
                raise ValueError(f"descriptor is inconsistent about gate {j}")
            if j not in types:
                types[j] = t
                stack.append(j)
            refs.append(j)
        preds[i] = tuple(refs)
    gates = tuple(
        Gate(f"g{i}", types[i], tuple(f"g{j}" for j in preds[i])) for i in sorted(types)
    )
    return Circuit(gates, (f"g{inst.output_gate}",))


def _build_step_circuit(inst: SuccinctCircuitInstance) -> tuple[Circuit, list[GateId]]:
    """Next-state circuit: (i, p, t, r', a) -> (j, p', t').

    Dispatches on the gate type and parity: the action picks the
    predecessor at choice states, the fresh random bit picks it at coin
    states, NOT gates follow their only input and flip the parity, and
    input gates collapse to the all-zero sink.  Returns the circuit and
    its placeholder input ids in order (i bits, p, t bits, r, a).
    """
    gate_bits = inst.gate_bits
    b = CircuitBuilder(prefix="step.")
    i_wires = [b.const(0) for _ in range(gate_bits)]
    p_wire = b.const(0)
    t_wires = [b.const(0) for _ in range(3)]
    r_wire = b.const(0)
    a_wire = b.const(0)
    placeholders = i_wires + [p_wire] + t_wires + [r_wire, a_wire]

    t0, t1, t2 = t_wires
    nt0, nt1, nt2 = b.not_(t0), b.not_(t1), b.not_(t2)
    np = b.not_(p_wire)
    is_and = b.and_(b.and_(nt2, t1), nt0)
    is_or = b.and_(b.and_(nt2, t1), t0)
    is_not = b.and_(b.and_(t2, nt1), nt0)
    not_const = b.or_(t1, t2)

    sel_a = b.or_(b.and_(is_or, np), b.and_(is_and, p_wire))
    sel_r = b.or_(b.and_(is_or, p_wire), b.and_(is_and, np))
    z = b.or_(b.and_(sel_a, a_wire), b.and_(sel_r, r_wire))

    # Embed the descriptor with inputs (i, k) = (i wires, z, 0).
    sel_wires = [z, b.const(0)]
    desc_inputs = inst.circuit.input_gates[: gate_bits + 2]
    mapping: dict[GateId, GateId] = {}
    for src, wirein in zip(desc_inputs, i_wires + sel_wires):
        mapping[src.gid] = wirein
    by_id = {g.gid: g for g in inst.circuit.gates}
    for gid in inst.circuit.topo_order():
        if gid in mapping:
            continue
        g = by_id[gid]
        if g.kind in (CONST0, CONST1):
            mapping[gid] = b.const(1 if g.kind == CONST1 else 0)
        else:
            mapping[gid] = b._emit(g.kind, *(mapping[ref] for ref in g.inputs))
    desc_out = [mapping[o] for o in inst.circuit.outputs]
    j_wires = desc_out[:gate_bits]
    s_wires = desc_out[gate_bits:]

    masked_j = [b.and_(w, not_const) for w in j_wires]
    masked_s = [b.and_(w, not_const) for w in s_wires]
    p_next = b.or_(b.and_(p_wire, b.not_(is_not)), b.and_(np, is_not))
    return b.build(masked_j + [p_next] + masked_s), placeholders


def _succinct_reward_circuit(
    n_fluents: int, gate_bits: int, exponent: int
) -> SuccinctReward:
    """Reward whose only set bit is at index ``exponent``.

    Paid when the state's type bits name an input gate whose value
    matches the parity convention (value 1 on even parity, value 0 on
    odd) and the gate index is nonzero (the sink never pays).
    """
    index_bits = max(1, exponent.bit_length())  # 2**bit_length(x) > x
    b = CircuitBuilder(prefix="rwd.")
    state_wires = [b.const(0) for _ in range(n_fluents)]
    action_wires = [b.const(0)]
    index_wires = [b.const(0) for _ in range(index_bits)]

    i_wires = state_wires[:gate_bits]
    p_wire = state_wires[gate_bits]
    t0, t1, t2 = state_wires[gate_bits + 1 : gate_bits + 4]
    nt1, nt2 = b.not_(t1), b.not_(t2)
    is_c0 = b.and_(b.and_(nt2, nt1), b.not_(t0))
    is_c1 = b.and_(b.and_(nt2, nt1), t0)
    nonzero = b.or_all(i_wires)
    pays = b.and_(
        nonzero,
        b.or_(b.and_(is_c1, b.not_(p_wire)), b.and_(is_c0, p_wire)),
    )
    out = b.and_(pays, b.match(index_wires, exponent))
    circuit = b.build([out])
    return SuccinctReward(
        circuit=circuit,
        state_bits=n_fluents,
        action_bits=1,
        index_bits=index_bits,
        width=exponent + 1,
    )


def succinct_cvp_to_2tbn(
    inst: SuccinctCircuitInstance, k_gap: int, test_exponent: int | None = None
) -> GadgetOutput:
    """Factored version of the parity-product process for a described circuit.

    Fluents hold the current gate index, parity, type code, and a
    random bit; the random bit flips a fair coin exactly at coin states
    ((AND, even) or (OR, odd)) and is 1 otherwise.  The next-state
    circuit is embedded gate-for-fluent, so the factored model is
    polynomial in the descriptor even though the described process is
    exponentially large.  The success reward is 2**(2**(|S|+k+1)),
    accessible only bit by bit; ``test_exponent`` swaps in a small
    exponent so desk-scale runs can materialize values (the dichotomy
    is structural and unaffected).
    """
    if k_gap < 1:
        raise ValueError("gap parameter must be >= 1")
    gate_bits = inst.gate_bits
    step, placeholders = _build_step_circuit(inst)
    n_core = gate_bits + 5  # i bits, p, 3 type bits, r

    fluent_names = (
        [f"i{c}" for c in range(gate_bits)]
        + ["p", "t0", "t1", "t2", "r"]
        + [f"s:{g.gid}" for g in step.gates]
    )
    n_fluents = len(fluent_names)
    step_fluent = {g.gid: n_core + idx for idx, g in enumerate(step.gates)}
    p_idx = gate_bits
    t_idx = [gate_bits + 1, gate_bits + 2, gate_bits + 3]
    r_idx = gate_bits + 4

    placeholder_roles: dict[GateId, tuple[str, int]] = {}
    for c in range(gate_bits):
        placeholder_roles[placeholders[c]] = ("async", c)
    placeholder_roles[placeholders[gate_bits]] = ("async", p_idx)
    for bpos in range(3):
        placeholder_roles[placeholders[gate_bits + 1 + bpos]] = ("async", t_idx[bpos])
    placeholder_roles[placeholders[gate_bits + 4]] = ("sync", r_idx)  # fresh coin
    a_placeholder = placeholders[gate_bits + 5]

    # Coin CPT for the r fluent: parents (p, t0, t1, t2) read at time t.
    coin_cpt: dict[tuple[int, ...], Fraction] = {}
    for p_bit in (0, 1):
        for code in range(8):
            tb = bits_of(code, 3)
            kind = TYPE_FROM_CODE.get(code)
            coin = (kind == AND and p_bit == 0) or (kind == OR and p_bit == 1)
            coin_cpt[(p_bit,) + tb] = _HALF if coin else ONE

    by_id = {g.gid: g for g in step.gates}
    out_j = step.outputs[:gate_bits]
    out_p = step.outputs[gate_bits]
    out_s = step.outputs[gate_bits + 1 :]

    actions = []
    for a_value in (0, 1):
        async_parents: list[tuple[int, ...]] = [()] * n_fluents
        sync_parents: list[tuple[int, ...]] = [()] * n_fluents
        cpts: list[dict[tuple[int, ...], Fraction]] = [{}] * n_fluents
        for c in range(gate_bits):
            sync_parents[c] = (step_fluent[out_j[c]],)
            cpts[c] = dict(_IDENTITY_CPT)
        sync_parents[p_idx] = (step_fluent[out_p],)
        cpts[p_idx] = dict(_IDENTITY_CPT)
        for bpos in range(3):
            sync_parents[t_idx[bpos]] = (step_fluent[out_s[bpos]],)
            cpts[t_idx[bpos]] = dict(_IDENTITY_CPT)
        async_parents[r_idx] = (p_idx, t_idx[0], t_idx[1], t_idx[2])
        cpts[r_idx] = dict(coin_cpt)
        for g in step.gates:
            f = step_fluent[g.gid]
            if g.gid == a_placeholder:
                cpts[f] = {(): Fraction(a_value)}
            elif g.gid in placeholder_roles:
                kind, parent = placeholder_roles[g.gid]
                if kind == "async":
                    async_parents[f] = (parent,)
                else:
                    sync_parents[f] = (parent,)
                cpts[f] = dict(_IDENTITY_CPT)
            elif g.kind in (CONST0, CONST1):
                cpts[f] = {(): ONE if g.kind == CONST1 else ZERO}
            else:
                sync_parents[f] = tuple(step_fluent[ref] for ref in g.inputs)
                cpts[f] = _gate_cpt(g.kind, list(range(len(g.inputs))))
        actions.append(TbnAction(tuple(async_parents), tuple(sync_parents), tuple(cpts)))

    size_s = len(inst.circuit.gates)
    described_bound = 2**gate_bits - 1
    if test_exponent is not None:
        if test_exponent < described_bound + k_gap + 1:
            raise ValueError(
                f"test exponent must be >= {described_bound + k_gap + 1} to keep the gap sound"
            )
        exponent = test_exponent
    else:
        exponent = 2 ** (size_s + k_gap + 1)
    reward = _succinct_reward_circuit(n_fluents, gate_bits, exponent)

    initial = (
        bits_of(inst.output_gate, gate_bits)
        + (0,)
        + bits_of(TYPE_CODES[inst.output_type], 3)
        + (1,)
        + tuple([0] * len(step.gates))
    )
    tbn = Tbn(fluents=tuple(fluent_names), actions=tuple(actions), reward=reward, initial=initial)

    horizon = 2 * 2**gate_bits + 1
    if test_exponent is not None:
        yes = Fraction(2**exponent)
        claim = DichotomyClaim(
            "eq-or-below",
            yes_value=yes,
            no_bound=yes - 2 * k_gap,
            params={"k_gap": k_gap, "descriptor_gates": size_s, "test_exponent": exponent},
        )
    else:
        claim = DichotomyClaim(
            "eq-or-below",
            params={"k_gap": k_gap, "descriptor_gates": size_s, "yes_log2": exponent},
        )
    return GadgetOutput(
        model=tbn,
        recommended_horizon=horizon,
        recommended_metric=FiniteTotal(horizon),
        claim=claim,
    )
