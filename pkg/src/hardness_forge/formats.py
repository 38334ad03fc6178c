"""Text formats: DIMACS CNF, quantified CNF, gate netlists, and the
line-oriented model/policy formats.

All numbers are exact rationals written as ``p/q`` (or a bare integer
where the format allows); serialization is canonical, so parse after
serialize is the identity and serialized output is byte-reproducible.
Lines starting with ``#`` are comments in the model formats; DIMACS
uses ``c`` comment lines.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterator

from .model import (
    AND,
    CONST0,
    CONST1,
    Circuit,
    Cnf,
    EXISTS,
    FiniteMemoryPolicy,
    Gate,
    HistoryPolicy,
    Labels,
    NOT,
    OR,
    Policy,
    Pomdp,
    RANDOM,
    SsatFormula,
    StationaryPolicy,
    SuccinctCircuitInstance,
    SuccinctReward,
    Tbn,
    TbnAction,
    TimeDependentPolicy,
)
from .model import validate_pomdp


class FormatError(ValueError):
    """Syntax or consistency error in a textual artifact."""

    def __init__(self, message: str, line: int | None = None) -> None:
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


def parse_rat(token: str, line: int | None = None) -> Fraction:
    try:
        if "/" in token:
            num, den = token.split("/", 1)
            return Fraction(int(num), int(den))
        return Fraction(int(token))
    except (ValueError, ZeroDivisionError):
        raise FormatError(f"bad rational {token!r}", line) from None


def format_rat(value: Fraction, always_slash: bool = False) -> str:
    if always_slash or value.denominator != 1:
        return f"{value.numerator}/{value.denominator}"
    return str(value.numerator)


# ---------------------------------------------------------------------------
# DIMACS CNF and its quantified extension

def _int_token(token: str, line: int) -> int:
    try:
        return int(token)
    except ValueError:
        raise FormatError(f"bad integer {token!r}", line) from None


def parse_cnf(text: str) -> Cnf:
    """DIMACS CNF: header ``p cnf <vars> <clauses>``, clause lines of
    1..3 nonzero literals terminated by 0, ``c`` comment lines."""
    n_vars = n_clauses = None
    clauses: list[tuple[tuple[int, int], ...]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.strip()
        if not stripped or stripped.startswith("c"):
            continue
        if stripped.startswith("p"):
            parts = stripped.split()
            if len(parts) != 4 or parts[1] != "cnf":
                raise FormatError("header must read 'p cnf <vars> <clauses>'", lineno)
            n_vars = _int_token(parts[2], lineno)
            n_clauses = _int_token(parts[3], lineno)
            continue
        if n_vars is None:
            raise FormatError("clause before the 'p cnf' header", lineno)
        tokens = stripped.split()
        if tokens[-1] != "0":
            raise FormatError("clause line must end with 0", lineno)
        literals: list[tuple[int, int]] = []
        seen: set[int] = set()
        for token in tokens[:-1]:
            lit = _int_token(token, lineno)
            if lit == 0:
                raise FormatError("literal 0 inside a clause", lineno)
            var = abs(lit)
            if var > n_vars:
                raise FormatError(f"variable {var} exceeds declared count {n_vars}", lineno)
            if var in seen:
                raise FormatError(f"repeated variable {var} in clause", lineno)
            seen.add(var)
            literals.append((var, 1 if lit > 0 else 0))
        if not literals:
            raise FormatError("empty clause", lineno)
        if len(literals) > 3:
            raise FormatError(f"oversize clause with {len(literals)} literals (max 3)", lineno)
        clauses.append(tuple(literals))
    if n_vars is None:
        raise FormatError("missing 'p cnf' header")
    if len(clauses) != n_clauses:
        raise FormatError(f"header declares {n_clauses} clauses, found {len(clauses)}")
    try:
        return Cnf(n_vars, tuple(clauses))
    except ValueError as exc:
        raise FormatError(str(exc)) from None


def serialize_cnf(cnf: Cnf) -> str:
    lines = [f"p cnf {cnf.n_vars} {cnf.n_clauses}"]
    for clause in cnf.clauses:
        lits = " ".join(str(var if signum else -var) for var, signum in clause)
        lines.append(f"{lits} 0")
    return "\n".join(lines) + "\n"


def parse_ssat(text: str) -> SsatFormula:
    """DIMACS-like: quantifier lines ``e <var> 0`` / ``r <var> 0`` in
    prefix order before the clauses."""
    prefix: list[tuple[int, str]] = []
    quantified: set[int] = set()
    clause_lines: list[str] = []
    header: str | None = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.strip()
        if not stripped or stripped.startswith("c"):
            continue
        if stripped.startswith("p"):
            header = stripped
            continue
        first = stripped.split()[0]
        if first in (EXISTS, RANDOM):
            if clause_lines:
                raise FormatError("quantifier line after a clause", lineno)
            parts = stripped.split()
            if len(parts) != 3 or parts[2] != "0":
                raise FormatError(f"quantifier line must read '{first} <var> 0'", lineno)
            var = _int_token(parts[1], lineno)
            if var in quantified:
                raise FormatError(f"variable {var} quantified twice", lineno)
            quantified.add(var)
            prefix.append((var, first))
        else:
            clause_lines.append(raw)
    if header is None:
        raise FormatError("missing 'p cnf' header")
    matrix = parse_cnf("\n".join([header] + clause_lines))
    try:
        return SsatFormula(tuple(prefix), matrix)
    except ValueError as exc:
        raise FormatError(str(exc)) from None


def serialize_ssat(phi: SsatFormula) -> str:
    lines = [f"p cnf {phi.matrix.n_vars} {phi.matrix.n_clauses}"]
    for var, quant in phi.prefix:
        lines.append(f"{quant} {var} 0")
    for clause in phi.matrix.clauses:
        lits = " ".join(str(var if signum else -var) for var, signum in clause)
        lines.append(f"{lits} 0")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Gate netlists

def _parse_netlist_lines(lines: Iterator[tuple[int, str]]) -> Circuit:
    gates: list[Gate] = []
    outputs: list[str] = []
    for lineno, stripped in lines:
        parts = stripped.split()
        if parts[0] == "gate":
            if len(parts) < 3:
                raise FormatError("gate line needs an id and a kind", lineno)
            gid, kind = parts[1], parts[2].upper()
            refs = tuple(parts[3:])
            if kind == "CONST":
                if len(refs) != 1 or refs[0] not in ("0", "1"):
                    raise FormatError("CONST takes a single 0/1 argument", lineno)
                gates.append(Gate(gid, CONST1 if refs[0] == "1" else CONST0, ()))
            elif kind in (AND, OR, NOT):
                gates.append(Gate(gid, kind, refs))
            else:
                raise FormatError(f"unknown gate kind {parts[2]!r}", lineno)
        elif parts[0] == "output":
            if len(parts) != 2:
                raise FormatError("output line takes a single gate id", lineno)
            outputs.append(parts[1])
        else:
            raise FormatError(f"unknown directive {parts[0]!r}", lineno)
    try:
        return Circuit(tuple(gates), tuple(outputs))
    except ValueError as exc:
        raise FormatError(str(exc)) from None


def _data_lines(text: str) -> Iterator[tuple[int, str]]:
    for lineno, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.strip()
        if stripped and not stripped.startswith("#"):
            yield lineno, stripped


def parse_circuit(text: str) -> Circuit:
    """Netlist: ``gate <id> AND|OR <a> <b>``, ``gate <id> NOT <a>``,
    ``gate <id> CONST <0|1>``, and ``output <id>`` lines."""
    return _parse_netlist_lines(_data_lines(text))


def serialize_circuit(circuit: Circuit) -> str:
    lines = []
    for g in circuit.gates:
        if g.kind in (CONST0, CONST1):
            lines.append(f"gate {g.gid} CONST {1 if g.kind == CONST1 else 0}")
        else:
            lines.append(f"gate {g.gid} {g.kind} {' '.join(g.inputs)}")
    for out in circuit.outputs:
        lines.append(f"output {out}")
    return "\n".join(lines) + "\n"


def parse_succinct_instance(text: str) -> SuccinctCircuitInstance:
    """Descriptor file: ``SUCCINCT v1``, ``gate-bits <l>``,
    ``start <gate> <TYPE>``, then the descriptor netlist."""
    gate_bits = output_gate = None
    output_type = None
    netlist: list[tuple[int, str]] = []
    lines = list(_data_lines(text))
    if not lines or lines[0][1] != "SUCCINCT v1":
        raise FormatError("missing 'SUCCINCT v1' header")
    for lineno, stripped in lines[1:]:
        parts = stripped.split()
        if parts[0] == "gate-bits":
            gate_bits = _int_token(parts[1], lineno)
        elif parts[0] == "start":
            if len(parts) != 3:
                raise FormatError("start line reads 'start <gate> <TYPE>'", lineno)
            output_gate = _int_token(parts[1], lineno)
            output_type = parts[2].upper()
        else:
            netlist.append((lineno, stripped))
    if gate_bits is None or output_gate is None or output_type is None:
        raise FormatError("descriptor needs gate-bits and start lines")
    circuit = _parse_netlist_lines(iter(netlist))
    try:
        return SuccinctCircuitInstance(circuit, gate_bits, output_gate, output_type)
    except ValueError as exc:
        raise FormatError(str(exc)) from None


def serialize_succinct_instance(inst: SuccinctCircuitInstance) -> str:
    head = f"SUCCINCT v1\ngate-bits {inst.gate_bits}\nstart {inst.output_gate} {inst.output_type}\n"
    return head + serialize_circuit(inst.circuit)


# ---------------------------------------------------------------------------
# Flat model format

def serialize_pomdp(m: Pomdp) -> str:
    lines = [
        "POMDP v1",
        f"states {m.n_states}",
        f"actions {m.n_actions}",
        f"observations {m.n_obs}",
        f"initial {m.initial}",
    ]
    for s, o in enumerate(m.obs):
        lines.append(f"obs {s} {o}")
    for (s, a, s2) in sorted(m.trans, key=lambda key: (key[1], key[0], key[2])):
        p = m.trans[(s, a, s2)]
        if p != 0:
            lines.append(f"T {a} {s} {s2} {format_rat(p, always_slash=True)}")
    for (s, a) in sorted(m.reward):
        r = m.reward[(s, a)]
        if r != 0:
            lines.append(f"R {s} {a} {format_rat(r)}")
    return "\n".join(lines) + "\n"


def parse_pomdp(text: str) -> Pomdp:
    n_states = n_actions = n_obs = initial = None
    obs: dict[int, int] = {}
    trans: dict[tuple[int, int, int], Fraction] = {}
    reward: dict[tuple[int, int], Fraction] = {}
    lines = list(_data_lines(text))
    if not lines or lines[0][1] != "POMDP v1":
        raise FormatError("missing 'POMDP v1' header")
    for lineno, stripped in lines[1:]:
        parts = stripped.split()
        key = parts[0]
        try:
            if key == "states":
                n_states = _int_token(parts[1], lineno)
            elif key == "actions":
                n_actions = _int_token(parts[1], lineno)
            elif key == "observations":
                n_obs = _int_token(parts[1], lineno)
            elif key == "initial":
                initial = _int_token(parts[1], lineno)
            elif key == "obs":
                obs[_int_token(parts[1], lineno)] = _int_token(parts[2], lineno)
            elif key == "T":
                a, s, s2 = (_int_token(t, lineno) for t in parts[1:4])
                trans[(s, a, s2)] = parse_rat(parts[4], lineno)
            elif key == "R":
                s, a = (_int_token(t, lineno) for t in parts[1:3])
                reward[(s, a)] = parse_rat(parts[3], lineno)
            else:
                raise FormatError(f"unknown directive {key!r}", lineno)
        except IndexError:
            raise FormatError(f"truncated {key!r} line", lineno) from None
    if None in (n_states, n_actions, n_obs, initial):
        raise FormatError("missing states/actions/observations/initial header lines")
    if sorted(obs) != list(range(n_states)):
        raise FormatError("obs lines must cover every state exactly once")
    model = Pomdp(
        n_states=n_states,
        initial=initial,
        n_actions=n_actions,
        n_obs=n_obs,
        obs=tuple(obs[s] for s in range(n_states)),
        trans=trans,
        reward=reward,
    )
    violations = validate_pomdp(model)
    if violations:
        raise FormatError("invalid model: " + "; ".join(violations))
    return model


# ---------------------------------------------------------------------------
# Factored model format

def serialize_tbn(t: Tbn) -> str:
    lines = ["TBN v1", "fluents " + " ".join(t.fluents)]
    if t.initial is not None:
        lines.append("initial " + "".join(map(str, t.initial)))
    for a, dyn in enumerate(t.actions):
        lines.append(f"action {a}")
        for k, name in enumerate(t.fluents):
            parents = [t.fluents[i] for i in dyn.async_parents[k]]
            parents += [t.fluents[i] + "'" for i in dyn.sync_parents[k]]
            lines.append(f"dep {name} {' '.join(parents)}".rstrip())
            for bits in sorted(dyn.cpts[k]):
                key = "".join(map(str, bits)) if bits else "-"
                lines.append(f"cpt {name} {key} {format_rat(dyn.cpts[k][bits], always_slash=True)}")
    if isinstance(t.reward, SuccinctReward):
        sr = t.reward
        lines.append(f"reward-circuit {sr.state_bits} {sr.action_bits} {sr.index_bits} {sr.width}")
        lines.append(serialize_circuit(sr.circuit).rstrip("\n"))
        lines.append("end-reward-circuit")
    elif t.reward is not None:
        for (bits, a) in sorted(t.reward):
            r = t.reward[(bits, a)]
            if r != 0:
                lines.append(f"reward {''.join(map(str, bits))} {a} {format_rat(r)}")
    return "\n".join(lines) + "\n"


def parse_tbn(text: str) -> Tbn:
    lines = list(_data_lines(text))
    if not lines or lines[0][1] != "TBN v1":
        raise FormatError("missing 'TBN v1' header")
    fluents: tuple[str, ...] | None = None
    initial: tuple[int, ...] | None = None
    actions: list[dict] = []
    reward_table: dict[tuple[tuple[int, ...], int], Fraction] = {}
    reward_circuit: SuccinctReward | None = None
    index_of: dict[str, int] = {}

    i = 1
    while i < len(lines):
        lineno, stripped = lines[i]
        parts = stripped.split()
        key = parts[0]
        if key == "fluents":
            fluents = tuple(parts[1:])
            if len(set(fluents)) != len(fluents) or not fluents:
                raise FormatError("fluent names must be nonempty and unique", lineno)
            index_of = {name: k for k, name in enumerate(fluents)}
        elif key == "initial":
            if fluents is None:
                raise FormatError("initial before fluents", lineno)
            bits = parts[1]
            if len(bits) != len(fluents) or any(b not in "01" for b in bits):
                raise FormatError("initial must give one bit per fluent", lineno)
            initial = tuple(int(b) for b in bits)
        elif key == "action":
            if fluents is None:
                raise FormatError("action block before fluents", lineno)
            if _int_token(parts[1], lineno) != len(actions):
                raise FormatError(f"action blocks must be numbered consecutively", lineno)
            actions.append({"deps": {}, "cpts": {}})
        elif key == "dep":
            if not actions:
                raise FormatError("dep line outside an action block", lineno)
            name = parts[1]
            if name not in index_of:
                raise FormatError(f"unknown fluent {name!r}", lineno)
            async_p, sync_p = [], []
            for token in parts[2:]:
                parent = token.rstrip("'")
                if parent not in index_of:
                    raise FormatError(f"unknown parent fluent {parent!r}", lineno)
                (sync_p if token.endswith("'") else async_p).append(index_of[parent])
            actions[-1]["deps"][index_of[name]] = (tuple(async_p), tuple(sync_p))
        elif key == "cpt":
            if not actions:
                raise FormatError("cpt line outside an action block", lineno)
            name = parts[1]
            if name not in index_of:
                raise FormatError(f"unknown fluent {name!r}", lineno)
            k = index_of[name]
            if k not in actions[-1]["deps"]:
                raise FormatError(f"cpt for fluent {name!r} before its dep line", lineno)
            bits = () if parts[2] == "-" else tuple(int(b) for b in parts[2] if b in "01")
            if parts[2] != "-" and len(bits) != len(parts[2]):
                raise FormatError("cpt key must be a bit string or '-'", lineno)
            p = parse_rat(parts[3], lineno)
            if p < 0 or p > 1:
                raise FormatError(f"cpt probability {parts[3]} outside [0,1]", lineno)
            actions[-1]["cpts"].setdefault(k, {})[bits] = p
        elif key == "reward":
            bits = tuple(int(b) for b in parts[1])
            reward_table[(bits, _int_token(parts[2], lineno))] = parse_rat(parts[3], lineno)
        elif key == "reward-circuit":
            state_bits, action_bits, index_bits = (_int_token(t, lineno) for t in parts[1:4])
            width = _int_token(parts[4], lineno)
            block: list[tuple[int, str]] = []
            i += 1
            while i < len(lines) and lines[i][1] != "end-reward-circuit":
                block.append(lines[i])
                i += 1
            if i == len(lines):
                raise FormatError("unterminated reward-circuit block", lineno)
            circuit = _parse_netlist_lines(iter(block))
            try:
                reward_circuit = SuccinctReward(circuit, state_bits, action_bits, index_bits, width)
            except ValueError as exc:
                raise FormatError(str(exc), lineno) from None
        else:
            raise FormatError(f"unknown directive {key!r}", lineno)
        i += 1

    if fluents is None:
        raise FormatError("missing fluents line")
    built_actions = []
    for a, block in enumerate(actions):
        async_parents, sync_parents, cpts = [], [], []
        for k in range(len(fluents)):
            dep = block["deps"].get(k, ((), ()))
            async_parents.append(dep[0])
            sync_parents.append(dep[1])
            cpts.append(block["cpts"].get(k, {}))
        built_actions.append(TbnAction(tuple(async_parents), tuple(sync_parents), tuple(cpts)))
    reward = reward_circuit if reward_circuit is not None else (reward_table or None)
    try:
        return Tbn(fluents=fluents, actions=tuple(built_actions), reward=reward, initial=initial)
    except ValueError as exc:
        raise FormatError(str(exc)) from None


# ---------------------------------------------------------------------------
# Policy files

def serialize_policy(policy: Policy) -> str:
    lines: list[str] = []
    if isinstance(policy, StationaryPolicy):
        for o, a in enumerate(policy.act):
            lines.append(f"S {o} {a}")
    elif isinstance(policy, TimeDependentPolicy):
        for t, row in enumerate(policy.act):
            for o, a in enumerate(row):
                lines.append(f"TD {t} {o} {a}")
    elif isinstance(policy, FiniteMemoryPolicy):
        lines.append(f"FM-init {policy.initial_memory}")
        for (o, q) in sorted(policy.step):
            a, q2 = policy.step[(o, q)]
            lines.append(f"FM {o} {q} {a} {q2}")
    elif isinstance(policy, HistoryPolicy):
        raise ValueError("history policies are oracle-internal and not serialized")
    else:
        raise TypeError(f"unsupported policy {type(policy).__name__}")
    return "\n".join(lines) + "\n"


def parse_policy(text: str) -> Policy:
    stationary: dict[int, int] = {}
    time_dep: dict[tuple[int, int], int] = {}
    fm: dict[tuple[int, int], tuple[int, int]] = {}
    fm_init: int | None = None
    for lineno, stripped in _data_lines(text):
        parts = stripped.split()
        tag = parts[0]
        if tag == "S":
            stationary[_int_token(parts[1], lineno)] = _int_token(parts[2], lineno)
        elif tag == "TD":
            t, o, a = (_int_token(x, lineno) for x in parts[1:4])
            time_dep[(t, o)] = a
        elif tag == "FM":
            o, q, a, q2 = (_int_token(x, lineno) for x in parts[1:5])
            fm[(o, q)] = (a, q2)
        elif tag == "FM-init":
            fm_init = _int_token(parts[1], lineno)
        else:
            raise FormatError(f"unknown policy line tag {tag!r}", lineno)
    kinds = [bool(stationary), bool(time_dep), bool(fm) or fm_init is not None]
    if sum(kinds) != 1:
        raise FormatError("policy file must use exactly one of the S / TD / FM line families")
    if stationary:
        if sorted(stationary) != list(range(len(stationary))):
            raise FormatError("S lines must cover observations 0..K-1")
        return StationaryPolicy(tuple(stationary[o] for o in range(len(stationary))))
    if time_dep:
        horizon = max(t for t, _ in time_dep) + 1
        n_obs = max(o for _, o in time_dep) + 1
        table = []
        for t in range(horizon):
            row = []
            for o in range(n_obs):
                if (t, o) not in time_dep:
                    raise FormatError(f"TD lines missing entry for step {t}, observation {o}")
                row.append(time_dep[(t, o)])
            table.append(tuple(row))
        return TimeDependentPolicy(horizon, tuple(table))
    if fm_init is None:
        raise FormatError("FM policy needs an FM-init line")
    n_memory = max(max(q for _, q in fm), max(q2 for _, q2 in fm.values()), fm_init) + 1
    return FiniteMemoryPolicy(n_memory, fm_init, fm)
