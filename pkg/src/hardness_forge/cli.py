"""Command-line surface: compile gadgets, evaluate policies, compute
oracle values, derive positivity bounds, expand factored models, and
verify each compiled instance's declared value dichotomy end to end.

Exit codes: 0 on success or PASS, 1 on a FAIL verdict, 2 on usage or
parse errors.  Values print as exact rationals ``p/q``.
"""

from __future__ import annotations

import argparse
import sys
from fractions import Fraction
from pathlib import Path

from . import circuits, formats, oracles, reductions
from .approx import positive_value_lower_bound
from .caps import CapExceeded
from .evaluation import evaluate
from .formats import FormatError, parse_rat
from .model import (
    Average,
    FiniteDiscounted,
    FiniteTotal,
    InfiniteDiscounted,
    Metric,
    Pomdp,
    Tbn,
    ONE,
    ZERO,
)
from .reductions import GadgetOutput


class UsageError(Exception):
    pass


def _rat(text: str) -> Fraction:
    try:
        return parse_rat(text)
    except FormatError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _print_value(label: str, value: Fraction) -> None:
    print(f"{label} {value.numerator}/{value.denominator}")


def _metric_from_args(args: argparse.Namespace) -> Metric:
    if args.metric == "total":
        if args.horizon is None:
            raise UsageError("--metric total needs --horizon")
        return FiniteTotal(args.horizon)
    if args.metric == "disc":
        if args.beta is None:
            raise UsageError("--metric disc needs --beta")
        if args.horizon is not None:
            return FiniteDiscounted(args.beta, args.horizon)
        return InfiniteDiscounted(args.beta)
    return Average()


def _metric_text(metric: Metric) -> str:
    if isinstance(metric, FiniteTotal):
        return f"total horizon={metric.horizon}"
    if isinstance(metric, FiniteDiscounted):
        return f"discounted beta={formats.format_rat(metric.beta, True)} horizon={metric.horizon}"
    if isinstance(metric, InfiniteDiscounted):
        return f"discounted beta={formats.format_rat(metric.beta, True)} horizon=inf"
    return "average"


def _claim_text(g: GadgetOutput) -> list[str]:
    c = g.claim
    out = [f"claim kind={c.kind}"]
    if c.yes_value is not None:
        out.append(f"claim yes-value {formats.format_rat(c.yes_value, True)}")
    if c.no_bound is not None:
        out.append(f"claim no-bound {formats.format_rat(c.no_bound, True)}")
    for key, val in sorted(c.params.items(), key=lambda kv: kv[0]):
        if val is not None:
            out.append(f"claim param {key}={val}")
    out.append(f"recommended metric: {_metric_text(g.recommended_metric)}")
    return out


def _write_gadget(g: GadgetOutput, path: str) -> None:
    header = "".join(f"# {line}\n" for line in _claim_text(g))
    if isinstance(g.model, Pomdp):
        body = formats.serialize_pomdp(g.model)
    else:
        body = formats.serialize_tbn(g.model)
    Path(path).write_text(header + body)
    print(f"wrote {path}")
    for line in _claim_text(g):
        print(line)


# ---------------------------------------------------------------------------
# compile

def _compile_gadget(args: argparse.Namespace) -> GadgetOutput:
    kind = args.gadget
    if kind in ("sat3", "uomdp", "inf"):
        cnf = formats.parse_cnf(Path(args.source).read_text())
        if kind == "uomdp":
            return reductions.threesat_to_uomdp(cnf)
        if kind == "inf":
            return reductions.infinite_horizon_sat_gadget(cnf)
        if args.amplify:
            if args.eps is not None:
                raise UsageError("--eps and --amplify are mutually exclusive")
            return reductions.amplify_uomdp(cnf, args.discount)
        if args.eps is not None:
            return reductions.epsilon_gap_gadget(cnf, args.eps)
        return reductions.threesat_to_pomdp(cnf)
    if kind == "ssat":
        phi = formats.parse_ssat(Path(args.source).read_text())
        if args.c is None and args.eps is None:
            raise UsageError("compile ssat needs --eps or --c/--k")
        if args.c is not None and args.k is None:
            raise UsageError("--c needs --k")
        if args.c is not None:
            c, k = args.c, args.k
        else:
            c, k = reductions.choose_ssat_constants(args.eps, phi.n_vars)
        return reductions.ssat_repeat(reductions.ssat_to_pomdp(phi), k, c=c)
    if kind == "cvp":
        circuit = formats.parse_circuit(Path(args.source).read_text())
        return circuits.cvp_to_mdp(circuit, args.gap)
    if kind == "succinct-cvp":
        inst = formats.parse_succinct_instance(Path(args.source).read_text())
        return circuits.succinct_cvp_to_2tbn(inst, args.gap, args.test_exponent)
    raise UsageError(f"unknown compile target {kind!r}")


def _cmd_compile(args: argparse.Namespace) -> int:
    if args.gadget == "tbn":
        circuit = formats.parse_circuit(Path(args.source).read_text())
        tbn = circuits.circuit_to_2tbn(circuit)
        Path(args.output).write_text(formats.serialize_tbn(tbn))
        print(f"wrote {args.output}")
        return 0
    _write_gadget(_compile_gadget(args), args.output)
    return 0


# ---------------------------------------------------------------------------
# eval / value / bounds / expand

def _cmd_eval(args: argparse.Namespace) -> int:
    model = formats.parse_pomdp(Path(args.model).read_text())
    policy = formats.parse_policy(Path(args.policy).read_text())
    metric = _metric_from_args(args)
    _print_value("performance", evaluate(model, policy, metric))
    return 0


def _cmd_value(args: argparse.Namespace) -> int:
    model = formats.parse_pomdp(Path(args.model).read_text())
    metric = _metric_from_args(args)
    if args.policy_class == "stat":
        value, witness = oracles.brute_force_stationary_value(model, metric)
        _print_value("value", value)
        sys.stdout.write(formats.serialize_policy(witness))
    elif args.policy_class == "time":
        if not isinstance(metric, (FiniteTotal, FiniteDiscounted)):
            raise UsageError("time-dependent values need a finite metric")
        value, witness = oracles.brute_force_time_dependent_value(model, metric.horizon, metric)
        _print_value("value", value)
        sys.stdout.write(formats.serialize_policy(witness))
    else:
        if not isinstance(metric, (FiniteTotal, FiniteDiscounted)):
            raise UsageError("history values need a finite metric")
        _print_value("value", oracles.exact_history_value(model, metric))
    return 0


def _cmd_bounds(args: argparse.Namespace) -> int:
    model = formats.parse_pomdp(Path(args.model).read_text())
    _print_value("delta", positive_value_lower_bound(model, _metric_from_args(args)))
    return 0


def _cmd_expand(args: argparse.Namespace) -> int:
    tbn = formats.parse_tbn(Path(args.model).read_text())
    flat = oracles.expand_2tbn(tbn, reachable_only=args.reachable)
    Path(args.output).write_text(formats.serialize_pomdp(flat))
    print(f"wrote {args.output}")
    return 0


# ---------------------------------------------------------------------------
# verify

def _checks_pass(checks: list[tuple[str, bool]]) -> bool:
    for label, ok in checks:
        print(f"{'ok  ' if ok else 'FAIL'} {label}")
    return all(ok for _, ok in checks)


def _verify_clause_walk(cnf, g: GadgetOutput) -> bool:
    result = oracles.sat_enumerate(cnf)
    expected = g.claim.yes_value if result.satisfiable else g.claim.no_bound
    value, _ = oracles.brute_force_stationary_value(g.model, g.recommended_metric)
    for line in _claim_text(g):
        print(line)
    print(f"ground truth: {'satisfiable' if result.satisfiable else 'unsatisfiable'}")
    _print_value("oracle value", value)
    return _checks_pass([(f"stationary value equals {formats.format_rat(expected, True)}", value == expected)])


def _verify_uomdp(cnf, g: GadgetOutput) -> bool:
    result = oracles.sat_enumerate(cnf)
    value, _ = oracles.brute_force_time_dependent_value(g.model, g.recommended_horizon)
    for line in _claim_text(g):
        print(line)
    print(f"ground truth: max satisfiable clauses = {result.max_satisfied}")
    _print_value("oracle value", value)
    return _checks_pass([("time-dependent value equals the max satisfiable clause count", value == result.max_satisfied)])


def _verify_amplify(cnf, g: GadgetOutput, discount) -> bool:
    result = oracles.sat_enumerate(cnf)
    value = reductions.amplified_optimal_value(cnf, discount)
    for line in _claim_text(g):
        print(line)
    _print_value("oracle value", value)
    checks = []
    if result.satisfiable:
        checks.append(("value equals 1 on a satisfiable formula", value == g.claim.yes_value))
        witness = reductions.amplified_assignment_policy(
            cnf, [result.best_assignment] * cnf.n_clauses**2, g.recommended_horizon
        )
        perf = evaluate(g.model, witness, g.recommended_metric)
        checks.append(("repeated satisfying assignment achieves the value", perf == value))
    else:
        checks.append(("value within the amplification bound", value <= g.claim.no_bound))
    return _checks_pass(checks)


def _verify_ssat(phi, g: GadgetOutput) -> bool:
    k = int(g.claim.params["copies"])
    c = g.claim.params.get("c")
    n = int(g.claim.params["n"])
    game = oracles.ssat_value(phi)
    for line in _claim_text(g):
        print(line)
    _print_value("game value", game)
    checks = []
    single = reductions.ssat_to_pomdp(phi)
    policy = reductions.consistent_ssat_policy(phi, single)
    mass = reductions.stage_three_mass(single, policy)
    checks.append(("half the mass reaches the checking stage", mass == Fraction(1, 2)))

    probe_k = min(k, 3)
    probe = reductions.ssat_repeat(single, probe_k, c=None if c is None else int(c))
    consistent = evaluate(probe.model, reductions.consistent_ssat_policy(phi, probe), probe.recommended_metric)
    checks.append(
        (f"consistent policy earns copies*game on {probe_k} copies", consistent == probe_k * game)
    )
    try:
        hist = oracles.exact_history_value(probe.model, probe.recommended_metric)
        if c is not None:
            c_int = int(c)
            lo, hi = 1 - Fraction(1, 2**c_int), Fraction(1, 2**c_int)
            if game > lo:
                checks.append((f"history value exceeds copies*(1-2^-{c_int})", hist > probe_k * lo))
            elif game < hi:
                checks.append((f"history value within copies*2^-{c_int}+2n", hist <= probe_k * hi + 2 * n))
            else:
                print("note: game value between the dichotomy thresholds; no bound to check")
        checks.append(("history value at least the consistent performance", hist >= consistent))
    except CapExceeded:
        print("note: history oracle skipped (enumeration cap)")
    return _checks_pass(checks)


def _verify_cvp(circuit, g: GadgetOutput) -> bool:
    out = oracles.circuit_eval(circuit)[0]
    value = oracles.exact_history_value(g.model, g.recommended_metric)
    for line in _claim_text(g):
        print(line)
    print(f"ground truth: circuit evaluates to {out}")
    _print_value("oracle value", value)
    if out == 1:
        return _checks_pass([("value equals the full reward", value == g.claim.yes_value)])
    return _checks_pass([("value at most the reduced bound", value <= g.claim.no_bound)])


def _verify_tbn(circuit) -> bool:
    tbn = circuits.circuit_to_2tbn(circuit)
    n_inputs = len(circuit.input_gates)
    n_outputs = len(circuit.outputs)
    flat = oracles.expand_2tbn(tbn)
    checks = [("fluent count at most twice the gate count", tbn.n_fluents <= 2 * len(circuit.gates))]
    from .model import bits_of, int_of_bits

    succ = oracles.successor_table(flat)
    agree = True
    for raw in range(2**n_inputs):
        in_bits = bits_of(raw, n_inputs)
        start = int_of_bits(in_bits + tuple([0] * (tbn.n_fluents - n_inputs)))
        rows = succ.get((start, 0), [])
        if len(rows) != 1 or rows[0][1] != 1:
            agree = False
            break
        nxt_bits = bits_of(rows[0][0], tbn.n_fluents)
        if tuple(nxt_bits[:n_outputs]) != oracles.circuit_eval(circuit, in_bits):
            agree = False
            break
    checks.append(("one-step simulation matches circuit evaluation on every input", agree))
    return _checks_pass(checks)


def _verify_succinct(inst, g: GadgetOutput, k_gap: int) -> bool:
    described = circuits.described_circuit(inst)
    checks = []
    if g.claim.yes_value is None:
        exponent = int(g.claim.params["yes_log2"])
        reward = g.model.reward
        paying_state = (
            g.model.initial[: inst.gate_bits]
            + (0,)
            + (1, 0, 0)  # type CONST1
            + g.model.initial[inst.gate_bits + 4 :]
        )
        top = oracles.reward_bit(reward, paying_state, 0, exponent)
        low = oracles.reward_bit(reward, paying_state, 0, 0)
        checks.append(("success reward has its single set bit at the declared exponent", top == 1 and low == 0))
        print("note: production mode; value dichotomy needs --test-exponent")
        return _checks_pass(checks)
    flat = oracles.expand_2tbn(g.model, reachable_only=True)
    value = oracles.exact_history_value(flat, g.recommended_metric)
    out = oracles.circuit_eval(described)[0]
    for line in _claim_text(g):
        print(line)
    print(f"ground truth: described circuit evaluates to {out}")
    _print_value("oracle value", value)
    if out == 1:
        checks.append(("value equals the full reward", value == g.claim.yes_value))
    else:
        checks.append(("value at most the reduced bound", value <= g.claim.no_bound))
    return _checks_pass(checks)


def _cmd_verify(args: argparse.Namespace) -> int:
    via = args.via
    if via is None:
        suffix = Path(args.source).suffix
        via = {".cnf": "sat3", ".ssat": "ssat", ".ckt": "cvp", ".sckt": "succinct-cvp"}.get(suffix)
        if via is None:
            raise UsageError(f"cannot infer the construction from {suffix!r}; pass --via")
    text = Path(args.source).read_text()
    if via in ("sat3", "gap"):
        cnf = formats.parse_cnf(text)
        g = reductions.epsilon_gap_gadget(cnf, args.eps) if (via == "gap" or args.eps is not None) else reductions.threesat_to_pomdp(cnf)
        ok = _verify_clause_walk(cnf, g)
    elif via == "uomdp":
        cnf = formats.parse_cnf(text)
        ok = _verify_uomdp(cnf, reductions.threesat_to_uomdp(cnf))
    elif via == "amplify":
        cnf = formats.parse_cnf(text)
        ok = _verify_amplify(cnf, reductions.amplify_uomdp(cnf, args.discount), args.discount)
    elif via == "ssat":
        phi = formats.parse_ssat(text)
        if args.c is not None:
            c, k = args.c, args.k if args.k is not None else 1
        else:
            c, k = reductions.choose_ssat_constants(args.eps if args.eps is not None else Fraction(1, 2), phi.n_vars)
        ok = _verify_ssat(phi, reductions.ssat_repeat(reductions.ssat_to_pomdp(phi), k, c=c))
    elif via == "cvp":
        circuit = formats.parse_circuit(text)
        ok = _verify_cvp(circuit, circuits.cvp_to_mdp(circuit, args.gap))
    elif via == "tbn":
        ok = _verify_tbn(formats.parse_circuit(text))
    elif via == "succinct-cvp":
        inst = formats.parse_succinct_instance(text)
        ok = _verify_succinct(inst, circuits.succinct_cvp_to_2tbn(inst, args.gap, args.test_exponent), args.gap)
    elif via == "inf":
        cnf = formats.parse_cnf(text)
        g = reductions.infinite_horizon_sat_gadget(cnf)
        result = oracles.sat_enumerate(cnf)
        avg, _ = oracles.brute_force_stationary_value(g.model, Average())
        disc, _ = oracles.brute_force_stationary_value(g.model, InfiniteDiscounted(Fraction(1, 2)))
        for line in _claim_text(g):
            print(line)
        _print_value("average value", avg)
        _print_value("discounted value", disc)
        expected = g.claim.yes_value if result.satisfiable else g.claim.no_bound
        ok = _checks_pass(
            [
                ("average value matches the dichotomy", avg == expected),
                ("discounted value positive exactly when satisfiable", (disc > 0) == result.satisfiable),
            ]
        )
    else:
        raise UsageError(f"unknown verification path {via!r}")
    print("PASS" if ok else "FAIL")
    return 0 if ok else 1


# ---------------------------------------------------------------------------
# argument parsing

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hardness-forge",
        description="Compile formulas and circuits into decision-process hardness gadgets, evaluate policies exactly, and verify value dichotomies.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    comp = sub.add_parser("compile", help="compile a source file into a gadget")
    comp.add_argument("gadget", choices=["sat3", "uomdp", "ssat", "cvp", "tbn", "succinct-cvp", "inf"])
    comp.add_argument("source")
    comp.add_argument("-o", "--output", required=True)
    comp.add_argument("--eps", type=_rat)
    comp.add_argument("--amplify", action="store_true")
    comp.add_argument("--discount", type=_rat)
    comp.add_argument("--c", type=int)
    comp.add_argument("--k", type=int)
    comp.add_argument("--gap", type=int, default=1)
    comp.add_argument("--test-exponent", type=int)
    comp.set_defaults(func=_cmd_compile)

    ev = sub.add_parser("eval", help="evaluate a policy file on a model file")
    ev.add_argument("model")
    ev.add_argument("--policy", required=True)
    ev.add_argument("--metric", choices=["total", "disc", "avg"], required=True)
    ev.add_argument("--beta", type=_rat)
    ev.add_argument("--horizon", type=int)
    ev.set_defaults(func=_cmd_eval)

    val = sub.add_parser("value", help="compute an optimal value by exhaustive oracle")
    val.add_argument("model")
    val.add_argument("--class", dest="policy_class", choices=["stat", "time", "hist"], required=True)
    val.add_argument("--metric", choices=["total", "disc", "avg"], required=True)
    val.add_argument("--beta", type=_rat)
    val.add_argument("--horizon", type=int)
    val.set_defaults(func=_cmd_value)

    ver = sub.add_parser("verify", help="recompile a source and check its value dichotomy")
    ver.add_argument("source")
    ver.add_argument("--via", choices=["sat3", "gap", "uomdp", "amplify", "ssat", "cvp", "tbn", "succinct-cvp", "inf"])
    ver.add_argument("--eps", type=_rat)
    ver.add_argument("--discount", type=_rat)
    ver.add_argument("--c", type=int)
    ver.add_argument("--k", type=int)
    ver.add_argument("--gap", type=int, default=1)
    ver.add_argument("--test-exponent", type=int)
    ver.set_defaults(func=_cmd_verify)

    bnd = sub.add_parser("bounds", help="positivity lower bound for a model")
    bnd.add_argument("model")
    bnd.add_argument("--metric", choices=["total", "disc"], required=True)
    bnd.add_argument("--beta", type=_rat)
    bnd.add_argument("--horizon", type=int)
    bnd.set_defaults(func=_cmd_bounds)

    exp = sub.add_parser("expand", help="flatten a factored model file")
    exp.add_argument("model")
    exp.add_argument("-o", "--output", required=True)
    exp.add_argument("--reachable", action="store_true")
    exp.set_defaults(func=_cmd_expand)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (FormatError, OSError, ValueError, CapExceeded) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def entry() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    raise SystemExit(main())
