"""Compilers from CNF and quantified-CNF formulas to decision-process
instances with declared value dichotomies.

Each compiler returns a :class:`GadgetOutput` bundling the model, a
recommended horizon/metric, and the claimed dichotomy.  Claims are
checked end to end by the oracles; nothing here estimates anything.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Optional, Sequence, Union

from .evaluation import distribution_after, finite_horizon_performance
from .model import (
    Average,
    Cnf,
    EXISTS,
    FiniteDiscounted,
    FiniteTotal,
    HistoryPolicy,
    Labels,
    Metric,
    Policy,
    Pomdp,
    SsatFormula,
    StationaryPolicy,
    Tbn,
    TimeDependentPolicy,
    ONE,
    ZERO,
)
from .oracles import ssat_optimal_bit


@dataclass(frozen=True)
class DichotomyClaim:
    """Declared value dichotomy of a compiled instance.

    ``kind`` selects the comparison scheme:

    - ``eq-or-eq``: optimal value is ``yes_value`` on yes-instances and
      exactly ``no_bound`` on no-instances.
    - ``eq-or-below``: ``yes_value`` on yes-instances, at most
      ``no_bound`` otherwise.
    - ``max-sat``: optimal value equals the maximal number of
      simultaneously satisfiable clauses (``yes_value`` = clause count).
    - ``consistent-game-value``: the canonical consistent policy's
      performance equals the quantified game's value times the number
      of chained copies.
    - ``repeat-threshold``: value > ``yes_value`` when the game value
      exceeds 1 - 2^-c, and value <= ``no_bound`` when it is below
      2^-c (bounds present only when c is known).
    - ``infinite-dichotomy``: best stationary average value is
      ``yes_value`` on yes-instances and ``no_bound`` otherwise, and
      the best stationary discounted value is positive exactly on
      yes-instances.
    """

    kind: str
    yes_value: Optional[Fraction] = None
    no_bound: Optional[Fraction] = None
    params: Mapping[str, object] = field(default_factory=dict)


@dataclass(frozen=True)
class GadgetOutput:
    model: Union[Pomdp, Tbn]
    recommended_horizon: int
    recommended_metric: Metric
    claim: DichotomyClaim


def _literal_map(cnf: Cnf) -> list[dict[int, int]]:
    """Per clause: variable -> signum."""
    return [{var: signum for var, signum in clause} for clause in cnf.clauses]


def _require_nonempty(cnf: Cnf) -> None:
    if cnf.n_clauses == 0 or cnf.n_vars == 0:
        raise ValueError("compiler needs at least one clause and one variable")


# ---------------------------------------------------------------------------
# Clause-walk gadget (observations = variables, policies = assignments)

def _clause_walk(
    cnf: Cnf, reward_t: Fraction, reward_f: Fraction, t_self_reward: Fraction
) -> Pomdp:
    """Deterministic walk through the literal occurrences of a formula.

    One state per literal occurrence; a satisfying action jumps to the
    next clause (or T after the last), a falsifying one to the next
    literal of the clause (or F after the last).  The observation of a
    literal state is its variable, so a stationary policy is exactly an
    assignment.
    """
    _require_nonempty(cnf)
    n, m = cnf.n_vars, cnf.n_clauses
    index: dict[tuple[int, int], int] = {}
    labels = []
    for j, clause in enumerate(cnf.clauses, start=1):
        for i, (var, _) in enumerate(clause, start=1):
            index[(j, i)] = len(labels)
            labels.append(f"c{j}.{i}:x{var}")
    t_state = len(labels)
    f_state = t_state + 1
    labels += ["T", "F"]

    obs = []
    for j, clause in enumerate(cnf.clauses, start=1):
        for var, _ in clause:
            obs.append(var - 1)
    obs += [n, n + 1]
    obs_names = tuple([f"x{v}" for v in range(1, n + 1)] + ["T", "F"])

    trans: dict[tuple[int, int, int], Fraction] = {}
    reward: dict[tuple[int, int], Fraction] = {}
    for j, clause in enumerate(cnf.clauses, start=1):
        length = len(clause)
        for i, (var, signum) in enumerate(clause, start=1):
            s = index[(j, i)]
            for a in (0, 1):
                if a == signum:
                    nxt = index[(j + 1, 1)] if j < m else t_state
                    if nxt == t_state and reward_t != 0:
                        reward[(s, a)] = reward_t
                else:
                    nxt = index[(j, i + 1)] if i < length else f_state
                    if nxt == f_state and reward_f != 0:
                        reward[(s, a)] = reward_f
                trans[(s, a, nxt)] = ONE
    for sink in (t_state, f_state):
        for a in (0, 1):
            trans[(sink, a, sink)] = ONE
    if t_self_reward != 0:
        for a in (0, 1):
            reward[(t_state, a)] = t_self_reward

    return Pomdp(
        n_states=len(labels),
        initial=0,
        n_actions=2,
        n_obs=n + 2,
        obs=tuple(obs),
        trans=trans,
        reward=reward,
        labels=Labels(states=tuple(labels), observations=obs_names),
    )


def threesat_to_pomdp(cnf: Cnf) -> GadgetOutput:
    """Clause-walk gadget whose stationary value is 1 iff satisfiable.

    Stationary policies correspond to assignments: the policy's action
    on observation x_i is the value assigned to x_i, and its
    performance is 1 exactly when that assignment satisfies every
    clause.
    """
    m = _clause_walk(cnf, ONE, ZERO, ZERO)
    return GadgetOutput(
        model=m,
        recommended_horizon=m.n_states,
        recommended_metric=FiniteTotal(m.n_states),
        claim=DichotomyClaim("eq-or-eq", yes_value=ONE, no_bound=ZERO, params={"n": cnf.n_vars, "m": cnf.n_clauses}),
    )


def epsilon_gap_gadget(cnf: Cnf, eps: Fraction) -> GadgetOutput:
    """Clause walk with the rewards spread apart by a relative gap.

    Entering F pays 1 and entering T pays ceil(2/(1-eps)), so any
    policy with performance above 1 witnesses satisfiability.
    """
    if not (0 <= eps < 1):
        raise ValueError("gap parameter must satisfy 0 <= eps < 1")
    high = Fraction(math.ceil(Fraction(2) / (1 - eps)))
    m = _clause_walk(cnf, high, ONE, ZERO)
    return GadgetOutput(
        model=m,
        recommended_horizon=m.n_states,
        recommended_metric=FiniteTotal(m.n_states),
        claim=DichotomyClaim("eq-or-eq", yes_value=high, no_bound=ONE, params={"eps": eps, "n": cnf.n_vars, "m": cnf.n_clauses}),
    )


def infinite_horizon_sat_gadget(cnf: Cnf) -> GadgetOutput:
    """Clause walk where T pays reward 1 on every action, forever.

    The best stationary average value is 1 iff the formula is
    satisfiable (else 0), and the best stationary discounted value is
    positive iff it is satisfiable.
    """
    m = _clause_walk(cnf, ONE, ZERO, ONE)
    return GadgetOutput(
        model=m,
        recommended_horizon=m.n_states,
        recommended_metric=Average(),
        claim=DichotomyClaim("infinite-dichotomy", yes_value=ONE, no_bound=ZERO, params={"n": cnf.n_vars, "m": cnf.n_clauses}),
    )


def assignment_stationary_policy(cnf: Cnf, assignment: Sequence[int], gadget: Pomdp) -> StationaryPolicy:
    """Stationary policy induced by an assignment on a clause-walk gadget."""
    act = list(assignment) + [0, 0]  # T and F observations: action irrelevant
    if len(act) != gadget.n_obs:
        raise ValueError("assignment length does not match the gadget")
    return StationaryPolicy(tuple(act))


# ---------------------------------------------------------------------------
# Unobservable gadget (time determines the variable)

def threesat_to_uomdp(cnf: Cnf) -> GadgetOutput:
    """Unobservable gadget whose time-dependent value counts satisfiable clauses.

    A clause is drawn uniformly at the first step; the action at step i
    assigns variable i simultaneously in all clauses.  Once the drawn
    clause is satisfied the trajectory coasts along the bypass chain to
    T, collecting reward m on the step entering T; value = expected
    reward = (clauses satisfied by the played assignment).
    """
    _require_nonempty(cnf)
    n, m_clauses = cnf.n_vars, cnf.n_clauses
    lits = _literal_map(cnf)

    labels = ["s0"]
    var_clause: dict[tuple[int, int], int] = {}
    for i in range(1, n + 1):
        for j in range(1, m_clauses + 1):
            var_clause[(i, j)] = len(labels)
            labels.append(f"v{i}c{j}")
    sat_state = {}
    for i in range(1, n + 1):
        sat_state[i] = len(labels)
        labels.append(f"sat{i}")
    t_state = len(labels)
    f_state = t_state + 1
    labels += ["T", "F"]

    trans: dict[tuple[int, int, int], Fraction] = {}
    reward: dict[tuple[int, int], Fraction] = {}
    frac_m = Fraction(1, m_clauses)
    big = Fraction(m_clauses)
    for a in (0, 1):
        for j in range(1, m_clauses + 1):
            trans[(0, a, var_clause[(1, j)])] = frac_m
        for i in range(1, n + 1):
            for j in range(1, m_clauses + 1):
                s = var_clause[(i, j)]
                satisfies = lits[j - 1].get(i) == a
                if i < n:
                    trans[(s, a, sat_state[i + 1] if satisfies else var_clause[(i + 1, j)])] = ONE
                else:
                    trans[(s, a, t_state if satisfies else f_state)] = ONE
                    if satisfies:
                        reward[(s, a)] = big
            if i < n:
                trans[(sat_state[i], a, sat_state[i + 1])] = ONE
            else:
                trans[(sat_state[i], a, t_state)] = ONE
                reward[(sat_state[i], a)] = big
        trans[(t_state, a, t_state)] = ONE
        trans[(f_state, a, f_state)] = ONE

    model = Pomdp(
        n_states=len(labels),
        initial=0,
        n_actions=2,
        n_obs=1,
        obs=tuple([0] * len(labels)),
        trans=trans,
        reward=reward,
        labels=Labels(states=tuple(labels)),
    )
    return GadgetOutput(
        model=model,
        recommended_horizon=n + 1,
        recommended_metric=FiniteTotal(n + 1),
        claim=DichotomyClaim("max-sat", yes_value=big, no_bound=big - 1, params={"n": n, "m": m_clauses}),
    )


def uomdp_assignment_policy(cnf: Cnf, assignment: Sequence[int]) -> TimeDependentPolicy:
    """Time-dependent policy playing a fixed assignment on the unobservable gadget."""
    if len(assignment) != cnf.n_vars:
        raise ValueError("assignment length mismatch")
    rows = [(0,)] + [(b,) for b in assignment]
    return TimeDependentPolicy(cnf.n_vars + 1, tuple(rows))


def amplify_uomdp(cnf: Cnf, discount: Fraction | None = None) -> GadgetOutput:
    """Chain of m**2 unobservable copies with only a terminal reward.

    Intermediate rewards are stripped; all error states merge into one
    sink F, and the T of each copy is the entry of the next.  Reaching
    the final T pays 1, so the value is 1 for satisfiable formulas and
    at most (1 - 1/m)**(m**2) otherwise.

    With ``discount`` the terminal reward is compensated to
    discount**(-m**2 * (n+1)) and paid at the final T itself, whose
    transition row is all-zero (the process halts there): the success
    trajectory occupies final T at step m**2*(n+1), so its discounted
    worth is exactly 1.
    """
    _require_nonempty(cnf)
    if discount is not None and not (0 < discount < 1):
        raise ValueError("discount must satisfy 0 < beta < 1")
    n, m_clauses = cnf.n_vars, cnf.n_clauses
    copies = m_clauses * m_clauses
    lits = _literal_map(cnf)

    labels = ["J0"]
    junction = {0: 0}
    var_clause: dict[tuple[int, int, int], int] = {}
    sat_state: dict[tuple[int, int], int] = {}
    for c in range(1, copies + 1):
        for i in range(1, n + 1):
            for j in range(1, m_clauses + 1):
                var_clause[(c, i, j)] = len(labels)
                labels.append(f"m{c}.v{i}c{j}")
        for i in range(1, n + 1):
            sat_state[(c, i)] = len(labels)
            labels.append(f"m{c}.sat{i}")
        junction[c] = len(labels)
        labels.append(f"J{c}" if c < copies else "T")
    f_state = len(labels)
    labels.append("F")
    final_t = junction[copies]

    horizon = copies * (n + 1)
    compensation = None if discount is None else Fraction(1) / discount**horizon

    trans: dict[tuple[int, int, int], Fraction] = {}
    reward: dict[tuple[int, int], Fraction] = {}
    frac_m = Fraction(1, m_clauses)
    for a in (0, 1):
        for c in range(1, copies + 1):
            for j in range(1, m_clauses + 1):
                trans[(junction[c - 1], a, var_clause[(c, 1, j)])] = frac_m
            for i in range(1, n + 1):
                for j in range(1, m_clauses + 1):
                    s = var_clause[(c, i, j)]
                    satisfies = lits[j - 1].get(i) == a
                    if i < n:
                        trans[(s, a, sat_state[(c, i + 1)] if satisfies else var_clause[(c, i + 1, j)])] = ONE
                    else:
                        nxt = junction[c] if satisfies else f_state
                        trans[(s, a, nxt)] = ONE
                        if satisfies and c == copies and discount is None:
                            reward[(s, a)] = ONE
                if i < n:
                    trans[(sat_state[(c, i)], a, sat_state[(c, i + 1)])] = ONE
                else:
                    trans[(sat_state[(c, i)], a, junction[c])] = ONE
                    if c == copies and discount is None:
                        reward[(sat_state[(c, i)], a)] = ONE
        if discount is None:
            trans[(final_t, a, final_t)] = ONE
        else:
            reward[(final_t, a)] = compensation
        trans[(f_state, a, f_state)] = ONE

    model = Pomdp(
        n_states=len(labels),
        initial=0,
        n_actions=2,
        n_obs=1,
        obs=tuple([0] * len(labels)),
        trans=trans,
        reward=reward,
        labels=Labels(states=tuple(labels)),
    )
    no_bound = (1 - frac_m) ** copies
    if discount is None:
        metric: Metric = FiniteTotal(horizon)
        rec_horizon = horizon
    else:
        rec_horizon = horizon + 1
        metric = FiniteDiscounted(discount, rec_horizon)
    return GadgetOutput(
        model=model,
        recommended_horizon=rec_horizon,
        recommended_metric=metric,
        claim=DichotomyClaim(
            "eq-or-below",
            yes_value=ONE,
            no_bound=no_bound,
            params={"n": n, "m": m_clauses, "copies": copies, "discount": discount},
        ),
    )


def amplified_assignment_policy(
    cnf: Cnf, assignments: Sequence[Sequence[int]], horizon: int
) -> TimeDependentPolicy:
    """Policy playing one assignment per chained copy (junction steps idle)."""
    copies = cnf.n_clauses**2
    if len(assignments) != copies:
        raise ValueError(f"need {copies} per-copy assignments")
    rows = []
    for c in range(copies):
        rows.append((0,))
        rows.extend((b,) for b in assignments[c])
    while len(rows) < horizon:
        rows.append((0,))
    return TimeDependentPolicy(horizon, tuple(rows))


def amplified_optimal_value(cnf: Cnf, discount: Fraction | None = None) -> Fraction:
    """Optimal time-dependent value of the amplified chain.

    Uses the per-copy structure: copies are traversed independently
    with a fresh uniform clause draw each, so the optimal chain value
    is the best single-copy survival probability raised to the number
    of copies (the compensated discounted variant values every success
    trajectory at exactly 1).  Survival probabilities are measured on
    the single-copy gadget by exact policy evaluation, not recomputed
    from the formula.
    """
    single = threesat_to_uomdp(cnf)
    n, m_clauses = cnf.n_vars, cnf.n_clauses
    best_survival = ZERO
    for raw in range(2**n):
        assignment = tuple((raw >> i) & 1 for i in range(n))
        perf = finite_horizon_performance(
            single.model, uomdp_assignment_policy(cnf, assignment), FiniteTotal(n + 1)
        )
        survival = perf / m_clauses  # reward m is paid exactly once per surviving trajectory
        best_survival = max(best_survival, survival)
    return best_survival ** (m_clauses**2)


# ---------------------------------------------------------------------------
# Quantified-game gadget (store / assign / check stages)

_OBS_END = "end"
_OBS_STAGE1 = "stage1"
_OBS_CHEAT = "cheat"


def ssat_to_pomdp(phi: SsatFormula) -> GadgetOutput:
    """Three-stage gadget for a quantified CNF game.

    Stage 1 draws and hides one (variable, bit) pair uniformly (2n
    branches of probability 1/(2n) each).  Stage 2 fixes an assignment
    variable by variable -- the policy chooses at existential
    variables, fair coins at random ones -- and each assigned bit is
    observable; a branch whose hidden pair disagrees with the
    assignment dies into s_end.  Stage 3 replays the clause walk with
    positions observable: answering a literal of the hidden variable
    against the hidden bit is trapped in s_cheat, and a consistent walk
    that satisfies every clause pays 2 into s_end.

    Under any policy exactly half the mass reaches stage 3, so the
    canonical consistent policy earns exactly the game value.
    """
    n = phi.n_vars
    cnf = phi.matrix
    _require_nonempty(cnf)
    m_clauses = cnf.n_clauses

    obs_names = [_OBS_END, _OBS_STAGE1, "bit0", "bit1"]
    pos_obs: dict[tuple[int, int], int] = {}
    for j, clause in enumerate(cnf.clauses, start=1):
        for i in range(1, len(clause) + 1):
            pos_obs[(j, i)] = len(obs_names)
            obs_names.append(f"pos:{j}.{i}")
    cheat_obs = len(obs_names)
    obs_names.append(_OBS_CHEAT)

    labels = ["s0"]
    obs = [0]
    store: dict[tuple[int, int], int] = {}
    assign: dict[tuple[int, int, int, int], int] = {}
    check: dict[tuple[int, int, int, int], int] = {}
    for c in range(1, n + 1):
        for b in (0, 1):
            store[(c, b)] = len(labels)
            labels.append(f"store:{c},{b}")
            obs.append(1)
    for c in range(1, n + 1):
        for b in (0, 1):
            for j in range(1, n + 1):
                for v in (0, 1):
                    assign[(c, b, j, v)] = len(labels)
                    labels.append(f"A:{c},{b}:{j}={v}")
                    obs.append(2 + v)
    for c in range(1, n + 1):
        for b in (0, 1):
            for j, clause in enumerate(cnf.clauses, start=1):
                for i in range(1, len(clause) + 1):
                    check[(c, b, j, i)] = len(labels)
                    labels.append(f"C:{c},{b}:{j}.{i}")
                    obs.append(pos_obs[(j, i)])
    end_state = len(labels)
    labels.append("s_end")
    obs.append(0)
    cheat_state = len(labels)
    labels.append("s_cheat")
    obs.append(cheat_obs)

    half = Fraction(1, 2)
    fan = Fraction(1, 2 * n)
    trans: dict[tuple[int, int, int], Fraction] = {}
    reward: dict[tuple[int, int], Fraction] = {}

    def add_assignment_step(src: int, c: int, b: int, j: int) -> None:
        """Wire the step assigning variable j from state ``src``."""
        if phi.quantifier(j) == EXISTS:
            for a in (0, 1):
                trans[(src, a, assign[(c, b, j, a)])] = ONE
        else:
            for a in (0, 1):
                trans[(src, a, assign[(c, b, j, 0)])] = half
                trans[(src, a, assign[(c, b, j, 1)])] = half

    for a in (0, 1):
        for c in range(1, n + 1):
            for b in (0, 1):
                trans[(0, a, store[(c, b)])] = fan
    for c in range(1, n + 1):
        for b in (0, 1):
            add_assignment_step(store[(c, b)], c, b, 1)
            for j in range(1, n + 1):
                for v in (0, 1):
                    s = assign[(c, b, j, v)]
                    if j == c and v != b:
                        for a in (0, 1):
                            trans[(s, a, end_state)] = ONE
                    elif j < n:
                        add_assignment_step(s, c, b, j + 1)
                    else:
                        for a in (0, 1):
                            trans[(s, a, check[(c, b, 1, 1)])] = ONE
            for j, clause in enumerate(cnf.clauses, start=1):
                for i, (var, signum) in enumerate(clause, start=1):
                    s = check[(c, b, j, i)]
                    for a in (0, 1):
                        if var == c and a != b:
                            trans[(s, a, cheat_state)] = ONE
                        elif a == signum:
                            if j < m_clauses:
                                trans[(s, a, check[(c, b, j + 1, 1)])] = ONE
                            else:
                                trans[(s, a, end_state)] = ONE
                                reward[(s, a)] = Fraction(2)
                        else:
                            if i < len(clause):
                                trans[(s, a, check[(c, b, j, i + 1)])] = ONE
                            else:
                                trans[(s, a, end_state)] = ONE
    for a in (0, 1):
        trans[(end_state, a, end_state)] = ONE
        trans[(cheat_state, a, cheat_state)] = ONE

    copy_horizon = n + 2 + sum(len(cl) for cl in cnf.clauses)
    model = Pomdp(
        n_states=len(labels),
        initial=0,
        n_actions=2,
        n_obs=len(obs_names),
        obs=tuple(obs),
        trans=trans,
        reward=reward,
        labels=Labels(states=tuple(labels), observations=tuple(obs_names)),
    )
    return GadgetOutput(
        model=model,
        recommended_horizon=copy_horizon,
        recommended_metric=FiniteTotal(copy_horizon),
        claim=DichotomyClaim(
            "consistent-game-value",
            params={"n": n, "copies": 1, "copy_horizon": copy_horizon},
        ),
    )


def ssat_repeat(g: GadgetOutput, k: int, c: int | None = None) -> GadgetOutput:
    """Chain k copies of the quantified-game gadget.

    s_end of copy i becomes the entry of copy i+1 and all s_cheat
    states merge into one absorbing sink, so a policy caught answering
    inconsistently forfeits every later copy's reward.
    """
    if k < 1:
        raise ValueError("need at least one copy")
    if g.claim.kind not in ("consistent-game-value",):
        raise ValueError("can only chain single-copy game gadgets")
    base = g.model
    assert isinstance(base, Pomdp)
    assert base.labels is not None and base.labels.states is not None
    base_labels = base.labels.states
    end_idx = base_labels.index("s_end")
    cheat_idx = base_labels.index("s_cheat")
    s0 = base.initial

    pos: dict[tuple[int, int], int] = {}
    labels: list[str] = []
    obs: list[int] = []
    for copy in range(k):
        for s in range(base.n_states):
            if s == cheat_idx:
                continue
            if s == end_idx and copy < k - 1:
                continue
            pos[(copy, s)] = len(labels)
            labels.append(f"m{copy}.{base_labels[s]}")
            obs.append(base.obs[s])
    cheat_new = len(labels)
    labels.append("s_cheat")
    obs.append(base.obs[cheat_idx])

    def map_state(copy: int, s: int) -> int:
        if s == cheat_idx:
            return cheat_new
        if s == end_idx and copy < k - 1:
            return pos[(copy + 1, s0)]
        return pos[(copy, s)]

    trans: dict[tuple[int, int, int], Fraction] = {}
    reward: dict[tuple[int, int], Fraction] = {}
    for copy in range(k):
        for (s, a, s2), p in base.trans.items():
            if s == cheat_idx and copy > 0:
                continue
            if s == end_idx and copy < k - 1:
                continue  # the junction's outgoing rows are the next copy's entry rows
            trans[(map_state(copy, s), a, map_state(copy, s2))] = p
        for (s, a), r in base.reward.items():
            if s == end_idx and copy < k - 1:
                continue
            reward[(map_state(copy, s), a)] = r

    params = dict(g.claim.params)
    n = int(params["n"])
    copy_horizon = int(params["copy_horizon"])
    params.update({"copies": k, "c": c})
    yes_value = no_bound = None
    if c is not None:
        yes_value = k * (1 - Fraction(1, 2**c))
        no_bound = k * Fraction(1, 2**c) + 2 * n
    model = Pomdp(
        n_states=len(labels),
        initial=pos[(0, s0)],
        n_actions=base.n_actions,
        n_obs=base.n_obs,
        obs=tuple(obs),
        trans=trans,
        reward=reward,
        labels=Labels(states=tuple(labels), observations=base.labels.observations),
    )
    horizon = k * copy_horizon
    return GadgetOutput(
        model=model,
        recommended_horizon=horizon,
        recommended_metric=FiniteTotal(horizon),
        claim=DichotomyClaim("repeat-threshold", yes_value=yes_value, no_bound=no_bound, params=params),
    )


def choose_ssat_constants(eps: Fraction, n_vars: int) -> tuple[int, int]:
    """Smallest c then k making the chained gadget's gap defeat a relative-eps approximation.

    c is the least integer with 2**c > (2-eps)/(1-eps); k is the least
    integer with 2n < k * ((1-eps)*(1-2**-c) - 2**-c).
    """
    if not (0 <= eps < 1):
        raise ValueError("eps must satisfy 0 <= eps < 1")
    target = (2 - eps) / (1 - eps)
    c = 1
    while 2**c <= target:
        c += 1
    margin = (1 - eps) * (1 - Fraction(1, 2**c)) - Fraction(1, 2**c)
    k = math.floor(Fraction(2 * n_vars) / margin) + 1
    return c, k


def consistent_ssat_policy(phi: SsatFormula, g: GadgetOutput) -> HistoryPolicy:
    """Canonical consistent history policy for a (possibly chained) game gadget.

    In each copy it plays the optimal game strategy during the
    assignment stage (choices may depend on previously observed bits)
    and echoes the observed bits during the checking stage, so it never
    cheats.  Its performance is exactly (number of copies) * (game
    value).
    """
    m = g.model
    assert isinstance(m, Pomdp)
    assert m.labels is not None and m.labels.observations is not None
    obs_names = m.labels.observations
    horizon = g.recommended_horizon
    n = phi.n_vars

    def action_for(hist: tuple[int, ...]) -> int:
        names = [obs_names[o] for o in hist]
        last = names[-1]
        if last in (_OBS_CHEAT, _OBS_END):
            return 0
        # observations since the current copy began
        start = max(i for i, nm in enumerate(names) if nm == _OBS_END) if _OBS_END in names else -1
        segment = names[start + 1 :]
        bits = [int(nm[3]) for nm in segment if nm.startswith("bit")]
        if last == _OBS_STAGE1 or last.startswith("bit"):
            if len(bits) >= n:
                return 0  # forced move into the checking stage
            if phi.quantifier(len(bits) + 1) == EXISTS:
                return ssat_optimal_bit(phi, bits)
            return 0
        if last.startswith("pos:"):
            j, i = (int(x) for x in last[4:].split("."))
            var, _ = phi.matrix.clauses[j - 1][i - 1]
            return bits[var - 1]
        raise AssertionError(f"unexpected observation {last}")

    succ: dict[tuple[int, int], list[tuple[int, Fraction]]] = {}
    for (s, a, s2), p in m.trans.items():
        if p != 0:
            succ.setdefault((s, a), []).append((s2, p))

    act: dict[tuple[int, ...], int] = {}
    frontier: dict[tuple[int, ...], set[int]] = {(m.obs[m.initial],): {m.initial}}
    for _step in range(horizon):
        nxt: dict[tuple[int, ...], set[int]] = {}
        for hist, states in frontier.items():
            a = action_for(hist)
            act[hist] = a
            for s in states:
                for s2, _p in succ.get((s, a), ()):
                    nxt.setdefault(hist + (m.obs[s2],), set()).add(s2)
        frontier = nxt
    return HistoryPolicy(horizon, act)


def stage_three_mass(g: GadgetOutput, policy: Policy) -> Fraction:
    """Probability mass that reaches the checking stage (first copy)."""
    m = g.model
    assert isinstance(m, Pomdp)
    assert m.labels is not None and m.labels.states is not None
    n = int(g.claim.params["n"])
    dist = distribution_after(m, policy, n + 2)
    return sum(
        (mass for s, mass in dist.items() if "C:" in m.labels.states[s]),
        ZERO,
    )
