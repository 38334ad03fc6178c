"""Exact-arithmetic toolkit that compiles Boolean and stochastic
formulas and circuits into decision-process instances with provable
value dichotomies, evaluates policies under every standard performance
metric, and checks each dichotomy against brute-force oracles."""

from .approx import (
    Approximator,
    decide_positivity_via_kadditive,
    kadditive_to_ptas,
    positive_value_lower_bound,
    ptas_to_kadditive,
    scale_rewards,
)
from .caps import CapExceeded
from .circuits import (
    CircuitBuilder,
    build_succinct_instance,
    circuit_to_2tbn,
    cvp_to_mdp,
    described_circuit,
    normalize_fanout,
    query_descriptor,
    succinct_cvp_to_2tbn,
)
from .evaluation import (
    average_performance_stationary,
    discounted_performance_stationary,
    distribution_after,
    evaluate,
    finite_horizon_performance,
    finite_memory_cross_product,
)
from .model import (
    AND,
    Average,
    Circuit,
    Cnf,
    CONST0,
    CONST1,
    EXISTS,
    FiniteDiscounted,
    FiniteMemoryPolicy,
    FiniteTotal,
    Gate,
    HistoryPolicy,
    InfiniteDiscounted,
    Labels,
    Metric,
    NOT,
    OR,
    ObservabilityClass,
    Policy,
    Pomdp,
    RANDOM,
    Rat,
    SsatFormula,
    StationaryPolicy,
    SuccinctCircuitInstance,
    SuccinctReward,
    Tbn,
    TbnAction,
    TimeDependentPolicy,
    classify_observability,
    validate_pomdp,
)
from .oracles import (
    SatResult,
    assemble_reward,
    brute_force_stationary_value,
    brute_force_time_dependent_value,
    circuit_eval,
    exact_history_value,
    expand_2tbn,
    expand_succinct_mdp,
    reward_bit,
    sat_enumerate,
    ssat_value,
)
from .reductions import (
    DichotomyClaim,
    GadgetOutput,
    amplified_assignment_policy,
    amplified_optimal_value,
    amplify_uomdp,
    assignment_stationary_policy,
    choose_ssat_constants,
    consistent_ssat_policy,
    epsilon_gap_gadget,
    infinite_horizon_sat_gadget,
    ssat_repeat,
    ssat_to_pomdp,
    stage_three_mass,
    threesat_to_pomdp,
    threesat_to_uomdp,
    uomdp_assignment_policy,
)

__version__ = "0.1.0"
