"""Bridges between additive and relative approximation guarantees.

The constructions are fully constructive: a metric-dependent lower
bound on any positive value, exact reward scaling, positivity decision
through an additive approximator, and the two wrapper directions
between additive-error and relative-error value approximation.
Approximators are pluggable callables; the test suite plugs in exact
oracles (optionally degraded by exactly their allowed error).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional

from .model import (
    Average,
    FiniteDiscounted,
    FiniteTotal,
    InfiniteDiscounted,
    Metric,
    Pomdp,
    ONE,
    ZERO,
)

K_ADDITIVE = "k-additive"
PTAS = "ptas"


@dataclass(frozen=True)
class Approximator:
    """Value approximator with a declared guarantee.

    ``k-additive``: fn(model, metric) returns v with mu >= v >= mu - k.
    ``ptas``: fn(model, metric, eps) returns v with mu >= v >= (1-eps)*mu.
    The guarantee is assumed, not checked; plug in an exact oracle to
    validate the wrappers themselves.
    """

    kind: str
    fn: Callable[..., Fraction]
    k: Optional[Fraction] = None

    def __post_init__(self) -> None:
        if self.kind not in (K_ADDITIVE, PTAS):
            raise ValueError(f"unknown approximator kind {self.kind!r}")
        if self.kind == K_ADDITIVE and (self.k is None or self.k <= 0):
            raise ValueError("k-additive approximator needs k > 0")


def reachable_states(m: Pomdp) -> set[int]:
    """States reachable from the initial state along positive-probability edges."""
    succ: dict[int, set[int]] = {}
    for (s, _a, s2), p in m.trans.items():
        if p != 0:
            succ.setdefault(s, set()).add(s2)
    seen = {m.initial}
    stack = [m.initial]
    while stack:
        s = stack.pop()
        for s2 in succ.get(s, ()):
            if s2 not in seen:
                seen.add(s2)
                stack.append(s2)
    return seen


def _reachable_reward_floor(m: Pomdp) -> Fraction | None:
    """Least nonzero reward available from a reachable state, if any."""
    reach = reachable_states(m)
    floor: Fraction | None = None
    for (s, _a), r in m.reward.items():
        if s in reach and r != 0 and (floor is None or r < floor):
            floor = r
    return floor


def positive_value_lower_bound(m: Pomdp, metric: Metric) -> Fraction:
    """Least possible positive value under the metric (delta).

    With nu the least nonzero transition probability among reachable
    states and zeta the least nonzero reachable reward: nu**h * zeta
    for a total horizon-h metric, (beta*nu)**h * zeta discounted, and
    (beta*nu)**|S| * zeta for the infinite discounted metric (a
    positive-value policy uses a simple path).  If the value is
    positive at all, it is at least delta.
    """
    if any(r < 0 for r in m.reward.values()):
        raise ValueError("lower bound requires non-negative rewards")
    zeta = _reachable_reward_floor(m)
    if zeta is None:
        raise ValueError("no nonzero reachable reward: the value is exactly 0")
    reach = reachable_states(m)
    nu = ONE
    for (s, _a, _s2), p in m.trans.items():
        if s in reach and p != 0 and p < nu:
            nu = p
    if isinstance(metric, FiniteTotal):
        return nu**metric.horizon * zeta
    if isinstance(metric, FiniteDiscounted):
        return (metric.beta * nu) ** metric.horizon * zeta
    if isinstance(metric, InfiniteDiscounted):
        return (metric.beta * nu) ** m.n_states * zeta
    if isinstance(metric, Average):
        raise ValueError("no positivity lower bound is defined for the average metric")
    raise TypeError(f"unknown metric {metric!r}")


def scale_rewards(m: Pomdp, theta: Fraction) -> Pomdp:
    """Multiply every reward by theta > 0.

    Performance is linear in the rewards, so every policy's value
    scales by theta and the set of optimal policies is unchanged.
    """
    if theta <= 0:
        raise ValueError("scale factor must be positive")
    return Pomdp(
        n_states=m.n_states,
        initial=m.initial,
        n_actions=m.n_actions,
        n_obs=m.n_obs,
        obs=m.obs,
        trans=m.trans,
        reward={key: r * theta for key, r in m.reward.items()},
        labels=m.labels,
    )


def _least_integer_above(x: Fraction) -> int:
    return math.floor(x) + 1


def decide_positivity_via_kadditive(a: Approximator, m: Pomdp, metric: Metric) -> bool:
    """Decide val(m) > 0 with one call to an additive approximator.

    Scales rewards by the least integer theta > k/delta, so a policy of
    positive value scores at least theta*delta > k and the approximator
    cannot report it as 0.
    """
    if a.kind != K_ADDITIVE:
        raise ValueError("positivity decision needs a k-additive approximator")
    if _reachable_reward_floor(m) is None:
        return False  # value is exactly 0, no approximation needed
    delta = positive_value_lower_bound(m, metric)
    theta = _least_integer_above(a.k / delta)
    return a.fn(scale_rewards(m, Fraction(theta)), metric) > 0


def kadditive_to_ptas(a: Approximator, m: Pomdp, eps: Fraction, metric: Metric) -> Fraction:
    """Relative-error value approximation from an additive approximator.

    Returns 0 when the value is 0; otherwise scales by the least
    integer theta > k/(eps*delta) and divides the additive answer back,
    landing in [(1-eps)*val, val].
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    if a.kind != K_ADDITIVE:
        raise ValueError("needs a k-additive approximator")
    if not decide_positivity_via_kadditive(a, m, metric):
        return ZERO
    delta = positive_value_lower_bound(m, metric)
    theta = _least_integer_above(a.k / (eps * delta))
    return a.fn(scale_rewards(m, Fraction(theta)), metric) / theta


def ptas_to_kadditive(a: Approximator, m: Pomdp, k: Fraction, metric: Metric) -> Fraction:
    """Additive-error value approximation from a relative-error scheme.

    A first call at eps = 1/2 brackets the value (mu >= v >= mu/2); if
    v = 0 the value is 0, otherwise any eps < k/(2v) <= k/mu makes the
    relative loss at most k.  We use eps = k/(4v).
    """
    if k <= 0:
        raise ValueError("k must be positive")
    if a.kind != PTAS:
        raise ValueError("needs a relative-error approximator")
    v = a.fn(m, metric, Fraction(1, 2))
    if v == 0:
        return ZERO
    eps = k / (4 * v)
    return a.fn(m, metric, eps)
