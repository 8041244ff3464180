"""Shared brute-force checkers for the tests.

These deliberately implement the literal, quantifier-heavy definitions so
they are independent of the package's reformulated fast paths.
"""

from __future__ import annotations

import itertools
import random
from fractions import Fraction

from budgeted_efx.model import Allocation, Bundle, Instance


def build(costs, budgets, values) -> Instance:
    return Instance(tuple(costs), tuple(budgets), tuple(values))


def subsets(goods):
    goods = sorted(goods)
    for r in range(len(goods) + 1):
        yield from (frozenset(c) for c in itertools.combinations(goods, r))


def cost_of(instance: Instance, bundle) -> Fraction:
    return sum((instance.costs[g] for g in bundle), Fraction(0))


def value_of(instance: Instance, agent: int, bundle) -> Fraction:
    return sum((instance.values[agent][g] for g in bundle), Fraction(0))


def literal_efx_envies(instance, own_value, agent, target) -> bool:
    """The two-quantifier form: exists S and g in S such that S minus g is
    within budget and worth strictly more than the own value.

    Budget feasibility binds on the bundle the agent would actually take,
    i.e. after the removal; that is the reading under which this agrees with
    the feasibility-graph edge rule and the drop-one-good implementation.
    """
    budget = instance.budgets[agent]
    for s in subsets(target):
        for g in s:
            kept = s - {g}
            if cost_of(instance, kept) <= budget and value_of(
                instance, agent, kept
            ) > own_value:
                return True
    return False


def literal_ef1_holds(instance, allocation: Allocation) -> bool:
    for i in range(instance.num_agents):
        own = value_of(instance, i, allocation.bundles[i])
        for j in range(instance.num_agents):
            if i == j:
                continue
            for s in subsets(allocation.bundles[j]):
                if not s or cost_of(instance, s) > instance.budgets[i]:
                    continue
                if all(value_of(instance, i, s - {g}) > own for g in s):
                    return False
    return True


def random_instance(
    rng: random.Random,
    n: int,
    m: int,
    cost_hi: int = 10,
    value_hi: int = 10,
    budget_hi: int = 25,
    allow_zero_cost: bool = True,
) -> Instance:
    lo = 0 if allow_zero_cost else 1
    costs = tuple(Fraction(rng.randint(lo, cost_hi)) for _ in range(m))
    budgets = tuple(Fraction(rng.randint(0, budget_hi)) for _ in range(n))
    values = tuple(
        tuple(Fraction(rng.randint(0, value_hi)) for _ in range(m)) for _ in range(n)
    )
    return Instance(costs, budgets, values)


def random_feasible_allocation(
    rng: random.Random, instance: Instance, scope: Bundle | None = None
) -> Allocation:
    scope = instance.all_goods() if scope is None else scope
    bundles = [set() for _ in range(instance.num_agents)]
    spent = [Fraction(0)] * instance.num_agents
    for g in sorted(scope):
        who = rng.randrange(instance.num_agents + 1)
        if who < instance.num_agents and spent[who] + instance.costs[g] <= instance.budgets[who]:
            bundles[who].add(g)
            spent[who] += instance.costs[g]
    return Allocation(tuple(frozenset(b) for b in bundles), scope)
