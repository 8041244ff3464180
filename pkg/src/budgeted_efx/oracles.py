"""Exhaustive ground-truth solvers.

These are used both inside the allocation procedures (welfare-optimal seeds,
the complete-EFx step, the leximin++ split) and as independent verification
oracles in the test suites. They enumerate, they never approximate: when an
enumeration cap is hit they fail loudly.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Sequence

from .model import (
    Allocation,
    Bundle,
    FairDivisionError,
    Instance,
    InvariantViolationError,
    StructuralError,
    ZERO,
    bundle_cost,
    bundle_value,
    is_efx,
)

__all__ = [
    "ExistenceViolationError",
    "SearchBudget",
    "SearchCapExceededError",
    "SplitPair",
    "best_allocation_under_predicate",
    "complete_efx_allocation",
    "is_pareto_efficient",
    "knapsack_by_enumeration",
    "leximin_pp_split",
    "max_nsw_allocation",
    "max_nsw_by_enumeration",
    "partial_nsw_product",
]

ONE = Fraction(1)


class SearchCapExceededError(FairDivisionError):
    """The enumeration cap was hit; the caller gets an error, never a guess."""


class ExistenceViolationError(FairDivisionError):
    """Exhaustive search disproved a guaranteed existence claim (a bug trap)."""


@dataclass(frozen=True)
class SearchBudget:
    """Cap on the number of complete assignments an oracle may enumerate."""

    max_assignments: int = 50_000_000

    def __post_init__(self) -> None:
        if self.max_assignments <= 0:
            raise StructuralError("search budget must be positive")


@dataclass(frozen=True)
class SplitPair:
    """An ordered 2-partition of a pool; ``first`` is the preferred part."""

    first: Bundle
    second: Bundle


def partial_nsw_product(
    instance: Instance, allocation: Allocation, agents: Iterable[int]
) -> Fraction:
    """Welfare product restricted to a subset of the agents."""
    product = ONE
    for a in agents:
        product *= bundle_value(instance, a, allocation.bundles[a])
    return product


class _Counter:
    __slots__ = ("count", "cap")

    def __init__(self, cap: int):
        self.count = 0
        self.cap = cap

    def tick(self) -> None:
        self.count += 1
        if self.count > self.cap:
            raise SearchCapExceededError(
                f"search budget exhausted after {self.cap} enumerated assignments"
            )


def max_nsw_allocation(
    instance: Instance,
    agents: Sequence[int],
    pool: Iterable[int],
    budget: SearchBudget = SearchBudget(),
) -> Allocation:
    """Budget-feasible allocation of (a subset of) ``pool`` to ``agents``
    maximizing the product of their values.

    Branch-and-bound over per-good assignments: each good goes to one of the
    listed agents or stays unallocated. An additive per-agent upper bound
    prunes subtrees that cannot beat the incumbent. Goods are decided in
    ascending id order and assignment codes are tried agents-first (ascending
    id) then "unallocated", so the first optimum found -- and hence the one
    returned -- has the lexicographically smallest assignment vector.
    """
    agents = tuple(sorted(set(agents)))
    if not agents:
        raise StructuralError("at least one agent required")
    for a in agents:
        instance.check_agent(a)
    pool = instance.check_bundle(pool)
    goods = sorted(pool)
    k = len(agents)
    caps = [instance.budgets[a] for a in agents]
    vals = [instance.values[a] for a in agents]
    costs = instance.costs
    n = len(goods)

    suffix = [[ZERO] * (n + 1) for _ in range(k)]
    for ai in range(k):
        row = suffix[ai]
        for idx in range(n - 1, -1, -1):
            row[idx] = row[idx + 1] + vals[ai][goods[idx]]

    counter = _Counter(budget.max_assignments)
    spent = [ZERO] * k
    acc = [ZERO] * k
    assign = [k] * n
    best_product: Fraction | None = None
    best_assign: tuple[int, ...] | None = None

    def walk(idx: int) -> None:
        nonlocal best_product, best_assign
        if idx == n:
            counter.tick()
            product = ONE
            for v in acc:
                product *= v
            if best_product is None or product > best_product:
                best_product = product
                best_assign = tuple(assign)
            return
        if best_product is not None:
            bound = ONE
            for ai in range(k):
                bound *= acc[ai] + suffix[ai][idx]
            if bound <= best_product:
                return
        g = goods[idx]
        for code in range(k):
            with_g = spent[code] + costs[g]
            if with_g > caps[code]:
                continue
            assign[idx] = code
            old_spent, old_acc = spent[code], acc[code]
            spent[code] = with_g
            acc[code] = old_acc + vals[code][g]
            walk(idx + 1)
            spent[code], acc[code] = old_spent, old_acc
        assign[idx] = k
        walk(idx + 1)

    walk(0)
    assert best_assign is not None
    bundles: list[set[int]] = [set() for _ in range(instance.num_agents)]
    for g, code in zip(goods, best_assign):
        if code < k:
            bundles[agents[code]].add(g)
    return Allocation(tuple(frozenset(b) for b in bundles), pool)


def complete_efx_allocation(
    instance: Instance,
    agents: Sequence[int],
    pool: Iterable[int],
    budget: SearchBudget = SearchBudget(),
) -> Allocation:
    """First EFx allocation, in lexicographic assignment order, that assigns
    every good in ``pool`` to one of the three agents.

    Requires the whole pool to fit within every agent's budget, which makes
    budget feasibility automatic for every sub-bundle and reduces the EFx
    test to plain additive comparisons.
    """
    agents = tuple(sorted(set(agents)))
    if len(agents) != 3:
        raise StructuralError("complete EFx search is defined for exactly 3 agents")
    for a in agents:
        instance.check_agent(a)
    pool = instance.check_bundle(pool)
    min_budget = min(instance.budgets[a] for a in agents)
    if bundle_cost(instance, pool) > min_budget:
        raise StructuralError(
            "pool must be affordable within every agent's budget"
        )

    goods = sorted(pool)
    rows = [instance.values[a] for a in agents]
    counter = _Counter(budget.max_assignments)

    for codes in itertools.product((0, 1, 2), repeat=len(goods)):
        counter.tick()
        parts: tuple[list[int], list[int], list[int]] = ([], [], [])
        for g, code in zip(goods, codes):
            parts[code].append(g)
        own = [sum((rows[ai][g] for g in parts[ai]), ZERO) for ai in range(3)]
        ok = True
        for ai in range(3):
            for aj in range(3):
                if ai == aj or not parts[aj]:
                    continue
                row = rows[ai]
                total = sum((row[g] for g in parts[aj]), ZERO)
                cheapest = min(row[g] for g in parts[aj])
                if total - cheapest > own[ai]:
                    ok = False
                    break
            if not ok:
                break
        if ok:
            bundles: list[Bundle] = [frozenset()] * instance.num_agents
            for ai, a in enumerate(agents):
                bundles[a] = frozenset(parts[ai])
            allocation = Allocation(tuple(bundles), pool)
            if not is_efx(instance, allocation):
                raise InvariantViolationError(
                    "fast EFx test disagrees with the general predicate"
                )
            return allocation

    raise ExistenceViolationError(
        "no complete EFx allocation found despite the affordability "
        f"precondition; instance for inspection: costs={instance.costs} "
        f"budgets={instance.budgets} values={instance.values} "
        f"pool={sorted(pool)} agents={agents}"
    )


def leximin_pp_split(
    pool: Iterable[int], valuation: Callable[[Bundle], Fraction]
) -> SplitPair:
    """Split ``pool`` into two parts by brute-force leximin++ under a single
    valuation ``u``.

    Every 2-partition is scored by the signature (u(worse), |worse|,
    u(better), |better|), where the worse part is the one with the smaller
    (value, cardinality) key; the partition with the lexicographically
    largest signature wins. Remaining ties are broken by the smallest sorted
    good-id sequence of the preferred part, which is returned as ``first``.

    Guarantees u(second) >= u(first minus any single good): if that failed
    for some good, moving the good across would improve the signature.
    """
    pool = frozenset(pool)
    goods = sorted(pool)
    n = len(goods)
    best_sig: tuple | None = None
    best_first: tuple[int, ...] | None = None
    best_pair: tuple[Bundle, Bundle] | None = None
    for mask in range(1 << n):
        first = frozenset(goods[i] for i in range(n) if mask >> i & 1)
        second = pool - first
        key_first = (valuation(first), len(first))
        key_second = (valuation(second), len(second))
        if key_first < key_second:
            continue  # orientation with the preferred part first only
        sig = (key_second[0], key_second[1], key_first[0], key_first[1])
        first_ids = tuple(sorted(first))
        if (
            best_sig is None
            or sig > best_sig
            or (sig == best_sig and first_ids < best_first)
        ):
            best_sig = sig
            best_first = first_ids
            best_pair = (first, second)
    assert best_pair is not None
    return SplitPair(best_pair[0], best_pair[1])


def best_allocation_under_predicate(
    instance: Instance,
    predicate: Callable[[Instance, Allocation], bool],
    budget: SearchBudget = SearchBudget(),
) -> tuple[Allocation, Fraction] | None:
    """Welfare-product maximizer among all budget-feasible allocations of all
    goods that satisfy ``predicate``; None if nothing satisfies it.

    Full enumeration: predicates like EF1 are not monotone under extension,
    so only budget infeasibility prunes. Ties resolve to the first optimum in
    lexicographic assignment order, as in :func:`max_nsw_allocation`.
    """
    n_agents = instance.num_agents
    goods = sorted(instance.all_goods())
    costs = instance.costs
    counter = _Counter(budget.max_assignments)
    assign = [n_agents] * len(goods)
    spent = [ZERO] * n_agents
    best: tuple[Allocation, Fraction] | None = None

    def walk(idx: int) -> None:
        nonlocal best
        if idx == len(goods):
            counter.tick()
            bundles: list[set[int]] = [set() for _ in range(n_agents)]
            for g, code in zip(goods, assign):
                if code < n_agents:
                    bundles[code].add(g)
            allocation = Allocation(
                tuple(frozenset(b) for b in bundles), instance.all_goods()
            )
            if not predicate(instance, allocation):
                return
            product = ONE
            for a in range(n_agents):
                product *= bundle_value(instance, a, allocation.bundles[a])
            if best is None or product > best[1]:
                best = (allocation, product)
            return
        g = goods[idx]
        for code in range(n_agents):
            with_g = spent[code] + costs[g]
            if with_g > instance.budgets[code]:
                continue
            assign[idx] = code
            spent[code] = with_g
            walk(idx + 1)
            spent[code] = with_g - costs[g]
        assign[idx] = n_agents
        walk(idx + 1)

    walk(0)
    return best


def is_pareto_efficient(
    instance: Instance, allocation: Allocation, budget: SearchBudget = SearchBudget()
) -> bool:
    """No allocation of the goods weakly dominates with a strict gain.

    Dominators range over all ways to hand out the goods, budget-feasible or
    not: an allocation that wastes value counts as inefficient even when
    budgets block every feasible repair. (With feasible-only dominators, the
    three-good lower-bound instance would admit an allocation that is both
    EF1 and efficient, contradicting what this oracle exists to certify.)
    """
    n_agents = instance.num_agents
    goods = sorted(instance.all_goods())
    base = [
        bundle_value(instance, a, allocation.bundles[a]) for a in range(n_agents)
    ]
    n = len(goods)
    suffix = [[ZERO] * (n + 1) for _ in range(n_agents)]
    for a in range(n_agents):
        row = suffix[a]
        for idx in range(n - 1, -1, -1):
            row[idx] = row[idx + 1] + instance.values[a][goods[idx]]
    counter = _Counter(budget.max_assignments)
    acc = [ZERO] * n_agents

    class _Dominated(Exception):
        pass

    def walk(idx: int) -> None:
        for a in range(n_agents):
            if acc[a] + suffix[a][idx] < base[a]:
                return  # cannot even match this agent's current value
        if idx == n:
            counter.tick()
            if any(acc[a] > base[a] for a in range(n_agents)):
                raise _Dominated
            return
        g = goods[idx]
        for code in range(n_agents):
            old = acc[code]
            acc[code] = old + instance.values[code][g]
            walk(idx + 1)
            acc[code] = old
        walk(idx + 1)

    try:
        walk(0)
    except _Dominated:
        return False
    return True


def knapsack_by_enumeration(
    instance: Instance, agent: int, pool: Iterable[int], budget
) -> tuple[Fraction, Bundle]:
    """Unpruned knapsack: literal max over all subsets, same tie-break.

    Independent check for :func:`budgeted_efx.model.knapsack_vmax`; shares no
    search machinery with it.
    """
    instance.check_agent(agent)
    pool = instance.check_bundle(pool)
    goods = sorted(pool)
    n = len(goods)
    costs = instance.costs
    vals = instance.values[agent]
    from .model import to_rational

    budget = to_rational(budget)
    # Subset sums by reusing the value of mask minus its lowest set bit.
    cost_of = [ZERO] * (1 << n)
    value_of = [ZERO] * (1 << n)
    for mask in range(1, 1 << n):
        low = (mask & -mask).bit_length() - 1
        rest = mask & (mask - 1)
        cost_of[mask] = cost_of[rest] + costs[goods[low]]
        value_of[mask] = value_of[rest] + vals[goods[low]]
    best_value = ZERO
    for mask in range(1 << n):
        if cost_of[mask] <= budget and value_of[mask] > best_value:
            best_value = value_of[mask]
    candidates = [
        mask
        for mask in range(1 << n)
        if cost_of[mask] <= budget and value_of[mask] == best_value
    ]
    witnesses = [
        tuple(goods[i] for i in range(n) if mask >> i & 1) for mask in candidates
    ]
    return best_value, frozenset(min(witnesses))


def max_nsw_by_enumeration(
    instance: Instance,
    agents: Sequence[int],
    pool: Iterable[int],
    budget: SearchBudget = SearchBudget(),
) -> tuple[Allocation, Fraction]:
    """Unpruned welfare maximization: visits every assignment of ``pool``.

    Feasibility is checked per complete assignment and no bounding is done,
    so this is the oracle-of-the-oracle for :func:`max_nsw_allocation`.
    """
    agents = tuple(sorted(set(agents)))
    pool = instance.check_bundle(pool)
    goods = sorted(pool)
    k = len(agents)
    counter = _Counter(budget.max_assignments)
    best_product: Fraction | None = None
    best_assign: tuple[int, ...] | None = None
    for codes in itertools.product(range(k + 1), repeat=len(goods)):
        counter.tick()
        spent = [ZERO] * k
        acc = [ZERO] * k
        for g, code in zip(goods, codes):
            if code < k:
                spent[code] += instance.costs[g]
                acc[code] += instance.values[agents[code]][g]
        if any(spent[ai] > instance.budgets[agents[ai]] for ai in range(k)):
            continue
        product = ONE
        for v in acc:
            product *= v
        if best_product is None or product > best_product:
            best_product = product
            best_assign = codes
    assert best_assign is not None and best_product is not None
    bundles: list[set[int]] = [set() for _ in range(instance.num_agents)]
    for g, code in zip(goods, best_assign):
        if code < k:
            bundles[agents[code]].add(g)
    return (
        Allocation(tuple(frozenset(b) for b in bundles), pool),
        best_product,
    )
