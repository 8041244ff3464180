"""EFx allocation for three budget-constrained agents.

The pipeline: compute the welfare optimum, rescale values so each optimum
bundle is worth 1, set aside one high-value good per agent, then either
reduce to the equal-budget case (when every agent could still reach value
alpha on the lowest budget) or run the unequal-budget subroutine. At the
very end each agent may trade her bundle for her set-aside good. The final
allocation is budget-feasible, EFx, and its welfare product is at least
(1/171)^3 of the optimum at the default alpha = 1/35.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import itertools

from .model import (
    Allocation,
    Bundle,
    Instance,
    InvariantViolationError,
    StructuralError,
    bundle_cost,
    bundle_value,
    envies,
    knapsack_vmax,
    normalize,
)
from .oracles import (
    SearchBudget,
    SplitPair,
    complete_efx_allocation,
    max_nsw_allocation,
)
from .two_agents import efx_2a

__all__ = [
    "AlphaParams",
    "ElseTrace",
    "SetAside",
    "SolveResult",
    "efx_3a",
    "else_procedure",
    "equal_budget_procedure",
    "preprocess",
    "round_robin_self_split",
    "trim_to_budget_share",
]

ENVY_SWAP_CAP = 100


@dataclass(frozen=True)
class SetAside:
    """One reserved good per agent (or none), with the owner's value for it."""

    goods: tuple[int | None, ...]
    values: tuple[Fraction, ...]

    def __post_init__(self) -> None:
        taken = [g for g in self.goods if g is not None]
        if len(taken) != len(set(taken)):
            raise StructuralError("set-aside goods must be pairwise distinct")


@dataclass(frozen=True)
class AlphaParams:
    """Monopoly threshold steering the budget-reduction branch."""

    alpha: Fraction = Fraction(1, 35)

    def __post_init__(self) -> None:
        object.__setattr__(self, "alpha", Fraction(self.alpha))
        if not 0 < self.alpha < 1:
            raise StructuralError("alpha must lie strictly between 0 and 1")


@dataclass(frozen=True)
class ElseTrace:
    return_point: int
    swapped_roles: bool


@dataclass(frozen=True)
class SolveResult:
    """Final allocation plus everything needed to certify it."""

    allocation: Allocation
    branch: str
    opt: Allocation
    opt_product: Fraction
    final_product: Fraction
    alpha: Fraction
    role_order: tuple[int, ...]
    setaside_goods: tuple[int | None, ...]
    setaside_values: tuple[Fraction, ...]
    setaside_taken: tuple[bool, ...]
    monopoly_low: tuple[Fraction, ...] | None
    notes: tuple[str, ...]


def preprocess(instance: Instance, opt: Allocation) -> tuple[Bundle, SetAside]:
    """Set aside one high-value good per agent and remove them from play.

    Each agent nominates her three most valuable individually affordable
    goods (ties to the lowest id, fewer if fewer exist). Among all matchings
    of agents to nominated goods in which every agent whose nominations meet
    her own optimum bundle is matched at least that well, a maximum-weight
    one is chosen (weights are the owners' values, ties to the smallest
    matched-good ids). Afterwards no remaining affordable good beats any
    agent's set-aside good.
    """
    n = instance.num_agents
    nominations: list[list[int]] = []
    for i in range(n):
        affordable = [g for g in range(instance.num_goods) if instance.costs[g] <= instance.budgets[i]]
        affordable.sort(key=lambda g: (-instance.values[i][g], g))
        nominations.append(affordable[:3])

    required: list[Fraction | None] = []
    for i in range(n):
        own_opt = [g for g in nominations[i] if g in opt.bundles[i]]
        if own_opt:
            required.append(max(instance.values[i][g] for g in own_opt))
        else:
            required.append(None)

    sentinel = instance.num_goods
    best_weight: Fraction | None = None
    best_combo: tuple[int | None, ...] | None = None
    for combo in itertools.product(*[nom + [None] for nom in nominations]):
        chosen = [g for g in combo if g is not None]
        if len(chosen) != len(set(chosen)):
            continue
        ok = True
        for i in range(n):
            if required[i] is None:
                continue
            if combo[i] is None or instance.values[i][combo[i]] < required[i]:
                ok = False
                break
        if not ok:
            continue
        weight = sum(
            (instance.values[i][g] for i, g in enumerate(combo) if g is not None),
            Fraction(0),
        )
        tie = tuple(sentinel if g is None else g for g in combo)
        if (
            best_weight is None
            or weight > best_weight
            or (weight == best_weight and tie < best_tie)
        ):
            best_weight = weight
            best_combo = combo
            best_tie = tie
    if best_combo is None:
        raise InvariantViolationError("preprocess infeasible: no admissible matching")

    values = tuple(
        instance.values[i][g] if g is not None else Fraction(0)
        for i, g in enumerate(best_combo)
    )
    pool = instance.all_goods() - {g for g in best_combo if g is not None}
    return pool, SetAside(tuple(best_combo), values)


def trim_to_budget_share(
    instance: Instance, opt_on_pool: Allocation
) -> tuple[Bundle, ...]:
    """Shrink each optimum bundle until it costs at most a 1/n share of the
    common budget, dropping lowest-density goods first.

    Zero-cost goods have infinite density and are never dropped; ties go to
    the lowest good id.
    """
    budgets = set(instance.budgets)
    if len(budgets) != 1:
        raise StructuralError("trimming requires equal budgets")
    share = instance.budgets[0] / instance.num_agents
    trimmed: list[Bundle] = []
    for i in range(instance.num_agents):
        kept = set(opt_on_pool.bundles[i])
        while bundle_cost(instance, kept) > share:
            droppable = [g for g in kept if instance.costs[g] > 0]
            g = min(
                droppable,
                key=lambda h: (instance.values[i][h] / instance.costs[h], h),
            )
            kept.remove(g)
        trimmed.append(frozenset(kept))
    return tuple(trimmed)


def _find_envy_three_cycle(
    instance: Instance, allocation: Allocation
) -> tuple[int, int, int] | None:
    n = instance.num_agents
    for i, j, k in itertools.permutations(range(n), 3):
        if (
            envies(instance, allocation, i, allocation.bundles[j])
            and envies(instance, allocation, j, allocation.bundles[k])
            and envies(instance, allocation, k, allocation.bundles[i])
        ):
            return i, j, k
    return None


def _find_mutual_envy(
    instance: Instance, allocation: Allocation
) -> tuple[int, int] | None:
    n = instance.num_agents
    for i in range(n):
        for j in range(i + 1, n):
            if envies(instance, allocation, i, allocation.bundles[j]) and envies(
                instance, allocation, j, allocation.bundles[i]
            ):
                return i, j
    return None


def equal_budget_procedure(
    instance: Instance,
    opt_on_pool: Allocation,
    setaside: SetAside,
    search: SearchBudget = SearchBudget(),
) -> Allocation:
    """Equal-budget branch: trim, allocate the affordable core completely and
    EFx-ly, then rotate or swap bundles along envy cycles.

    Trimming caps each optimum bundle at a 1/n cost share, so the union Z is
    affordable for everyone and the complete-EFx search applies. Envy-cycle
    resolution (a 3-cycle rotation or a mutual-pair swap) strictly raises
    every participant's value, hence the loop terminates; the cap is a
    tripwire, not a tuning knob. EFx survives the reshuffles because bundles
    are only relabeled, never altered.
    """
    trimmed = trim_to_budget_share(instance, opt_on_pool)
    z: Bundle = frozenset().union(*trimmed)
    allocation = complete_efx_allocation(instance, range(instance.num_agents), z, search)
    allocation = Allocation(allocation.bundles, opt_on_pool.scope)

    for _ in range(ENVY_SWAP_CAP):
        cycle = _find_envy_three_cycle(instance, allocation)
        if cycle is not None:
            i, j, k = cycle
            bundles = list(allocation.bundles)
            bundles[i], bundles[j], bundles[k] = bundles[j], bundles[k], bundles[i]
            allocation = Allocation(tuple(bundles), allocation.scope)
            continue
        pair = _find_mutual_envy(instance, allocation)
        if pair is not None:
            i, j = pair
            bundles = list(allocation.bundles)
            bundles[i], bundles[j] = bundles[j], bundles[i]
            allocation = Allocation(tuple(bundles), allocation.scope)
            continue
        break
    else:
        raise InvariantViolationError(
            f"envy-cycle resolution did not converge within {ENVY_SWAP_CAP} steps"
        )
    return allocation


def round_robin_self_split(
    instance: Instance, agent: int, pool: Iterable[int]
) -> SplitPair:
    """Split a pool into two parts by alternating picks in the agent's own
    value order (ties to the lowest good id), first part picking first.

    The first part is worth at least the second, and the second trails by at
    most one good's value.
    """
    instance.check_agent(agent)
    pool = instance.check_bundle(pool)
    ordered = sorted(pool, key=lambda g: (-instance.values[agent][g], g))
    first = frozenset(ordered[0::2])
    second = frozenset(ordered[1::2])
    return SplitPair(first, second)


def else_procedure(
    instance: Instance,
    alpha: AlphaParams,
    setaside: SetAside,
    search: SearchBudget = SearchBudget(),
) -> tuple[Allocation, ElseTrace]:
    """Unequal-budget branch, for agents indexed by ascending budget.

    Agent 1 takes her best affordable bundle from the pool; agents 2 and 3
    run the pair procedure on the welfare optimum of the rest. If both
    higher-budget agents are below the alpha monopoly threshold at the
    lowest budget, that allocation already works. Otherwise the agent still
    below the threshold is indexed 3; if agent 2 prefers her own bundle to
    agent 1's, the allocation also works. In the remaining case agents 1 and
    2 share agent 1's bundle via the pair procedure, agent 3 gives up the
    half of her bundle agent 2 likes most, and agent 1 may grab her best
    affordable piece of what agent 3 kept.
    """
    pool = instance.all_goods() - {g for g in setaside.goods if g is not None}
    b_low = instance.budgets[0]
    if not (b_low <= instance.budgets[1] <= instance.budgets[2]):
        raise StructuralError("agents must be indexed by ascending budget")

    x1 = knapsack_vmax(instance, 0, pool, b_low).witness
    rest = pool - x1
    opt_rest = max_nsw_allocation(instance, (1, 2), rest, search)
    pair_result = efx_2a(instance, (1, 2), opt_rest)
    x2 = pair_result.allocation.bundles[1]
    x3 = pair_result.allocation.bundles[2]

    m2 = knapsack_vmax(instance, 1, pool, b_low).value
    m3 = knapsack_vmax(instance, 2, pool, b_low).value
    a = alpha.alpha

    def assemble(by_agent: dict[int, Bundle]) -> Allocation:
        bundles = [frozenset()] * instance.num_agents
        for agent, bundle in by_agent.items():
            bundles[agent] = bundle
        return Allocation(tuple(bundles), pool)

    if m2 < a and m3 < a:
        return assemble({0: x1, 1: x2, 2: x3}), ElseTrace(1, False)

    # Relabel the higher-budget agents so the one below the threshold is "3".
    swapped = m3 >= a
    hi, lo = (2, 1) if swapped else (1, 2)
    x_hi = x3 if swapped else x2
    x_lo = x2 if swapped else x3

    if bundle_value(instance, hi, x_hi) >= bundle_value(instance, hi, x1):
        return assemble({0: x1, 1: x2, 2: x3}), ElseTrace(2, swapped)

    empty_and_x1 = assemble({0: frozenset(), hi: x1})
    share_result = efx_2a(instance, (0, hi), empty_and_x1)
    x1_share = share_result.allocation.bundles[0]
    x_hi_share = share_result.allocation.bundles[hi]

    split = round_robin_self_split(instance, lo, x_lo)
    hi_first = bundle_value(instance, hi, split.first)
    hi_second = bundle_value(instance, hi, split.second)
    dropped = split.first if hi_first >= hi_second else split.second
    x_lo_kept = x_lo - dropped

    grab = knapsack_vmax(instance, 0, x_lo_kept, instance.budgets[0]).witness
    if bundle_value(instance, 0, x1_share) < bundle_value(instance, 0, grab):
        x1_final = grab
        x_lo_kept = x_lo_kept - grab
    else:
        x1_final = x1_share

    return (
        assemble({0: x1_final, hi: x_hi_share, lo: x_lo_kept}),
        ElseTrace(3, swapped),
    )


def _permute_instance(instance: Instance, order: Sequence[int]) -> Instance:
    return Instance(
        instance.costs,
        tuple(instance.budgets[i] for i in order),
        tuple(instance.values[i] for i in order),
    )


def _permute_allocation(allocation: Allocation, order: Sequence[int]) -> Allocation:
    return Allocation(tuple(allocation.bundles[i] for i in order), allocation.scope)


def efx_3a(
    instance: Instance,
    alpha: AlphaParams = AlphaParams(),
    search: SearchBudget = SearchBudget(),
    enforce_guarantee: bool = True,
) -> SolveResult:
    """Full three-agent pipeline; see the module docstring for the shape.

    ``enforce_guarantee`` rejects alpha above 1/35, the largest value for
    which every branch of the analysis is valid; disable it only to
    experiment with the trade-off.
    """
    if instance.num_agents != 3:
        raise StructuralError("this procedure handles exactly 3 agents")
    if enforce_guarantee and alpha.alpha > Fraction(1, 35):
        raise StructuralError(
            "alpha above 1/35 voids the guarantees; pass enforce_guarantee=False "
            "to experiment"
        )

    opt = max_nsw_allocation(instance, range(3), instance.all_goods(), search)
    opt_product = _product(instance, opt)

    if instance.num_goods <= 3:
        return SolveResult(
            allocation=opt,
            branch="small_instance",
            opt=opt,
            opt_product=opt_product,
            final_product=opt_product,
            alpha=alpha.alpha,
            role_order=(0, 1, 2),
            setaside_goods=(None, None, None),
            setaside_values=(Fraction(0),) * 3,
            setaside_taken=(False, False, False),
            monopoly_low=None,
            notes=("optimum returned directly: at most 3 goods",),
        )

    normalized = normalize(instance, opt)
    roles = tuple(sorted(range(3), key=lambda i: (instance.budgets[i], i)))
    work = _permute_instance(normalized, roles)
    opt_work = _permute_allocation(opt, roles)

    pool, setaside = preprocess(work, opt_work)
    b_low = work.budgets[0]
    m2 = knapsack_vmax(work, 1, pool, b_low).value
    m3 = knapsack_vmax(work, 2, pool, b_low).value

    notes: list[str] = []
    if m2 >= alpha.alpha and m3 >= alpha.alpha:
        branch = "equal_budget"
        if b_low > 0:
            reduced = Instance(
                tuple(c / b_low for c in work.costs),
                (Fraction(1),) * 3,
                work.values,
            )
        else:
            reduced = Instance(work.costs, (Fraction(0),) * 3, work.values)
        opt_on_pool = max_nsw_allocation(reduced, range(3), pool, search)
        result = equal_budget_procedure(reduced, opt_on_pool, setaside, search)
    else:
        allocation, trace = else_procedure(work, alpha, setaside, search)
        result = allocation
        branch = f"else_return{trace.return_point}"
        if trace.swapped_roles:
            notes.append("higher-budget agents relabeled: original role 2 was "
                         "below the monopoly threshold")
        if trace.return_point == 3:
            notes.append(
                "efficiency floor for this branch uses the (1 - 11*alpha) "
                "constant backed by the bound derivation"
            )

    taken: list[bool] = []
    final_bundles = list(result.bundles)
    for i in range(3):
        s = setaside.goods[i]
        if s is not None and setaside.values[i] > bundle_value(
            work, i, final_bundles[i]
        ):
            final_bundles[i] = frozenset({s})
            taken.append(True)
        else:
            taken.append(False)

    back = [0, 0, 0]
    for pos, agent in enumerate(roles):
        back[agent] = pos
    final = Allocation(
        tuple(final_bundles[back[i]] for i in range(3)), instance.all_goods()
    )
    final_product = _product(instance, final)

    return SolveResult(
        allocation=final,
        branch=branch,
        opt=opt,
        opt_product=opt_product,
        final_product=final_product,
        alpha=alpha.alpha,
        role_order=roles,
        setaside_goods=tuple(setaside.goods[back[i]] for i in range(3)),
        setaside_values=tuple(setaside.values[back[i]] for i in range(3)),
        setaside_taken=tuple(taken[back[i]] for i in range(3)),
        monopoly_low=(m2, m3),
        notes=tuple(notes),
    )


def _product(instance: Instance, allocation: Allocation) -> Fraction:
    product = Fraction(1)
    for i in range(instance.num_agents):
        product *= bundle_value(instance, i, allocation.bundles[i])
    return product
