"""Property tests for the invariants the solvers rely on."""

import random
from fractions import Fraction

from hypothesis import given, settings, strategies as st

from budgeted_efx.model import (
    bundle_value,
    efx_envies,
    is_ef1,
    is_efx,
    knapsack_vmax,
    nsw_product,
)
from budgeted_efx.oracles import (
    knapsack_by_enumeration,
    leximin_pp_split,
    max_nsw_allocation,
)
from budgeted_efx.two_agents import build_feasibility_graph, efx_2a, select_perfect_matching

from helpers import build, literal_efx_envies, random_feasible_allocation

F = Fraction

rationals = st.fractions(min_value=0, max_value=12, max_denominator=4)


@st.composite
def instances(draw, n_agents=st.integers(1, 3), n_goods=st.integers(0, 6)):
    n = draw(n_agents)
    m = draw(n_goods)
    costs = tuple(draw(rationals) for _ in range(m))
    budgets = tuple(draw(rationals) for _ in range(n))
    values = tuple(tuple(draw(rationals) for _ in range(m)) for _ in range(n))
    return build(costs, budgets, values)


@st.composite
def instance_with_pool(draw):
    inst = draw(instances())
    pool = frozenset(
        g for g in range(inst.num_goods) if draw(st.booleans())
    )
    return inst, pool


@settings(deadline=None)
@given(instance_with_pool(), st.integers(0, 2))
def test_dropping_a_good_costs_at_most_that_goods_best_value(data, agent_pick):
    inst, pool = data
    agent = agent_pick % inst.num_agents
    budget = inst.budgets[agent]
    whole = knapsack_vmax(inst, agent, pool, budget).value
    for g in pool:
        rest = knapsack_vmax(inst, agent, pool - {g}, budget).value
        alone = knapsack_vmax(inst, agent, {g}, budget).value
        assert rest >= whole - alone


@settings(deadline=None)
@given(instance_with_pool(), st.integers(0, 2), rationals)
def test_achievable_value_monotone_in_pool_and_budget(data, agent_pick, extra):
    inst, pool = data
    agent = agent_pick % inst.num_agents
    budget = inst.budgets[agent]
    base = knapsack_vmax(inst, agent, pool, budget).value
    assert knapsack_vmax(inst, agent, inst.all_goods(), budget).value >= base
    assert knapsack_vmax(inst, agent, pool, budget + extra).value >= base


@settings(deadline=None)
@given(instance_with_pool(), st.integers(0, 2))
def test_knapsack_agrees_with_subset_enumeration(data, agent_pick):
    inst, pool = data
    agent = agent_pick % inst.num_agents
    budget = inst.budgets[agent]
    fast = knapsack_vmax(inst, agent, pool, budget)
    value, witness = knapsack_by_enumeration(inst, agent, pool, budget)
    assert fast.value == value and fast.witness == witness


@settings(deadline=None)
@given(instances(n_agents=st.integers(2, 3)), st.integers(0, 10**6))
def test_efx_implies_ef1(inst, seed):
    allocation = random_feasible_allocation(random.Random(seed), inst)
    if is_efx(inst, allocation):
        assert is_ef1(inst, allocation)


@settings(deadline=None)
@given(instance_with_pool(), rationals)
def test_efx_envy_two_step_form_matches_the_literal_form(data, own):
    inst, target = data
    assert efx_envies(inst, own, 0, target) == literal_efx_envies(
        inst, own, 0, target
    )


@settings(deadline=None)
@given(instances(n_agents=st.integers(1, 2), n_goods=st.integers(0, 5)))
def test_split_parts_are_ordered_and_efx_compatible(inst):
    budget = inst.budgets[0]

    def u(part):
        return knapsack_vmax(inst, 0, part, budget).value

    split = leximin_pp_split(inst.all_goods(), u)
    assert split.first | split.second == inst.all_goods()
    assert not split.first & split.second
    assert u(split.first) >= u(split.second)
    for g in split.first:
        assert u(split.second) >= u(split.first - {g})


@settings(deadline=None)
@given(instances(n_agents=st.integers(2, 3), n_goods=st.integers(0, 5)), st.integers(0, 10**6))
def test_welfare_search_dominates_random_feasible_allocations(inst, seed):
    best = max_nsw_allocation(inst, range(inst.num_agents), inst.all_goods())
    sample = random_feasible_allocation(random.Random(seed), inst)
    assert nsw_product(inst, best) >= nsw_product(inst, sample)


@settings(deadline=None)
@given(instances(n_agents=st.just(2), n_goods=st.integers(2, 6)), st.integers(0, 10**6))
def test_two_edges_guarantee_a_perfect_matching(inst, seed):
    rng = random.Random(seed)
    goods = list(range(inst.num_goods))
    rng.shuffle(goods)
    cut1 = rng.randint(0, len(goods))
    cut2 = rng.randint(cut1, len(goods))
    bundles = (
        frozenset(goods[:cut1]),
        frozenset(goods[cut1:cut2]),
        frozenset(goods[cut2:]),
    )
    graph = build_feasibility_graph(inst, (0, 1), bundles)
    if any(len(graph.agent_edges(pos)) >= 2 for pos in range(2)):
        assert select_perfect_matching(graph, 1, 0) is not None


@settings(deadline=None, max_examples=60)
@given(instances(n_agents=st.just(2), n_goods=st.integers(0, 6)))
def test_pair_procedure_guarantees_hold_from_the_optimal_seed(inst):
    opt = max_nsw_allocation(inst, (0, 1), inst.all_goods())
    result = efx_2a(inst, (0, 1), opt)
    assert is_efx(inst, result.allocation)
    assert 2 * nsw_product(inst, result.allocation) >= nsw_product(inst, opt)
    out = [bundle_value(inst, i, result.allocation.bundles[i]) for i in range(2)]
    seed_vals = [bundle_value(inst, i, opt.bundles[i]) for i in range(2)]
    if result.envier is None:
        assert out[0] >= seed_vals[0] and out[1] >= seed_vals[1]
    else:
        envied = 1 - result.envier
        assert out[result.envier] >= seed_vals[result.envier]
        assert 2 * out[envied] >= seed_vals[envied]
