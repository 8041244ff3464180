import random
from fractions import Fraction

import pytest

from budgeted_efx.model import (
    Allocation,
    DegenerateOptimumError,
    StructuralError,
    bundle_cost,
    bundle_value,
    efx_envies,
    envies,
    is_ef1,
    is_efx,
    knapsack_vmax,
    make_allocation,
    monopoly_value,
    normalize,
    nsw_product,
)
from budgeted_efx.oracles import knapsack_by_enumeration

from helpers import build, literal_efx_envies, random_instance

F = Fraction


class TestBundleSums:
    def test_t1_pair_costs_one(self, t1):
        assert bundle_cost(t1, {0, 1}) == 1

    def test_empty_bundle_costs_nothing(self, t1):
        assert bundle_cost(t1, frozenset()) == 0

    def test_singleton_cost_is_the_goods_cost(self, t1):
        assert bundle_cost(t1, {2}) == 1
        assert bundle_cost(t1, {0}) == F(1, 2)

    def test_unknown_good_rejected(self, t1):
        with pytest.raises(StructuralError):
            bundle_cost(t1, {7})

    def test_t1_values(self, t1):
        assert bundle_value(t1, 0, {0, 1}) == 1
        assert bundle_value(t1, 1, {2}) == 1
        assert bundle_value(t1, 1, frozenset()) == 0

    def test_unknown_agent_rejected(self, t1):
        with pytest.raises(StructuralError):
            bundle_value(t1, 5, {0})


class TestKnapsack:
    def test_t1_agent2_affords_both_halves(self, t1):
        answer = knapsack_vmax(t1, 1, {0, 1}, 1)
        assert answer.value == F(11, 5)
        assert answer.witness == frozenset({0, 1})

    def test_empty_pool(self, t1):
        answer = knapsack_vmax(t1, 0, frozenset(), 1)
        assert answer.value == 0 and answer.witness == frozenset()

    def test_everything_unaffordable(self):
        inst = build([5, 6], [1], [[9, 9]])
        answer = knapsack_vmax(inst, 0, {0, 1}, 1)
        assert answer.value == 0 and answer.witness == frozenset()

    def test_two_cheaper_goods_beat_the_big_one(self):
        # brute force over all 8 subsets: {1,2} costs 5 and is worth 7
        inst = build([4, 3, 2], [5], [[5, 4, 3]])
        answer = knapsack_vmax(inst, 0, {0, 1, 2}, 5)
        assert answer.value == 7
        assert answer.witness == frozenset({1, 2})

    def test_value_tie_takes_lexicographically_smallest_witness(self):
        inst = build([1, 1], [1], [[5, 5]])
        assert knapsack_vmax(inst, 0, {0, 1}, 1).witness == frozenset({0})

    def test_zero_value_goods_join_the_witness_below_the_top_positive(self):
        # optima are {1} and {0,1}; sorted sequence (0,1) precedes (1,)
        inst = build([0, 0], [0], [[0, 5]])
        answer = knapsack_vmax(inst, 0, {0, 1}, 0)
        assert answer.value == 5
        assert answer.witness == frozenset({0, 1})

    def test_negative_budget_rejected(self, t1):
        with pytest.raises(StructuralError):
            knapsack_vmax(t1, 0, {0}, -1)

    def test_matches_plain_enumeration_on_random_pools(self):
        rng = random.Random(42)
        for _ in range(60):
            inst = random_instance(rng, 2, rng.randint(0, 9))
            pool = frozenset(
                g for g in range(inst.num_goods) if rng.random() < 0.7
            )
            budget = F(rng.randint(0, 25))
            fast = knapsack_vmax(inst, 0, pool, budget)
            value, witness = knapsack_by_enumeration(inst, 0, pool, budget)
            assert fast.value == value
            assert fast.witness == witness


class TestMonopolyValue:
    def test_t1_agent1_reaches_one(self, t1):
        assert monopoly_value(t1, 0, 1) == 1

    def test_zero_budget_sees_only_free_goods(self):
        inst = build([0, 3], [0], [[4, 9]])
        assert monopoly_value(inst, 0, 0) == 4

    def test_equals_exhaustive_maximum(self):
        rng = random.Random(7)
        for _ in range(25):
            inst = random_instance(rng, 1, rng.randint(1, 8))
            budget = F(rng.randint(0, 20))
            value, _ = knapsack_by_enumeration(
                inst, 0, inst.all_goods(), budget
            )
            assert monopoly_value(inst, 0, budget) == value


class TestEnvy:
    def test_t1_optimum_leaves_agent2_envious(self, t1):
        opt = make_allocation(t1, [{0, 1}, {2}])
        assert envies(t1, opt, 1, opt.bundles[0])

    def test_no_envy_toward_own_bundle(self, t1):
        opt = make_allocation(t1, [{0, 1}, {2}])
        for i in range(2):
            assert not envies(t1, opt, i, opt.bundles[i])

    def test_no_envy_toward_empty_bundle(self, t1):
        opt = make_allocation(t1, [{0, 1}, {2}])
        assert not envies(t1, opt, 0, frozenset())

    def test_t1_efx_envy_drops_one_half_and_takes_the_other(self, t1):
        assert efx_envies(t1, 1, 1, {0, 1})

    def test_singleton_target_cannot_be_efx_envied(self, t1):
        assert not efx_envies(t1, 0, 0, {2})

    def test_two_step_form_agrees_with_literal_quantifiers(self):
        rng = random.Random(11)
        for _ in range(80):
            inst = random_instance(rng, 2, rng.randint(0, 7))
            target = frozenset(
                g for g in range(inst.num_goods) if rng.random() < 0.6
            )
            own = F(rng.randint(0, 12))
            assert efx_envies(inst, own, 0, target) == literal_efx_envies(
                inst, own, 0, target
            )


class TestFairnessPredicates:
    def test_t1_singletons_are_efx(self, t1):
        alloc = make_allocation(t1, [{0}, {1}])
        assert is_efx(t1, alloc)
        assert is_ef1(t1, alloc)

    def test_all_empty_allocation_is_fair(self, t1):
        alloc = make_allocation(t1, [frozenset(), frozenset()])
        assert is_efx(t1, alloc) and is_ef1(t1, alloc)

    def test_t1_optimum_is_not_ef1(self, t1):
        opt = make_allocation(t1, [{0, 1}, {2}])
        assert not is_ef1(t1, opt)
        assert not is_efx(t1, opt)


class TestWelfareProduct:
    def test_t1_optimum_product_is_one(self, t1):
        assert nsw_product(t1, make_allocation(t1, [{0, 1}, {2}])) == 1

    def test_zero_factor_zeroes_the_product(self, t1):
        assert nsw_product(t1, make_allocation(t1, [frozenset(), {2}])) == 0

    def test_t1_singleton_split_product(self, t1):
        assert nsw_product(t1, make_allocation(t1, [{0}, {1}])) == F(11, 20)


class TestNormalize:
    def test_already_normalized_instance_is_unchanged(self, t1):
        inst = build([1, 1], [2, 2], [[1, 0], [0, 1]])
        opt = make_allocation(inst, [{0}, {1}])
        assert normalize(inst, opt) == inst

    def test_values_halve_when_the_optimum_is_worth_two(self):
        inst = build([1, 1], [2, 2], [[2, 0], [0, 3]])
        opt = make_allocation(inst, [{0}, {1}])
        out = normalize(inst, opt)
        assert out.values[0] == (F(1), F(0))
        assert out.values[1] == (F(0), F(1))
        assert out.costs == inst.costs and out.budgets == inst.budgets

    def test_optimum_bundles_worth_one_after_rescaling(self):
        rng = random.Random(3)
        for _ in range(20):
            inst = random_instance(rng, 2, 5)
            bundles = [set(), set()]
            for g in range(5):
                bundles[rng.randrange(2)].add(g)
            opt = Allocation(
                (frozenset(bundles[0]), frozenset(bundles[1])), inst.all_goods()
            )
            if any(bundle_value(inst, i, opt.bundles[i]) == 0 for i in range(2)):
                with pytest.raises(DegenerateOptimumError):
                    normalize(inst, opt)
                continue
            out = normalize(inst, opt)
            for i in range(2):
                assert bundle_value(out, i, opt.bundles[i]) == 1

    def test_zero_value_optimum_rejected(self):
        inst = build([1], [1, 1], [[0], [1]])
        opt = make_allocation(inst, [frozenset(), {0}])
        with pytest.raises(DegenerateOptimumError):
            normalize(inst, opt)


class TestStructure:
    def test_floats_rejected_everywhere(self):
        with pytest.raises(StructuralError):
            build([0.5], [1], [[1]])

    def test_negative_quantities_rejected(self):
        with pytest.raises(StructuralError):
            build([-1], [1], [[1]])
        with pytest.raises(StructuralError):
            build([1], [-1], [[1]])
        with pytest.raises(StructuralError):
            build([1], [1], [[-1]])

    def test_value_row_length_must_match_goods(self):
        with pytest.raises(StructuralError):
            build([1, 1], [1], [[1]])

    def test_overlapping_bundles_rejected(self, t1):
        with pytest.raises(StructuralError):
            make_allocation(t1, [{0, 1}, {1}])

    def test_allocation_outside_scope_rejected(self, t1):
        with pytest.raises(StructuralError):
            make_allocation(t1, [{0}, {2}], scope={0, 1})

    def test_unallocated_pool_is_derived(self, t1):
        alloc = make_allocation(t1, [{0}, {2}])
        assert alloc.unallocated() == frozenset({1})
