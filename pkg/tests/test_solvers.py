"""Solver behaviors: greedy, hill climbing, tabu search, EA, restarts."""

import numpy as np
import pytest

from detplace.evaluation import (PROPORTIONAL, WORST_CASE, CachedObjective,
                                 prepare_context)
from detplace.instance import Placement
from detplace.solvers import (ALGORITHMS, Budget, SolverConfig, evolutionary,
                              greedy, hill_climb, run_with_restarts, solve,
                              tabu_search)
from helpers import brute_force_best, make_instance, random_instance


def value_of(ctx, model, placement):
    return CachedObjective(ctx.inst, ctx.cache, model).value_of_cells(
        placement.cells)


@pytest.fixture(scope="module")
def small_ctx():
    rng = np.random.default_rng(51)
    inst = random_instance(rng, rows=6, cols=6, n_ent=2, n_obj=2, delta=2)
    return prepare_context(inst)


class TestSolverConfig:
    def test_requires_budget(self):
        with pytest.raises(ValueError):
            SolverConfig(model="prop", seed=0)

    def test_rejects_bad_params(self):
        with pytest.raises(ValueError):
            SolverConfig(budget_evals=10, pop_size=1)
        with pytest.raises(ValueError):
            SolverConfig(budget_evals=10, p_crossover=1.5)
        with pytest.raises(ValueError):
            SolverConfig(budget_s=-1.0)


class TestGreedy:
    def test_delta_one_is_exhaustive(self, small_ctx):
        ctx = prepare_context(small_ctx.inst.with_delta(1))
        p = greedy(ctx, PROPORTIONAL)
        best, _ = brute_force_best(ctx, PROPORTIONAL)
        assert value_of(ctx, PROPORTIONAL, p) == pytest.approx(best, rel=1e-12)

    def test_never_beats_exhaustive(self, small_ctx):
        for model in (PROPORTIONAL, WORST_CASE):
            p = greedy(small_ctx, model)
            best, _ = brute_force_best(small_ctx, model)
            assert value_of(small_ctx, model, p) >= best - 1e-12

    def test_deterministic(self, small_ctx):
        p1 = greedy(small_ctx, WORST_CASE)
        p2 = greedy(small_ctx, WORST_CASE)
        assert p1 == p2

    def test_too_few_candidates(self, small_ctx):
        big = prepare_context(small_ctx.inst.with_delta(10**6))
        with pytest.raises(ValueError):
            greedy(big, PROPORTIONAL)


class TestHillClimb:
    def test_fixed_point_at_optimum(self, small_ctx):
        best, cells = brute_force_best(small_ctx, PROPORTIONAL)
        out = hill_climb(small_ctx, Placement(cells), PROPORTIONAL)
        assert out == Placement(cells)

    def test_never_worse_than_start(self, small_ctx):
        rng = np.random.default_rng(52)
        for _ in range(10):
            idx = rng.choice(len(small_ctx.candidates), size=2, replace=False)
            start = Placement(tuple(small_ctx.candidates[int(i)] for i in idx))
            out = hill_climb(small_ctx, start, WORST_CASE)
            assert (value_of(small_ctx, WORST_CASE, out)
                    <= value_of(small_ctx, WORST_CASE, start) + 1e-12)

    def test_local_optimum(self, small_ctx):
        start = Placement(small_ctx.candidates[:2])
        out = hill_climb(small_ctx, start, PROPORTIONAL)
        v = value_of(small_ctx, PROPORTIONAL, out)
        # no single replacement improves
        for i, cell in enumerate(out.cells):
            for cand in small_ctx.candidates:
                if cand in out.cells:
                    continue
                trial = list(out.cells)
                trial[i] = cand
                assert value_of(small_ctx, PROPORTIONAL,
                                Placement(tuple(trial))) >= v - 1e-12


class TestTabuSearch:
    def test_returns_incumbent_not_worse_than_start(self, small_ctx):
        config = SolverConfig(model="worst", seed=3, budget_evals=5000)
        start = Placement(small_ctx.candidates[:2])
        out = tabu_search(small_ctx, start, config)
        assert (value_of(small_ctx, WORST_CASE, out)
                <= value_of(small_ctx, WORST_CASE, start) + 1e-12)

    def test_tiny_neighborhood(self):
        rng = np.random.default_rng(53)
        inst = random_instance(rng, rows=2, cols=2, n_ent=1, n_obj=1,
                               block_prob=0.0, delta=1)
        ctx = prepare_context(inst)
        config = SolverConfig(model="prop", seed=0, budget_evals=200,
                              max_iters=5)
        start = Placement((ctx.candidates[0],))
        out = tabu_search(ctx, start, config)
        assert len(out) == 1

    def test_deterministic(self, small_ctx):
        config = SolverConfig(model="prop", seed=9, budget_evals=3000)
        start = Placement(small_ctx.candidates[:2])
        a = tabu_search(small_ctx, start, config)
        b = tabu_search(small_ctx, start, config)
        assert a == b


class TestEvolutionary:
    def test_offspring_within_parent_union_contract(self, small_ctx):
        # with p_m = 0 and p_X = 1, every offspring is a sample from the two
        # parents' union; the EA must still return a valid placement
        config = SolverConfig(model="prop", seed=4, budget_evals=500,
                              pop_size=10, p_crossover=1.0, p_mutation=0.0)
        out = evolutionary(small_ctx, config)
        assert len(out) == small_ctx.inst.delta
        assert len(set(out.cells)) == small_ctx.inst.delta
        assert all(c in small_ctx.candidates for c in out.cells)

    def test_no_variation_no_progress(self, small_ctx):
        # with p_X = 0 and p_m = 0, offspring always clone existing members,
        # so the best value never improves past the initial population
        base = SolverConfig(model="prop", seed=5, budget_evals=12,
                            pop_size=12, p_crossover=0.0, p_mutation=0.0)
        longer = SolverConfig(model="prop", seed=5, budget_evals=400,
                              pop_size=12, p_crossover=0.0, p_mutation=0.0)
        v1 = value_of(small_ctx, PROPORTIONAL, evolutionary(small_ctx, base))
        v2 = value_of(small_ctx, PROPORTIONAL, evolutionary(small_ctx, longer))
        assert v2 == pytest.approx(v1, rel=1e-15)

    def test_deterministic(self, small_ctx):
        config = SolverConfig(model="worst", seed=6, budget_evals=2000)
        a = evolutionary(small_ctx, config)
        b = evolutionary(small_ctx, config)
        assert a == b

    def test_candidates_equal_delta_terminates(self):
        # when every candidate is already in each individual, mutation has
        # nowhere to move a gene and must not loop searching for one
        inst = make_instance("E.O", entrances=[(0, 0)],
                             objectives=[((0, 2), 2.0)], delta=3)
        ctx = prepare_context(inst)
        assert len(ctx.candidates) == inst.delta
        config = SolverConfig(model="prop", seed=0, budget_evals=300,
                              pop_size=2)
        out = evolutionary(ctx, config)
        assert set(out.cells) == set(ctx.candidates)


class TestRunWithRestarts:
    def test_determinism(self, small_ctx):
        config = SolverConfig(model="prop", seed=7, budget_evals=4000)
        a = run_with_restarts("hc", small_ctx, config)
        b = run_with_restarts("hc", small_ctx, config)
        assert a.placement == b.placement and a.value == b.value

    def test_anytime_value_non_increasing(self, small_ctx):
        vals = []
        for budget in (300, 1500, 6000):
            config = SolverConfig(model="worst", seed=8, budget_evals=budget)
            vals.append(run_with_restarts("ts", small_ctx, config).value)
        assert vals[0] >= vals[1] >= vals[2]

    def test_rejects_unknown_local(self, small_ctx):
        config = SolverConfig(model="prop", seed=0, budget_evals=100)
        with pytest.raises(ValueError):
            run_with_restarts("ea", small_ctx, config)


class TestSolveDispatcher:
    def test_all_algorithms_return_valid_placements(self, small_ctx):
        for alg in ALGORITHMS:
            config = SolverConfig(model="worst", seed=1, budget_evals=2000)
            rec = solve(small_ctx, alg, config)
            assert len(rec.placement) == small_ctx.inst.delta
            assert all(c in small_ctx.candidates for c in rec.placement.cells)
            assert rec.value == pytest.approx(
                value_of(small_ctx, WORST_CASE, rec.placement), rel=1e-12)

    def test_metaheuristic_minimum_not_worse_than_greedy(self, small_ctx):
        config = lambda: SolverConfig(model="prop", seed=2, budget_evals=6000)
        records = {alg: solve(small_ctx, alg, config()) for alg in ALGORITHMS}
        best = min(r.value for r in records.values())
        assert best <= records["greedy"].value + 1e-12

    def test_unknown_algorithm(self, small_ctx):
        config = SolverConfig(model="prop", seed=0, budget_evals=10)
        with pytest.raises(ValueError):
            solve(small_ctx, "annealing", config)


class TestBudget:
    def test_eval_budget_counts(self):
        b = Budget(max_evals=10)
        b.charge(4)
        assert not b.exhausted()
        b.charge(6)
        assert b.exhausted()

    def test_wall_budget(self):
        b = Budget(seconds=1e9)
        assert not b.exhausted()
