"""Objective function, attacker models and the preprocessing caches."""

import math

import numpy as np
import pytest

from detplace.evaluation import (PROPORTIONAL, UNIFORM, WORST_CASE,
                                 CachedObjective, build_cache, build_dominance,
                                 detection_prob, evaluate, gamma, non_detection,
                                 normalize_model, path_casualties,
                                 prepare_context)
from detplace.geometry import Point, Segment, chord_length
from detplace.instance import Objective, Placement, candidate_cells
from detplace.pathfinding import all_paths
from helpers import (brute_force_best, full_context, make_instance,
                     random_instance)


def lp_vertex_max(w):
    """Oracle for the worst-case attacker: the LP max of sum(g*W) subject to
    g >= 0, sum(g) = 1 is attained at a vertex, i.e. a single path."""
    return max(w.flat)


class TestDetectionProb:
    def test_zero_length(self):
        assert detection_prob(0.0, 0.06) == 0.0

    def test_limit_one(self):
        assert detection_prob(1e9, 0.06) == pytest.approx(1.0)

    def test_known_value(self):
        assert detection_prob(20.0, 0.06) == pytest.approx(1 - math.exp(-1.2))

    def test_rejects_bad_args(self):
        with pytest.raises(ValueError):
            detection_prob(-1.0, 0.06)
        with pytest.raises(ValueError):
            detection_prob(1.0, 0.0)


class TestPathCasualties:
    def test_undetected(self):
        assert path_casualties(1.0, 7.0, 0.6) == pytest.approx(7.0)

    def test_perfect_detection(self):
        assert path_casualties(0.0, 7.0, 0.6) == pytest.approx(0.4 * 7.0)

    def test_useless_neutralization(self):
        assert path_casualties(0.5, 7.0, 0.0) == pytest.approx(7.0)

    def test_rejects_bad_probability(self):
        with pytest.raises(ValueError):
            path_casualties(1.5, 7.0, 0.6)


class TestGamma:
    def instance(self, values):
        art = "." * (len(values) + 3) + "\n" + "." * (len(values) + 3)
        objectives = [((1, i + 2), v) for i, v in enumerate(values)]
        return make_instance(art, [(0, 0), (0, 1)], objectives)

    def test_uniform(self):
        inst = self.instance([1.0, 1.0, 1.0])
        g = gamma(UNIFORM, inst)
        assert g.shape == (2, 3)
        assert np.allclose(g, 1.0 / 6.0)

    def test_proportional(self):
        inst = self.instance([1.0, 3.0])
        g = gamma(PROPORTIONAL, inst)
        assert np.allclose(g[:, 0], 1 / 8) and np.allclose(g[:, 1], 3 / 8)

    def test_proportional_zero_total_rejected(self):
        inst = self.instance([0.0, 0.0])
        with pytest.raises(ValueError):
            gamma(PROPORTIONAL, inst)

    def test_worst_case_argmax(self):
        inst = self.instance([1.0, 1.0])
        w = np.array([[3.0, 5.0], [2.0, 1.0]])
        g = gamma(WORST_CASE, inst, w)
        expect = np.zeros((2, 2))
        expect[0, 1] = 1.0
        assert np.array_equal(g, expect)

    def test_worst_case_tie_break_lexicographic(self):
        inst = self.instance([1.0, 1.0])
        w = np.array([[2.0, 5.0], [5.0, 1.0]])
        g = gamma(WORST_CASE, inst, w)
        assert g[0, 1] == 1.0 and g.sum() == 1.0

    def test_sums_to_one(self):
        inst = self.instance([2.0, 3.0, 4.0])
        w = np.arange(6, dtype=float).reshape(2, 3)
        for model in (UNIFORM, PROPORTIONAL, WORST_CASE):
            assert gamma(model, inst, w).sum() == pytest.approx(1.0)

    def test_matches_lp_vertex_oracle(self):
        rng = np.random.default_rng(41)
        inst = self.instance([1.0, 1.0])
        for _ in range(100):
            eps, phi = rng.integers(1, 5, size=2)
            w = rng.uniform(0, 10, (eps, phi))
            g = gamma(WORST_CASE, inst, w)
            assert (g * w).sum() == lp_vertex_max(w)

    def test_aliases(self):
        assert normalize_model("prop") == PROPORTIONAL
        assert normalize_model("worst") == WORST_CASE
        assert normalize_model("nash") == WORST_CASE
        with pytest.raises(ValueError):
            normalize_model("bogus")


class TestNonDetection:
    def setup_method(self):
        rng = np.random.default_rng(42)
        self.inst = random_instance(rng, rows=6, cols=6, n_ent=2, n_obj=2,
                                    delta=3)
        self.paths = all_paths(self.inst)
        self.cands = candidate_cells(self.inst)
        self.cache = build_cache(self.inst, self.paths, self.cands)

    def test_empty_coverage_is_one(self):
        # pick a candidate with zero coverage everywhere, if one exists;
        # otherwise verify the formula with explicit zero total
        assert math.exp(-self.inst.eta * 0.0) == 1.0

    def test_single_detector_algebra(self):
        cell = self.cands[0]
        p = Placement((cell,))
        nd = non_detection(p, (0, 0), self.cache, self.inst.eta)
        l = self.cache.row(cell)[0]
        assert nd == pytest.approx(1 - detection_prob(l, self.inst.eta))

    def test_product_equals_exponent_form(self):
        cells = self.cands[:3]
        p = Placement(tuple(cells))
        for i in range(self.inst.n_entrances):
            for j in range(self.inst.n_objectives):
                pidx = i * self.inst.n_objectives + j
                nd = non_detection(p, (i, j), self.cache, self.inst.eta)
                prod = 1.0
                for c in cells:
                    prod *= 1 - detection_prob(self.cache.row(c)[pidx],
                                               self.inst.eta)
                assert abs(nd - prod) < 1e-12


class TestBuildCache:
    def test_far_detector_zero(self):
        inst = make_instance("." * 9, [(0, 0)], [((0, 8), 1.0)], tau=0.4)
        paths = all_paths(inst)
        cache = build_cache(inst, paths, [(0, 4)])
        # tau=0.4 < half the cell size, and the path runs through the row
        # centers, so the chord is at most the disk diameter
        assert cache.lengths[0, 0] <= 0.8 + 1e-12

    def test_full_diameter_through_center(self):
        inst = make_instance("." * 21, [(0, 0)], [((0, 20), 1.0)],
                             cell_size=5.0, tau=20.0, t_neutralize=0.0)
        paths = all_paths(inst)
        cache = build_cache(inst, paths, [(0, 10)])
        assert cache.lengths[0, 0] == pytest.approx(40.0)

    def test_matches_direct_recomputation(self):
        rng = np.random.default_rng(43)
        inst = random_instance(rng, rows=8, cols=8, n_ent=2, n_obj=2)
        paths = all_paths(inst)
        cands = candidate_cells(inst)
        cache = build_cache(inst, paths, cands)
        for k, cell in enumerate(cands):
            cx, cy = inst.map.center(cell)
            p = 0
            for erow in paths.truncated:
                for tp in erow:
                    direct = sum(
                        chord_length(Segment(a, b), Point(cx, cy), inst.tau)
                        for a, b in zip(tp.waypoints, tp.waypoints[1:]))
                    assert cache.lengths[k, p] == pytest.approx(direct, abs=1e-9)
                    p += 1


class TestDominance:
    def test_single_candidate_zero(self):
        inst = make_instance("...", [(0, 0)], [((0, 2), 1.0)])
        paths = all_paths(inst)
        cache = build_cache(inst, paths, [(0, 1)])
        counts = build_dominance(cache, [(0, 1)], (1, 3))
        assert counts[0, 1] == 0

    def test_zero_coverage_cell_dominated(self):
        inst = make_instance("....." + "\n" + ".....", [(0, 0)],
                             [((0, 4), 1.0)], tau=0.6)
        paths = all_paths(inst)
        cands = [(0, 2), (1, 4)]  # on the path vs far below it
        cache = build_cache(inst, paths, cands)
        assert cache.lengths[0, 0] > 0 and cache.lengths[1, 0] == 0
        counts = build_dominance(cache, cands, (2, 5))
        assert counts[1, 4] >= 1

    def test_pruning_preserves_optimum(self):
        rng = np.random.default_rng(44)
        for _ in range(5):
            inst = random_instance(rng, rows=6, cols=6, delta=2)
            for model in (PROPORTIONAL, WORST_CASE):
                v_pruned, _ = brute_force_best(prepare_context(inst), model)
                v_full, _ = brute_force_best(full_context(inst), model)
                assert v_pruned == pytest.approx(v_full, rel=1e-12)


class TestEvaluate:
    def zero_coverage_instance(self):
        # tiny detection radius keeps every candidate chord at 0 on the far
        # row, so any placement there has zero coverage
        art = "......\n......\n......"
        inst = make_instance(art, [(0, 0), (0, 1)],
                             [((0, 4), 2.0), ((0, 5), 6.0)], tau=0.05,
                             delta=1)
        return inst

    def context(self, inst):
        paths = all_paths(inst)
        cands = candidate_cells(inst)
        cache = build_cache(inst, paths, cands)
        return paths, cache

    def test_zero_coverage_proportional(self):
        inst = self.zero_coverage_instance()
        paths, cache = self.context(inst)
        p = Placement(((2, 0),))
        res = evaluate(p, inst, paths, cache, PROPORTIONAL)
        c = inst.objective_values()
        assert res.total == pytest.approx(float((c ** 2).sum() / c.sum()))
        assert res.critical is None

    def test_zero_coverage_worst_case(self):
        inst = self.zero_coverage_instance()
        paths, cache = self.context(inst)
        p = Placement(((2, 0),))
        res = evaluate(p, inst, paths, cache, WORST_CASE)
        assert res.total == pytest.approx(float(inst.objective_values().max()))
        assert res.critical is not None

    def test_worst_dominates_proportional(self):
        rng = np.random.default_rng(45)
        for _ in range(10):
            inst = random_instance(rng, rows=6, cols=6, delta=2)
            paths, cache = self.context(inst)
            cands = candidate_cells(inst)
            pick = rng.choice(len(cands), size=2, replace=False)
            p = Placement(tuple(cands[int(i)] for i in pick))
            w = evaluate(p, inst, paths, cache, WORST_CASE)
            pr = evaluate(p, inst, paths, cache, PROPORTIONAL)
            assert w.total >= pr.total - 1e-12
            assert w.total == float(w.per_path.max())  # exact

    def test_per_path_bounds(self):
        rng = np.random.default_rng(46)
        inst = random_instance(rng, rows=6, cols=6, delta=2)
        paths, cache = self.context(inst)
        cands = candidate_cells(inst)
        p = Placement(tuple(cands[:2]))
        res = evaluate(p, inst, paths, cache, UNIFORM)
        c = inst.objective_values()
        lo = c * (1 - inst.theta)
        assert (res.per_path >= lo[None, :] - 1e-12).all()
        assert (res.per_path <= c[None, :] + 1e-12).all()

    def test_monotonicity_in_detectors(self):
        rng = np.random.default_rng(47)
        for _ in range(5):
            inst = random_instance(rng, rows=6, cols=6, delta=3)
            paths, cache = self.context(inst)
            cands = candidate_cells(inst)
            picks = rng.choice(len(cands), size=3, replace=False)
            cells = [cands[int(i)] for i in picks]
            for model in (UNIFORM, PROPORTIONAL, WORST_CASE):
                prev = math.inf
                for k in range(1, 4):
                    res = evaluate(Placement(tuple(cells[:k])), inst, paths,
                                   cache, model)
                    assert res.total <= prev + 1e-12
                    prev = res.total

    def test_scale_equivariance(self):
        rng = np.random.default_rng(48)
        inst = random_instance(rng, rows=6, cols=6, delta=2)
        s = 3.5
        scaled = inst.__class__(
            map=inst.map, entrances=inst.entrances,
            objectives=tuple(Objective(o.cell, o.value * s)
                             for o in inst.objectives),
            tau=inst.tau, eta=inst.eta, theta=inst.theta, speed=inst.speed,
            t_neutralize=inst.t_neutralize, delta=inst.delta)
        paths, cache = self.context(inst)
        paths2, cache2 = self.context(scaled)
        cands = candidate_cells(inst)
        p = Placement(tuple(cands[:2]))
        for model in (UNIFORM, PROPORTIONAL, WORST_CASE):
            a = evaluate(p, inst, paths, cache, model)
            b = evaluate(p, scaled, paths2, cache2, model)
            assert b.total == pytest.approx(s * a.total, rel=1e-12)
            if model == WORST_CASE:
                assert a.critical == b.critical

    def test_cached_objective_agrees_with_evaluate(self):
        rng = np.random.default_rng(49)
        inst = random_instance(rng, rows=6, cols=6, delta=2)
        paths, cache = self.context(inst)
        cands = candidate_cells(inst)
        p = Placement(tuple(cands[:2]))
        for model in (UNIFORM, PROPORTIONAL, WORST_CASE):
            obj = CachedObjective(inst, cache, model)
            assert obj.value_of_cells(p.cells) == pytest.approx(
                evaluate(p, inst, paths, cache, model).total, rel=1e-10)
