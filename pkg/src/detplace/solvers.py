"""Placement algorithms: greedy construction, hill climbing, tabu search and
a steady-state evolutionary algorithm, behind one seeded, budgeted interface.

All solvers share immutable preprocessed data (EvalContext) and spend either
a wall-clock budget or an evaluation-count budget; the latter makes runs
bit-reproducible.  Randomness comes from named streams derived from
(seed, algorithm, restart index) so results are independent of scheduling.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .evaluation import CachedObjective, EvalContext, normalize_model
from .instance import Placement

ALGORITHMS = ("greedy", "hc", "ts", "ea")
_ALG_IDS = {"greedy": 1, "hc": 2, "ts": 3, "ea": 4}


@dataclass
class SolverConfig:
    model: str = "proportional"
    seed: int = 0
    budget_s: float | None = None
    budget_evals: int | None = None
    # EA parameters
    pop_size: int = 100
    p_crossover: float = 0.9
    p_mutation: float | None = None  # default 1/delta
    # TS parameter: consecutive non-improving iterations before a restart
    max_iters: int = 100

    def __post_init__(self):
        self.model = normalize_model(self.model)
        if self.budget_s is None and self.budget_evals is None:
            raise ValueError("a budget (seconds or evaluations) is required")
        if self.budget_s is not None and not self.budget_s > 0:
            raise ValueError("budget_s must be positive")
        if self.budget_evals is not None and not self.budget_evals > 0:
            raise ValueError("budget_evals must be positive")
        if self.pop_size < 2:
            raise ValueError("pop_size must be >= 2")
        if not (0 <= self.p_crossover <= 1):
            raise ValueError("p_crossover must be in [0, 1]")
        if self.p_mutation is not None and not (0 <= self.p_mutation <= 1):
            raise ValueError("p_mutation must be in [0, 1]")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")


@dataclass
class RunRecord:
    placement: Placement
    value: float
    seconds: float
    evals: int
    algorithm: str
    seed: int


class Budget:
    """Wall-clock or evaluation-count budget, checked between scans."""

    def __init__(self, seconds: float | None = None, max_evals: int | None = None):
        self.seconds = seconds
        self.max_evals = max_evals
        self.start = time.perf_counter()
        self.evals = 0

    @classmethod
    def from_config(cls, config: SolverConfig) -> "Budget":
        return cls(config.budget_s, config.budget_evals)

    def charge(self, n: int) -> None:
        self.evals += int(n)

    def exhausted(self) -> bool:
        if self.max_evals is not None and self.evals >= self.max_evals:
            return True
        if self.seconds is not None and time.perf_counter() - self.start >= self.seconds:
            return True
        return False

    def elapsed(self) -> float:
        return time.perf_counter() - self.start


def _rng(seed: int, algorithm: str, restart: int) -> np.random.Generator:
    return np.random.default_rng(
        np.random.SeedSequence((int(seed) & (2**64 - 1), _ALG_IDS[algorithm], restart)))


def _placement(ctx: EvalContext, idx) -> Placement:
    return Placement(tuple(ctx.candidates[i] for i in idx))


class _Search:
    """Shared state for neighborhood-based search over candidate indices."""

    def __init__(self, ctx: EvalContext, model: str):
        self.ctx = ctx
        self.obj = CachedObjective(ctx.inst, ctx.cache, model)
        self.L = ctx.cache.lengths[ctx.cand_rows]  # (K, P) candidate coverage
        self.k = self.L.shape[0]

    def value_of(self, idx) -> float:
        rows = np.asarray(idx, dtype=np.int64)
        return self.obj.value_of_coverage(self.L[rows].sum(axis=0))


def greedy(ctx: EvalContext, model: str, budget: Budget | None = None) -> Placement:
    """Constructive heuristic: place detectors one at a time, each one
    minimizing the partial-solution value; ties go to the first candidate in
    row-major order.  Deterministic."""
    delta = ctx.inst.delta
    search = _Search(ctx, model)
    if search.k < delta:
        raise ValueError(f"only {search.k} candidates for delta={delta}")
    if budget is None:
        budget = Budget(seconds=float("inf"))
    base = np.zeros(search.L.shape[1])
    available = np.ones(search.k, dtype=bool)
    chosen: list[int] = []
    for _ in range(delta):
        rows = np.nonzero(available)[0]
        vals = search.obj.value_of_batch(base + search.L[rows])
        budget.charge(len(rows))
        pick = int(rows[int(np.argmin(vals))])
        chosen.append(pick)
        available[pick] = False
        base = base + search.L[pick]
    return _placement(ctx, chosen)


def _hill_climb_idx(search: _Search, sol: list[int], budget: Budget) -> tuple[list[int], float]:
    L = search.L
    cov = L[sol].sum(axis=0)
    cur = search.obj.value_of_coverage(cov)
    budget.charge(1)  # the starting solution counts as an evaluation
    improvement = True
    while improvement and not budget.exhausted():
        improvement = False
        for i in range(len(sol)):
            in_sol = set(sol)
            scan = [d for d in range(search.k) if d not in in_sol]
            pos = 0
            while pos < len(scan):
                ds = [d for d in scan[pos:] if d not in in_sol]
                if not ds:
                    break
                cov_wo = cov - L[sol[i]]
                vals = search.obj.value_of_batch(cov_wo + L[ds])
                better = np.nonzero(vals < cur)[0]
                if better.size == 0:
                    budget.charge(len(ds))
                    break
                first = int(better[0])
                budget.charge(first + 1)
                d = ds[first]
                in_sol.discard(sol[i])
                in_sol.add(d)
                cov = cov_wo + L[d]
                sol[i] = d
                cur = float(vals[first])
                improvement = True
                pos = scan.index(d) + 1
            if budget.exhausted():
                return sol, cur
    return sol, cur


def hill_climb(ctx: EvalContext, start: Placement, model: str,
               budget: Budget | None = None) -> Placement:
    """First-improvement local search over single-detector replacements.

    Scans detectors in order and, for each, the unused candidates in
    row-major order, moving immediately on any strict improvement; returns
    when no replacement improves (a local optimum) or the budget expires.
    """
    if budget is None:
        budget = Budget(seconds=float("inf"))
    search = _Search(ctx, model)
    cand_index = {c: i for i, c in enumerate(ctx.candidates)}
    sol = [cand_index[c] for c in start.cells]
    sol, _ = _hill_climb_idx(search, sol, budget)
    return _placement(ctx, sol)


def _tabu_search_idx(search: _Search, sol: list[int], config: SolverConfig,
                     budget: Budget, rng: np.random.Generator) -> tuple[list[int], float]:
    L = search.L
    delta = len(sol)
    cov = L[sol].sum(axis=0)
    best_idx = list(sol)
    best_val = search.obj.value_of_coverage(cov)
    budget.charge(1)  # the starting solution counts as an evaluation
    expiry = np.zeros(search.k, dtype=np.int64)  # iteration until which a cell is tabu
    no_improvement = 0
    it = 0
    while no_improvement < config.max_iters and not budget.exhausted():
        in_sol = set(sol)
        unused = np.array([d for d in range(search.k) if d not in in_sol], dtype=np.int64)
        if unused.size == 0:
            break
        vals = np.empty((delta, unused.size))
        for i in range(delta):
            vals[i] = search.obj.value_of_batch(cov - L[sol[i]] + L[unused])
        budget.charge(delta * unused.size)
        tabu = expiry[unused] > it  # same mask for every detector slot
        admissible = (~tabu)[None, :] | (vals < best_val)
        if not admissible.any():
            # every move is tabu and none aspirates; ignore the tabu list
            # for this iteration rather than stalling
            admissible = np.ones_like(admissible)
        masked = np.where(admissible, vals, np.inf)
        move_val = float(masked.min())
        ii, jj = np.nonzero(masked == move_val)
        pick = int(rng.integers(ii.size))
        i, d = int(ii[pick]), int(unused[jj[pick]])
        cov = cov - L[sol[i]] + L[d]
        sol[i] = d
        expiry[d] = it + int(rng.integers(delta, 2 * delta, endpoint=True))
        if move_val < best_val:
            best_val = move_val
            best_idx = list(sol)
            no_improvement = 0
        else:
            no_improvement += 1
        it += 1
    return best_idx, best_val


def tabu_search(ctx: EvalContext, start: Placement, config: SolverConfig,
                budget: Budget | None = None,
                rng: np.random.Generator | None = None) -> Placement:
    """Best-admissible relocation moves with a per-cell tabu matrix.

    Moving a detector to cell (r, c) makes that cell tabu for a tenure drawn
    uniformly from [delta, 2*delta]; tabu moves are admitted only when they
    beat the incumbent best (aspiration).  Stops after max_iters consecutive
    non-improving iterations and returns the incumbent best."""
    if budget is None:
        budget = Budget.from_config(config)
    if rng is None:
        rng = _rng(config.seed, "ts", 0)
    search = _Search(ctx, config.model)
    cand_index = {c: i for i, c in enumerate(ctx.candidates)}
    sol = [cand_index[c] for c in start.cells]
    best, _ = _tabu_search_idx(search, sol, config, budget, rng)
    return _placement(ctx, best)


def _random_subset(rng: np.random.Generator, k: int, delta: int) -> list[int]:
    return sorted(int(x) for x in rng.choice(k, size=delta, replace=False))


def evolutionary(ctx: EvalContext, config: SolverConfig,
                 budget: Budget | None = None,
                 rng: np.random.Generator | None = None) -> Placement:
    """Steady-state EA: binary-tournament parents, recombination by uniform
    sampling of delta cells from the parents' union, per-gene mutation to an
    unused candidate, replace-worst with duplicate offspring discarded."""
    if budget is None:
        budget = Budget.from_config(config)
    if rng is None:
        rng = _rng(config.seed, "ea", 0)
    delta = ctx.inst.delta
    search = _Search(ctx, config.model)
    k = search.k
    if k < delta:
        raise ValueError(f"only {k} candidates for delta={delta}")
    p_m = config.p_mutation if config.p_mutation is not None else 1.0 / delta

    pop: list[np.ndarray] = []
    keys: set[tuple[int, ...]] = set()
    attempts = 0
    while len(pop) < config.pop_size and attempts < 100 * config.pop_size:
        ind = rng.choice(k, size=delta, replace=False).astype(np.int64)
        key = tuple(sorted(int(x) for x in ind))
        attempts += 1
        if key in keys:
            continue
        keys.add(key)
        pop.append(ind)
    # a degenerate candidate space may not admit pop_size distinct subsets;
    # the loop above then stops early and the EA runs with what exists
    vals = np.array([search.value_of(ind) for ind in pop])
    budget.charge(len(pop))
    best_i = int(np.argmin(vals))
    best_ind = pop[best_i].copy()
    best_val = float(vals[best_i])

    def tournament() -> int:
        a, b = rng.integers(len(pop), size=2)
        return int(a if vals[a] <= vals[b] else b)

    while not budget.exhausted():
        if rng.random() < config.p_crossover:
            p1 = pop[tournament()]
            p2 = pop[tournament()]
            union = np.unique(np.concatenate([p1, p2]))
            off = rng.choice(union, size=delta, replace=False).astype(np.int64)
        else:
            off = pop[int(rng.integers(len(pop)))].copy()
        off_set = set(int(x) for x in off)
        for g in range(delta):
            # with k == delta every candidate is already used: nothing to
            # mutate to, so only the gate is drawn and the gene is kept
            if rng.random() < p_m and k > delta:
                while True:
                    d = int(rng.integers(k))
                    if d not in off_set:
                        break
                off_set.discard(int(off[g]))
                off_set.add(d)
                off[g] = d
        val = search.value_of(off)
        budget.charge(1)
        if val < best_val:
            best_val = val
            best_ind = off.copy()
        key = tuple(sorted(off_set))
        if key in keys:
            continue  # duplicate of a current member: discard, no replacement
        worst = int(np.argmax(vals))
        keys.discard(tuple(sorted(int(x) for x in pop[worst])))
        keys.add(key)
        pop[worst] = off
        vals[worst] = val
    return _placement(ctx, best_ind)


def run_with_restarts(local: str, ctx: EvalContext, config: SolverConfig) -> RunRecord:
    """Iterate a local solver ("hc" or "ts") from fresh uniform-random
    placements until the budget is exhausted; the in-progress descent is
    abandoned at expiry and the best completed result kept."""
    if local not in ("hc", "ts"):
        raise ValueError("run_with_restarts drives 'hc' or 'ts'")
    budget = Budget.from_config(config)
    search = _Search(ctx, config.model)
    delta = ctx.inst.delta
    if search.k < delta:
        raise ValueError(f"only {search.k} candidates for delta={delta}")
    best_idx: list[int] | None = None
    best_val = float("inf")
    restart = 0
    while True:
        rng = _rng(config.seed, local, restart)
        sol = _random_subset(rng, search.k, delta)
        if local == "hc":
            sol, val = _hill_climb_idx(search, sol, budget)
        else:
            sol, val = _tabu_search_idx(search, sol, config, budget, rng)
        if val < best_val:
            best_val = val
            best_idx = list(sol)
        restart += 1
        if budget.exhausted():
            break
    return RunRecord(_placement(ctx, best_idx), best_val, budget.elapsed(),
                     budget.evals, local, config.seed)


def solve(ctx: EvalContext, algorithm: str, config: SolverConfig) -> RunRecord:
    """Run one algorithm under one budget and return its record."""
    if algorithm not in ALGORITHMS:
        raise ValueError(f"unknown algorithm '{algorithm}'")
    if algorithm == "greedy":
        budget = Budget(seconds=float("inf"))
        placement = greedy(ctx, config.model, budget)
        value = CachedObjective(ctx.inst, ctx.cache, config.model).value_of_cells(
            placement.cells)
        return RunRecord(placement, value, budget.elapsed(), budget.evals,
                         "greedy", config.seed)
    if algorithm in ("hc", "ts"):
        return run_with_restarts(algorithm, ctx, config)
    budget = Budget.from_config(config)
    placement = evolutionary(ctx, config, budget)
    value = CachedObjective(ctx.inst, ctx.cache, config.model).value_of_cells(
        placement.cells)
    return RunRecord(placement, value, budget.elapsed(), budget.evals, "ea", config.seed)
