"""Shared test utilities: ASCII map builders, random instances and
independent brute-force oracles used to derive expected values."""

from __future__ import annotations

import itertools
import math

import numpy as np

from detplace.evaluation import CachedObjective, prepare_context
from detplace.instance import GridMap, Instance, Objective, validate


def grid_from_ascii(art: str, cell_size: float = 1.0) -> GridMap:
    """Build a GridMap from '#'/'.' rows (E/O glyphs count as open)."""
    rows = [line for line in art.strip().splitlines()]
    blocked = np.array([[ch == "#" for ch in line] for line in rows])
    return GridMap(blocked.shape[0], blocked.shape[1], cell_size, blocked)


def make_instance(art: str, entrances, objectives, *, cell_size=1.0, tau=1.5,
                  eta=0.5, theta=0.6, speed=1.0, t_neutralize=0.0, delta=1):
    """Instance from ASCII art plus explicit entrance/objective cells.

    ``objectives`` is a list of (cell, value) pairs.
    """
    gmap = grid_from_ascii(art, cell_size)
    inst = Instance(
        map=gmap,
        entrances=tuple(entrances),
        objectives=tuple(Objective(c, v) for c, v in objectives),
        tau=tau, eta=eta, theta=theta, speed=speed,
        t_neutralize=t_neutralize, delta=delta,
    )
    return inst


def random_instance(rng: np.random.Generator, rows=6, cols=6, n_ent=2,
                    n_obj=2, block_prob=0.2, delta=2, **phys) -> Instance:
    """Random valid instance; resamples until validate() passes."""
    defaults = dict(cell_size=1.0, tau=1.5, eta=0.5, theta=0.6, speed=1.0,
                    t_neutralize=0.5)
    defaults.update(phys)
    while True:
        blocked = rng.random((rows, cols)) < block_prob
        open_cells = [(r, c) for r in range(rows) for c in range(cols)
                      if not blocked[r, c]]
        if len(open_cells) < n_ent + n_obj + delta:
            continue
        picks = rng.choice(len(open_cells), size=n_ent + n_obj, replace=False)
        cells = [open_cells[int(i)] for i in picks]
        inst = Instance(
            map=GridMap(rows, cols, defaults["cell_size"], blocked),
            entrances=tuple(cells[:n_ent]),
            objectives=tuple(Objective(c, float(rng.uniform(1, 10)))
                             for c in cells[n_ent:]),
            tau=defaults["tau"], eta=defaults["eta"], theta=defaults["theta"],
            speed=defaults["speed"], t_neutralize=defaults["t_neutralize"],
            delta=delta,
        )
        if not validate(inst):
            return inst


def brute_force_best(ctx, model: str) -> tuple[float, tuple]:
    """Exact optimum over all delta-subsets of the context's candidates."""
    obj = CachedObjective(ctx.inst, ctx.cache, model)
    best_val = math.inf
    best_cells = None
    for combo in itertools.combinations(ctx.candidates, ctx.inst.delta):
        v = obj.value_of_cells(combo)
        if v < best_val:
            best_val = v
            best_cells = combo
    return best_val, best_cells


def full_context(inst):
    """Context without dominance pruning (all unblocked candidates)."""
    from detplace.evaluation import ContextBase, build_cache, prepare_base
    from detplace.instance import candidate_cells
    from detplace.pathfinding import all_paths

    paths = all_paths(inst)
    cands = candidate_cells(inst)
    cache = build_cache(inst, paths, cands)
    dom = np.zeros((inst.map.rows, inst.map.cols), dtype=np.int32)
    base = ContextBase(paths, cache, dom)
    return prepare_context(inst, base=base)
