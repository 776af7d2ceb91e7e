"""Expected-casualty objective under three attacker models, plus the
preprocessing caches (per-candidate chord lengths and dominance counts).

For a placement the probability that detector k misses the attacker on the
truncated path (i, j) is exp(-eta * l_ijk) where l_ijk is the length of the
path inside the detector's disk; detectors act independently, so the total
non-detection probability is exp(-eta * sum_k l_ijk).  Expected casualties
on a path are C_j * (D * theta + (1 - theta)), and the total is the
gamma-weighted sum over all entrance/objective pairs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import disk_chord_lengths
from .instance import CellIndex, Instance, Placement
from .pathfinding import PathMatrix, TruncatedPath

UNIFORM = "uniform"
PROPORTIONAL = "proportional"
WORST_CASE = "worst_case"
MODELS = (UNIFORM, PROPORTIONAL, WORST_CASE)

_MODEL_ALIASES = {
    "uniform": UNIFORM,
    "prop": PROPORTIONAL,
    "proportional": PROPORTIONAL,
    "worst": WORST_CASE,
    "worst_case": WORST_CASE,
    "nash": WORST_CASE,
}


def normalize_model(name: str) -> str:
    try:
        return _MODEL_ALIASES[name.lower()]
    except KeyError:
        raise ValueError(f"unknown attacker model '{name}'")


@dataclass(frozen=True, eq=False)
class DetectionCache:
    """Chord lengths of every truncated path inside a detector disk centered
    at each candidate cell.  ``lengths[k, p]`` is l for candidate k and path
    p (paths flattened row-major over entrances then objectives)."""

    candidates: tuple[CellIndex, ...]
    lengths: np.ndarray  # (n_candidates, n_paths)
    n_entrances: int
    n_objectives: int

    def __post_init__(self):
        self.lengths.flags.writeable = False
        object.__setattr__(self, "_index",
                           {c: i for i, c in enumerate(self.candidates)})

    def row(self, cell: CellIndex) -> np.ndarray:
        return self.lengths[self._index[cell]]

    def coverage(self, cells) -> np.ndarray:
        """Summed chord lengths per path for a set of detector cells."""
        idx = [self._index[c] for c in cells]
        if not idx:
            return np.zeros(self.lengths.shape[1])
        return self.lengths[idx].sum(axis=0)


def build_cache(inst: Instance, paths: PathMatrix,
                candidates: list[CellIndex]) -> DetectionCache:
    """Precompute l for every candidate cell against every truncated path."""
    cs = inst.map.cell_size
    cand = np.array(candidates, dtype=float).reshape(len(candidates), 2)
    cx = (cand[:, 1] + 0.5) * cs
    cy = (cand[:, 0] + 0.5) * cs
    cols = []
    for erow in paths.truncated:
        for tp in erow:
            cols.append(_vector_path_chords(tp, cx, cy, inst.tau))
    lengths = np.column_stack(cols) if cols else np.zeros((len(candidates), 0))
    return DetectionCache(tuple(candidates), lengths,
                          paths.n_entrances, paths.n_objectives)


def _vector_path_chords(path: TruncatedPath, cx, cy, radius) -> np.ndarray:
    """Chord sums for one path against all candidate centers at once."""
    if len(path.waypoints) < 2:
        return np.zeros(len(cx))
    pts = path.waypoints
    ax = np.array([p.x for p in pts[:-1]])[None, :]
    ay = np.array([p.y for p in pts[:-1]])[None, :]
    bx = np.array([p.x for p in pts[1:]])[None, :]
    by = np.array([p.y for p in pts[1:]])[None, :]
    # broadcast (K, 1) centers against (1, S) segments
    return disk_chord_lengths(ax, ay, bx, by, cx[:, None], cy[:, None], radius).sum(axis=1)


def build_dominance(cache: DetectionCache, candidates: list[CellIndex],
                    shape: tuple[int, int]) -> np.ndarray:
    """Dominance counts: for each candidate, the number of other candidates
    whose per-path coverage vector Pareto-dominates it (>= on every path,
    strictly > on at least one).  Blocked cells carry count 0."""
    counts = np.zeros(shape, dtype=np.int32)
    L = cache.lengths
    k = L.shape[0]
    chunk = max(1, int(4e7 // max(1, k * max(1, L.shape[1]))))
    for s in range(0, k, chunk):
        block = L[s:s + chunk]  # (B, P)
        ge = (L[None, :, :] >= block[:, None, :]).all(axis=2)  # dominator axis 1
        gt = (L[None, :, :] > block[:, None, :]).any(axis=2)
        dom = (ge & gt).sum(axis=1)
        for off, cell in enumerate(candidates[s:s + chunk]):
            counts[cell] = dom[off]
    return counts


def detection_prob(l: float, eta: float) -> float:
    """Probability a single detector fires over chord length ``l``."""
    if l < 0:
        raise ValueError("chord length must be nonnegative")
    if not eta > 0:
        raise ValueError("eta must be positive")
    return 1.0 - math.exp(-eta * l)


def non_detection(placement: Placement, path_index: tuple[int, int],
                  cache: DetectionCache, eta: float) -> float:
    """Total non-detection probability along one (entrance, objective) path."""
    i, j = path_index
    p = i * cache.n_objectives + j
    total = sum(cache.row(c)[p] for c in placement.cells)
    return math.exp(-eta * total)


def path_casualties(non_detect: float, value: float, theta: float) -> float:
    """Expected casualties on one path given its non-detection probability."""
    if not 0 <= non_detect <= 1:
        raise ValueError("non-detection probability must be in [0, 1]")
    return value * (non_detect * theta + (1.0 - theta))


def gamma(model: str, inst: Instance, w_matrix: np.ndarray | None = None) -> np.ndarray:
    """Path-choice probabilities for the given attacker model.

    uniform: 1/(eps*phi) everywhere.  proportional: C_j / (eps * sum C).
    worst_case: all mass on the argmax of ``w_matrix`` (ties broken by the
    lexicographically smallest (i, j)), matching the LP optimum.
    """
    eps, phi = inst.n_entrances, inst.n_objectives
    model = normalize_model(model)
    if model == UNIFORM:
        return np.full((eps, phi), 1.0 / (eps * phi))
    if model == PROPORTIONAL:
        c = inst.objective_values()
        total = c.sum()
        if total <= 0:
            raise ValueError("proportional model undefined: objective values sum to 0")
        return np.tile(c / (eps * total), (eps, 1))
    if w_matrix is None:
        raise ValueError("worst_case gamma requires the W_ij matrix")
    w = np.asarray(w_matrix, dtype=float)
    flat = int(np.argmax(w))  # np.argmax returns the first (lexicographic) max
    g = np.zeros_like(w)
    g.flat[flat] = 1.0
    return g


@dataclass(frozen=True, eq=False)
class EvalResult:
    total: float  # W, expected casualties
    per_path: np.ndarray  # W_ij, (eps, phi)
    critical: tuple[int, int] | None  # set iff model == worst_case


def _w_matrix(coverage: np.ndarray, inst: Instance) -> np.ndarray:
    nd = np.exp(-inst.eta * coverage)
    c = inst.objective_values()
    w = (nd.reshape(inst.n_entrances, inst.n_objectives) * inst.theta
         + (1.0 - inst.theta)) * c[None, :]
    return w


def evaluate(placement: Placement, inst: Instance, paths: PathMatrix,
             cache: DetectionCache, model: str) -> EvalResult:
    """Expected casualties of a placement under an attacker model."""
    model = normalize_model(model)
    cov = cache.coverage(placement.cells)
    w = _w_matrix(cov, inst)
    if model == WORST_CASE:
        flat = int(np.argmax(w))
        crit = (flat // inst.n_objectives, flat % inst.n_objectives)
        return EvalResult(float(w.flat[flat]), w, crit)
    g = gamma(model, inst)
    return EvalResult(float((g * w).sum()), w, None)


class CachedObjective:
    """Vectorized objective for the solvers: maps per-path coverage sums to
    the scalar W under a fixed attacker model."""

    def __init__(self, inst: Instance, cache: DetectionCache, model: str):
        self.model = normalize_model(model)
        self.inst = inst
        self.cache = cache
        self.theta = inst.theta
        self.eta = inst.eta
        c = inst.objective_values()
        self._cvec = np.tile(c, inst.n_entrances)  # per flattened path
        if self.model == WORST_CASE:
            self._gc = None
        else:
            g = gamma(self.model, inst).ravel()
            self._gc = g * self._cvec

    def value_of_coverage(self, cov: np.ndarray) -> float:
        nd = np.exp(-self.eta * cov)
        surv = nd * self.theta + (1.0 - self.theta)
        if self._gc is None:
            return float((self._cvec * surv).max())
        return float(surv @ self._gc)

    def value_of_batch(self, cov: np.ndarray) -> np.ndarray:
        """W for a (B, n_paths) batch of coverage vectors."""
        nd = np.exp(-self.eta * cov)
        if self._gc is None:
            return (self._cvec[None, :] * (nd * self.theta + (1.0 - self.theta))).max(axis=1)
        return (nd * self.theta + (1.0 - self.theta)) @ self._gc

    def value_of_cells(self, cells) -> float:
        return self.value_of_coverage(self.cache.coverage(cells))


@dataclass(frozen=True, eq=False)
class EvalContext:
    """Everything the solvers need, built once per instance: the path
    matrix, the detection cache over all unblocked cells, dominance counts
    and the pruned candidate list."""

    inst: Instance
    paths: PathMatrix
    cache: DetectionCache
    dominance: np.ndarray
    candidates: tuple[CellIndex, ...]  # pruned, row-major
    cand_rows: np.ndarray  # indices of candidates into cache.lengths


@dataclass(frozen=True, eq=False)
class ContextBase:
    """Delta-independent preprocessing: paths, cache and dominance counts."""

    paths: PathMatrix
    cache: DetectionCache
    dominance: np.ndarray


def prepare_base(inst: Instance, graph=None) -> ContextBase:
    from . import pathfinding
    from .instance import candidate_cells

    paths = pathfinding.all_paths(inst, graph)
    unblocked = candidate_cells(inst)
    cache = build_cache(inst, paths, unblocked)
    dom = build_dominance(cache, unblocked, (inst.map.rows, inst.map.cols))
    return ContextBase(paths, cache, dom)


def prepare_context(inst: Instance, graph=None,
                    base: ContextBase | None = None,
                    allow_on_objectives: bool = True) -> EvalContext:
    from . import pathfinding
    from .instance import candidate_cells

    if not allow_on_objectives:
        # dominance must be recomputed over the restricted candidate set so
        # that unavailable (objective) cells cannot prune available ones
        paths = base.paths if base is not None else pathfinding.all_paths(inst, graph)
        allowed = candidate_cells(inst, allow_on_objectives=False)
        cache = build_cache(inst, paths, allowed)
        dom = build_dominance(cache, allowed, (inst.map.rows, inst.map.cols))
        base = ContextBase(paths, cache, dom)
        pruned = candidate_cells(inst, dom, allow_on_objectives=False)
    else:
        if base is None:
            base = prepare_base(inst, graph)
        pruned = candidate_cells(inst, base.dominance)
    rows = np.array([base.cache._index[c] for c in pruned], dtype=np.int64)
    return EvalContext(inst, base.paths, base.cache, base.dominance,
                       tuple(pruned), rows)
