"""Visibility graph over unblocked cell centers and entrance-objective paths.

The attacker walks a shortest path through cell-center waypoints; ties
between equal-length shortest paths are broken deterministically (each step
advances as far as possible toward the target, residual ties going to the
smallest row-major cell index).  Terminal
segments of length v * t_n are cut off to obtain the portion of each path
where neutralization is still possible.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

import numpy as np

from .geometry import EPS, Point, los_matrix
from .instance import CellIndex, GridMap, Instance


@dataclass(frozen=True)
class Path:
    waypoints: tuple[Point, ...]
    length: float


@dataclass(frozen=True)
class TruncatedPath:
    waypoints: tuple[Point, ...]
    length: float


@dataclass(frozen=True)
class PathMatrix:
    """Complete epsilon x phi grid of (Path, TruncatedPath) pairs."""

    full: tuple[tuple[Path, ...], ...]
    truncated: tuple[tuple[TruncatedPath, ...], ...]

    @property
    def n_entrances(self) -> int:
        return len(self.full)

    @property
    def n_objectives(self) -> int:
        return len(self.full[0]) if self.full else 0


class VisibilityGraph:
    """Weighted graph on unblocked cells; edge (u, v) iff line of sight,
    weight = Euclidean distance between centers in meters."""

    def __init__(self, grid: GridMap):
        self.grid = grid
        self.cells: list[CellIndex] = grid.unblocked_cells()  # row-major
        self.index = {c: i for i, c in enumerate(self.cells)}
        arr = np.array(self.cells, dtype=np.int64).reshape(len(self.cells), 2)
        self._rows = arr[:, 0].astype(float)
        self._cols = arr[:, 1].astype(float)
        self.los = los_matrix(grid.blocked, arr)
        np.fill_diagonal(self.los, False)
        self._xs = (self._cols + 0.5) * grid.cell_size
        self._ys = (self._rows + 0.5) * grid.cell_size

    @property
    def n(self) -> int:
        return len(self.cells)

    def has_edge(self, u: CellIndex, v: CellIndex) -> bool:
        return bool(self.los[self.index[u], self.index[v]])

    def weight(self, u: CellIndex, v: CellIndex) -> float:
        i, j = self.index[u], self.index[v]
        return math.hypot(self._xs[i] - self._xs[j], self._ys[i] - self._ys[j])

    def _edge_lengths(self, i: int) -> np.ndarray:
        return np.hypot(self._xs - self._xs[i], self._ys - self._ys[i])

    def distances_from(self, source: CellIndex) -> np.ndarray:
        """Dijkstra distances (meters) from ``source`` to every cell."""
        s = self.index[source]
        dist = np.full(self.n, np.inf)
        dist[s] = 0.0
        done = np.zeros(self.n, dtype=bool)
        heap = [(0.0, s)]
        while heap:
            d, u = heapq.heappop(heap)
            if done[u]:
                continue
            done[u] = True
            nbrs = np.nonzero(self.los[u])[0]
            if nbrs.size == 0:
                continue
            nd = d + self._edge_lengths(u)[nbrs]
            better = nd < dist[nbrs]
            for v, dv in zip(nbrs[better], nd[better]):
                dist[v] = dv
                heapq.heappush(heap, (dv, int(v)))
        return dist


def build_visibility_graph(grid: GridMap) -> VisibilityGraph:
    return VisibilityGraph(grid)


def _lexicographic_path(graph: VisibilityGraph, src: int, dst: int,
                        dist_to_dst: np.ndarray) -> list[int]:
    """Forward-greedy walk over shortest-path edges: at each step take the
    neighbor that advances furthest toward the target (so a straight corridor
    yields a direct two-waypoint path), breaking remaining ties by smallest
    row-major cell index."""
    seq = [src]
    u = src
    while u != dst:
        w = graph._edge_lengths(u)
        ok = graph.los[u] & (np.abs(w + dist_to_dst - dist_to_dst[u]) <= EPS)
        nxt = np.nonzero(ok)[0]
        if nxt.size == 0:  # cannot happen on a connected pair
            raise RuntimeError("shortest-path reconstruction dead end")
        u = int(nxt[int(np.argmin(dist_to_dst[nxt]))])
        seq.append(u)
    return seq


def shortest_path(graph: VisibilityGraph, src: CellIndex, dst: CellIndex) -> Path | None:
    """Minimum-length path through cell-center waypoints, or None when the
    cells are disconnected."""
    if src == dst:
        x, y = graph.grid.center(src)
        return Path((Point(x, y),), 0.0)
    dist = graph.distances_from(dst)
    si = graph.index[src]
    if not np.isfinite(dist[si]):
        return None
    seq = _lexicographic_path(graph, si, graph.index[dst], dist)
    return _path_from_indices(graph, seq)


def _path_from_indices(graph: VisibilityGraph, seq: list[int]) -> Path:
    pts = tuple(Point(graph._xs[i], graph._ys[i]) for i in seq)
    length = sum(pts[i].dist(pts[i + 1]) for i in range(len(pts) - 1))
    return Path(pts, length)


def truncate(path: Path, cut: float) -> TruncatedPath:
    """Remove the final ``cut`` meters, walking backward from the objective."""
    if cut < 0:
        raise ValueError("cut must be nonnegative")
    if cut == 0:
        return TruncatedPath(path.waypoints, path.length)
    keep = path.length - cut
    if keep <= 0:
        return TruncatedPath((), 0.0)
    pts = list(path.waypoints)
    acc = 0.0
    out = [pts[0]]
    for a, b in zip(pts, pts[1:]):
        seg = a.dist(b)
        if acc + seg < keep:
            out.append(b)
            acc += seg
        else:
            t = (keep - acc) / seg
            out.append(Point(a.x + t * (b.x - a.x), a.y + t * (b.y - a.y)))
            break
    return TruncatedPath(tuple(out), keep)


def all_paths(inst: Instance, graph: VisibilityGraph | None = None) -> PathMatrix:
    """Shortest and truncated paths for every (entrance, objective) pair.

    Fails if any pair is disconnected; run instance.validate first.
    """
    if graph is None:
        graph = build_visibility_graph(inst.map)
    cut = inst.speed * inst.t_neutralize
    dist_to_obj = {}
    for o in inst.objectives:
        dist_to_obj[o.cell] = graph.distances_from(o.cell)
    full_rows = []
    trunc_rows = []
    for e in inst.entrances:
        frow = []
        trow = []
        for o in inst.objectives:
            dist = dist_to_obj[o.cell]
            si = graph.index[e]
            if not np.isfinite(dist[si]):
                raise ValueError(f"no path from entrance {e} to objective {o.cell}")
            seq = _lexicographic_path(graph, si, graph.index[o.cell], dist)
            p = _path_from_indices(graph, seq)
            frow.append(p)
            trow.append(truncate(p, cut))
        full_rows.append(tuple(frow))
        trunc_rows.append(tuple(trow))
    return PathMatrix(tuple(full_rows), tuple(trunc_rows))
