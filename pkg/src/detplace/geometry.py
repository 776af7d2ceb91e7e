"""Exact 2-D primitives: disk/segment chords, cell intersection, line of sight.

All coordinates are in meters on the continuous plane.  Grid cell (r, c)
of a map with cell size ``s`` has its center at ((c + 0.5) * s, (r + 0.5) * s).
Blocked cells are treated as closed squares whose OPEN interior blocks
movement: a segment sliding exactly along a wall face or clipping a corner
point is passable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

# Absolute tolerance (meters) for geometric equality; map extents are small
# enough that doubles are exact far below this.
EPS = 1e-9

# Parametric slivers below this width are boundary grazes, not crossings.
_T_EPS = 1e-12


@dataclass(frozen=True)
class Point:
    x: float
    y: float

    def dist(self, other: "Point") -> float:
        return math.hypot(self.x - other.x, self.y - other.y)


@dataclass(frozen=True)
class Segment:
    a: Point
    b: Point

    @property
    def length(self) -> float:
        return self.a.dist(self.b)


def chord_length(s: Segment, center: Point, radius: float) -> float:
    """Length of the intersection of segment ``s`` with the closed disk.

    Total function: returns 0 for disjoint configurations. The result is
    bounded by both the segment length and the disk diameter.
    """
    if radius <= 0:
        raise ValueError("radius must be positive")
    return float(
        disk_chord_lengths(
            np.array([s.a.x]),
            np.array([s.a.y]),
            np.array([s.b.x]),
            np.array([s.b.y]),
            center.x,
            center.y,
            radius,
        )[0]
    )


def disk_chord_lengths(ax, ay, bx, by, cx, cy, radius):
    """Vectorized chord lengths of segments (ax,ay)->(bx,by) in a disk.

    Broadcasts over the segment arrays; (cx, cy, radius) describe one disk.
    """
    ax = np.asarray(ax, dtype=float)
    ay = np.asarray(ay, dtype=float)
    bx = np.asarray(bx, dtype=float)
    by = np.asarray(by, dtype=float)
    dx = bx - ax
    dy = by - ay
    seg_len = np.hypot(dx, dy)
    fx = ax - cx
    fy = ay - cy
    a = dx * dx + dy * dy
    b = 2.0 * (fx * dx + fy * dy)
    c = fx * fx + fy * fy - radius * radius

    disc = b * b - 4.0 * a * c
    hit = (a > 0.0) & (disc > 0.0)
    sq = np.sqrt(np.where(hit, disc, 0.0))
    a_safe = np.where(a > 0.0, a, 1.0)
    t1 = (-b - sq) / (2.0 * a_safe)
    t2 = (-b + sq) / (2.0 * a_safe)
    span = np.maximum(np.minimum(t2, 1.0) - np.maximum(t1, 0.0), 0.0)
    return np.where(hit, span * seg_len, 0.0)


def segment_intersects_cell(s: Segment, rect: tuple[float, float, float, float]) -> bool:
    """True iff ``s`` intersects the OPEN interior of the axis-aligned rect.

    ``rect`` is (xmin, ymin, xmax, ymax).  Boundary grazing (a segment lying
    on an edge or passing through a corner) does not count.
    """
    xmin, ymin, xmax, ymax = rect
    if not (xmax > xmin and ymax > ymin):
        raise ValueError("rectangle must have positive area")
    return _open_rect_crossing(s.a.x, s.a.y, s.b.x, s.b.y, xmin, ymin, xmax, ymax)


def _open_rect_crossing(ax, ay, bx, by, xmin, ymin, xmax, ymax) -> bool:
    dx = bx - ax
    dy = by - ay
    t0, t1 = 0.0, 1.0
    for d, lo, hi, p in ((dx, xmin, xmax, ax), (dy, ymin, ymax, ay)):
        if d == 0.0:
            if not (lo < p < hi):
                return False
        else:
            ta = (lo - p) / d
            tb = (hi - p) / d
            if ta > tb:
                ta, tb = tb, ta
            t0 = max(t0, ta)
            t1 = min(t1, tb)
    return t1 - t0 > _T_EPS


@njit(cache=True)
def _segment_hits_blocked(blocked, x0, y0, x1, y1):  # pragma: no cover - jitted
    """True if the segment (in cell units) crosses any blocked cell interior.

    Walks the intervals between gridline crossings and classifies each
    interval by its midpoint, so exact corner crossings never attribute the
    segment to the cells it merely grazes.
    """
    m, n = blocked.shape
    dx = x1 - x0
    dy = y1 - y0
    ts = np.empty(m + n + 6, np.float64)
    cnt = 0
    ts[cnt] = 0.0
    cnt += 1
    ts[cnt] = 1.0
    cnt += 1
    if dx != 0.0:
        kmin = int(np.ceil(min(x0, x1)))
        kmax = int(np.floor(max(x0, x1)))
        for k in range(kmin, kmax + 1):
            t = (k - x0) / dx
            if 0.0 < t < 1.0:
                ts[cnt] = t
                cnt += 1
    if dy != 0.0:
        kmin = int(np.ceil(min(y0, y1)))
        kmax = int(np.floor(max(y0, y1)))
        for k in range(kmin, kmax + 1):
            t = (k - y0) / dy
            if 0.0 < t < 1.0:
                ts[cnt] = t
                cnt += 1
    tss = np.sort(ts[:cnt])
    for i in range(cnt - 1):
        ta = tss[i]
        tb = tss[i + 1]
        if tb - ta <= 1e-12:
            continue
        tm = 0.5 * (ta + tb)
        c = int(np.floor(x0 + tm * dx))
        r = int(np.floor(y0 + tm * dy))
        if r < 0 or r >= m or c < 0 or c >= n:
            continue
        if blocked[r, c]:
            return True
    return False


@njit(cache=True)
def _los_matrix_kernel(blocked, rows, cols):  # pragma: no cover - jitted
    k = rows.shape[0]
    out = np.zeros((k, k), np.bool_)
    for i in range(k):
        out[i, i] = True
        xi = cols[i] + 0.5
        yi = rows[i] + 0.5
        for j in range(i + 1, k):
            v = not _segment_hits_blocked(blocked, xi, yi, cols[j] + 0.5, rows[j] + 0.5)
            out[i, j] = v
            out[j, i] = v
    return out


def line_of_sight(grid, c1: tuple[int, int], c2: tuple[int, int]) -> bool:
    """True iff the segment between the centers of unblocked cells ``c1``
    and ``c2`` intersects no blocked cell's open interior."""
    r1, col1 = c1
    r2, col2 = c2
    blocked = np.ascontiguousarray(grid.blocked)
    if blocked[r1, col1] or blocked[r2, col2]:
        raise ValueError("line_of_sight endpoints must be unblocked")
    if c1 == c2:
        return True
    return not _segment_hits_blocked(
        blocked, col1 + 0.5, r1 + 0.5, col2 + 0.5, r2 + 0.5
    )


def los_matrix(blocked: np.ndarray, cells: np.ndarray) -> np.ndarray:
    """Pairwise line-of-sight over an array of (r, c) cell indices."""
    rows = np.ascontiguousarray(cells[:, 0], dtype=np.float64)
    cols = np.ascontiguousarray(cells[:, 1], dtype=np.float64)
    return _los_matrix_kernel(np.ascontiguousarray(blocked), rows, cols)
