"""Seeded procedural generators for three benchmark map families.

harbour: an inner water mass grown by exponentially decaying diffusion and
smoothed by a majority-rule cellular automaton, with objectives carved into
the coastline.  newtown: an orthogonal street grid with plazas.  oldtown:
plazas with sloped streets radiating from their sides and recursively
branching into narrower lanes.

Generation is deterministic per (seed, params); instances that fail
validation are regenerated up to a bounded number of attempts.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .instance import GridMap, Instance, Objective, validate

MAP_CLASSES = ("harbour", "newtown", "oldtown")
_CLASS_IDS = {"harbour": 11, "newtown": 12, "oldtown": 13}

# Per-class physics: cell size (m), detection radius tau (m), detection rate
# eta (1/m), attacker speed v (m/s), density draw (mean, sd).
_CLASS_PHYSICS = {
    "harbour": dict(cell_size=200.0, tau=500.0, eta=0.006, speed=20.0,
                    density_mean=9e7, density_sd=1.8e6),
    "newtown": dict(cell_size=5.0, tau=20.0, eta=0.06, speed=1.0,
                    density_mean=0.4, density_sd=0.1),
    "oldtown": dict(cell_size=5.0, tau=20.0, eta=0.06, speed=1.0,
                    density_mean=0.4, density_sd=0.1),
}


class GenerationError(RuntimeError):
    """Raised when the retry budget is exhausted without a valid instance."""


@dataclass
class GenParams:
    map_class: str
    seed: int = 0
    rows: int = 64
    cols: int = 64
    entrance_range: tuple[int, int] = (10, 15)
    objective_range: tuple[int, int] = (10, 15)
    margin_frac: float = 0.10  # border band kept free of objectives
    delta: int = 15
    theta: float = 0.6
    t_neutralize: float = 10.0
    # harbour
    beta_range: tuple[float, float] = (0.98, 0.99)
    ca_max_iters: int = 20
    # newtown: probability of a street of width 0..3
    street_width_probs: tuple[float, ...] = (0.5, 0.25, 0.15, 0.1)
    plaza_count_range: tuple[int, int] = (3, 6)
    plaza_side_range: tuple[int, int] | None = None  # class default if None
    # oldtown
    street_width: int = 3
    branch_prob: float = 0.02
    max_slope: float | None = None  # default: map side / 5
    # value assignment
    kappa: float = 100.0  # lethal-area constant mapping density to casualties
    max_attempts: int = 50
    # physics overrides (class defaults if None)
    cell_size: float | None = None
    tau: float | None = None
    eta: float | None = None
    speed: float | None = None
    density_mean: float | None = None
    density_sd: float | None = None

    def __post_init__(self):
        if self.map_class not in MAP_CLASSES:
            raise ValueError(f"unknown map class '{self.map_class}'")
        phys = _CLASS_PHYSICS[self.map_class]
        for k, v in phys.items():
            if getattr(self, k) is None:
                setattr(self, k, v)
        if self.plaza_side_range is None:
            self.plaza_side_range = (4, 13) if self.map_class == "newtown" else (6, 15)
        if self.max_slope is None:
            self.max_slope = max(self.cols, self.rows) / 5.0
        if not 0 <= self.margin_frac < 0.5:
            raise ValueError("margin_frac must be in [0, 0.5)")


def _margin(params: GenParams) -> tuple[int, int]:
    return (int(round(params.margin_frac * params.rows)),
            int(round(params.margin_frac * params.cols)))


def _in_margin(params: GenParams, r: int, c: int) -> bool:
    mr, mc = _margin(params)
    return r < mr or r >= params.rows - mr or c < mc or c >= params.cols - mc


def _border_cells(blocked: np.ndarray) -> list[tuple[int, int]]:
    m, n = blocked.shape
    out = []
    for r in range(m):
        for c in range(n):
            if (r in (0, m - 1) or c in (0, n - 1)) and not blocked[r, c]:
                out.append((r, c))
    return out


def _pick_entrances(rng, blocked, count) -> list[tuple[int, int]] | None:
    border = _border_cells(blocked)
    if len(border) < count:
        return None
    idx = rng.choice(len(border), size=count, replace=False)
    return [border[int(i)] for i in idx]


def _pick_open_objectives(rng, params, blocked, count, excluded) -> list[tuple[int, int]] | None:
    """Uniform distinct unblocked cells outside the border margin."""
    cells = [(r, c) for r in range(params.rows) for c in range(params.cols)
             if not blocked[r, c] and not _in_margin(params, r, c)
             and (r, c) not in excluded]
    if len(cells) < count:
        return None
    idx = rng.choice(len(cells), size=count, replace=False)
    return [cells[int(i)] for i in idx]


# ---------------------------------------------------------------------------
# harbour

_DIRS_NESW = ((-1, 0), (0, 1), (1, 0), (0, -1))  # N, E, S, W


def _diffuse_water(rng, params) -> np.ndarray:
    """Grow the unblocked water mass from the map center.

    Breadth-first walk: the first visit to a cell draws once against the
    probability carried by the walk; on success the cell is unblocked and the
    walk continues to the four von Neumann neighbors (N, E, S, W order) with
    the probability decayed by a per-direction factor.  Later visits leave
    the cell as the first draw decided it.  Breadth-first order makes the
    probability decay with distance from the center, so the water mass is
    dense near the center and just barely reaches the map borders.
    """
    from collections import deque

    m, n = params.rows, params.cols
    beta = rng.uniform(params.beta_range[0], params.beta_range[1], size=4)
    blocked = np.ones((m, n), dtype=bool)
    visited = np.zeros((m, n), dtype=bool)
    queue = deque([(m // 2, n // 2, 1.0)])
    while queue:
        r, c, p = queue.popleft()
        if visited[r, c]:
            continue
        visited[r, c] = True
        if rng.random() >= p:
            continue
        blocked[r, c] = False
        for i in range(4):
            dr, dc = _DIRS_NESW[i]
            rr, cc = r + dr, c + dc
            if 0 <= rr < m and 0 <= cc < n and not visited[rr, cc]:
                queue.append((rr, cc, p * beta[i]))
    return blocked


def _majority_smooth(blocked: np.ndarray, max_iters: int) -> np.ndarray:
    """Majority-rule cellular automaton over the Moore neighborhood plus the
    cell itself, until convergence or max_iters; ties keep the current state."""
    cur = blocked.astype(np.int8)
    for _ in range(max_iters):
        padded = np.pad(cur, 1, constant_values=-1)
        ones = np.zeros_like(cur, dtype=np.int16)
        total = np.zeros_like(cur, dtype=np.int16)
        for dr in (-1, 0, 1):
            for dc in (-1, 0, 1):
                w = padded[1 + dr:1 + dr + cur.shape[0], 1 + dc:1 + dc + cur.shape[1]]
                ones += (w == 1)
                total += (w >= 0)
        nxt = np.where(2 * ones > total, 1, np.where(2 * ones < total, 0, cur)).astype(np.int8)
        if np.array_equal(nxt, cur):
            break
        cur = nxt
    return cur.astype(bool)


def _coastline_objectives(rng, params, blocked, count) -> list[tuple[int, int]] | None:
    """Random-walk from random open cells until a blocked cell is hit;
    unblock it and place an objective there.  Walks ending inside the border
    margin (or on an existing objective) are resampled."""
    m, n = params.rows, params.cols
    open_cells = np.argwhere(~blocked)
    if len(open_cells) == 0:
        return None
    placed: list[tuple[int, int]] = []
    attempts = 0
    while len(placed) < count and attempts < 2000:
        attempts += 1
        r, c = open_cells[int(rng.integers(len(open_cells)))]
        r, c = int(r), int(c)
        for _ in range(4 * (m + n)):
            dr, dc = _DIRS_NESW[int(rng.integers(4))]
            rr, cc = r + dr, c + dc
            if not (0 <= rr < m and 0 <= cc < n):
                break  # walked off the map: resample the walk
            if blocked[rr, cc]:
                if not _in_margin(params, rr, cc) and (rr, cc) not in placed:
                    blocked[rr, cc] = False
                    placed.append((rr, cc))
                break
            r, c = rr, cc
    return placed if len(placed) == count else None


def _gen_harbour_once(rng, params) -> Instance | None:
    blocked = _diffuse_water(rng, params)
    blocked = _majority_smooth(blocked, params.ca_max_iters)
    if not (~blocked).any():
        return None
    n_obj = int(rng.integers(params.objective_range[0], params.objective_range[1],
                             endpoint=True))
    n_ent = int(rng.integers(params.entrance_range[0], params.entrance_range[1],
                             endpoint=True))
    obj_cells = _coastline_objectives(rng, params, blocked, n_obj)
    if obj_cells is None:
        return None
    entrances = _pick_entrances(rng, blocked, n_ent)
    if entrances is None or set(entrances) & set(obj_cells):
        return None
    return _finish(rng, params, blocked, entrances, obj_cells)


# ---------------------------------------------------------------------------
# newtown


def _sweep_streets(rng, params, blocked: np.ndarray, axis: int) -> None:
    """Carve straight streets along one axis, sampling widths from
    street_width_probs; after a width-w street, skip w+1 lanes."""
    probs = np.asarray(params.street_width_probs, dtype=float)
    probs = probs / probs.sum()
    size = blocked.shape[1] if axis == 0 else blocked.shape[0]
    pos = 0
    while pos < size:
        w = int(rng.choice(len(probs), p=probs))
        if w == 0:
            pos += 1
            continue
        w = min(w, size - pos)
        if axis == 0:
            blocked[:, pos:pos + w] = False  # north-south street
        else:
            blocked[pos:pos + w, :] = False  # west-east street
        pos += w + 1


def _place_plazas(rng, params, blocked: np.ndarray) -> int:
    lo, hi = params.plaza_count_range
    n_p = int(rng.integers(lo, hi, endpoint=True))
    slo, shi = params.plaza_side_range
    for _ in range(n_p):
        side = int(rng.integers(slo, shi, endpoint=True))
        side = min(side, params.rows, params.cols)
        r = int(rng.integers(0, params.rows - side, endpoint=True))
        c = int(rng.integers(0, params.cols - side, endpoint=True))
        blocked[r:r + side, c:c + side] = False
    return n_p


def _gen_newtown_once(rng, params) -> Instance | None:
    blocked = np.ones((params.rows, params.cols), dtype=bool)
    _sweep_streets(rng, params, blocked, axis=0)
    _sweep_streets(rng, params, blocked, axis=1)
    _place_plazas(rng, params, blocked)
    if not (~blocked).any():
        return None
    n_obj = int(rng.integers(params.objective_range[0], params.objective_range[1],
                             endpoint=True))
    n_ent = int(rng.integers(params.entrance_range[0], params.entrance_range[1],
                             endpoint=True))
    entrances = _pick_entrances(rng, blocked, n_ent)
    if entrances is None:
        return None
    obj_cells = _pick_open_objectives(rng, params, blocked, n_obj, set(entrances))
    if obj_cells is None:
        return None
    return _finish(rng, params, blocked, entrances, obj_cells)


# ---------------------------------------------------------------------------
# oldtown


@dataclass
class _Street:
    start: tuple[int, int]
    direction: tuple[int, int]  # primary axis unit step
    width: int
    slope: float  # cells along the primary axis per one lateral step
    slope_sign: int


def _oldtown_streets(rng, params) -> tuple[np.ndarray, int, list[_Street]]:
    """Carve plazas and their radiating streets; returns the blocked grid,
    the plaza count and the street descriptors (branches included)."""
    m, n = params.rows, params.cols
    blocked = np.ones((m, n), dtype=bool)
    lo, hi = params.plaza_count_range
    n_p = int(rng.integers(lo, hi, endpoint=True))
    slo, shi = params.plaza_side_range
    streets: list[_Street] = []
    for _ in range(n_p):
        side = int(rng.integers(slo, shi, endpoint=True))
        side = min(side, m, n)
        r = int(rng.integers(0, m - side, endpoint=True))
        c = int(rng.integers(0, n - side, endpoint=True))
        blocked[r:r + side, c:c + side] = False
        mid_r = r + side // 2
        mid_c = c + side // 2
        # one street departs from each side of the plaza
        for start, direction in (
            ((mid_r, c - 1), (0, -1)),         # west
            ((mid_r, c + side), (0, 1)),       # east
            ((r - 1, mid_c), (-1, 0)),         # north
            ((r + side, mid_c), (1, 0)),       # south
        ):
            _carve_street(rng, params, blocked, start, direction,
                          params.street_width, streets)
    return blocked, n_p, streets


def _carve_street(rng, params, blocked, start, direction, width, streets) -> None:
    slope = float(rng.uniform(1.0, params.max_slope))
    sign = int(rng.integers(2)) * 2 - 1
    streets.append(_Street(start, direction, width, slope, sign))
    m, n = blocked.shape
    dr, dc = direction
    # lateral axis is perpendicular to the primary direction
    lr, lc = (0, 1) if dr != 0 else (1, 0)
    r0, c0 = start
    half_lo = (width - 1) // 2
    half_hi = width - 1 - half_lo
    step = 0
    while True:
        lat = sign * int(np.floor(step / slope))
        r = r0 + dr * step + lr * lat
        c = c0 + dc * step + lc * lat
        if not (0 <= r < m and 0 <= c < n):
            break
        for off in range(-half_lo, half_hi + 1):
            rr = r + lr * off
            cc = c + lc * off
            if 0 <= rr < m and 0 <= cc < n:
                blocked[rr, cc] = False
        if width > 1 and rng.random() < params.branch_prob:
            branch_dir = (lr, lc) if rng.integers(2) == 0 else (-lr, -lc)
            _carve_street(rng, params, blocked, (r, c), branch_dir,
                          width - 1, streets)
        step += 1


def _gen_oldtown_once(rng, params) -> Instance | None:
    blocked, _, _ = _oldtown_streets(rng, params)
    if not (~blocked).any():
        return None
    n_obj = int(rng.integers(params.objective_range[0], params.objective_range[1],
                             endpoint=True))
    n_ent = int(rng.integers(params.entrance_range[0], params.entrance_range[1],
                             endpoint=True))
    entrances = _pick_entrances(rng, blocked, n_ent)
    if entrances is None:
        return None
    obj_cells = _pick_open_objectives(rng, params, blocked, n_obj, set(entrances))
    if obj_cells is None:
        return None
    return _finish(rng, params, blocked, entrances, obj_cells)


# ---------------------------------------------------------------------------


def assign_values(inst: Instance, mean: float, sd: float,
                  rng: np.random.Generator,
                  casualty_model: Callable[[float], float] | None = None,
                  kappa: float = 100.0) -> Instance:
    """Draw a density per objective and map it to an expected-casualty value.

    Densities are clamped below at 1e-6 of the mean so values stay positive;
    the default casualty model is linear, C_j = density * kappa."""
    model = casualty_model or (lambda rho: rho * kappa)
    floor = 1e-6 * mean
    objectives = []
    for o in inst.objectives:
        rho = max(float(rng.normal(mean, sd)), floor)
        objectives.append(Objective(o.cell, float(model(rho))))
    return Instance(inst.map, inst.entrances, tuple(objectives), inst.tau,
                    inst.eta, inst.theta, inst.speed, inst.t_neutralize,
                    inst.delta)


def _finish(rng, params: GenParams, blocked, entrances, obj_cells) -> Instance:
    objectives = tuple(Objective(c, 0.0) for c in obj_cells)
    inst = Instance(
        map=GridMap(params.rows, params.cols, params.cell_size, blocked.copy()),
        entrances=tuple(entrances),
        objectives=objectives,
        tau=params.tau,
        eta=params.eta,
        theta=params.theta,
        speed=params.speed,
        t_neutralize=params.t_neutralize,
        delta=params.delta,
    )
    return assign_values(inst, params.density_mean, params.density_sd, rng,
                         kappa=params.kappa)


_GEN_ONCE = {
    "harbour": _gen_harbour_once,
    "newtown": _gen_newtown_once,
    "oldtown": _gen_oldtown_once,
}


def generate(params: GenParams) -> Instance:
    """Generate one validated instance; retries with fresh randomness from
    the same stream until validation passes or attempts run out."""
    rng = np.random.default_rng(
        np.random.SeedSequence((_CLASS_IDS[params.map_class],
                                int(params.seed) & (2**64 - 1))))
    gen_once = _GEN_ONCE[params.map_class]
    for attempt in range(params.max_attempts):
        inst = gen_once(rng, params)
        if inst is None:
            continue
        if not validate(inst):
            return inst
    raise GenerationError(
        f"could not generate a valid {params.map_class} instance "
        f"(seed={params.seed}) in {params.max_attempts} attempts")


def gen_harbour(params: GenParams) -> Instance:
    if params.map_class != "harbour":
        raise ValueError("params.map_class must be 'harbour'")
    return generate(params)


def gen_newtown(params: GenParams) -> Instance:
    if params.map_class != "newtown":
        raise ValueError("params.map_class must be 'newtown'")
    return generate(params)


def gen_oldtown(params: GenParams) -> Instance:
    if params.map_class != "oldtown":
        raise ValueError("params.map_class must be 'oldtown'")
    return generate(params)
