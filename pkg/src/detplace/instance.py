"""Problem-instance data model, validation, candidate enumeration and file IO.

The on-disk map format is UTF-8 text::

    DETPLACE 1
    rows 64 cols 64 cell_size 5.0
    tau 20.0 eta 0.06 theta 0.6 v 1.0 tn 10.0 delta 15
    <rows lines of cols glyphs: '#'=blocked '.'=open 'E'=entrance 'O'=objective>
    OBJECTIVES
    <one line per 'O' glyph in row-major order: "r c value">

Cell indices are 0-based (row, col).  Placements serialize as a
``PLACEMENT <delta>`` header followed by one "r c" line per detector.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

CellIndex = tuple[int, int]

FORMAT_MAGIC = "DETPLACE"
FORMAT_VERSION = 1


class InstanceFormatError(ValueError):
    """Raised on malformed instance or placement files."""

    def __init__(self, message: str, line: int | None = None, col: int | None = None):
        loc = ""
        if line is not None:
            loc = f" (line {line}" + (f", col {col}" if col is not None else "") + ")"
        super().__init__(message + loc)
        self.line = line
        self.col = col


@dataclass(frozen=True)
class GridMap:
    rows: int
    cols: int
    cell_size: float
    blocked: np.ndarray  # (rows, cols) bool; treated as immutable

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise ValueError("grid must be at least 1x1")
        if not self.cell_size > 0:
            raise ValueError("cell_size must be positive")
        b = np.ascontiguousarray(np.asarray(self.blocked, dtype=bool))
        if b.shape != (self.rows, self.cols):
            raise ValueError("blocked grid shape mismatch")
        b.flags.writeable = False
        object.__setattr__(self, "blocked", b)

    def center(self, cell: CellIndex) -> tuple[float, float]:
        r, c = cell
        return ((c + 0.5) * self.cell_size, (r + 0.5) * self.cell_size)

    def unblocked_cells(self) -> list[CellIndex]:
        rr, cc = np.nonzero(~self.blocked)
        return list(zip(rr.tolist(), cc.tolist()))

    def __eq__(self, other):
        return (
            isinstance(other, GridMap)
            and self.rows == other.rows
            and self.cols == other.cols
            and self.cell_size == other.cell_size
            and bool(np.array_equal(self.blocked, other.blocked))
        )


@dataclass(frozen=True)
class Objective:
    cell: CellIndex
    value: float  # expected casualties (or monetary damage) C_j

    def __post_init__(self):
        if self.value < 0:
            raise ValueError("objective value must be nonnegative")


@dataclass(frozen=True)
class Instance:
    map: GridMap
    entrances: tuple[CellIndex, ...]
    objectives: tuple[Objective, ...]
    tau: float  # detection radius, meters
    eta: float  # instantaneous detection rate, 1/meter
    theta: float  # neutralization probability
    speed: float  # attacker speed, m/s
    t_neutralize: float  # seconds needed to neutralize
    delta: int  # detectors to place

    def __post_init__(self):
        # Canonical row-major ordering keeps path-matrix indexing and the
        # worst-case tie-break reproducible regardless of construction order.
        object.__setattr__(self, "entrances", tuple(sorted(self.entrances)))
        object.__setattr__(
            self, "objectives", tuple(sorted(self.objectives, key=lambda o: o.cell)))

    @property
    def n_entrances(self) -> int:
        return len(self.entrances)

    @property
    def n_objectives(self) -> int:
        return len(self.objectives)

    def objective_values(self) -> np.ndarray:
        return np.array([o.value for o in self.objectives])

    def with_delta(self, delta: int) -> "Instance":
        return replace(self, delta=delta)


@dataclass(frozen=True)
class Placement:
    cells: tuple[CellIndex, ...]

    def __post_init__(self):
        cells = tuple(sorted(self.cells))
        if len(set(cells)) != len(cells):
            raise ValueError("placement cells must be distinct")
        object.__setattr__(self, "cells", cells)

    def __len__(self):
        return len(self.cells)


@dataclass(frozen=True)
class Violation:
    code: str
    detail: str

    def __str__(self):
        return f"{self.code}: {self.detail}"


def _connected_components(blocked: np.ndarray) -> np.ndarray:
    """Label 8-connected components of unblocked cells (-1 for blocked).

    On this grid, visibility-graph connectivity coincides with
    8-connectivity: any adjacent (incl. diagonal, by the open-interior
    corner rule) pair has line of sight, and any sight line crosses an
    8-connected chain of unblocked cells.
    """
    m, n = blocked.shape
    labels = np.full((m, n), -1, dtype=np.int32)
    nxt = 0
    for r0 in range(m):
        for c0 in range(n):
            if blocked[r0, c0] or labels[r0, c0] >= 0:
                continue
            stack = [(r0, c0)]
            labels[r0, c0] = nxt
            while stack:
                r, c = stack.pop()
                for dr in (-1, 0, 1):
                    for dc in (-1, 0, 1):
                        rr, cc = r + dr, c + dc
                        if 0 <= rr < m and 0 <= cc < n and not blocked[rr, cc] \
                                and labels[rr, cc] < 0:
                            labels[rr, cc] = nxt
                            stack.append((rr, cc))
            nxt += 1
    return labels


def validate(inst: Instance) -> list[Violation]:
    """Check all Instance invariants plus entrance/objective connectivity.

    Violations are data, not failures: an empty list means the instance is
    well formed and every (entrance, objective) pair is connected in the
    visibility graph.
    """
    v: list[Violation] = []
    g = inst.map
    if inst.n_entrances < 1:
        v.append(Violation("no-entrances", "at least one entrance required"))
    if inst.n_objectives < 1:
        v.append(Violation("no-objectives", "at least one objective required"))
    if inst.delta < 1:
        v.append(Violation("bad-delta", f"delta must be >= 1, got {inst.delta}"))
    if not inst.tau > 0:
        v.append(Violation("bad-tau", f"tau must be positive, got {inst.tau}"))
    if not inst.eta > 0:
        v.append(Violation("bad-eta", f"eta must be positive, got {inst.eta}"))
    if not 0 <= inst.theta <= 1:
        v.append(Violation("bad-theta", f"theta must be in [0,1], got {inst.theta}"))
    if not inst.speed > 0:
        v.append(Violation("bad-speed", f"speed must be positive, got {inst.speed}"))
    if inst.t_neutralize < 0:
        v.append(Violation("bad-tn", f"t_n must be >= 0, got {inst.t_neutralize}"))

    def in_bounds(cell):
        r, c = cell
        return 0 <= r < g.rows and 0 <= c < g.cols

    special = list(inst.entrances) + [o.cell for o in inst.objectives]
    if len(set(special)) != len(special):
        v.append(Violation("duplicate-cells",
                           "entrances and objective cells must be pairwise distinct"))
    for e in inst.entrances:
        if not in_bounds(e):
            v.append(Violation("entrance-out-of-bounds", f"entrance {e}"))
        elif g.blocked[e]:
            v.append(Violation("entrance-blocked", f"entrance {e} is blocked"))
    for o in inst.objectives:
        if not in_bounds(o.cell):
            v.append(Violation("objective-out-of-bounds", f"objective {o.cell}"))
        elif g.blocked[o.cell]:
            v.append(Violation("objective-blocked", f"objective {o.cell} is blocked"))
        if o.value < 0:
            v.append(Violation("objective-negative", f"objective {o.cell} value {o.value}"))
    if v:
        return v

    labels = _connected_components(g.blocked)
    for o in inst.objectives:
        lo = labels[o.cell]
        for e in inst.entrances:
            if labels[e] != lo:
                v.append(Violation(
                    "unreachable",
                    f"objective {o.cell} not reachable from entrance {e}"))
    return v


def candidate_cells(inst: Instance, dominance: np.ndarray | None = None,
                    allow_on_objectives: bool = True) -> list[CellIndex]:
    """Unblocked cells in row-major order, minus those dominated by >= delta
    other candidates when a dominance-count grid is supplied.  Pass
    ``allow_on_objectives=False`` to additionally bar objective cells from
    hosting detectors."""
    cells = inst.map.unblocked_cells()
    if not allow_on_objectives:
        taken = {o.cell for o in inst.objectives}
        cells = [c for c in cells if c not in taken]
    if dominance is None:
        return cells
    return [c for c in cells if dominance[c] < inst.delta]


def _fmt(x: float) -> str:
    return repr(float(x))


def save_instance(inst: Instance, path) -> None:
    g = inst.map
    glyphs = np.where(g.blocked, "#", ".")
    for e in inst.entrances:
        glyphs[e] = "E"
    for o in inst.objectives:
        glyphs[o.cell] = "O"
    lines = [
        f"{FORMAT_MAGIC} {FORMAT_VERSION}",
        f"rows {g.rows} cols {g.cols} cell_size {_fmt(g.cell_size)}",
        f"tau {_fmt(inst.tau)} eta {_fmt(inst.eta)} theta {_fmt(inst.theta)} "
        f"v {_fmt(inst.speed)} tn {_fmt(inst.t_neutralize)} delta {inst.delta}",
    ]
    lines.extend("".join(row) for row in glyphs)
    lines.append("OBJECTIVES")
    for o in sorted(inst.objectives, key=lambda o: o.cell):
        lines.append(f"{o.cell[0]} {o.cell[1]} {_fmt(o.value)}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def _parse_kv_line(text: str, keys: list[str], lineno: int) -> dict:
    toks = text.split()
    if len(toks) != 2 * len(keys):
        raise InstanceFormatError(
            f"expected '{' '.join(k + ' <value>' for k in keys)}'", lineno)
    out = {}
    for i, k in enumerate(keys):
        if toks[2 * i] != k:
            raise InstanceFormatError(f"expected key '{k}', got '{toks[2 * i]}'", lineno)
        try:
            out[k] = float(toks[2 * i + 1])
        except ValueError:
            raise InstanceFormatError(f"bad number for '{k}': {toks[2 * i + 1]}", lineno)
    return out


def load_instance(path) -> Instance:
    text = Path(path).read_text(encoding="utf-8")
    lines = text.splitlines()
    if not lines or not lines[0].strip():
        raise InstanceFormatError("empty file", 1)
    head = lines[0].split()
    if len(head) != 2 or head[0] != FORMAT_MAGIC or head[1] != str(FORMAT_VERSION):
        raise InstanceFormatError(f"expected header '{FORMAT_MAGIC} {FORMAT_VERSION}'", 1)
    if len(lines) < 3:
        raise InstanceFormatError("truncated header", len(lines))
    dims = _parse_kv_line(lines[1], ["rows", "cols", "cell_size"], 2)
    rows, cols = int(dims["rows"]), int(dims["cols"])
    phys = _parse_kv_line(lines[2], ["tau", "eta", "theta", "v", "tn", "delta"], 3)
    if len(lines) < 3 + rows:
        raise InstanceFormatError(f"expected {rows} grid lines", len(lines))
    blocked = np.zeros((rows, cols), dtype=bool)
    entrances: list[CellIndex] = []
    objective_cells: list[CellIndex] = []
    for r in range(rows):
        row = lines[3 + r]
        if len(row) != cols:
            raise InstanceFormatError(
                f"grid line has {len(row)} glyphs, expected {cols}", 4 + r)
        for c, ch in enumerate(row):
            if ch == "#":
                blocked[r, c] = True
            elif ch == "E":
                entrances.append((r, c))
            elif ch == "O":
                objective_cells.append((r, c))
            elif ch != ".":
                raise InstanceFormatError(f"unknown glyph '{ch}'", 4 + r, c + 1)
    idx = 3 + rows
    if idx >= len(lines) or lines[idx].strip() != "OBJECTIVES":
        raise InstanceFormatError("expected OBJECTIVES section", idx + 1)
    values: dict[CellIndex, float] = {}
    for k, row in enumerate(lines[idx + 1:]):
        if not row.strip():
            continue
        toks = row.split()
        if len(toks) != 3:
            raise InstanceFormatError("expected 'r c value'", idx + 2 + k)
        try:
            cell = (int(toks[0]), int(toks[1]))
            val = float(toks[2])
        except ValueError:
            raise InstanceFormatError(f"bad objective row '{row}'", idx + 2 + k)
        if cell in values:
            raise InstanceFormatError(f"duplicate objective row for {cell}", idx + 2 + k)
        values[cell] = val
    if set(values) != set(objective_cells):
        raise InstanceFormatError(
            f"objective table rows ({len(values)}) do not match 'O' glyphs "
            f"({len(objective_cells)})", idx + 1)
    objectives = tuple(Objective(c, values[c]) for c in sorted(objective_cells))
    return Instance(
        map=GridMap(rows, cols, dims["cell_size"], blocked),
        entrances=tuple(sorted(entrances)),
        objectives=objectives,
        tau=phys["tau"],
        eta=phys["eta"],
        theta=phys["theta"],
        speed=phys["v"],
        t_neutralize=phys["tn"],
        delta=int(phys["delta"]),
    )


def save_placement(placement: Placement, path) -> None:
    lines = [f"PLACEMENT {len(placement)}"]
    lines.extend(f"{r} {c}" for r, c in placement.cells)
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_placement(path) -> Placement:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines:
        raise InstanceFormatError("empty placement file", 1)
    head = lines[0].split()
    if len(head) != 2 or head[0] != "PLACEMENT":
        raise InstanceFormatError("expected 'PLACEMENT <delta>' header", 1)
    n = int(head[1])
    cells = []
    for i, row in enumerate(lines[1:]):
        if not row.strip():
            continue
        toks = row.split()
        if len(toks) != 2:
            raise InstanceFormatError("expected 'r c'", i + 2)
        cells.append((int(toks[0]), int(toks[1])))
    if len(cells) != n:
        raise InstanceFormatError(f"expected {n} cells, got {len(cells)}", len(lines))
    return Placement(tuple(cells))
