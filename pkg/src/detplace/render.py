"""SVG rendering of maps, paths and detector placements."""

from __future__ import annotations

from xml.sax.saxutils import escape

import numpy as np

from .evaluation import WORST_CASE, build_cache, evaluate, normalize_model
from .instance import Instance, Placement
from .pathfinding import PathMatrix, all_paths


def _polyline(points, stroke, width, opacity=1.0, extra="") -> str:
    pts = " ".join(f"{x:.2f},{y:.2f}" for x, y in points)
    return (f'<polyline points="{pts}" fill="none" stroke="{stroke}" '
            f'stroke-width="{width:.2f}" stroke-opacity="{opacity}"{extra}/>')


def render_svg(inst: Instance, placement: Placement | None = None,
               model: str | None = None, paths: PathMatrix | None = None) -> str:
    """Render an instance (and optionally a placement) as an SVG document.

    Blocked cells are dark, entrances green, objectives orange disks scaled
    by value, detectors blue disks of radius tau.  All attacker paths are
    drawn faintly; under the worst-case model the critical path for the
    given placement is highlighted in red.
    """
    g = inst.map
    s = g.cell_size
    w = g.cols * s
    h = g.rows * s
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {w} {h}" '
        f'width="800" height="{800 * h / w:.0f}">',
        f'<rect x="0" y="0" width="{w}" height="{h}" fill="#f4f1ea"/>',
    ]
    rr, cc = np.nonzero(g.blocked)
    for r, c in zip(rr.tolist(), cc.tolist()):
        out.append(f'<rect x="{c * s}" y="{r * s}" width="{s}" height="{s}" '
                   f'fill="#4a4a4a"/>')

    if paths is None:
        paths = all_paths(inst)
    critical = None
    if placement is not None and model is not None \
            and normalize_model(model) == WORST_CASE:
        cache = build_cache(inst, paths, list(placement.cells))
        res = evaluate(placement, inst, paths, cache, WORST_CASE)
        critical = res.critical
    for i, row in enumerate(paths.full):
        for j, p in enumerate(row):
            pts = [(pt.x, pt.y) for pt in p.waypoints]
            if len(pts) < 2:
                continue
            if (i, j) == critical:
                continue  # drawn last, on top
            out.append(_polyline(pts, "#4060c0", 0.06 * s + 0.2, opacity=0.25))
    if critical is not None:
        p = paths.full[critical[0]][critical[1]]
        pts = [(pt.x, pt.y) for pt in p.waypoints]
        out.append(_polyline(pts, "#d62728", 0.18 * s + 0.4,
                             extra=' class="critical-path"'))

    if placement is not None:
        for r, c in placement.cells:
            x, y = (c + 0.5) * s, (r + 0.5) * s
            out.append(f'<circle cx="{x}" cy="{y}" r="{inst.tau}" '
                       f'fill="#1f77b4" fill-opacity="0.12" '
                       f'stroke="#1f77b4" stroke-width="{0.05 * s + 0.2:.2f}"/>')
            out.append(f'<circle cx="{x}" cy="{y}" r="{0.3 * s:.2f}" fill="#1f77b4"/>')

    values = inst.objective_values()
    vmax = float(values.max()) if len(values) else 1.0
    for o in inst.objectives:
        r, c = o.cell
        x, y = (c + 0.5) * s, (r + 0.5) * s
        radius = (0.3 + 0.5 * (o.value / vmax) ** 0.5) * s if vmax > 0 else 0.4 * s
        out.append(f'<circle cx="{x}" cy="{y}" r="{radius:.2f}" fill="#ff7f0e" '
                   f'stroke="#8c4a03" stroke-width="{0.04 * s + 0.1:.2f}">'
                   f'<title>{escape(f"C={o.value:g} at {o.cell}")}</title></circle>')
    for r, c in inst.entrances:
        out.append(f'<rect x="{c * s}" y="{r * s}" width="{s}" height="{s}" '
                   f'fill="#2ca02c" fill-opacity="0.9"/>')
    out.append("</svg>")
    return "\n".join(out)
