"""Command-line front end: generate benchmarks, solve instances, run batch
experiments with deviation statistics, and render solutions to SVG.

Exit codes: 0 success, 1 usage error, 2 data error, 3 partial bench failure.
"""

from __future__ import annotations

import argparse
import csv
import glob
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from . import generators
from .evaluation import MODELS, normalize_model, prepare_base, prepare_context
from .instance import (Instance, InstanceFormatError, Placement, load_instance,
                       load_placement, save_instance, save_placement, validate)
from .render import render_svg
from .solvers import ALGORITHMS, SolverConfig, solve

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_PARTIAL = 3

CSV_COLUMNS = ["instance", "class", "alg", "model", "delta", "seed",
               "W", "evals", "seconds", "deviation_pct"]


class CliError(Exception):
    def __init__(self, message: str, code: int = EXIT_DATA):
        super().__init__(message)
        self.code = code


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage errors exit 1, not argparse's 2
        self.print_usage(sys.stderr)
        raise SystemExit_(EXIT_USAGE, f"{self.prog}: error: {message}")


class SystemExit_(Exception):
    def __init__(self, code, message=""):
        self.code = code
        self.message = message


@dataclass
class ExperimentSpec:
    instances: list[str]
    algs: list[str]
    models: list[str]
    deltas: list[int]
    seeds: list[int]
    out_dir: str
    budget_s: float | None = None
    budget_evals: int | None = None
    jobs: int = 1


def _instance_class(path: str) -> str:
    stem = Path(path).stem
    for cls in generators.MAP_CLASSES:
        if stem.startswith(cls):
            return cls
    return "unknown"


def parse_spec(path: str) -> ExperimentSpec:
    """Parse the flat ``key = value`` experiment-spec format."""
    kv: dict[str, str] = {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise CliError(f"cannot read spec file: {e}")
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise CliError(f"spec line {lineno}: expected 'key = value'")
        key, val = line.split("=", 1)
        kv[key.strip()] = val.strip()

    def split(s: str) -> list[str]:
        return [t for t in s.replace(",", " ").split() if t]

    missing = [k for k in ("instances", "algs", "models", "deltas", "seeds", "out")
               if k not in kv]
    if missing:
        raise CliError(f"spec missing keys: {', '.join(missing)}")
    paths: list[str] = []
    for pat in split(kv["instances"]):
        hits = sorted(glob.glob(pat))
        if not hits:
            raise CliError(f"no instances match '{pat}'")
        paths.extend(hits)
    algs = split(kv["algs"])
    for a in algs:
        if a not in ALGORITHMS:
            raise CliError(f"unknown algorithm '{a}'")
    models = [normalize_model(m) for m in split(kv["models"])]
    spec = ExperimentSpec(
        instances=paths,
        algs=algs,
        models=models,
        deltas=[int(d) for d in split(kv["deltas"])],
        seeds=[int(s) for s in split(kv["seeds"])],
        out_dir=kv["out"],
        budget_s=float(kv["budget_s"]) if "budget_s" in kv else None,
        budget_evals=int(kv["budget_evals"]) if "budget_evals" in kv else None,
        jobs=int(kv.get("jobs", "1")),
    )
    if (spec.budget_s is None) == (spec.budget_evals is None):
        raise CliError("spec needs exactly one of budget_s / budget_evals")
    if not (spec.instances and spec.algs and spec.models and spec.deltas and spec.seeds):
        raise CliError("spec lists must be non-empty")
    return spec


def _load_validated(path: str) -> Instance:
    try:
        inst = load_instance(path)
    except (OSError, InstanceFormatError, ValueError) as e:
        raise CliError(f"{path}: {e}")
    problems = validate(inst)
    if problems:
        raise CliError(f"{path}: invalid instance: "
                       + "; ".join(str(p) for p in problems))
    return inst


# ---------------------------------------------------------------------------
# generate


def cmd_generate(args) -> int:
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise CliError(f"cannot create output dir: {e}")
    manifest_lines = []
    for i in range(args.count):
        seed = args.seed + i
        params = generators.GenParams(
            map_class=args.map_class, seed=seed, rows=args.rows, cols=args.cols,
            delta=args.delta)
        try:
            inst = generators.generate(params)
        except generators.GenerationError as e:
            raise CliError(f"generation failed (seed {seed}): {e}")
        name = f"{args.map_class}_{args.seed}_{i:03d}.map"
        save_instance(inst, out / name)
        manifest_lines.append(f"{seed} {args.map_class} {name}")
    (out / "manifest.txt").write_text("\n".join(manifest_lines) + ("\n" if manifest_lines else ""),
                                      encoding="utf-8")
    print(f"wrote {args.count} instance(s) and manifest.txt to {out}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# solve


def _run_cell(inst: Instance, alg: str, model: str, delta: int, seed: int,
              budget_s, budget_evals, base=None, allow_on_objectives=True):
    inst_d = inst.with_delta(delta)
    ctx = prepare_context(inst_d, base=base,
                          allow_on_objectives=allow_on_objectives)
    if len(ctx.candidates) < delta:
        raise CliError(f"delta={delta} exceeds the {len(ctx.candidates)} candidate cells")
    config = SolverConfig(model=model, seed=seed, budget_s=budget_s,
                          budget_evals=budget_evals)
    return solve(ctx, alg, config)


def cmd_solve(args) -> int:
    inst = _load_validated(args.instance)
    if args.budget_s is None and args.budget_evals is None:
        raise SystemExit_(EXIT_USAGE, "one of --budget-s / --budget-evals is required")
    delta = args.delta if args.delta is not None else inst.delta
    rec = _run_cell(inst, args.alg, normalize_model(args.model), delta,
                    args.seed, args.budget_s, args.budget_evals,
                    allow_on_objectives=not args.no_detectors_on_objectives)
    if args.out:
        save_placement(rec.placement, args.out)
    row = {
        "instance": args.instance,
        "class": _instance_class(args.instance),
        "alg": args.alg,
        "model": normalize_model(args.model),
        "delta": delta,
        "seed": args.seed,
        "W": repr(rec.value),
        "evals": rec.evals,
        "seconds": f"{rec.seconds:.3f}",
        "deviation_pct": "",
    }
    if args.csv:
        _append_csv(args.csv, [row])
    print(",".join(str(row[c]) for c in CSV_COLUMNS))
    return EXIT_OK


def _append_csv(path, rows):
    path = Path(path)
    new = not path.exists()
    with path.open("a", newline="", encoding="utf-8") as f:
        w = csv.DictWriter(f, fieldnames=CSV_COLUMNS)
        if new:
            w.writeheader()
        w.writerows(rows)


# ---------------------------------------------------------------------------
# bench


def _bench_instance(job):
    """Worker: all runs for one instance file (context shared per delta)."""
    path, algs, models, deltas, seeds, budget_s, budget_evals = job
    inst = _load_validated(path)
    base = prepare_base(inst)
    cls = _instance_class(path)
    rows, failures = [], []
    for delta in deltas:
        for model in models:
            for alg in algs:
                for seed in seeds:
                    try:
                        rec = _run_cell(inst, alg, model, delta, seed,
                                        budget_s, budget_evals, base=base)
                        rows.append({
                            "instance": path, "class": cls, "alg": alg,
                            "model": model, "delta": delta, "seed": seed,
                            "W": rec.value, "evals": rec.evals,
                            "seconds": round(rec.seconds, 3),
                            "deviation_pct": "",
                        })
                    except Exception as e:  # record and continue
                        failures.append(f"{path} {alg} {model} d={delta} "
                                        f"seed={seed}: {e}")
    return rows, failures


def run_bench(spec: ExperimentSpec):
    """Execute a bench spec; returns (rows, summary_rows, failures)."""
    jobs = [(p, spec.algs, spec.models, spec.deltas, spec.seeds,
             spec.budget_s, spec.budget_evals) for p in spec.instances]
    rows, failures = [], []
    if spec.jobs > 1:
        with ProcessPoolExecutor(max_workers=spec.jobs) as pool:
            for r, f in pool.map(_bench_instance, jobs):
                rows.extend(r)
                failures.extend(f)
    else:
        for job in jobs:
            r, f = _bench_instance(job)
            rows.extend(r)
            failures.extend(f)

    # deviation from the best-known W per (instance, delta, model)
    best: dict[tuple, float] = {}
    for row in rows:
        key = (row["instance"], row["delta"], row["model"])
        best[key] = min(best.get(key, float("inf")), row["W"])
    for row in rows:
        b = best[(row["instance"], row["delta"], row["model"])]
        w = row["W"]
        if w == b == 0:
            row["deviation_pct"] = 0.0
        elif b == 0:
            row["deviation_pct"] = float("inf")
        else:
            row["deviation_pct"] = 100.0 * (w - b) / b
    rows.sort(key=lambda r: (r["instance"], r["alg"], r["model"], r["delta"], r["seed"]))

    groups: dict[tuple, list[float]] = {}
    for row in rows:
        groups.setdefault((row["class"], row["delta"], row["alg"], row["model"]),
                          []).append(row["deviation_pct"])
    summary = [
        {"class": cls, "delta": d, "alg": alg, "model": model,
         "mean_deviation_pct": sum(v) / len(v)}
        for (cls, d, alg, model), v in sorted(groups.items())
    ]
    return rows, summary, failures


def cmd_bench(args) -> int:
    spec = parse_spec(args.spec)
    out = Path(spec.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows, summary, failures = run_bench(spec)
    with (out / "results.csv").open("w", newline="", encoding="utf-8") as f:
        w = csv.DictWriter(f, fieldnames=CSV_COLUMNS)
        w.writeheader()
        for row in rows:
            w.writerow({**row, "W": repr(row["W"])})
    with (out / "summary.csv").open("w", newline="", encoding="utf-8") as f:
        w = csv.DictWriter(f, fieldnames=["class", "delta", "alg", "model",
                                          "mean_deviation_pct"])
        w.writeheader()
        w.writerows(summary)
    if failures:
        (out / "failures.txt").write_text("\n".join(failures) + "\n", encoding="utf-8")
        print(f"{len(failures)} run(s) failed; see failures.txt", file=sys.stderr)
        return EXIT_PARTIAL
    print(f"wrote {len(rows)} rows to {out / 'results.csv'}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# render


def cmd_render(args) -> int:
    inst = _load_validated(args.instance)
    placement = None
    if args.placement:
        try:
            placement = load_placement(args.placement)
        except (OSError, InstanceFormatError, ValueError) as e:
            raise CliError(f"{args.placement}: {e}")
        bad = [c for c in placement.cells if inst.map.blocked[c]]
        if bad:
            raise CliError(f"placement cells on blocked cells: {bad}")
    svg = render_svg(inst, placement, args.model)
    Path(args.out).write_text(svg, encoding="utf-8")
    print(f"wrote {args.out}")
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="detplace",
                description="Optimal placement of explosive-trace detectors "
                            "on discretized threat maps.")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="generate benchmark instances")
    g.add_argument("--class", dest="map_class", required=True,
                   choices=generators.MAP_CLASSES)
    g.add_argument("--count", type=int, required=True)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    g.add_argument("--rows", type=int, default=64)
    g.add_argument("--cols", type=int, default=64)
    g.add_argument("--delta", type=int, default=15)
    g.set_defaults(func=cmd_generate)

    s = sub.add_parser("solve", help="solve one instance")
    s.add_argument("--instance", required=True)
    s.add_argument("--alg", required=True, choices=ALGORITHMS)
    s.add_argument("--model", default="prop",
                   choices=["uniform", "prop", "proportional", "worst", "worst_case"])
    s.add_argument("--delta", type=int, default=None,
                   help="override the instance's detector count")
    s.add_argument("--budget-s", dest="budget_s", type=float, default=None)
    s.add_argument("--budget-evals", dest="budget_evals", type=int, default=None)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--no-detectors-on-objectives", action="store_true",
                   help="bar detectors from objective cells (permitted by default)")
    s.add_argument("--out", default=None, help="placement file to write")
    s.add_argument("--csv", default=None, help="CSV file to append the run row to")
    s.set_defaults(func=cmd_solve)

    b = sub.add_parser("bench", help="run a batch experiment spec")
    b.add_argument("--spec", required=True)
    b.set_defaults(func=cmd_bench)

    r = sub.add_parser("render", help="render an instance (and placement) to SVG")
    r.add_argument("--instance", required=True)
    r.add_argument("--placement", default=None)
    r.add_argument("--model", default=None,
                   choices=["uniform", "prop", "proportional", "worst", "worst_case"])
    r.add_argument("--out", required=True)
    r.set_defaults(func=cmd_render)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except SystemExit_ as e:
        if e.message:
            print(e.message, file=sys.stderr)
        return e.code
    except CliError as e:
        print(f"error: {e}", file=sys.stderr)
        return e.code
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
