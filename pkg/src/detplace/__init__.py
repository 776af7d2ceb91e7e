"""Optimal placement of explosive-trace detectors on discretized threat maps.

Provides exact 2-D geometry primitives, visibility-graph shortest paths,
an expected-casualty objective under three attacker models, four placement
solvers (greedy, hill climbing, tabu search, evolutionary), procedural
benchmark generators and a batch CLI.
"""

from .evaluation import (EvalContext, EvalResult, MODELS, PROPORTIONAL, UNIFORM,
                         WORST_CASE, evaluate, prepare_context)
from .instance import (GridMap, Instance, Objective, Placement, candidate_cells,
                       load_instance, save_instance, validate)
from .pathfinding import all_paths, build_visibility_graph, shortest_path, truncate
from .solvers import (ALGORITHMS, RunRecord, SolverConfig, evolutionary, greedy,
                      hill_climb, run_with_restarts, solve, tabu_search)

__version__ = "0.1.0"

__all__ = [
    "ALGORITHMS", "EvalContext", "EvalResult", "GridMap", "Instance", "MODELS",
    "Objective", "PROPORTIONAL", "Placement", "RunRecord", "SolverConfig",
    "UNIFORM", "WORST_CASE", "all_paths", "build_visibility_graph",
    "candidate_cells", "evaluate", "evolutionary", "greedy", "hill_climb",
    "load_instance", "prepare_context", "run_with_restarts", "save_instance",
    "shortest_path", "solve", "tabu_search", "truncate", "validate",
]
