"""Mixed-integer linear programming engine.

Internal LP-based branch-and-bound with incumbent-trajectory recording,
plus an MPS file bridge to external solvers.
"""

from __future__ import annotations

import tempfile

from .bnb import branch_and_bound
from .external import read_external_solution, solve_external
from .lp import LpResult, solve_lp
from .model import (FEAS_TOL, INT_TOL, MipProblem, MipSolution, SolverConfig,
                    exact_config, relative_gap)
from .mps import read_mps, write_mps

__all__ = [
    "FEAS_TOL", "INT_TOL", "LpResult", "MipProblem", "MipSolution",
    "SolverConfig", "branch_and_bound", "exact_config", "read_external_solution",
    "read_mps", "relative_gap", "solve_lp", "solve_mip", "solve_external",
    "write_mps",
]


def solve_mip(problem: MipProblem, cfg: SolverConfig | None = None,
              warm_start=None, heuristic=None, on_node=None) -> MipSolution:
    """Solve a MIP with the configured backend (internal by default).

    warm_start (internal backend only) seeds the incumbent with a
    feasible solution vector; heuristic is an optional per-node callback
    proposing incumbent solutions (see branch_and_bound).
    """
    cfg = cfg or SolverConfig()
    if cfg.backend == "internal":
        return branch_and_bound(problem, cfg, warm_start=warm_start,
                                heuristic=heuristic, on_node=on_node)
    with tempfile.TemporaryDirectory(prefix="scenrep-mip-") as workdir:
        return solve_external(problem, cfg, workdir)
