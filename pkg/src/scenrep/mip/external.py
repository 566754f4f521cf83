"""File bridge to external MIP solvers.

The backend is a command template with {input} {output} {gap}
{timelimit} {threads} placeholders. The solver must write a solution
file with one ``objective <value>`` line followed by ``<name> <value>``
pairs; optional ``status <s>`` and ``bound <v>`` lines are honored.
"""

from __future__ import annotations

import shlex
import subprocess
import time

import numpy as np

from ..errors import BackendError
from .model import FEAS_TOL, INT_TOL, SENSE_EQ, SENSE_GE, MipProblem, MipSolution, SolverConfig, relative_gap
from .mps import _col_name, write_mps


def read_external_solution(path, problem: MipProblem | None = None) -> MipSolution:
    """Parse an external solution file; verify against `problem` if given.

    With a problem, the objective is recomputed from x and feasibility is
    checked within the engine tolerances; violations raise BackendError.
    """
    objective = None
    bound = None
    status = "optimal"
    values: dict[str, float] = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            parts = raw.split()
            if not parts or parts[0].startswith("#"):
                continue
            key = parts[0].lower()
            try:
                if key == "objective":
                    objective = float(parts[1])
                elif key == "bound":
                    bound = float(parts[1])
                elif key == "status":
                    status = parts[1]
                else:
                    values[parts[0]] = float(parts[1])
            except (IndexError, ValueError) as exc:
                raise BackendError(f"{path}:{lineno}: cannot parse solution line {raw!r}: {exc}") from exc
    if objective is None:
        raise BackendError(f"{path}: no 'objective' line in solution file")

    if problem is None:
        x = None
    else:
        x = np.zeros(problem.n_vars)
        for name, val in values.items():
            try:
                j = int(name[1:]) - 1
                assert name == _col_name(j)
            except (ValueError, AssertionError):
                raise BackendError(f"{path}: unknown variable name {name!r}") from None
            x[j] = val
        _check_feasible(problem, x, path)
        objective = float(problem.c @ x)

    if bound is None:
        bound = objective
    return MipSolution(status, objective, bound, relative_gap(objective, bound), x)


def _check_feasible(problem: MipProblem, x: np.ndarray, path) -> None:
    if np.any(x < problem.lo - FEAS_TOL) or np.any(x > problem.hi + FEAS_TOL):
        raise BackendError(f"{path}: solution violates variable bounds")
    xi = x[problem.is_integer]
    if xi.size and np.max(np.abs(xi - np.round(xi)), initial=0.0) > INT_TOL:
        raise BackendError(f"{path}: solution violates integrality")
    act = problem.A @ x
    resid = act - problem.rhs
    viol = np.zeros_like(resid)
    le = problem.senses == "L"
    ge = problem.senses == SENSE_GE
    eq = problem.senses == SENSE_EQ
    viol[le] = resid[le]
    viol[ge] = -resid[ge]
    viol[eq] = np.abs(resid[eq])
    if viol.size and float(np.max(viol, initial=0.0)) > FEAS_TOL:
        raise BackendError(f"{path}: solution violates constraints by {float(np.max(viol)):.3e}")


def solve_external(problem: MipProblem, cfg: SolverConfig, workdir) -> MipSolution:
    """Write MPS, run the backend command, parse and verify the solution."""
    in_path = f"{workdir}/problem.mps"
    out_path = f"{workdir}/solution.txt"
    write_mps(problem, in_path)
    command = cfg.backend.format(
        input=in_path, output=out_path,
        gap=cfg.gap_limit, timelimit=cfg.time_limit, threads=cfg.threads)
    t0 = time.monotonic()
    proc = subprocess.run(shlex.split(command), capture_output=True, text=True)
    elapsed = time.monotonic() - t0
    if proc.returncode != 0:
        raise BackendError(
            f"external solver exited with {proc.returncode}: {command}\n"
            f"stdout: {proc.stdout[-2000:]}\nstderr: {proc.stderr[-2000:]}")
    try:
        solution = read_external_solution(out_path, problem)
    except FileNotFoundError:
        raise BackendError(f"external solver wrote no solution file at {out_path}") from None
    solution.wall_time = elapsed
    if solution.x is not None and np.isfinite(solution.best_objective):
        solution.incumbent_trajectory = [(elapsed, solution.best_objective)]
    return solution
