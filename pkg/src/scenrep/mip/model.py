"""Containers for mixed-integer linear programs and solve results."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from ..errors import ModelError

GAP_EPS = 1e-10
FEAS_TOL = 1e-6
INT_TOL = 1e-5

SENSE_LE = "L"
SENSE_GE = "G"
SENSE_EQ = "E"


@dataclass
class MipProblem:
    """Minimization MIP: min c'x s.t. rows (<=, >=, =), bounds, integrality.

    Treated as immutable after construction; safe to share across threads.
    """

    c: np.ndarray
    A: sp.csr_matrix
    senses: np.ndarray          # '<U1' array of 'L' / 'G' / 'E' per row
    rhs: np.ndarray
    lo: np.ndarray              # -inf allowed
    hi: np.ndarray              # +inf allowed
    is_integer: np.ndarray      # bool per variable
    name: str = "mip"

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float)
        if not sp.issparse(self.A):
            self.A = sp.csr_matrix(np.atleast_2d(np.asarray(self.A, dtype=float)))
        else:
            self.A = self.A.tocsr().astype(float)
        self.senses = np.asarray(self.senses, dtype="<U1")
        self.rhs = np.asarray(self.rhs, dtype=float)
        self.lo = np.asarray(self.lo, dtype=float)
        self.hi = np.asarray(self.hi, dtype=float)
        self.is_integer = np.asarray(self.is_integer, dtype=bool)

        n = self.c.shape[0]
        if n < 1:
            raise ModelError("problem needs at least one variable")
        if self.A.shape[1] != n:
            raise ModelError(f"matrix has {self.A.shape[1]} columns, objective has {n}")
        m = self.A.shape[0]
        if not (self.senses.shape[0] == self.rhs.shape[0] == m):
            raise ModelError("row senses/rhs inconsistent with matrix")
        if not np.all(np.isin(self.senses, (SENSE_LE, SENSE_GE, SENSE_EQ))):
            raise ModelError("row senses must be 'L', 'G' or 'E'")
        if not np.all(np.isfinite(self.rhs)):
            raise ModelError("rhs must be finite")
        if np.any(np.abs(self.rhs) >= 1e18):
            raise ModelError("rhs magnitudes must stay below 1e18 (solver range)")
        for arr, label in ((self.lo, "lower"), (self.hi, "upper"), (self.is_integer, "integrality")):
            if arr.shape[0] != n:
                raise ModelError(f"{label} bounds length != {n}")
        if np.any(self.lo > self.hi + FEAS_TOL):
            raise ModelError("variable with lo > hi")

    @property
    def n_vars(self) -> int:
        return self.c.shape[0]

    @property
    def n_rows(self) -> int:
        return self.A.shape[0]


@dataclass
class MipSolution:
    """Result of a MIP solve, including the incumbent trajectory.

    gap = |best_objective - best_bound| / max(|best_objective|, 1e-10).
    Trajectory entries are (monotonic seconds since solve start, objective)
    recorded at each incumbent improvement (non-increasing objectives).
    """

    status: str                 # optimal | gap_limit | time_limit | infeasible | unbounded
    best_objective: float
    best_bound: float
    gap: float
    x: np.ndarray | None
    incumbent_trajectory: list[tuple[float, float]] = field(default_factory=list)
    nodes: int = 0
    lp_calls: int = 0
    wall_time: float = 0.0

    @property
    def has_solution(self) -> bool:
        return self.x is not None


def relative_gap(objective: float, bound: float) -> float:
    if not np.isfinite(objective):
        return float("inf")
    return abs(objective - bound) / max(abs(objective), GAP_EPS)


def max_violation(problem: MipProblem, x: np.ndarray) -> float:
    """Worst constraint/bound/integrality violation of x (0 if feasible)."""
    x = np.asarray(x, dtype=float)
    if x.shape != (problem.n_vars,):
        raise ModelError(f"solution has shape {x.shape}, expected ({problem.n_vars},)")
    worst = max(float(np.max(problem.lo - x, initial=0.0)),
                float(np.max(x - problem.hi, initial=0.0)))
    xi = x[problem.is_integer]
    if xi.size:
        worst = max(worst, float(np.max(np.abs(xi - np.round(xi)))))
    resid = problem.A @ x - problem.rhs
    for sense, sign in ((SENSE_LE, 1.0), (SENSE_GE, -1.0)):
        mask = problem.senses == sense
        if mask.any():
            worst = max(worst, float(np.max(sign * resid[mask], initial=0.0)))
    eq = problem.senses == SENSE_EQ
    if eq.any():
        worst = max(worst, float(np.max(np.abs(resid[eq]))))
    return worst


@dataclass
class SolverConfig:
    """Stopping contract and backend selection for MIP solves.

    backend is either "internal" or an external command template with
    {input} {output} {gap} {timelimit} {threads} placeholders.
    """

    gap_limit: float = 0.02
    time_limit: float = 600.0
    threads: int = 1
    backend: str = "internal"
    seed: int = 0

    def __post_init__(self):
        if self.gap_limit < 0:
            raise ModelError("gap_limit must be >= 0")
        if self.time_limit <= 0:
            raise ModelError("time_limit must be > 0")
        if self.threads < 1:
            raise ModelError("threads must be >= 1")


def exact_config(time_limit: float = 600.0) -> SolverConfig:
    """Config for solves that should run to (numerically) proven optimality."""
    return SolverConfig(gap_limit=1e-9, time_limit=time_limit)
