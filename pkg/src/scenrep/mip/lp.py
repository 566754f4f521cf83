"""LP solves for the branch-and-bound engine.

Relaxations are solved by HiGHS. The hot path feeds scipy's internal
HiGHS wrapper directly with a prebuilt two-sided-row CSC model, skipping
per-call argument validation (node solves only swap variable bounds); if
that private interface is unavailable the public ``linprog`` is used.
This module also owns dual recovery in the original row order and the
singleton-row bound propagation used to shrink node LPs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from ..errors import EngineError
from .model import FEAS_TOL, SENSE_EQ, SENSE_GE, SENSE_LE, MipProblem

try:    # scipy >= 1.15 ships HiGHS via the _highspy subpackage
    from scipy.optimize._highspy._core import HighsDebugLevel as _HDL
    from scipy.optimize._highspy._core import HighsModelStatus as _HMS
    from scipy.optimize._highspy._core import ObjSense as _OS
    from scipy.optimize._highspy._core import kHighsInf as _HINF
    from scipy.optimize._highspy._core import simplex_constants as _SC
    from scipy.optimize._highspy._highs_wrapper import _highs_wrapper as _direct_highs
    _HAVE_DIRECT = True
except Exception:       # pragma: no cover - exercised only on older scipy
    _HAVE_DIRECT = False


@dataclass
class LpResult:
    status: str                 # optimal | infeasible | unbounded
    objective: float
    x: np.ndarray | None
    duals: np.ndarray | None    # d(objective)/d(active rhs) per original row
    reduced_lo: np.ndarray | None = None   # marginals of the lower bounds
    reduced_hi: np.ndarray | None = None   # marginals of the upper bounds


@dataclass
class LpCore:
    """Rows in original order as two-sided constraints lhs <= Ax <= rhs."""

    c: np.ndarray
    A: sp.csc_matrix
    lhs: np.ndarray
    rhs: np.ndarray
    rows: np.ndarray            # original row index per core row
    n_rows: int                 # row count of the originating problem


def split_rows(problem: MipProblem, row_mask: np.ndarray | None = None) -> LpCore:
    keep = np.arange(problem.n_rows) if row_mask is None else np.where(row_mask)[0]
    A = problem.A[keep].tocsc()
    senses = problem.senses[keep]
    rhs_in = problem.rhs[keep]
    lhs = np.where(senses == SENSE_LE, -np.inf, rhs_in)
    rhs = np.where(senses == SENSE_GE, np.inf, rhs_in)
    return LpCore(problem.c, A, lhs, rhs, keep, problem.n_rows)


if _HAVE_DIRECT:
    _BASE_OPTIONS = {
        "presolve": True,
        "sense": _OS.kMinimize,
        "solver": "simplex",
        "time_limit": None,
        "highs_debug_level": _HDL.kHighsDebugLevelNone,
        "dual_feasibility_tolerance": None,
        "ipm_optimality_tolerance": None,
        "log_to_console": False,
        "mip_max_nodes": None,
        "output_flag": False,
        "primal_feasibility_tolerance": None,
        "simplex_dual_edge_weight_strategy": None,
        "simplex_strategy": _SC.SimplexStrategy.kSimplexStrategyDual,
        "ipm_iteration_limit": None,
        "simplex_iteration_limit": None,
        "mip_rel_gap": None,
    }
    _NO_INTEGERS = np.empty(0, dtype=np.uint8)

    def _solve_direct(core: LpCore, lo, hi, presolve=True) -> dict:
        lb = np.where(np.isneginf(lo), -_HINF, lo).astype(float)
        ub = np.where(np.isposinf(hi), _HINF, hi).astype(float)
        lhs = np.where(np.isneginf(core.lhs), -_HINF, core.lhs)
        rhs = np.where(np.isposinf(core.rhs), _HINF, core.rhs)
        options = _BASE_OPTIONS if presolve else dict(_BASE_OPTIONS, presolve=False)
        return _direct_highs(core.c, core.A.indptr, core.A.indices, core.A.data,
                             lhs, rhs, lb, ub, _NO_INTEGERS, options)

    def solve_core(core: LpCore, lo: np.ndarray, hi: np.ndarray,
                   want_duals: bool = False, want_reduced: bool = False) -> LpResult:
        res = _solve_direct(core, lo, hi)
        status = res["status"]
        if status == _HMS.kUnboundedOrInfeasible:
            res = _solve_direct(core, lo, hi, presolve=False)
            status = res["status"]
        if status == _HMS.kInfeasible:
            return LpResult("infeasible", float("inf"), None, None)
        if status == _HMS.kUnbounded:
            return LpResult("unbounded", float("-inf"), None, None)
        if status != _HMS.kOptimal:
            raise EngineError(f"LP solve failed (HiGHS status {status}: "
                              f"{res.get('message', '')})")
        duals = None
        if want_duals:
            duals = np.zeros(core.n_rows)
            duals[core.rows] = np.asarray(res["lambda"], dtype=float)
        reduced_lo = reduced_hi = None
        if want_reduced:
            marg = np.asarray(res["marg_bnds"], dtype=float)
            reduced_lo, reduced_hi = marg[0], marg[1]
        return LpResult("optimal", float(res["fun"]), np.asarray(res["x"], dtype=float),
                        duals, reduced_lo, reduced_hi)

else:       # pragma: no cover - fallback for environments without the wrapper
    from scipy.optimize import linprog

    _STATUS = {0: "optimal", 2: "infeasible", 3: "unbounded"}

    def solve_core(core: LpCore, lo: np.ndarray, hi: np.ndarray,
                   want_duals: bool = False, want_reduced: bool = False) -> LpResult:
        ub_rows = np.isinf(core.lhs) & ~np.isinf(core.rhs)
        ge_rows = np.isinf(core.rhs) & ~np.isinf(core.lhs)
        eq_rows = ~np.isinf(core.lhs) & ~np.isinf(core.rhs)
        A = core.A.tocsr()
        A_ub = sp.vstack([A[ub_rows], -A[ge_rows]], format="csr") \
            if (ub_rows.any() or ge_rows.any()) else None
        b_ub = np.concatenate([core.rhs[ub_rows], -core.lhs[ge_rows]])
        A_eq = A[eq_rows] if eq_rows.any() else None
        res = linprog(core.c, A_ub=A_ub, b_ub=b_ub if A_ub is not None else None,
                      A_eq=A_eq, b_eq=core.rhs[eq_rows] if A_eq is not None else None,
                      bounds=np.column_stack((lo, hi)), method="highs")
        if res.status not in _STATUS:
            raise EngineError(f"LP solve failed (scipy status {res.status}: {res.message})")
        status = _STATUS[res.status]
        if status != "optimal":
            return LpResult(status, float("inf") if status == "infeasible" else float("-inf"),
                            None, None)
        duals = None
        if want_duals:
            duals = np.zeros(core.n_rows)
            marg = res.ineqlin.marginals
            n_le = int(ub_rows.sum())
            duals[core.rows[ub_rows]] = marg[:n_le]
            duals[core.rows[ge_rows]] = -marg[n_le:]
            duals[core.rows[eq_rows]] = res.eqlin.marginals
        reduced_lo = np.asarray(res.lower.marginals) if want_reduced else None
        reduced_hi = np.asarray(res.upper.marginals) if want_reduced else None
        return LpResult("optimal", float(res.fun), np.asarray(res.x, dtype=float),
                        duals, reduced_lo, reduced_hi)


def solve_lp(problem: MipProblem) -> LpResult:
    """Solve the LP relaxation (integrality ignored), with duals.

    Duals follow the d(objective)/d(rhs) convention per original row
    (the active side for two-sided rows). Infeasible/unbounded are
    normal statuses, not failures.
    """
    core = split_rows(problem)
    return solve_core(core, problem.lo, problem.hi, want_duals=True)


def propagate_singletons(problem: MipProblem) -> tuple[np.ndarray, np.ndarray, np.ndarray, bool]:
    """Fold single-nonzero rows into variable bounds.

    Returns (row_keep_mask, lo, hi, feasible). The only presolve the
    engine performs; it recovers bounds that instance lowerings encode
    as constraint rows (e.g. 0 <= b <= 1).
    """
    A = problem.A
    lo = problem.lo.copy()
    hi = problem.hi.copy()
    keep = np.ones(problem.n_rows, dtype=bool)
    nnz_per_row = np.diff(A.indptr)
    for r in np.where(nnz_per_row == 1)[0]:
        j = A.indices[A.indptr[r]]
        a = A.data[A.indptr[r]]
        if a == 0.0:
            continue
        bound = problem.rhs[r] / a
        sense = problem.senses[r]
        if sense == SENSE_EQ:
            lo[j] = max(lo[j], bound)
            hi[j] = min(hi[j], bound)
        elif (sense == SENSE_LE) == (a > 0):
            hi[j] = min(hi[j], bound)
        else:
            lo[j] = max(lo[j], bound)
        keep[r] = False
    feasible = not np.any(lo > hi + FEAS_TOL)
    return keep, lo, hi, feasible
