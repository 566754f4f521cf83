"""Branch-and-bound over LP relaxations.

Child LPs are solved when nodes are created, so the best-bound heap
orders true bounds and the reported gap is exact. Branching picks the
fractional integer variable with the largest cost-weighted
fractionality (lowest index on ties). Node selection plunges toward the
rounding of the branch variable (depth-first until a first incumbent
exists, boundedly afterwards) and otherwise follows best bound.
Incumbents come from integral node LPs, an optional caller-supplied
warm start, and an LP-guided diving heuristic. With an incumbent in
hand, root reduced costs fix integer variables that provably cannot
move. Deterministic: no randomized choices anywhere.
"""

from __future__ import annotations

import heapq
import itertools
import time

import numpy as np

from ..errors import ModelError
from .lp import LpCore, propagate_singletons, solve_core, split_rows
from .model import (FEAS_TOL, INT_TOL, MipProblem, MipSolution, SolverConfig,
                    max_violation, relative_gap)

HEURISTIC_PERIOD = 40       # run the diving heuristic every this many nodes
PLUNGE_LIMIT = 10           # consecutive dive levels before best-bound resumes
DIVE_PASSES = 200           # max LP re-solves inside one heuristic dive
PRUNE_TOL = 1e-9


class _Unbounded(Exception):
    pass


class _Node:
    __slots__ = ("bound", "lo", "hi", "x", "depth", "reduced")

    def __init__(self, bound, lo, hi, x, depth):
        self.bound = bound
        self.lo = lo
        self.hi = hi
        self.x = x
        self.depth = depth
        self.reduced = None


def _with(arr: np.ndarray, j: int, value: float) -> np.ndarray:
    out = arr.copy()
    out[j] = value
    return out


def _dive(core: LpCore, lo, hi, int_idx, x0, obj0, lp_counter, deadline,
          cutoff: float) -> tuple[float, np.ndarray] | None:
    """LP-guided rounding with one backtrack per fixed variable.

    Bulk-fixes integer variables already at integral values, then walks
    the rest one at a time (least-fractional first, flipping the
    rounding direction once on infeasibility). Aborts when the dive LP
    exceeds the incumbent cutoff. Returns (objective, x) or None.
    """
    lo = lo.copy()
    hi = hi.copy()
    fixed = np.zeros(int_idx.size, dtype=bool)
    x, obj = x0, obj0
    for _ in range(DIVE_PASSES):
        if obj >= cutoff - PRUNE_TOL:
            return None
        xi = x[int_idx]
        dist = np.abs(xi - np.round(xi))
        if np.max(dist, initial=0.0) <= INT_TOL:
            return obj, x
        settled = ~fixed & (dist <= INT_TOL)
        if np.any(settled):
            sel = int_idx[settled]
            vals = np.clip(np.round(x[sel]), lo[sel], hi[sel])
            lo[sel] = vals
            hi[sel] = vals
            fixed |= settled
        open_pos = np.where(~fixed & (dist > INT_TOL))[0]
        if open_pos.size == 0:
            return obj, x
        pick = open_pos[int(np.argmin(dist[open_pos]))]
        j = int(int_idx[pick])
        base = np.round(x[j])
        for value in (base, 2.0 * np.floor(x[j]) + 1.0 - base):  # round, then flip
            value = min(max(value, lo[j]), hi[j])
            res = solve_core(core, _with(lo, j, value), _with(hi, j, value))
            lp_counter[0] += 1
            if res.status == "optimal":
                lo[j] = hi[j] = value
                fixed[pick] = True
                x, obj = res.x, res.objective
                break
            if time.monotonic() > deadline:
                return None
        else:
            return None
        if time.monotonic() > deadline:
            return None
    return None


def branch_and_bound(problem: MipProblem, cfg: SolverConfig,
                     warm_start: np.ndarray | None = None,
                     heuristic=None, on_node=None) -> MipSolution:
    """Solve a MIP internally under the gap/time stopping contract.

    warm_start, if given, must be feasible within the engine tolerances
    and seeds the incumbent. heuristic, if given, is called with each
    node's LP solution and may return a feasible full-length solution to
    install as an incumbent (it replaces the built-in diving heuristic).
    on_node, if given, is called with (node_bound, incumbent_objective)
    after each node LP solve; used by property tests to watch weak duality.
    """
    t_start = time.monotonic()
    deadline = t_start + cfg.time_limit
    lp_calls = [0]
    nodes = 0

    keep, lo0, hi0, feasible = propagate_singletons(problem)
    int_idx = np.where(problem.is_integer)[0]
    if feasible:
        # Integer bounds tighten to integral values immediately.
        lo0[int_idx] = np.ceil(lo0[int_idx] - INT_TOL)
        hi0[int_idx] = np.floor(hi0[int_idx] + INT_TOL)
        feasible = not np.any(lo0 > hi0 + FEAS_TOL)
    if not feasible:
        return MipSolution("infeasible", float("inf"), float("inf"), 0.0, None,
                           wall_time=time.monotonic() - t_start)
    core = split_rows(problem, keep)
    branch_weight = np.maximum(np.abs(problem.c[int_idx]), 1.0)

    incumbent_obj = float("inf")
    incumbent_x = None
    trajectory: list[tuple[float, float]] = []

    def record_incumbent(obj, x):
        nonlocal incumbent_obj, incumbent_x
        if obj < incumbent_obj - 1e-12:
            incumbent_obj = obj
            incumbent_x = x.copy()
            trajectory.append((time.monotonic() - t_start, obj))

    if warm_start is not None:
        violation = max_violation(problem, warm_start)
        if violation > FEAS_TOL * 10:
            raise ModelError(f"warm start violates the problem by {violation:.3e}")
        record_incumbent(float(problem.c @ np.asarray(warm_start, dtype=float)),
                         np.asarray(warm_start, dtype=float))

    def solve_node(lo, hi, depth, want_reduced=False):
        """LP-evaluate a candidate node; returns a _Node, or None if closed."""
        nonlocal nodes
        res = solve_core(core, lo, hi, want_reduced=want_reduced)
        lp_calls[0] += 1
        nodes += 1
        if res.status == "infeasible":
            return None
        if res.status == "unbounded":
            raise _Unbounded
        if on_node is not None:
            on_node(res.objective, incumbent_obj)
        if res.objective >= incumbent_obj - PRUNE_TOL:
            return None
        xi = res.x[int_idx]
        if np.max(np.abs(xi - np.round(xi)), initial=0.0) <= INT_TOL:
            record_incumbent(res.objective, res.x)
            return None
        node = _Node(res.objective, lo, hi, res.x, depth)
        if want_reduced:
            node.reduced = (res.reduced_lo, res.reduced_hi)
        return node

    heap: list[tuple[float, int, _Node]] = []
    plunge: list[_Node] = []
    tick = itertools.count()
    dive_run = 0

    def open_bound() -> float:
        best = heap[0][0] if heap else float("inf")
        for node in plunge:
            best = min(best, node.bound)
        return min(best, incumbent_obj)

    def finish(status: str) -> MipSolution:
        bound = open_bound()
        if incumbent_x is not None:
            gap = relative_gap(incumbent_obj, bound)
            if status in ("gap_limit", "time_limit") and gap <= 1e-9:
                status = "optimal"
        else:
            gap = float("inf")
        return MipSolution(status, incumbent_obj, bound, gap, incumbent_x,
                           trajectory, nodes, lp_calls[0], time.monotonic() - t_start)

    try:
        root = solve_node(lo0, hi0, 0, want_reduced=True)
        if root is not None and incumbent_x is not None:
            # Reduced-cost fixing: integer vars whose unit move already
            # exceeds the incumbent can be pinned at their root bound.
            slack = incumbent_obj - root.bound - PRUNE_TOL
            red_lo, red_hi = root.reduced
            at_lo = int_idx[(np.abs(root.x[int_idx] - lo0[int_idx]) <= INT_TOL)
                            & (red_lo[int_idx] > slack)]
            hi0[at_lo] = lo0[at_lo]
            at_hi = int_idx[(np.abs(root.x[int_idx] - hi0[int_idx]) <= INT_TOL)
                            & (-red_hi[int_idx] > slack)]
            lo0[at_hi] = hi0[at_hi]
            root.lo, root.hi = lo0, hi0
        if root is not None:
            plunge.append(root)

        while heap or plunge:
            if incumbent_x is not None and \
                    relative_gap(incumbent_obj, open_bound()) <= cfg.gap_limit:
                return finish("gap_limit")
            if time.monotonic() > deadline:
                return finish("time_limit")

            if plunge:
                node = plunge.pop()
                dive_run += 1
            else:
                node = heapq.heappop(heap)[2]
                dive_run = 0
            if node.bound >= incumbent_obj - PRUNE_TOL:
                continue

            if heuristic is not None:
                candidate = heuristic(node.x)
                if candidate is not None:
                    candidate = np.asarray(candidate, dtype=float)
                    if max_violation(problem, candidate) <= FEAS_TOL * 10:
                        record_incumbent(float(problem.c @ candidate), candidate)
            elif nodes == 1 or nodes % HEURISTIC_PERIOD == 0:
                found = _dive(core, node.lo, node.hi, int_idx, node.x, node.bound,
                              lp_calls, deadline, incumbent_obj)
                if found is not None:
                    record_incumbent(*found)
                if time.monotonic() > deadline:
                    return finish("time_limit")

            # Cost-weighted most-fractional branching, lowest index on ties.
            xi = node.x[int_idx]
            dist = np.abs(xi - np.round(xi))
            frac = np.where(dist > INT_TOL)[0]
            pick = int(np.argmax((dist * branch_weight)[frac]))
            j = int(int_idx[frac[pick]])
            xj = node.x[j]

            down = solve_node(node.lo, _with(node.hi, j, np.floor(xj)), node.depth + 1)
            up = solve_node(_with(node.lo, j, np.ceil(xj)), node.hi, node.depth + 1)
            # Plunge toward the rounding of the branch variable.
            dive, stash = (up, down) if xj - np.floor(xj) >= 0.5 else (down, up)
            if stash is not None:
                heapq.heappush(heap, (stash.bound, next(tick), stash))
            if dive is not None:
                if incumbent_x is None or dive_run < PLUNGE_LIMIT:
                    plunge.append(dive)
                else:
                    heapq.heappush(heap, (dive.bound, next(tick), dive))
    except _Unbounded:
        return MipSolution("unbounded", float("-inf"), float("-inf"), 0.0, None,
                           trajectory, nodes, lp_calls[0], time.monotonic() - t_start)

    if incumbent_x is None:
        return MipSolution("infeasible", float("inf"), float("inf"), 0.0, None,
                           trajectory, nodes, lp_calls[0], time.monotonic() - t_start)
    return finish("optimal")
