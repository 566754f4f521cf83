"""Independent reference computations used by the test suite.

Everything here deliberately avoids the package's branch-and-bound path:
LPs are checked by basic-solution enumeration, MIPs by exhaustive
enumeration over integer assignments (with plain scipy LP completions),
and larger cross-checks go through scipy's own MILP solver.
"""

from __future__ import annotations

import itertools

import numpy as np
import scipy.sparse as sp
from scipy.optimize import Bounds, LinearConstraint, linprog, milp

from scenrep.mip import MipProblem


def lp_vertex_enumeration(c, A_ub, b_ub, lo=None) -> float:
    """Optimal value of min c'x s.t. A_ub x <= b_ub, x >= lo (default 0).

    Enumerates all basic solutions (n active constraints among rows and
    bounds) and takes the best feasible one. Assumes a bounded feasible
    problem with at least one vertex optimum.
    """
    c = np.asarray(c, dtype=float)
    A_ub = np.asarray(A_ub, dtype=float)
    b_ub = np.asarray(b_ub, dtype=float)
    n = c.shape[0]
    lo = np.zeros(n) if lo is None else np.asarray(lo, dtype=float)

    rows = [(A_ub[i], b_ub[i]) for i in range(A_ub.shape[0])]
    rows += [(-np.eye(n)[j], -lo[j]) for j in range(n)]
    best = np.inf
    for combo in itertools.combinations(range(len(rows)), n):
        A_active = np.array([rows[k][0] for k in combo])
        b_active = np.array([rows[k][1] for k in combo])
        try:
            x = np.linalg.solve(A_active, b_active)
        except np.linalg.LinAlgError:
            continue
        if np.all(A_ub @ x <= b_ub + 1e-9) and np.all(x >= lo - 1e-9):
            best = min(best, float(c @ x))
    return best


def enumerate_binary_mip(c, A_ub, b_ub) -> tuple[float, np.ndarray | None]:
    """Exhaustive optimum of a pure-binary MIP min c'x, A_ub x <= b_ub."""
    c = np.asarray(c, dtype=float)
    A_ub = np.asarray(A_ub, dtype=float)
    b_ub = np.asarray(b_ub, dtype=float)
    n = c.shape[0]
    grid = np.array(list(itertools.product((0.0, 1.0), repeat=n)))
    feasible = np.all(grid @ A_ub.T <= b_ub + 1e-9, axis=1)
    if not feasible.any():
        return np.inf, None
    values = grid[feasible] @ c
    k = int(np.argmin(values))
    return float(values[k]), grid[feasible][k]


def milp_reference(problem: MipProblem, rel_gap: float = 1e-9,
                   time_limit: float = 120.0):
    """Solve a MipProblem with scipy's MILP (HiGHS), independent of the
    package's own branch-and-bound."""
    le = problem.senses == "L"
    ge = problem.senses == "G"
    eq = problem.senses == "E"
    blocks, lbs, ubs = [], [], []
    if le.any():
        blocks.append(problem.A[le])
        lbs.append(np.full(int(le.sum()), -np.inf))
        ubs.append(problem.rhs[le])
    if ge.any():
        blocks.append(problem.A[ge])
        lbs.append(problem.rhs[ge])
        ubs.append(np.full(int(ge.sum()), np.inf))
    if eq.any():
        blocks.append(problem.A[eq])
        lbs.append(problem.rhs[eq])
        ubs.append(problem.rhs[eq])
    constraints = LinearConstraint(sp.vstack(blocks, format="csr"),
                                   np.concatenate(lbs), np.concatenate(ubs))
    res = milp(problem.c, constraints=constraints,
               bounds=Bounds(problem.lo, problem.hi),
               integrality=problem.is_integer.astype(int),
               options={"mip_rel_gap": rel_gap, "time_limit": time_limit})
    return res


def cflp_brute_force(inst) -> float:
    """Exact extensive-form optimum by joint enumeration of all binaries.

    Enumerates cardinality-feasible open patterns and, per pattern, all
    service-link patterns jointly across scenarios (links from closed
    facilities are fixed shut); the remaining (v, y, w) problem is a
    plain LP. Only viable for n <= 3 with very few scenarios.
    """
    from scenrep.cflp import big_m_values, cardinality_bounds

    n, m = inst.n, inst.m
    lb, ub = cardinality_bounds(n)
    m_total, m_col = big_m_values(inst)
    best = np.inf
    for pattern in itertools.product((0, 1), repeat=n):
        k_open = sum(pattern)
        if not lb <= k_open <= ub:
            continue
        open_idx = [i for i in range(n) if pattern[i]]
        links = [(i, j) for i in open_idx for j in range(n)]
        for choice in itertools.product((0, 1), repeat=len(links) * m):
            u = np.zeros((m, n, n))
            for s in range(m):
                for k, (i, j) in enumerate(links):
                    u[s, i, j] = choice[s * len(links) + k]
            value = _cflp_lp_given_pattern(inst, pattern, u, m_total, m_col)
            best = min(best, value)
    return best


def _cflp_lp_given_pattern(inst, pattern, u, m_total, m_col) -> float:
    """LP over (v, y, w) for fixed open pattern and link choices.

    Variables: v (n), y (m, n, n) flattened, then emergency supply
    w (m, n). Minimizes capacity, expected transport, and expected
    emergency cost given the fixed facilities and links.
    """
    from scenrep.cflp import emergency_prices

    n, m = inst.n, inst.m
    p = 1.0 / m
    nv = n + m * n * n + m * n
    rho = emergency_prices(inst)

    def yvar(s, i, j):
        return n + s * n * n + i * n + j

    def wvar(s, j):
        return n + m * n * n + s * n + j

    c = np.zeros(nv)
    c[:n] = inst.c_v
    fixed_cost = float(np.dot(inst.c_f, pattern))
    for s in range(m):
        fixed_cost += p * float(np.sum(inst.c_tf * u[s]))
        for i in range(n):
            for j in range(n):
                c[yvar(s, i, j)] = p * inst.c_tv[i, j]
        for j in range(n):
            c[wvar(s, j)] = p * rho[j]

    rows, lbs, ubs = [], [], []

    def add(coefs, lo, hi):
        row = np.zeros(nv)
        for idx, val in coefs:
            row[idx] += val
        rows.append(row)
        lbs.append(lo)
        ubs.append(hi)

    for i in range(n):                         # v_i <= M b_i
        add([(i, 1.0)], -np.inf, m_total * pattern[i])
    for s in range(m):
        for i in range(n):                     # supply
            add([(yvar(s, i, j), 1.0) for j in range(n)] + [(i, -1.0)], -np.inf, 0.0)
        for j in range(n):                     # demand equality (with emergency)
            add([(yvar(s, i, j), 1.0) for i in range(n)] + [(wvar(s, j), 1.0)],
                inst.demand[s, j], inst.demand[s, j])
        for i in range(n):                     # link caps
            for j in range(n):
                add([(yvar(s, i, j), 1.0)], -np.inf, m_col[j] * u[s, i, j])

    res = linprog(c, A_ub=np.array([r for r, lo, _ in zip(rows, lbs, ubs) if lo == -np.inf]),
                  b_ub=np.array([hi for lo, hi in zip(lbs, ubs) if lo == -np.inf]),
                  A_eq=np.array([r for r, lo, hi in zip(rows, lbs, ubs) if lo == hi]),
                  b_eq=np.array([hi for lo, hi in zip(lbs, ubs) if lo == hi]),
                  bounds=[(0, None)] * nv, method="highs")
    if res.status != 0:
        return np.inf
    return fixed_cost + float(res.fun)
