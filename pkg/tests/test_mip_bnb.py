import numpy as np
import pytest
import scipy.sparse as sp

from scenrep.errors import ModelError
from scenrep.mip import MipProblem, SolverConfig, exact_config, solve_mip

from conftest import random_binary_mip
from oracles import enumerate_binary_mip


def knapsack(weights, profits, capacity) -> MipProblem:
    n = len(weights)
    return MipProblem(c=-np.asarray(profits, dtype=float),
                      A=sp.csr_matrix(np.asarray(weights, dtype=float)[None, :]),
                      senses=np.array(["L"]), rhs=np.array([float(capacity)]),
                      lo=np.zeros(n), hi=np.ones(n), is_integer=np.ones(n, dtype=bool))


KNAPSACK = knapsack(
    weights=[23, 26, 20, 18, 32, 27, 29, 26, 30, 27],
    profits=[505, 352, 458, 220, 354, 414, 498, 545, 473, 543],
    capacity=67)


def test_knapsack_matches_enumeration():
    expected, _ = enumerate_binary_mip(KNAPSACK.c, KNAPSACK.A.toarray(), KNAPSACK.rhs)
    sol = solve_mip(KNAPSACK, exact_config())
    assert sol.status == "optimal"
    assert sol.best_objective == pytest.approx(expected, abs=1e-6)
    assert np.max(np.abs(sol.x - np.round(sol.x))) <= 1e-5


def test_lp_integral_problem_solves_at_root():
    # balanced transportation with integer data is totally unimodular
    supply = [3.0, 4.0]
    demand = [2.0, 2.0, 3.0]
    cost = np.array([[2.0, 3.0, 1.0], [5.0, 4.0, 8.0]])
    rows, rhs, senses = [], [], []
    for i in range(2):
        row = np.zeros(6)
        row[3 * i:3 * i + 3] = 1.0
        rows.append(row)
        rhs.append(supply[i])
        senses.append("L")
    for j in range(3):
        row = np.zeros(6)
        row[[j, 3 + j]] = 1.0
        rows.append(row)
        rhs.append(demand[j])
        senses.append("E")
    problem = MipProblem(c=cost.ravel(), A=sp.csr_matrix(np.array(rows)),
                         senses=np.array(senses), rhs=np.array(rhs),
                         lo=np.zeros(6), hi=np.full(6, np.inf),
                         is_integer=np.ones(6, dtype=bool))
    sol = solve_mip(problem, exact_config())
    assert sol.status == "optimal"
    assert sol.nodes == 1          # root LP already integral: zero branches


def test_random_mips_match_enumeration_spot():
    rng = np.random.default_rng(7)
    for _ in range(15):
        problem = random_binary_mip(rng)
        expected, _ = enumerate_binary_mip(problem.c, problem.A.toarray(), problem.rhs)
        sol = solve_mip(problem, exact_config())
        if np.isinf(expected):
            assert sol.status == "infeasible"
        else:
            assert sol.best_objective == pytest.approx(expected, abs=1e-6)


def test_infeasible_and_unbounded():
    bad = MipProblem(c=[1.0], A=sp.csr_matrix(np.array([[1.0], [-1.0]])),
                     senses=["L", "L"], rhs=[1.0, -3.0], lo=[0.0], hi=[10.0],
                     is_integer=[True])
    assert solve_mip(bad, exact_config()).status == "infeasible"
    free = MipProblem(c=[-1.0], A=sp.csr_matrix(np.array([[0.0]])), senses=["L"],
                      rhs=[1.0], lo=[0.0], hi=[np.inf], is_integer=[True])
    assert solve_mip(free, exact_config()).status == "unbounded"


def test_same_seed_single_thread_is_deterministic():
    rng = np.random.default_rng(99)
    problem = random_binary_mip(rng, n_max=12, m_max=8)
    a = solve_mip(problem, exact_config())
    b = solve_mip(problem, exact_config())
    assert a.best_objective == b.best_objective
    assert a.nodes == b.nodes and a.lp_calls == b.lp_calls
    assert np.array_equal(a.x, b.x)
    assert [obj for _, obj in a.incumbent_trajectory] == \
           [obj for _, obj in b.incumbent_trajectory]


def test_weak_duality_and_bound_invariants():
    bounds_seen = []
    sol = solve_mip(KNAPSACK, exact_config(),
                    on_node=lambda bound, inc: bounds_seen.append(bound))
    assert bounds_seen, "expected at least the root node"
    # every node LP value bounds its subtree from below; the root bounds
    # the whole problem, so no recorded bound on the optimal path exceeds
    # the optimum
    assert bounds_seen[0] <= sol.best_objective + 1e-9
    assert min(bounds_seen) <= sol.best_objective + 1e-9
    assert sol.best_bound <= sol.best_objective + 1e-9
    assert sol.status == "optimal" and sol.gap <= 1e-6


def test_trajectory_objectives_decrease():
    rng = np.random.default_rng(3)
    problem = random_binary_mip(rng, n_max=12, m_max=6)
    sol = solve_mip(problem, exact_config())
    objs = [obj for _, obj in sol.incumbent_trajectory]
    times = [t for t, _ in sol.incumbent_trajectory]
    assert objs == sorted(objs, reverse=True)
    assert times == sorted(times)
    if sol.status == "optimal":
        assert objs[-1] == pytest.approx(sol.best_objective)


def test_warm_start_seeds_incumbent():
    expected, x_best = enumerate_binary_mip(KNAPSACK.c, KNAPSACK.A.toarray(), KNAPSACK.rhs)
    sol = solve_mip(KNAPSACK, exact_config(), warm_start=x_best)
    assert sol.best_objective == pytest.approx(expected, abs=1e-9)
    assert sol.incumbent_trajectory[0][1] == pytest.approx(expected)
    with pytest.raises(ModelError):
        solve_mip(KNAPSACK, exact_config(), warm_start=np.ones(10))  # violates capacity


def test_gap_limit_stopping():
    cfg = SolverConfig(gap_limit=0.5, time_limit=60.0)
    sol = solve_mip(KNAPSACK, cfg)
    assert sol.status in ("optimal", "gap_limit")
    assert sol.gap <= 0.5 + 1e-12
    assert sol.best_bound <= sol.best_objective + 1e-9


def test_time_limit_status():
    rng = np.random.default_rng(5)
    problem = random_binary_mip(rng, n_max=12, m_max=10)
    sol = solve_mip(problem, SolverConfig(gap_limit=0.0, time_limit=1e-4))
    assert sol.status in ("time_limit", "optimal", "infeasible")
    assert sol.wall_time < 5.0


def test_solutions_respect_tolerances():
    from scenrep.mip.model import max_violation
    rng = np.random.default_rng(31)
    for _ in range(10):
        problem = random_binary_mip(rng)
        sol = solve_mip(problem, exact_config())
        if sol.x is not None:
            assert max_violation(problem, sol.x) <= 1e-5
