"""Two-stage stochastic integer programs with finite scenario support.

A program is: min c'x + E_xi[Q(x, xi)] with Ax <= b and integrality on
selected first-stage components, where Q(x, xi) minimizes q'y over
W y <= h - T x, y >= 0, with integrality on selected second-stage
components. This module owns the two transformations used everywhere
downstream: the deterministic equivalent over all scenarios (extensive
form) and the single-scenario surrogate, plus evaluation of the
first-stage objective value function.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import CompleteRecourseError, EngineError, ModelError
from .mip import (FEAS_TOL, INT_TOL, MipProblem, SolverConfig, exact_config,
                  solve_mip)

PROB_TOL = 1e-9


@dataclass(frozen=True)
class Scenario:
    """One uncertainty realization: recourse cost q, rhs h, technology T."""

    q: np.ndarray           # (n2,)
    h: np.ndarray           # (m2,)
    T: np.ndarray           # (m2, n1)
    probability: float

    def __post_init__(self):
        object.__setattr__(self, "q", np.asarray(self.q, dtype=float))
        object.__setattr__(self, "h", np.asarray(self.h, dtype=float))
        object.__setattr__(self, "T", np.atleast_2d(np.asarray(self.T, dtype=float)))
        if self.probability < -PROB_TOL:
            raise ModelError("scenario probability must be >= 0")


@dataclass(frozen=True)
class TwoStageInstance:
    """Full problem data; immutable and safe to share across threads."""

    c: np.ndarray                   # (n1,)
    A: np.ndarray                   # (m1, n1)
    b: np.ndarray                   # (m1,)
    W: np.ndarray | sp.csr_matrix   # (m2, n2)
    scenarios: tuple[Scenario, ...]
    int_first: tuple[int, ...]      # 0-based indices into x
    int_second: tuple[int, ...]     # 0-based indices into y

    def __post_init__(self):
        object.__setattr__(self, "c", np.asarray(self.c, dtype=float))
        object.__setattr__(self, "A", np.atleast_2d(np.asarray(self.A, dtype=float)))
        object.__setattr__(self, "b", np.asarray(self.b, dtype=float))
        if not sp.issparse(self.W):
            object.__setattr__(self, "W", sp.csr_matrix(np.atleast_2d(np.asarray(self.W, dtype=float))))
        object.__setattr__(self, "scenarios", tuple(self.scenarios))
        object.__setattr__(self, "int_first", tuple(int(i) for i in self.int_first))
        object.__setattr__(self, "int_second", tuple(int(i) for i in self.int_second))

        if not self.scenarios:
            raise ModelError("finite support required: at least one scenario")
        n1, m1 = self.n1, self.A.shape[0]
        if self.A.shape[1] != n1 or self.b.shape[0] != m1:
            raise ModelError("first-stage dimensions inconsistent")
        m2, n2 = self.W.shape
        for k, scen in enumerate(self.scenarios):
            if scen.q.shape[0] != n2 or scen.h.shape[0] != m2 or scen.T.shape != (m2, n1):
                raise ModelError(f"scenario {k} dimensions inconsistent with W/A")
        total = sum(s.probability for s in self.scenarios)
        if abs(total - 1.0) > PROB_TOL:
            raise ModelError(f"scenario probabilities sum to {total!r}, expected 1")
        if any(i < 0 or i >= n1 for i in self.int_first):
            raise ModelError("int_first index out of range")
        if any(i < 0 or i >= n2 for i in self.int_second):
            raise ModelError("int_second index out of range")

    @property
    def n1(self) -> int:
        return self.c.shape[0]

    @property
    def n2(self) -> int:
        return self.W.shape[1]

    @property
    def m2(self) -> int:
        return self.W.shape[0]

    @property
    def n_scenarios(self) -> int:
        return len(self.scenarios)


@dataclass
class FirstStageSolution:
    """A first-stage decision and, once evaluated, its objective value."""

    x: np.ndarray
    objective: float | None = None


def scenario_like(xi_bar) -> Scenario:
    """Accept a Scenario or a (q, h, T) triple; probability is ignored."""
    if isinstance(xi_bar, Scenario):
        return xi_bar
    q, h, T = xi_bar
    return Scenario(q=q, h=h, T=T, probability=1.0)


def check_first_stage(inst: TwoStageInstance, x: np.ndarray,
                      feas_tol: float = FEAS_TOL, int_tol: float = INT_TOL) -> None:
    """Raise ModelError unless x satisfies Ax <= b and integrality."""
    x = np.asarray(x, dtype=float)
    if x.shape != (inst.n1,):
        raise ModelError(f"first-stage decision has shape {x.shape}, expected ({inst.n1},)")
    resid = inst.A @ x - inst.b
    if resid.size and float(np.max(resid)) > feas_tol:
        raise ModelError(f"first-stage constraints violated by {float(np.max(resid)):.3e}")
    idx = list(inst.int_first)
    if idx:
        frac = np.max(np.abs(x[idx] - np.round(x[idx])))
        if frac > int_tol:
            raise ModelError(f"first-stage integrality violated by {frac:.3e}")


def build_extensive_form(inst: TwoStageInstance) -> MipProblem:
    """Assemble the deterministic equivalent MIP over all scenarios.

    Variables are ordered (x, y_1, ..., y_S); per-scenario recourse costs
    are weighted by scenario probability.
    """
    n1, n2, m2 = inst.n1, inst.n2, inst.m2
    S = inst.n_scenarios
    n = n1 + S * n2
    m1 = inst.A.shape[0]

    c = np.concatenate([inst.c] + [s.probability * s.q for s in inst.scenarios])
    blocks = [sp.hstack([sp.csr_matrix(inst.A), sp.csr_matrix((m1, S * n2))], format="csr")]
    rhs = [inst.b]
    W = sp.csr_matrix(inst.W)
    for k, scen in enumerate(inst.scenarios):
        left = sp.csr_matrix(scen.T)
        pads = [sp.csr_matrix((m2, n2 * k)), W, sp.csr_matrix((m2, n2 * (S - k - 1)))]
        blocks.append(sp.hstack([left] + pads, format="csr"))
        rhs.append(scen.h)
    A = sp.vstack(blocks, format="csr")
    rhs = np.concatenate(rhs)

    lo = np.concatenate([np.full(n1, -np.inf), np.zeros(S * n2)])  # y >= 0 intrinsic
    hi = np.full(n, np.inf)
    is_int = np.zeros(n, dtype=bool)
    is_int[list(inst.int_first)] = True
    for k in range(S):
        is_int[[n1 + k * n2 + j for j in inst.int_second]] = True

    return MipProblem(c=c, A=A, senses=np.full(A.shape[0], "L"), rhs=rhs,
                      lo=lo, hi=hi, is_integer=is_int, name="extensive")


def build_surrogate(inst: TwoStageInstance, xi_bar) -> MipProblem:
    """Assemble the single-scenario deterministic MIP for realization xi_bar.

    Its x-part is first-stage feasible for the instance by construction.
    """
    scen = scenario_like(xi_bar)
    n1, n2, m2 = inst.n1, inst.n2, inst.m2
    if scen.q.shape[0] != n2 or scen.h.shape[0] != m2 or scen.T.shape != (m2, n1):
        raise ModelError("surrogate realization dimensions inconsistent with instance")
    m1 = inst.A.shape[0]

    c = np.concatenate([inst.c, scen.q])
    A = sp.vstack([
        sp.hstack([sp.csr_matrix(inst.A), sp.csr_matrix((m1, n2))], format="csr"),
        sp.hstack([sp.csr_matrix(scen.T), sp.csr_matrix(inst.W)], format="csr"),
    ], format="csr")
    rhs = np.concatenate([inst.b, scen.h])

    lo = np.concatenate([np.full(n1, -np.inf), np.zeros(n2)])
    hi = np.full(n1 + n2, np.inf)
    is_int = np.zeros(n1 + n2, dtype=bool)
    is_int[list(inst.int_first)] = True
    is_int[[n1 + j for j in inst.int_second]] = True

    return MipProblem(c=c, A=A, senses=np.full(A.shape[0], "L"), rhs=rhs,
                      lo=lo, hi=hi, is_integer=is_int, name="surrogate")


def second_stage_problem(inst: TwoStageInstance, scen: Scenario, x: np.ndarray) -> MipProblem:
    """The recourse MIP for one scenario with the first stage fixed at x."""
    rhs = scen.h - scen.T @ x
    n2 = inst.n2
    is_int = np.zeros(n2, dtype=bool)
    is_int[list(inst.int_second)] = True
    return MipProblem(c=scen.q, A=sp.csr_matrix(inst.W),
                      senses=np.full(inst.m2, "L"), rhs=rhs,
                      lo=np.zeros(n2), hi=np.full(n2, np.inf),
                      is_integer=is_int, name="recourse")


class ObjectiveEvaluator:
    """Evaluates c'x + E[Q(x, xi)] with per-(x, scenario) result caching.

    Each Q is solved as an independent second-stage MIP; an infeasible
    second stage is a complete-recourse violation and raises. Scenario
    values are reduced in scenario order, so results do not depend on
    worker scheduling.
    """

    def __init__(self, inst: TwoStageInstance, solver_cfg: SolverConfig | None = None,
                 jobs: int = 1):
        self.inst = inst
        self.cfg = solver_cfg or exact_config()
        self.jobs = max(1, int(jobs))
        self._cache: dict[tuple[bytes, int], tuple[float, np.ndarray]] = {}

    def _key(self, x: np.ndarray, k: int) -> tuple[bytes, int]:
        return np.round(x, 9).tobytes(), k

    def scenario_solution(self, x: np.ndarray, k: int) -> tuple[float, np.ndarray]:
        """Optimal value and recourse decision for one scenario at fixed x."""
        key = self._key(x, k)
        if key not in self._cache:
            scen = self.inst.scenarios[k]
            sol = solve_mip(second_stage_problem(self.inst, scen, x), self.cfg)
            if sol.status == "infeasible":
                raise CompleteRecourseError(
                    f"scenario {k} has no feasible recourse for the given first stage")
            if sol.x is None:
                raise EngineError(f"second-stage solve for scenario {k} ended {sol.status} "
                                  "without an incumbent")
            self._cache[key] = (sol.best_objective, sol.x)
        return self._cache[key]

    def scenario_value(self, x: np.ndarray, k: int) -> float:
        return self.scenario_solution(x, k)[0]

    def value(self, x) -> float:
        x = np.asarray(getattr(x, "x", x), dtype=float)
        check_first_stage(self.inst, x)
        ks = range(self.inst.n_scenarios)
        if self.jobs > 1:
            with ThreadPoolExecutor(max_workers=self.jobs) as pool:
                values = list(pool.map(lambda k: self.scenario_value(x, k), ks))
        else:
            values = [self.scenario_value(x, k) for k in ks]
        expected = sum(p * v for p, v in
                       zip((s.probability for s in self.inst.scenarios), values))
        return float(self.inst.c @ x + expected)

    def extensive_point(self, x) -> np.ndarray:
        """(x, y_1, ..., y_S) feasible for the extensive form, with each
        recourse block optimal at the given first stage. Its extensive
        objective equals value(x); useful as a MIP warm start."""
        x = np.asarray(getattr(x, "x", x), dtype=float)
        check_first_stage(self.inst, x)
        blocks = [self.scenario_solution(x, k)[1] for k in range(self.inst.n_scenarios)]
        return np.concatenate([x] + blocks)


def evaluate_objective(inst: TwoStageInstance, x,
                       solver_cfg: SolverConfig | None = None, jobs: int = 1) -> float:
    """One-shot objective value function: c'x + sum_k p_k Q(x, xi_k)."""
    return ObjectiveEvaluator(inst, solver_cfg, jobs).value(x)


# ---------------------------------------------------------------------------
# JSON instance schema (row-major matrices):
# {"c":[],"A":[[]],"b":[],"W":[[]],"int_first":[],"int_second":[],
#  "scenarios":[{"p":..,"q":[],"h":[],"T":[[]]}]}

def instance_to_dict(inst: TwoStageInstance) -> dict:
    W = inst.W.toarray() if sp.issparse(inst.W) else inst.W
    return {
        "c": inst.c.tolist(),
        "A": inst.A.tolist(),
        "b": inst.b.tolist(),
        "W": np.asarray(W).tolist(),
        "int_first": list(inst.int_first),
        "int_second": list(inst.int_second),
        "scenarios": [
            {"p": s.probability, "q": s.q.tolist(), "h": s.h.tolist(), "T": s.T.tolist()}
            for s in inst.scenarios
        ],
    }


def instance_from_dict(data: dict) -> TwoStageInstance:
    try:
        scenarios = tuple(
            Scenario(q=np.array(s["q"]), h=np.array(s["h"]), T=np.array(s["T"]),
                     probability=float(s["p"]))
            for s in data["scenarios"])
        return TwoStageInstance(
            c=np.array(data["c"]), A=np.array(data["A"]), b=np.array(data["b"]),
            W=np.array(data["W"]), scenarios=scenarios,
            int_first=tuple(data["int_first"]), int_second=tuple(data["int_second"]))
    except KeyError as exc:
        raise ModelError(f"instance JSON missing key {exc}") from exc


def save_instance(inst: TwoStageInstance, path) -> None:
    with open(path, "w") as fh:
        json.dump(instance_to_dict(inst), fh)


def load_instance(path) -> TwoStageInstance:
    with open(path) as fh:
        return instance_from_dict(json.load(fh))
