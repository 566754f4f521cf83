"""Stochastic capacitated facility location: generation and lowering.

First stage opens facilities (binary b) and sizes them (continuous v);
the second stage, after demand realizes, picks service links (binary u)
and flows (continuous y) meeting every client's demand exactly.

To give the model the complete recourse it assumes, each client also has
an emergency-supply variable priced (from the instance's own cost data)
to strictly dominate every real service path: capacity plus transport
plus link costs. Any plan that can serve demand with real capacity does,
so optimal extensive-form values are unchanged; a first stage that
undersizes capacity pays the emergency price for the shortfall instead
of turning infeasible. Every first-stage decision, including those from
single-scenario surrogates, therefore has a finite objective value.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import ModelError
from .two_stage import Scenario, TwoStageInstance

DEFAULT_TRANSPORT_SEED = 90210


@dataclass(frozen=True)
class CflpInstance:
    """Raw problem data; n locations double as the n clients."""

    n: int
    c_f: np.ndarray       # fixed open cost per location
    c_v: np.ndarray       # per-unit capacity cost per location
    c_tf: np.ndarray      # (n, n) fixed transport cost
    c_tv: np.ndarray      # (n, n) per-unit transport cost
    demand: np.ndarray    # (m, n) nonnegative integer demand per scenario
    seed: int = 0

    def __post_init__(self):
        for field in ("c_f", "c_v", "c_tf", "c_tv", "demand"):
            object.__setattr__(self, field, np.asarray(getattr(self, field), dtype=float))
        n = self.n
        if self.c_f.shape != (n,) or self.c_v.shape != (n,):
            raise ModelError("cost vectors must have length n")
        if self.c_tf.shape != (n, n) or self.c_tv.shape != (n, n):
            raise ModelError("transport cost matrices must be n x n")
        if self.demand.ndim != 2 or self.demand.shape[1] != n or self.demand.shape[0] < 1:
            raise ModelError("demand must be (m, n) with m >= 1")
        for field in ("c_f", "c_v", "c_tf", "c_tv", "demand"):
            if np.any(getattr(self, field) < 0):
                raise ModelError(f"{field} must be nonnegative")
        if np.any(self.demand != np.round(self.demand)):
            raise ModelError("demand entries must be integers")

    @property
    def m(self) -> int:
        return self.demand.shape[0]


@dataclass
class GeneratorConfig:
    n: int = 5
    m: int = 20
    count: int = 1
    c_f_range: tuple[int, int] = (15, 20)     # discrete uniform [lo, hi)
    c_v_range: tuple[int, int] = (5, 10)
    c_tf_range: tuple[int, int] = (5, 10)
    c_tv_range: tuple[int, int] = (1, 5)
    transport_seed: int = DEFAULT_TRANSPORT_SEED

    def __post_init__(self):
        if self.n < 1 or self.m < 1 or self.count < 1:
            raise ModelError("n, m, count must be >= 1")
        for lo, hi in (self.c_f_range, self.c_v_range, self.c_tf_range, self.c_tv_range):
            if hi <= lo:
                raise ModelError("cost ranges must be nonempty ([lo, hi) with hi > lo)")


def poisson_means(c_f: np.ndarray, c_v: np.ndarray, n: int) -> np.ndarray:
    """Per-client demand rate: floor((c_f + 10 c_v) / sqrt(n))."""
    return np.floor((np.asarray(c_f, dtype=float) + 10.0 * np.asarray(c_v, dtype=float))
                    / math.sqrt(n))


def transport_costs(cfg: GeneratorConfig) -> tuple[np.ndarray, np.ndarray]:
    """Transport cost matrices, fixed across all instances of a run.

    Drawn once from the dedicated transport seed; self-service (i == j)
    links are allowed and the diagonal is not special-cased.
    """
    rng = np.random.default_rng(cfg.transport_seed)
    c_tf = rng.integers(cfg.c_tf_range[0], cfg.c_tf_range[1], size=(cfg.n, cfg.n))
    c_tv = rng.integers(cfg.c_tv_range[0], cfg.c_tv_range[1], size=(cfg.n, cfg.n))
    return c_tf.astype(float), c_tv.astype(float)


def generate_instance(cfg: GeneratorConfig, seed: int,
                      transport: tuple[np.ndarray, np.ndarray] | None = None) -> CflpInstance:
    """Draw one instance; deterministic per (cfg, seed)."""
    rng = np.random.default_rng(seed)
    c_f = rng.integers(cfg.c_f_range[0], cfg.c_f_range[1], size=cfg.n).astype(float)
    c_v = rng.integers(cfg.c_v_range[0], cfg.c_v_range[1], size=cfg.n).astype(float)
    lam = poisson_means(c_f, c_v, cfg.n)
    demand = rng.poisson(lam=lam, size=(cfg.m, cfg.n)).astype(float)
    c_tf, c_tv = transport if transport is not None else transport_costs(cfg)
    return CflpInstance(n=cfg.n, c_f=c_f, c_v=c_v, c_tf=c_tf, c_tv=c_tv,
                        demand=demand, seed=int(seed))


def cardinality_bounds(n: int) -> tuple[int, int]:
    """Open-facility count bounds: at least a tenth, at most three quarters."""
    return math.ceil(n / 10), math.floor(3 * n / 4)


def big_m_values(inst: CflpInstance) -> tuple[float, np.ndarray]:
    """(facility capacity cap, per-client link caps) from the demand matrix."""
    m_total = float(np.max(np.sum(inst.demand, axis=1)))
    m_col = np.max(inst.demand, axis=0)
    return m_total, m_col


def emergency_prices(inst: CflpInstance) -> np.ndarray:
    """Per-client cost of a unit of emergency supply.

    One more than the worst capacity + transport + link cost of any real
    path to the client, so emergency supply is used only when installed
    capacity cannot meet demand.
    """
    return (inst.c_tv.max(axis=0) + inst.c_tf.max(axis=0)
            + float(inst.c_v.max()) + 1.0)


def _cost_and_technology(inst: CflpInstance) -> tuple[np.ndarray, np.ndarray]:
    """Scenario-independent (q, T): recourse costs and first-stage coupling."""
    n = inst.n
    m2 = 3 * n + 2 * n * n
    T = np.zeros((m2, 2 * n))
    for i in range(n):
        T[i, n + i] = -1.0                   # supply rhs is h - Tx = v_i
    q = np.concatenate([inst.c_tf.ravel(), inst.c_tv.ravel(), emergency_prices(inst)])
    return q, T


def _recourse_matrix(inst: CflpInstance) -> sp.csr_matrix:
    """Shared recourse matrix W; only the rhs h varies with demand.

    Second-stage variables are [u (n*n, row-major), y (n*n), w (n)] with
    w the emergency supply per client; rows are supply (n), demand upper
    (n), demand lower (n), link (n*n), u<=1 (n*n).
    """
    n = inst.n
    _, m_col = big_m_values(inst)
    n2 = 2 * n * n + n
    m2 = 3 * n + 2 * n * n

    rows, cols, vals = [], [], []
    u_at = lambda i, j: i * n + j
    y_at = lambda i, j: n * n + i * n + j
    w_at = lambda j: 2 * n * n + j
    r = 0
    for i in range(n):                       # supply: sum_j y_ij <= v_i
        for j in range(n):
            rows.append(r); cols.append(y_at(i, j)); vals.append(1.0)
        r += 1
    for j in range(n):                       # demand upper: sum_i y_ij + w_j <= d_j
        for i in range(n):
            rows.append(r); cols.append(y_at(i, j)); vals.append(1.0)
        rows.append(r); cols.append(w_at(j)); vals.append(1.0)
        r += 1
    for j in range(n):                       # demand lower: -(sum_i y_ij + w_j) <= -d_j
        for i in range(n):
            rows.append(r); cols.append(y_at(i, j)); vals.append(-1.0)
        rows.append(r); cols.append(w_at(j)); vals.append(-1.0)
        r += 1
    for i in range(n):                       # link: y_ij - M_j u_ij <= 0
        for j in range(n):
            rows.append(r); cols.append(y_at(i, j)); vals.append(1.0)
            rows.append(r); cols.append(u_at(i, j)); vals.append(-float(m_col[j]))
            r += 1
    for i in range(n):                       # u_ij <= 1
        for j in range(n):
            rows.append(r); cols.append(u_at(i, j)); vals.append(1.0)
            r += 1
    return sp.coo_matrix((vals, (rows, cols)), shape=(m2, n2)).tocsr()


def demand_rhs(inst: CflpInstance, demand_vec: np.ndarray) -> np.ndarray:
    """Second-stage rhs vector h for one demand realization."""
    n = inst.n
    d = np.asarray(demand_vec, dtype=float)
    if d.shape != (n,):
        raise ModelError(f"demand vector must have length {n}")
    return np.concatenate([np.zeros(n), d, -d, np.zeros(n * n), np.ones(n * n)])


def demand_scenario(inst: CflpInstance, demand_vec, probability: float = 1.0) -> Scenario:
    """A scenario triple for an arbitrary (possibly fractional) demand vector."""
    q, T = _cost_and_technology(inst)
    return Scenario(q=q, h=demand_rhs(inst, demand_vec), T=T, probability=probability)


def to_two_stage(inst: CflpInstance) -> TwoStageInstance:
    """Lower into the generic two-stage form with uniform probabilities.

    First-stage variables are [b (n, binary), v (n)] constrained by the
    open-count bounds and v_i <= M b_i, with the 0/1 box on b and v >= 0
    encoded as rows (the generic form carries no variable bounds on x).
    """
    n, m = inst.n, inst.m
    lb_count, ub_count = cardinality_bounds(n)
    m_total, _ = big_m_values(inst)

    rows = []
    rhs = []
    rows.append(np.concatenate([np.ones(n), np.zeros(n)]))            # sum b <= ub
    rhs.append(float(ub_count))
    rows.append(np.concatenate([-np.ones(n), np.zeros(n)]))           # sum b >= lb
    rhs.append(-float(lb_count))
    for i in range(n):                                                # v_i <= M b_i
        row = np.zeros(2 * n)
        row[i] = -m_total
        row[n + i] = 1.0
        rows.append(row)
        rhs.append(0.0)
    eye = np.eye(n)
    zero = np.zeros((n, n))
    rows.extend(np.hstack([eye, zero]))                               # b <= 1
    rhs.extend([1.0] * n)
    rows.extend(np.hstack([-eye, zero]))                              # b >= 0
    rhs.extend([0.0] * n)
    rows.extend(np.hstack([zero, -eye]))                              # v >= 0
    rhs.extend([0.0] * n)
    A = np.vstack(rows)
    b_rhs = np.array(rhs)

    W = _recourse_matrix(inst)
    q, T = _cost_and_technology(inst)
    p = 1.0 / m
    scenarios = tuple(
        Scenario(q=q, h=demand_rhs(inst, inst.demand[s]), T=T, probability=p)
        for s in range(m))

    c = np.concatenate([inst.c_f, inst.c_v])
    return TwoStageInstance(c=c, A=A, b=b_rhs, W=W, scenarios=scenarios,
                            int_first=tuple(range(n)),
                            int_second=tuple(range(n * n)))


def split_first_stage(x: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
    """(open decisions b, capacities v) from a first-stage vector."""
    x = np.asarray(x, dtype=float)
    return x[:n], x[n:2 * n]


def scenario_demand(scen: Scenario, n: int) -> np.ndarray:
    """Recover the demand vector from a lowered scenario's rhs."""
    return scen.h[n:2 * n].copy()


def mean_demand(inst: CflpInstance) -> np.ndarray:
    return inst.demand.mean(axis=0)


# --------------------------------------------------------------------------
# Instance files: {"n","m","c_f","c_v","c_tf","c_tv","demand","seed"}

def instance_to_dict(inst: CflpInstance) -> dict:
    return {
        "n": inst.n,
        "m": inst.m,
        "c_f": inst.c_f.tolist(),
        "c_v": inst.c_v.tolist(),
        "c_tf": inst.c_tf.tolist(),
        "c_tv": inst.c_tv.tolist(),
        "demand": inst.demand.astype(int).tolist(),
        "seed": int(inst.seed),
    }


def instance_from_dict(data: dict) -> CflpInstance:
    try:
        return CflpInstance(
            n=int(data["n"]), c_f=np.array(data["c_f"]), c_v=np.array(data["c_v"]),
            c_tf=np.array(data["c_tf"]), c_tv=np.array(data["c_tv"]),
            demand=np.array(data["demand"]), seed=int(data.get("seed", 0)))
    except KeyError as exc:
        raise ModelError(f"instance JSON missing key {exc}") from exc


def save_instance(inst: CflpInstance, path) -> None:
    with open(path, "w") as fh:
        json.dump(instance_to_dict(inst), fh)


def load_instance(path) -> CflpInstance:
    with open(path) as fh:
        return instance_from_dict(json.load(fh))


def write_batch_manifest(path, entries) -> None:
    """CSV manifest of generated instances: (path, seed, status) rows."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["path", "seed", "status"])
        for row in entries:
            writer.writerow(row)
