"""Method comparison harness: exact solves, baselines, learned predictors.

Every method produces a first-stage decision; its reported objective is
always an independent re-evaluation of that decision on the full
instance (never the solver's own claim). Wall time for learned methods
includes feature extraction, prediction, and the surrogate solve, each
logged separately. The exact solver's incumbent trajectory supports
time-to-quality statistics against each learned method.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .cflp import (CflpInstance, big_m_values, cardinality_bounds,
                   demand_scenario, mean_demand)
from .errors import CompleteRecourseError, ModelError
from .features import extract_features
from .learn import Model, predict
from .mip import SolverConfig, exact_config, solve_mip
from .mip.lp import propagate_singletons, solve_core, split_rows
from .seeds import derive_seed
from .two_stage import ObjectiveEvaluator, TwoStageInstance, build_extensive_form, build_surrogate

BASELINES = ("AVG", "RND", "DIST")
ML_METHODS = ("LR", "ANN")
ALL_METHODS = ("GRB",) + BASELINES + ML_METHODS


@dataclass
class ExactRecord:
    """Raw outcome of an extensive-form solve (the labeling protocol)."""

    instance_id: str
    objective: float            # solver incumbent value
    x: np.ndarray | None        # first-stage part
    best_bound: float
    gap: float
    status: str
    wall_time: float
    trajectory: list[tuple[float, float]] = field(default_factory=list)


@dataclass
class MethodResult:
    method: str
    instance_id: str
    objective: float            # re-evaluated value of the produced x
    wall_time: float
    x: np.ndarray
    demand: np.ndarray | None = None     # realization fed to the surrogate
    feature_time: float = 0.0
    predict_time: float = 0.0
    surrogate_time: float = 0.0
    solver_status: str = ""


class _OpenPatternScan:
    """Node-LP heuristic for lowered facility instances.

    Whenever a node LP has an integral open/close pattern not seen
    before, complete (pattern, node capacities) with optimal recourse
    blocks and offer it as an incumbent. Capacity at closed facilities
    is shifted to the largest open one so the first stage stays feasible.
    """

    def __init__(self, inst: CflpInstance, ts: TwoStageInstance,
                 evaluator: ObjectiveEvaluator, budget: int = 8,
                 seen: set[bytes] | None = None):
        self.n = inst.n
        self.cap = big_m_values(inst)[0]
        self.evaluator = evaluator
        self.budget = budget
        self.seen = set() if seen is None else seen

    def __call__(self, x_node: np.ndarray):
        if self.budget <= 0:
            return None
        b = x_node[:self.n]
        if float(np.max(np.abs(b - np.round(b)), initial=0.0)) > 1e-6:
            return None
        b = np.round(b)
        key = b.astype(np.int8).tobytes()
        if key in self.seen:
            return None
        self.seen.add(key)
        self.budget -= 1
        v = x_node[self.n:2 * self.n].copy()
        spill = float(v[b == 0].sum())
        v[b == 0] = 0.0
        if spill > 0 and np.any(b == 1):
            open_idx = np.where(b == 1)[0]
            target = open_idx[int(np.argmax(v[open_idx]))]
            v[target] = min(v[target] + spill, self.cap)
        try:
            return self.evaluator.extensive_point(np.concatenate([b, v]))
        except (ModelError, CompleteRecourseError):
            return None


def _pattern_neighborhood(base: np.ndarray, n: int) -> list[np.ndarray]:
    """base plus all cardinality-feasible add-one/drop-one/swap patterns."""
    lb, ub = cardinality_bounds(n)
    out = [base.copy()]
    open_idx = [i for i in range(n) if base[i] == 1]
    closed_idx = [i for i in range(n) if base[i] == 0]
    if len(open_idx) > lb:
        for i in open_idx:
            pat = base.copy(); pat[i] = 0; out.append(pat)
    if len(open_idx) < ub:
        for j in closed_idx:
            pat = base.copy(); pat[j] = 1; out.append(pat)
    for i in open_idx:
        for j in closed_idx:
            pat = base.copy(); pat[i] = 0; pat[j] = 1; out.append(pat)
    return out


def _polish_patterns(inst: CflpInstance, ts: TwoStageInstance, problem,
                     evaluator: ObjectiveEvaluator, cfg: SolverConfig,
                     top_k: int = 3):
    """Local search over open/close patterns around the mean-scenario decision.

    Ranks the neighborhood by the LP value with the pattern fixed, then
    completes the best few with optimal recourse. Returns the best full
    extensive-form point and the set of patterns already evaluated.
    """
    n = inst.n
    x_mean, _, _ = _solve_surrogate(
        ts, demand_scenario(inst, mean_demand(inst)),
        SolverConfig(gap_limit=1e-6, time_limit=cfg.time_limit))
    base = np.round(x_mean[:n])

    keep, lo, hi, feasible = propagate_singletons(problem)
    if not feasible:
        return None, set()
    core = split_rows(problem, keep)
    ranked = []
    for pat in _pattern_neighborhood(base, n):
        lo2, hi2 = lo.copy(), hi.copy()
        lo2[:n] = pat
        hi2[:n] = pat
        res = solve_core(core, lo2, hi2)
        if res.status == "optimal":
            ranked.append((res.objective, pat.astype(np.int8).tobytes(), pat, res.x))
    ranked.sort(key=lambda item: (item[0], item[1]))

    best_full = None
    best_obj = float("inf")
    seen: set[bytes] = set()
    for _, key, pat, x_lp in ranked[:top_k]:
        seen.add(key)
        x_first = np.concatenate([pat, x_lp[n:2 * n]])   # v sized by the fixed-b LP
        try:
            full = evaluator.extensive_point(x_first)
        except (ModelError, CompleteRecourseError):
            continue
        obj = float(problem.c @ full)
        if obj < best_obj:
            best_obj = obj
            best_full = full
    return best_full, seen


def run_exact(ts: TwoStageInstance, cfg: SolverConfig, instance_id: str = "",
              warm_inst: CflpInstance | None = None,
              evaluator: ObjectiveEvaluator | None = None) -> ExactRecord:
    """Solve the extensive form under the stopping contract.

    With warm_inst given (the raw problem the lowering came from), the
    solve is seeded by a pattern local search around the mean-scenario
    decision and node LPs feed an open-pattern incumbent heuristic;
    seeding time counts toward wall time. A time limit without an
    incumbent yields x=None; callers exclude and log such instances.
    """
    t0 = time.monotonic()
    problem = build_extensive_form(ts)
    warm = None
    heuristic = None
    if warm_inst is not None and cfg.backend == "internal":
        evaluator = evaluator or ObjectiveEvaluator(ts)
        try:
            warm, seen = _polish_patterns(warm_inst, ts, problem, evaluator, cfg)
        except ModelError:
            warm, seen = None, set()
        heuristic = _OpenPatternScan(warm_inst, ts, evaluator, seen=seen)
    seeding = time.monotonic() - t0
    sol = solve_mip(problem, cfg, warm_start=warm, heuristic=heuristic)
    x = sol.x[:ts.n1] if sol.x is not None else None
    trajectory = [(t + seeding, obj) for t, obj in sol.incumbent_trajectory]
    return ExactRecord(instance_id=instance_id, objective=sol.best_objective, x=x,
                       best_bound=sol.best_bound, gap=sol.gap, status=sol.status,
                       wall_time=sol.wall_time + seeding, trajectory=trajectory)


def _solve_surrogate(ts: TwoStageInstance, scen, cfg: SolverConfig):
    t0 = time.monotonic()
    sol = solve_mip(build_surrogate(ts, scen), cfg)
    elapsed = time.monotonic() - t0
    if sol.x is None:
        raise ModelError(f"surrogate solve failed with status {sol.status}")
    return sol.x[:ts.n1], elapsed, sol.status


def baseline_demand(inst: CflpInstance, which: str, seed: int,
                    lr_model: Model | None = None,
                    dist_mode: str = "poisson",
                    dist_pool: np.ndarray | None = None) -> np.ndarray:
    """The demand vector a baseline feeds to its surrogate.

    AVG: scenario mean. RND: one scenario drawn uniformly. DIST: each
    component drawn from a Poisson with the LR-predicted mean (default),
    or a vector drawn from a pool of LR predictions ("empirical" mode).
    """
    if which == "AVG":
        return mean_demand(inst)
    rng = np.random.default_rng(seed)
    if which == "RND":
        return inst.demand[int(rng.integers(0, inst.m))].astype(float)
    if which == "DIST":
        if dist_mode == "empirical":
            if dist_pool is None or len(dist_pool) == 0:
                raise ModelError("empirical DIST mode needs a prediction pool")
            return np.asarray(dist_pool[int(rng.integers(0, len(dist_pool)))], dtype=float)
        if lr_model is None:
            raise ModelError("DIST baseline needs a trained LR model")
        lam = np.maximum(predict(lr_model, extract_features(inst).values), 0.0)
        return rng.poisson(lam=lam).astype(float)
    raise ModelError(f"unknown baseline {which!r}")


def run_baseline(inst: CflpInstance, ts: TwoStageInstance, which: str, seed: int,
                 evaluator: ObjectiveEvaluator, surrogate_cfg: SolverConfig,
                 lr_model: Model | None = None, dist_mode: str = "poisson",
                 dist_pool: np.ndarray | None = None, instance_id: str = "") -> MethodResult:
    t0 = time.monotonic()
    demand = baseline_demand(inst, which, seed, lr_model, dist_mode, dist_pool)
    sample_time = time.monotonic() - t0
    x, solve_time, status = _solve_surrogate(ts, demand_scenario(inst, demand), surrogate_cfg)
    return MethodResult(method=which, instance_id=instance_id,
                        objective=evaluator.value(x),
                        wall_time=sample_time + solve_time, x=x, demand=demand,
                        surrogate_time=solve_time, solver_status=status)


def run_learned(inst: CflpInstance, ts: TwoStageInstance, model: Model, name: str,
                evaluator: ObjectiveEvaluator, surrogate_cfg: SolverConfig,
                instance_id: str = "") -> MethodResult:
    t0 = time.monotonic()
    feats = extract_features(inst).values
    t1 = time.monotonic()
    demand = predict(model, feats)
    t2 = time.monotonic()
    x, solve_time, status = _solve_surrogate(ts, demand_scenario(inst, demand), surrogate_cfg)
    return MethodResult(method=name, instance_id=instance_id,
                        objective=evaluator.value(x),
                        wall_time=(t1 - t0) + (t2 - t1) + solve_time,
                        x=x, demand=demand,
                        feature_time=t1 - t0, predict_time=t2 - t1,
                        surrogate_time=solve_time, solver_status=status)


def exact_method_result(record: ExactRecord, evaluator: ObjectiveEvaluator) -> MethodResult:
    if record.x is None:
        raise ModelError(f"instance {record.instance_id}: exact solve has no incumbent")
    return MethodResult(method="GRB", instance_id=record.instance_id,
                        objective=evaluator.value(record.x),
                        wall_time=record.wall_time, x=np.asarray(record.x),
                        solver_status=record.status)


def evaluate_instance(inst: CflpInstance, ts: TwoStageInstance, record: ExactRecord,
                      models: dict[str, Model], root_seed: int,
                      methods=ALL_METHODS,
                      surrogate_cfg: SolverConfig | None = None,
                      phi_cfg: SolverConfig | None = None,
                      dist_mode: str = "poisson",
                      dist_pool: np.ndarray | None = None) -> list[MethodResult]:
    """All requested methods on one instance, sharing one evaluator cache."""
    surrogate_cfg = surrogate_cfg or SolverConfig(gap_limit=1e-6, time_limit=600.0)
    evaluator = ObjectiveEvaluator(ts, phi_cfg or exact_config())
    instance_id = record.instance_id
    out = []
    for method in methods:
        if method == "GRB":
            out.append(exact_method_result(record, evaluator))
        elif method in BASELINES:
            seed = derive_seed(root_seed, "baseline", method, instance_id)
            out.append(run_baseline(inst, ts, method, seed, evaluator, surrogate_cfg,
                                    lr_model=models.get("LR"), dist_mode=dist_mode,
                                    dist_pool=dist_pool, instance_id=instance_id))
        elif method in ML_METHODS:
            if method not in models:
                raise ModelError(f"no trained model for method {method}")
            out.append(run_learned(inst, ts, models[method], method, evaluator,
                                   surrogate_cfg, instance_id=instance_id))
        else:
            raise ModelError(f"unknown method {method!r}")
    return out


def diff_ratio(method_objective: float, exact_objective: float) -> float:
    """(method - exact) / exact; negative when a method beats the exact run."""
    if exact_objective <= 0:
        raise ModelError("diff ratio undefined for nonpositive exact objective")
    return (method_objective - exact_objective) / exact_objective


def grb_time_to_quality(trajectory, target_objective: float) -> float:
    """Earliest trajectory time whose incumbent is <= target (inf if never)."""
    if not trajectory:
        raise ModelError("empty incumbent trajectory")
    for t, obj in trajectory:
        if obj <= target_objective + 1e-9:
            return t
    return float("inf")


def _stats(values) -> dict:
    arr = np.asarray(list(values), dtype=float)
    if arr.size == 0:
        return {k: float("nan") for k in ("min", "max", "avg", "median", "std")}
    return {"min": float(arr.min()), "max": float(arr.max()), "avg": float(arr.mean()),
            "median": float(np.median(arr)), "std": float(arr.std())}


@dataclass
class ComparisonReport:
    diff_ratio_stats: dict          # method -> stats of diff ratio (percent)
    time_stats: dict                # method -> stats of wall time (seconds)
    quality_time_stats: dict        # GRB-L / GRB-A -> stats + censored count
    scatter: dict                   # method -> (avg time, avg diff ratio)
    histograms: dict                # method -> (bin_edges, counts) over demand values


def build_report(results: list[MethodResult], exact_records: dict[str, ExactRecord],
                 labels: dict[str, np.ndarray] | None = None) -> ComparisonReport:
    """Aggregate per-method statistics over one common instance set."""
    by_method: dict[str, dict[str, MethodResult]] = {}
    for res in results:
        by_method.setdefault(res.method, {})[res.instance_id] = res
    if "GRB" not in by_method:
        raise ModelError("report needs GRB results as the comparison base")
    base_ids = sorted(by_method["GRB"])
    for method, rows in by_method.items():
        if sorted(rows) != base_ids:
            raise ModelError(f"method {method} evaluated on a different instance set")

    grb_obj = {iid: by_method["GRB"][iid].objective for iid in base_ids}
    ratios = {
        method: [diff_ratio(rows[iid].objective, grb_obj[iid]) for iid in base_ids]
        for method, rows in by_method.items()
    }
    diff_stats = {m: _stats([100.0 * r for r in vals]) for m, vals in ratios.items()}
    time_stats = {m: _stats([rows[iid].wall_time for iid in base_ids])
                  for m, rows in by_method.items()}

    quality = {}
    for tag, method in (("GRB-L", "LR"), ("GRB-A", "ANN")):
        if method not in by_method:
            continue
        times = []
        for iid in base_ids:
            record = exact_records[iid]
            times.append(grb_time_to_quality(record.trajectory,
                                             by_method[method][iid].objective))
        finite = [t for t in times if math.isfinite(t)]
        entry = _stats(finite)
        entry["censored"] = len(times) - len(finite)
        quality[tag] = entry

    scatter = {
        m: {"avg_time": time_stats[m]["avg"],
            "avg_diff_ratio": float(np.mean(ratios[m])),
            "avg_diff_ratio_pct": diff_stats[m]["avg"]}
        for m in by_method
    }

    histograms = {}
    for method, rows in by_method.items():
        values = np.concatenate([rows[iid].demand for iid in base_ids
                                 if rows[iid].demand is not None] or [np.empty(0)])
        if values.size:
            histograms[method] = _demand_histogram(values)
    if labels:
        values = np.concatenate([labels[iid] for iid in base_ids if iid in labels]
                                or [np.empty(0)])
        if values.size:
            histograms["RS"] = _demand_histogram(values)

    return ComparisonReport(diff_ratio_stats=diff_stats, time_stats=time_stats,
                            quality_time_stats=quality, scatter=scatter,
                            histograms=histograms)


def _demand_histogram(values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Unit-width bins from 0 through the max value (deterministic edges)."""
    top = max(1.0, float(np.ceil(values.max() + 1)))
    edges = np.arange(0.0, top + 1.0)
    counts, edges = np.histogram(values, bins=edges)
    return edges, counts
