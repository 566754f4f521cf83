"""Heuristic search for representative-scenario labels.

Starting from the mean scenario, the loop solves the surrogate for the
current demand vector, evaluates the resulting first stage on the full
instance, and accepts once that value is within the acceptance factor of
the exact objective. Otherwise the demand vector is perturbed using
three rules driven by the disagreement between the exact and surrogate
first stages: zeroing demand at clients only the surrogate opens, and
nudging the demand of the client with the largest capacity disagreement
(by a fixed percentage, or by a fraction of the capacity difference,
alternating). Requires square instances (locations double as clients),
which holds for every instance this package generates.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cflp import CflpInstance, demand_scenario, mean_demand, split_first_stage, to_two_stage
from .errors import EngineError, ModelError
from .mip import SolverConfig, solve_mip
from .two_stage import ObjectiveEvaluator, TwoStageInstance, build_surrogate


@dataclass
class SearchConfig:
    max_iterations: int = 200
    acceptance_factor: float = 1.01      # accept when value <= factor * exact
    percent_step: float = 0.1
    difference_fraction: float = 0.005   # capacity gaps are O(100); keep the
    schedule: str = "zero-then-alternate"  # multiplicative step moderate
    seed: int = 0                        # reserved for randomized schedules

    def __post_init__(self):
        if self.acceptance_factor <= 1.0:
            raise ModelError("acceptance_factor must be > 1")
        if not 0.0 < self.percent_step < 1.0:
            raise ModelError("percent_step must be in (0, 1)")
        if self.difference_fraction <= 0.0:
            raise ModelError("difference_fraction must be > 0")
        if self.max_iterations < 1:
            raise ModelError("max_iterations must be >= 1")


@dataclass
class ScenarioLabel:
    """Search outcome; found implies achieved <= factor * reference."""

    xi_star: np.ndarray
    achieved_ovf: float
    reference_ovf: float
    iterations_used: int
    found: bool


def zero_demand_update(xi: np.ndarray, b_exact: np.ndarray, b_surr: np.ndarray) -> np.ndarray:
    """Zero demand at clients closed in the exact but open in the surrogate.

    One-directional and idempotent for fixed open/close vectors.
    """
    out = np.asarray(xi, dtype=float).copy()
    mask = (np.round(b_exact) == 0) & (np.round(b_surr) == 1)
    out[mask] = 0.0
    return out


def _argmax_capacity_gap(v_exact: np.ndarray, v_surr: np.ndarray) -> int | None:
    gap = np.abs(v_exact - v_surr)
    if float(np.max(gap, initial=0.0)) == 0.0:
        return None                      # no-op signal: capacities agree
    return int(np.argmax(gap))           # lowest index on ties


def percent_update(xi: np.ndarray, v_exact: np.ndarray, v_surr: np.ndarray,
                   step: float) -> np.ndarray | None:
    """Move the worst-disagreement client's demand by a fixed percentage.

    Returns None when all capacities agree (scheduler switches rule).
    """
    i = _argmax_capacity_gap(v_exact, v_surr)
    if i is None:
        return None
    out = np.asarray(xi, dtype=float).copy()
    out[i] += np.sign(v_exact[i] - v_surr[i]) * step * out[i]
    return out


def difference_update(xi: np.ndarray, v_exact: np.ndarray, v_surr: np.ndarray,
                      fraction: float) -> np.ndarray | None:
    """Move that client's demand by a fraction of the capacity difference.

    Clamped at zero from below; returns None when capacities agree.
    """
    i = _argmax_capacity_gap(v_exact, v_surr)
    if i is None:
        return None
    out = np.asarray(xi, dtype=float).copy()
    out[i] = max(0.0, out[i] + (v_exact[i] - v_surr[i]) * fraction * out[i])
    return out


def _perturb(xi, b_exact, v_exact, b_surr, v_surr, iteration, cfg) -> np.ndarray:
    """One scheduled perturbation: zero rule first, else alternate the others."""
    out = zero_demand_update(xi, b_exact, b_surr)
    if not np.array_equal(out, xi):
        return out
    first, second = (percent_update, difference_update) if iteration % 2 == 1 \
        else (difference_update, percent_update)
    args = {percent_update: cfg.percent_step, difference_update: cfg.difference_fraction}
    for rule in (first, second):
        cand = rule(xi, v_exact, v_surr, args[rule])
        if cand is not None and not np.array_equal(cand, xi):
            return cand
    return xi                            # stuck: caller detects the fixed point


def find_representative_scenario(
        inst: CflpInstance,
        exact_objective: float,
        exact_x: np.ndarray,
        cfg: SearchConfig | None = None,
        surrogate_cfg: SolverConfig | None = None,
        evaluator: ObjectiveEvaluator | None = None,
        two_stage: TwoStageInstance | None = None) -> ScenarioLabel:
    """Search for a demand vector whose surrogate decision is near-optimal.

    `exact_objective` and `exact_x` come from an extensive-form solve.
    The loop performs at most cfg.max_iterations surrogate solves and
    ends early on a provably repeating state.
    """
    cfg = cfg or SearchConfig()
    surrogate_cfg = surrogate_cfg or SolverConfig(gap_limit=1e-6, time_limit=600.0)
    ts = two_stage if two_stage is not None else to_two_stage(inst)
    evaluator = evaluator or ObjectiveEvaluator(ts)
    n = inst.n
    b_exact, v_exact = split_first_stage(np.asarray(exact_x, dtype=float), n)
    threshold = cfg.acceptance_factor * exact_objective
    # Beyond every serviceable level, extra demand only adds constant
    # emergency cost, so the multiplicative updates would otherwise run
    # away; cap components at 10x the largest observed demand.
    demand_cap = 10.0 * max(1.0, float(np.max(inst.demand)))

    xi = mean_demand(inst).astype(float)
    best_value = float("inf")
    best_xi = xi
    seen: set[tuple[bytes, int]] = set()
    solves = 0

    for iteration in range(1, cfg.max_iterations + 1):
        state = (np.round(xi, 9).tobytes(), iteration % 2)
        if state in seen:
            break                        # deterministic loop would repeat forever
        seen.add(state)

        surrogate = build_surrogate(ts, demand_scenario(inst, xi))
        sol = solve_mip(surrogate, surrogate_cfg)
        solves += 1
        if sol.x is None:
            raise EngineError(
                f"surrogate solve ended {sol.status} without a solution during search")
        x_surr = sol.x[:ts.n1]
        value = evaluator.value(x_surr)
        if value < best_value:
            best_value = value
            best_xi = xi.copy()
        if value <= threshold:
            return ScenarioLabel(xi_star=xi.copy(), achieved_ovf=value,
                                 reference_ovf=exact_objective,
                                 iterations_used=solves, found=True)

        b_surr, v_surr = split_first_stage(x_surr, n)
        nxt = np.minimum(_perturb(xi, b_exact, v_exact, b_surr, v_surr, iteration, cfg),
                         demand_cap)
        if np.array_equal(nxt, xi):
            break                        # all rules are fixed points here
        xi = nxt

    return ScenarioLabel(xi_star=best_xi, achieved_ovf=best_value,
                         reference_ovf=exact_objective,
                         iterations_used=solves, found=False)
