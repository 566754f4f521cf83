import json

import numpy as np
import pytest

from scenrep.cflp import (GeneratorConfig, cardinality_bounds, demand_scenario,
                          generate_instance, mean_demand, to_two_stage)
from scenrep.errors import CompleteRecourseError, ModelError
from scenrep.mip import exact_config, solve_mip
from scenrep.two_stage import (ObjectiveEvaluator, Scenario, TwoStageInstance,
                               build_extensive_form, build_surrogate,
                               check_first_stage, evaluate_objective,
                               instance_from_dict, instance_to_dict,
                               load_instance, save_instance)

from oracles import cflp_brute_force, milp_reference


def scenario(q, h, T, p=1.0):
    return Scenario(q=np.asarray(q, float), h=np.asarray(h, float),
                    T=np.atleast_2d(np.asarray(T, float)), probability=p)


def test_validation_rejects_bad_probabilities():
    base = dict(c=[1.0], A=[[1.0]], b=[1.0], W=[[1.0]],
                int_first=(), int_second=())
    with pytest.raises(ModelError, match="sum"):
        TwoStageInstance(scenarios=(scenario([1], [1], [[0]], 0.5),), **base)
    with pytest.raises(ModelError, match="scenario"):
        TwoStageInstance(scenarios=(), **base)
    with pytest.raises(ModelError, match="dimensions"):
        TwoStageInstance(scenarios=(scenario([1, 2], [1], [[0]], 1.0),), **base)


def test_extensive_form_shapes(tiny_cflp):
    ts = to_two_stage(tiny_cflp)
    ef = build_extensive_form(ts)
    assert ef.n_vars == ts.n1 + ts.n_scenarios * ts.n2
    assert ef.n_rows == ts.A.shape[0] + ts.n_scenarios * ts.m2
    surr = build_surrogate(ts, ts.scenarios[0])
    assert surr.n_vars == ts.n1 + ts.n2


def test_single_scenario_collapse():
    cfg = GeneratorConfig(n=2, m=1)
    for seed in range(5):
        ts = to_two_stage(generate_instance(cfg, seed=seed))
        ext = solve_mip(build_extensive_form(ts), exact_config())
        surr = solve_mip(build_surrogate(ts, ts.scenarios[0]), exact_config())
        assert ext.best_objective == pytest.approx(surr.best_objective, abs=1e-6)


def test_extensive_matches_brute_force(tiny_cflp):
    ts = to_two_stage(tiny_cflp)
    sol = solve_mip(build_extensive_form(ts), exact_config())
    assert sol.status == "optimal"
    assert sol.best_objective == pytest.approx(cflp_brute_force(tiny_cflp), abs=1e-6)


def test_extensive_matches_independent_milp():
    inst = generate_instance(GeneratorConfig(n=3, m=5), seed=21)
    ef = build_extensive_form(to_two_stage(inst))
    ours = solve_mip(ef, exact_config())
    ref = milp_reference(ef)
    assert ref.status == 0
    assert ours.best_objective == pytest.approx(ref.fun, rel=1e-7)


def test_surrogate_x_part_always_first_stage_feasible(desk_instance):
    ts = to_two_stage(desk_instance)
    rng = np.random.default_rng(5)
    for _ in range(4):
        demand = rng.uniform(0, 80, size=desk_instance.n)
        sol = solve_mip(build_surrogate(ts, demand_scenario(desk_instance, demand)),
                        exact_config())
        check_first_stage(ts, sol.x[:ts.n1])   # raises on violation


def test_objective_lower_bound_property(desk_instance):
    # phi of any feasible x is at least the extensive-form optimum
    ts = to_two_stage(desk_instance)
    ef = build_extensive_form(ts)
    opt = milp_reference(ef).fun
    evaluator = ObjectiveEvaluator(ts)
    for demand in (mean_demand(desk_instance), desk_instance.demand[0]):
        sol = solve_mip(build_surrogate(ts, demand_scenario(desk_instance, demand)),
                        exact_config())
        assert evaluator.value(sol.x[:ts.n1]) >= opt - 1e-6


def test_phi_at_optimum_equals_extensive_value(tiny_cflp):
    ts = to_two_stage(tiny_cflp)
    sol = solve_mip(build_extensive_form(ts), exact_config())
    phi = evaluate_objective(ts, sol.x[:ts.n1])
    assert phi == pytest.approx(sol.best_objective, abs=1e-6)


def test_phi_equals_fixed_x_extensive(desk_instance):
    # solving |scenarios| second stages equals fixing x inside the extensive form
    ts = to_two_stage(desk_instance)
    ef = build_extensive_form(ts)
    sol = solve_mip(ef, exact_config())
    x = sol.x[:ts.n1]
    fixed = build_extensive_form(ts)
    fixed.lo[:ts.n1] = x
    fixed.hi[:ts.n1] = x
    ref = milp_reference(fixed)
    assert evaluate_objective(ts, x) == pytest.approx(ref.fun, abs=1e-6)


def test_evaluator_thread_pool_matches_serial(tiny_cflp):
    ts = to_two_stage(tiny_cflp)
    sol = solve_mip(build_extensive_form(ts), exact_config())
    x = sol.x[:ts.n1]
    assert ObjectiveEvaluator(ts, jobs=2).value(x) == ObjectiveEvaluator(ts).value(x)


def test_evaluator_rejects_infeasible_first_stage(tiny_cflp):
    ts = to_two_stage(tiny_cflp)
    with pytest.raises(ModelError):
        evaluate_objective(ts, np.full(ts.n1, -1.0))


def test_complete_recourse_violation_is_reported():
    # second stage 0*y <= -1 is infeasible for every x
    inst = TwoStageInstance(
        c=[1.0], A=[[1.0]], b=[10.0], W=[[0.0]],
        scenarios=(scenario([1.0], [-1.0], [[0.0]]),),
        int_first=(), int_second=())
    with pytest.raises(CompleteRecourseError):
        evaluate_objective(inst, np.array([0.0]))


def test_zero_demand_surrogate_opens_minimum(zero_demand_cflp):
    ts = to_two_stage(zero_demand_cflp)
    zero = demand_scenario(zero_demand_cflp, np.zeros(zero_demand_cflp.n))
    sol = solve_mip(build_surrogate(ts, zero), exact_config())
    n = zero_demand_cflp.n
    b, v = sol.x[:n], sol.x[n:2 * n]
    assert np.round(b).sum() == cardinality_bounds(n)[0]
    assert np.allclose(v, 0.0, atol=1e-6)
    # cheapest fixed-cost facility is the one opened
    assert sol.best_objective == pytest.approx(zero_demand_cflp.c_f.min())


def test_json_schema_round_trip(tiny_cflp, tmp_path):
    ts = to_two_stage(tiny_cflp)
    data = instance_to_dict(ts)
    assert set(data) == {"c", "A", "b", "W", "int_first", "int_second", "scenarios"}
    assert set(data["scenarios"][0]) == {"p", "q", "h", "T"}
    back = instance_from_dict(json.loads(json.dumps(data)))
    assert np.array_equal(back.c, ts.c)
    assert np.array_equal(np.asarray(back.W.toarray()), np.asarray(ts.W.toarray()))
    assert back.scenarios[1].probability == pytest.approx(0.5)

    path = tmp_path / "inst.json"
    save_instance(ts, path)
    again = load_instance(path)
    assert again.n1 == ts.n1 and again.n_scenarios == ts.n_scenarios


def test_extensive_dimension_arithmetic():
    # 2 first-stage + 3 scenarios x 2 recourse variables = 8 columns,
    # first-stage rows + 3 x second-stage rows
    scen = [scenario([1.0, 1.0], [5.0, 1.0], [[1.0, 0.0], [0.0, 1.0]], p)
            for p in (0.5, 0.25, 0.25)]
    inst = TwoStageInstance(c=[1.0, 1.0], A=[[1.0, 1.0]], b=[4.0],
                            W=[[1.0, 0.0], [0.0, 1.0]],
                            scenarios=tuple(scen), int_first=(0,), int_second=())
    ef = build_extensive_form(inst)
    assert ef.n_vars == 8
    assert ef.n_rows == 1 + 3 * 2
    assert list(ef.c[:2]) == [1.0, 1.0]
    assert np.allclose(ef.c[2:4], 0.5 * np.ones(2))
