import numpy as np
import pytest

from scenrep.cflp import CflpInstance, GeneratorConfig, generate_instance, mean_demand, to_two_stage
from scenrep.errors import ModelError
from scenrep.evaluation import (ExactRecord, MethodResult, baseline_demand,
                                build_report, diff_ratio, evaluate_instance,
                                grb_time_to_quality, run_exact)
from scenrep.learn import Dataset, train_lr
from scenrep.features import extract_features
from scenrep.mip import SolverConfig
from scenrep.two_stage import ObjectiveEvaluator


def test_diff_ratio_values():
    assert diff_ratio(100.0, 100.0) == 0.0
    assert diff_ratio(103.0, 100.0) == pytest.approx(0.03)
    assert diff_ratio(99.38, 100.0) == pytest.approx(-0.0062)   # negatives representable
    with pytest.raises(ModelError):
        diff_ratio(1.0, 0.0)
    with pytest.raises(ModelError):
        diff_ratio(1.0, -5.0)


def test_grb_time_to_quality():
    trajectory = [(0.5, 110.0), (1.2, 104.0), (3.0, 100.0)]
    assert grb_time_to_quality(trajectory, 100.0) == pytest.approx(3.0)    # last improvement
    assert grb_time_to_quality(trajectory, 104.0) == pytest.approx(1.2)
    assert grb_time_to_quality(trajectory, 150.0) == pytest.approx(0.5)
    assert grb_time_to_quality(trajectory, 99.0) == np.inf                 # censored
    with pytest.raises(ModelError):
        grb_time_to_quality([], 1.0)


def _fake_results():
    results = []
    records = {}
    rng = np.random.default_rng(0)
    for k, iid in enumerate(("a", "b", "c")):
        grb_obj = 100.0 + 10 * k
        records[iid] = ExactRecord(instance_id=iid, objective=grb_obj,
                                   x=np.zeros(2), best_bound=grb_obj - 1.0,
                                   gap=0.01, status="gap_limit", wall_time=2.0 + k,
                                   trajectory=[(0.5, grb_obj + 5), (1.5, grb_obj)])
        results.append(MethodResult("GRB", iid, grb_obj, 2.0 + k, np.zeros(2)))
        results.append(MethodResult("AVG", iid, grb_obj * (1.05 + 0.01 * k), 0.2,
                                    np.zeros(2), demand=rng.uniform(0, 9, 2)))
        results.append(MethodResult("LR", iid, grb_obj * 1.01, 0.05, np.zeros(2),
                                    demand=rng.uniform(0, 9, 2),
                                    feature_time=0.01, predict_time=0.01,
                                    surrogate_time=0.03))
    return results, records


def test_report_stats_match_recomputation():
    # independent recomputation of the published stats from the raw rows
    import pandas as pd

    results, records = _fake_results()
    report = build_report(results, records)
    frame = pd.DataFrame([{
        "method": r.method, "instance": r.instance_id,
        "ratio": (r.objective - next(g.objective for g in results
                                     if g.method == "GRB" and g.instance_id == r.instance_id))
        / next(g.objective for g in results
               if g.method == "GRB" and g.instance_id == r.instance_id),
        "time": r.wall_time} for r in results])
    for method, group in frame.groupby("method"):
        stats = report.diff_ratio_stats[method]
        assert stats["avg"] == pytest.approx(100 * group.ratio.mean(), abs=1e-9)
        assert stats["median"] == pytest.approx(100 * group.ratio.median(), abs=1e-9)
        assert stats["std"] == pytest.approx(100 * group.ratio.std(ddof=0), abs=1e-9)
        assert stats["min"] == pytest.approx(100 * group.ratio.min(), abs=1e-9)
        assert stats["max"] == pytest.approx(100 * group.ratio.max(), abs=1e-9)
        tstats = report.time_stats[method]
        assert tstats["avg"] == pytest.approx(group.time.mean(), abs=1e-12)
    assert report.diff_ratio_stats["GRB"]["max"] == 0.0


def test_report_quality_times_and_histograms():
    results, records = _fake_results()
    report = build_report(results, records)
    # LR objective is above each final incumbent, reached at the last improvement
    assert report.quality_time_stats["GRB-L"]["median"] == pytest.approx(1.5)
    assert report.quality_time_stats["GRB-L"]["censored"] == 0
    assert "AVG" in report.histograms and "GRB" not in report.histograms
    edges, counts = report.histograms["AVG"]
    assert counts.sum() == 6                  # 3 instances x 2 demand components
    assert report.scatter["LR"]["avg_time"] == pytest.approx(0.05)


def test_report_rejects_mismatched_instance_sets():
    results, records = _fake_results()
    report_input = results + [MethodResult("RND", "a", 120.0, 0.1, np.zeros(2))]
    with pytest.raises(ModelError, match="different instance set"):
        build_report(report_input, records)


def test_singleton_stats_are_zero_std():
    results = [MethodResult("GRB", "only", 50.0, 1.0, np.zeros(1))]
    records = {"only": ExactRecord("only", 50.0, np.zeros(1), 49.0, 0.02,
                                   "gap_limit", 1.0, [(0.1, 50.0)])}
    report = build_report(results, records)
    assert report.diff_ratio_stats["GRB"]["std"] == 0.0
    assert report.diff_ratio_stats["GRB"]["avg"] == 0.0


def test_constant_demand_makes_avg_equal_rnd():
    inst = CflpInstance(n=2, c_f=[16.0, 17.0], c_v=[6.0, 5.0],
                        c_tf=[[5.0, 8.0], [9.0, 5.0]], c_tv=[[1.0, 2.0], [3.0, 1.0]],
                        demand=[[4.0, 6.0], [4.0, 6.0], [4.0, 6.0]])
    avg = baseline_demand(inst, "AVG", seed=1)
    rnd = baseline_demand(inst, "RND", seed=99)
    assert np.array_equal(avg, rnd)


def test_dist_baseline_draws_poisson_means(desk_instance):
    ds = Dataset(features=np.stack([extract_features(desk_instance).values] * 4),
                 labels=np.tile(mean_demand(desk_instance), (4, 1)),
                 instance_ids=("a", "b", "c", "d"),
                 split=np.array(["train", "train", "val", "test"]))
    lr_model = train_lr(ds, ridge=1e-6)
    demand = baseline_demand(desk_instance, "DIST", seed=5, lr_model=lr_model)
    assert demand.shape == (desk_instance.n,)
    assert np.all(demand >= 0)
    assert np.array_equal(demand, np.round(demand))    # poisson draws are integers
    again = baseline_demand(desk_instance, "DIST", seed=5, lr_model=lr_model)
    assert np.array_equal(demand, again)
    pool = np.array([[1.0, 2.0, 3.0]])
    emp = baseline_demand(desk_instance, "DIST", seed=5, dist_mode="empirical",
                          dist_pool=pool)
    assert np.array_equal(emp, pool[0])


def test_reported_objectives_equal_phi_recomputation(desk_instance):
    ts = to_two_stage(desk_instance)
    evaluator = ObjectiveEvaluator(ts)
    record = run_exact(ts, SolverConfig(gap_limit=0.02, time_limit=60.0),
                       instance_id="x", warm_inst=desk_instance, evaluator=evaluator)
    results = evaluate_instance(desk_instance, ts, record, models={},
                                root_seed=3, methods=("GRB", "AVG", "RND"))
    for res in results:
        fresh = ObjectiveEvaluator(ts).value(res.x)
        assert res.objective == pytest.approx(fresh, abs=1e-6)
        if res.method != "GRB":
            assert res.wall_time >= res.surrogate_time
    # objective of any method is bounded below by the exact bound
    for res in results:
        assert res.objective >= record.best_bound - 1e-6


def test_exact_record_excludes_when_no_incumbent():
    inst = generate_instance(GeneratorConfig(n=3, m=3), seed=5)
    ts = to_two_stage(inst)
    record = run_exact(ts, SolverConfig(gap_limit=1e-9, time_limit=1e-7), "t")
    assert record.x is None or record.status in ("optimal", "gap_limit", "time_limit")


def test_avg_baseline_is_scenario_mean(desk_instance):
    avg = baseline_demand(desk_instance, "AVG", seed=0)
    assert np.array_equal(avg, desk_instance.demand.mean(axis=0))
