"""Pipeline driver: one subcommand per stage, wired through a run directory.

    scenrep generate --config cfg.json --out runs/a
    scenrep label    --out runs/a --jobs 4
    scenrep featurize --out runs/a
    scenrep train lr  --out runs/a   (and: train ann)
    scenrep evaluate --out runs/a --jobs 4
    scenrep report   --out runs/a

Every stage appends a manifest entry (config hash, seed, timings,
outputs) to <out>/manifest.json. All randomness derives from the root
seed, so identical configs reproduce identical artifacts byte-for-byte
apart from wall-clock fields.

Exit codes: 0 ok, 2 config error, 3 missing/invalid upstream artifact,
4 solver backend failure.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import cflp
from .errors import ArtifactError, BackendError, ConfigError, ModelError
from .evaluation import (ALL_METHODS, ExactRecord, MethodResult, build_report,
                         diff_ratio, evaluate_instance, run_exact)
from .features import extract_features, feature_names
from .learn import Dataset, TrainOptions, load_model, make_split, predict, save_model, train_ann, train_lr
from .mip import SolverConfig, exact_config
from .rs_search import SearchConfig, find_representative_scenario
from .seeds import derive_seed
from .two_stage import ObjectiveEvaluator

log = logging.getLogger("scenrep")

DEFAULT_CONFIG = {
    "seed": 20260810,
    "generator": {
        "n": 5, "m": 20, "count": 2000,
        "c_f_range": [15, 20], "c_v_range": [5, 10],
        "c_tf_range": [5, 10], "c_tv_range": [1, 5],
        "transport_seed": cflp.DEFAULT_TRANSPORT_SEED,
    },
    "solver": {"gap_limit": 0.02, "time_limit": 600.0, "threads": 1, "backend": "internal"},
    "rs_search": {"max_iterations": 200, "acceptance_factor": 1.01,
                  "percent_step": 0.1, "difference_fraction": 0.005},
    "features": {},
    "training": {
        "splits": [0.8, 0.1, 0.1],
        "lr": {"ridge": 0.0},
        "ann": {"hidden": [64, 32], "learning_rate": 1e-3, "momentum": 0.9,
                "batch_size": 32, "max_epochs": 400, "patience": 20,
                "decay_every": 100, "decay_factor": 0.5},
    },
    "evaluation": {"methods": list(ALL_METHODS), "dist_mode": "poisson",
                   "surrogate_gap_limit": 1e-6, "phi_gap_limit": 1e-9},
}


# --------------------------------------------------------------------------
# Configuration

def _check_keys(name: str, data: dict, allowed) -> None:
    unknown = set(data) - set(allowed)
    if unknown:
        raise ConfigError(f"unknown key(s) in {name}: {sorted(unknown)}")


def _merge_section(name: str, defaults: dict, override: dict) -> dict:
    _check_keys(name, override, defaults.keys())
    merged = dict(defaults)
    merged.update(override)
    return merged


def load_config(path: str | None, seed_override: int | None = None) -> dict:
    data = {}
    if path is not None:
        try:
            with open(path) as fh:
                data = json.load(fh)
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {path}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config root must be a JSON object")
    _check_keys("config", data, DEFAULT_CONFIG.keys())
    cfg = {"seed": data.get("seed", DEFAULT_CONFIG["seed"])}
    for section, defaults in DEFAULT_CONFIG.items():
        if section == "seed":
            continue
        if section == "training":
            override = dict(data.get(section, {}))
            _check_keys("training", override, defaults.keys())
            cfg[section] = {
                "splits": override.get("splits", defaults["splits"]),
                "lr": _merge_section("training.lr", defaults["lr"], override.get("lr", {})),
                "ann": _merge_section("training.ann", defaults["ann"], override.get("ann", {})),
            }
        else:
            cfg[section] = _merge_section(section, defaults, data.get(section, {}))
    if seed_override is not None:
        cfg["seed"] = int(seed_override)
    # Fail fast on invalid section values.
    try:
        _generator_config(cfg)
        _solver_config(cfg)
        _search_config(cfg)
    except ModelError as exc:
        raise ConfigError(str(exc)) from exc
    splits = cfg["training"]["splits"]
    if len(splits) != 3 or abs(sum(splits) - 1.0) > 1e-9:
        raise ConfigError("training.splits must be three fractions summing to 1")
    if cfg["evaluation"]["dist_mode"] not in ("poisson", "empirical"):
        raise ConfigError("evaluation.dist_mode must be 'poisson' or 'empirical'")
    return cfg


def _generator_config(cfg: dict) -> cflp.GeneratorConfig:
    g = cfg["generator"]
    return cflp.GeneratorConfig(
        n=g["n"], m=g["m"], count=g["count"],
        c_f_range=tuple(g["c_f_range"]), c_v_range=tuple(g["c_v_range"]),
        c_tf_range=tuple(g["c_tf_range"]), c_tv_range=tuple(g["c_tv_range"]),
        transport_seed=g["transport_seed"])


def _solver_config(cfg: dict) -> SolverConfig:
    s = cfg["solver"]
    return SolverConfig(gap_limit=s["gap_limit"], time_limit=s["time_limit"],
                        threads=s["threads"], backend=s["backend"])


def _search_config(cfg: dict) -> SearchConfig:
    r = cfg["rs_search"]
    return SearchConfig(max_iterations=r["max_iterations"],
                        acceptance_factor=r["acceptance_factor"],
                        percent_step=r["percent_step"],
                        difference_fraction=r["difference_fraction"])


def config_hash(cfg: dict) -> str:
    text = json.dumps(cfg, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()[:16]


# --------------------------------------------------------------------------
# Run-directory helpers

def _instance_id(index: int) -> str:
    return f"inst_{index:05d}"

def _instance_path(out: Path, iid: str) -> Path:
    return out / "instances" / f"{iid}.json"

def _exact_path(out: Path, iid: str) -> Path:
    return out / "exact" / f"{iid}.json"


def _require(path: Path, hint: str) -> Path:
    if not path.exists():
        raise ArtifactError(f"missing upstream artifact {path} ({hint})")
    return path


def _update_manifest(out: Path, stage: str, entry: dict) -> None:
    path = out / "manifest.json"
    data = {"stages": {}}
    if path.exists():
        with open(path) as fh:
            data = json.load(fh)
    data["stages"][stage] = entry
    with open(path, "w") as fh:
        json.dump(data, fh, indent=2, sort_keys=True)


def _manifest_entry(cfg: dict, seed: int, outputs, wall: float) -> dict:
    return {"config_hash": config_hash(cfg), "seed": seed,
            "outputs": [str(p) for p in outputs], "wall_time_s": wall,
            "completed_unix": time.time()}


def _read_csv(path: Path, hint: str) -> list[dict]:
    _require(path, hint)
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


# --------------------------------------------------------------------------
# Stage: generate

def cmd_generate(cfg: dict, out: Path) -> None:
    t0 = time.monotonic()
    gen = _generator_config(cfg)
    (out / "instances").mkdir(parents=True, exist_ok=True)
    transport = cflp.transport_costs(gen)
    entries = []
    for index in range(gen.count):
        seed = derive_seed(cfg["seed"], "generate", index)
        inst = cflp.generate_instance(gen, seed, transport=transport)
        iid = _instance_id(index)
        path = _instance_path(out, iid)
        cflp.save_instance(inst, path)
        entries.append((str(path.relative_to(out)), seed, "ok"))
    manifest_csv = out / "instances.csv"
    cflp.write_batch_manifest(manifest_csv, entries)
    _update_manifest(out, "generate", _manifest_entry(
        cfg, cfg["seed"], [manifest_csv], time.monotonic() - t0))
    log.info("generated %d instances (n=%d, m=%d)", gen.count, gen.n, gen.m)


# --------------------------------------------------------------------------
# Stage: label (exact solves + representative-scenario search)

def _label_task(args: tuple) -> dict:
    inst_path, iid, cfg = args
    inst = cflp.load_instance(inst_path)
    ts = cflp.to_two_stage(inst)
    record = run_exact(ts, _solver_config(cfg), instance_id=iid, warm_inst=inst)
    result = {
        "instance_id": iid,
        "objective": record.objective, "best_bound": record.best_bound,
        "gap": record.gap, "status": record.status, "wall_time": record.wall_time,
        "trajectory": record.trajectory,
        "x": record.x.tolist() if record.x is not None else None,
    }
    if record.x is None:
        result["label"] = None          # excluded: no incumbent within limits
        return result
    phi_cfg = exact_config(time_limit=cfg["solver"]["time_limit"])
    label = find_representative_scenario(
        inst, record.objective, record.x, _search_config(cfg),
        surrogate_cfg=SolverConfig(gap_limit=cfg["evaluation"]["surrogate_gap_limit"],
                                   time_limit=cfg["solver"]["time_limit"]),
        evaluator=ObjectiveEvaluator(ts, phi_cfg), two_stage=ts)
    result["label"] = {
        "found": label.found, "iterations": label.iterations_used,
        "xi_star": label.xi_star.tolist(),
        "achieved_ovf": label.achieved_ovf, "reference_ovf": label.reference_ovf,
    }
    return result


def _parallel(tasks, worker, jobs: int):
    """Yield worker results in task order (lazily, so callers can stream)."""
    if jobs <= 1:
        for task in tasks:
            yield worker(task)
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            yield from pool.map(worker, tasks, chunksize=1)


def cmd_label(cfg: dict, out: Path, jobs: int) -> None:
    t0 = time.monotonic()
    rows = _read_csv(out / "instances.csv", "run `scenrep generate` first")
    (out / "exact").mkdir(parents=True, exist_ok=True)
    tasks = []
    for row in rows:
        path = out / row["path"]
        _require(path, "instance file from the generate stage")
        iid = path.stem
        tasks.append((str(path), iid, cfg))

    n = cfg["generator"]["n"]
    labels_csv = out / "labels.csv"
    excluded = 0
    found = 0
    done = 0
    with open(labels_csv, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["instance_id", "found", "iterations"]
                        + [f"xi_star_{i}" for i in range(n)]
                        + ["achieved_ovf", "reference_ovf"])
        for res in _parallel(tasks, _label_task, jobs):
            with open(_exact_path(out, res["instance_id"]), "w") as jf:
                json.dump({k: res[k] for k in
                           ("instance_id", "objective", "best_bound", "gap",
                            "status", "wall_time", "trajectory", "x")}, jf)
            done += 1
            if done % 50 == 0:
                log.info("labeling progress: %d/%d (%.0fs)", done, len(tasks),
                         time.monotonic() - t0)
            if res["label"] is None:
                excluded += 1
                log.warning("instance %s excluded: %s without incumbent",
                            res["instance_id"], res["status"])
                continue
            lab = res["label"]
            found += int(lab["found"])
            writer.writerow([res["instance_id"], int(lab["found"]), lab["iterations"]]
                            + list(lab["xi_star"])
                            + [lab["achieved_ovf"], lab["reference_ovf"]])
            fh.flush()
    _update_manifest(out, "label", _manifest_entry(
        cfg, cfg["seed"], [labels_csv], time.monotonic() - t0))
    log.info("labeled %d/%d instances (found rate %.1f%%), %d excluded",
             found, len(tasks), 100.0 * found / max(1, len(tasks) - excluded), excluded)


# --------------------------------------------------------------------------
# Stage: featurize

def cmd_featurize(cfg: dict, out: Path) -> None:
    t0 = time.monotonic()
    rows = _read_csv(out / "labels.csv", "run `scenrep label` first")
    n = cfg["generator"]["n"]
    dataset_csv = out / "dataset.csv"
    kept = 0
    with open(dataset_csv, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["instance_id"] + feature_names(n)
                        + [f"xi_star_{i}" for i in range(n)])
        for row in rows:
            if row["found"] != "1":
                continue                # only instances with a scenario label
            inst = cflp.load_instance(_require(
                _instance_path(out, row["instance_id"]), "instance file"))
            values = extract_features(inst).values
            label = [row[f"xi_star_{i}"] for i in range(n)]
            writer.writerow([row["instance_id"]] + values.tolist() + label)
            kept += 1
    _update_manifest(out, "featurize", _manifest_entry(
        cfg, cfg["seed"], [dataset_csv], time.monotonic() - t0))
    log.info("featurized %d labeled instances", kept)


def _load_dataset(cfg: dict, out: Path) -> Dataset:
    rows = _read_csv(out / "dataset.csv", "run `scenrep featurize` first")
    if not rows:
        raise ArtifactError("dataset.csv has no rows")
    n = cfg["generator"]["n"]
    names = feature_names(n)
    ids = [row["instance_id"] for row in rows]
    X = np.array([[float(row[c]) for c in names] for row in rows])
    Y = np.array([[float(row[f"xi_star_{i}"]) for i in range(n)] for row in rows])

    splits_csv = out / "splits.csv"
    if splits_csv.exists():
        assignment = {r["instance_id"]: r["split"] for r in _read_csv(splits_csv, "splits")}
        split = np.array([assignment[iid] for iid in ids], dtype="<U5")
    else:
        split = make_split(len(ids), derive_seed(cfg["seed"], "split"),
                           tuple(cfg["training"]["splits"]))
        with open(splits_csv, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["instance_id", "split"])
            for iid, s in zip(ids, split):
                writer.writerow([iid, s])
    return Dataset(features=X, labels=Y, instance_ids=tuple(ids), split=split)


# --------------------------------------------------------------------------
# Stage: train

def cmd_train(cfg: dict, out: Path, kind: str) -> None:
    t0 = time.monotonic()
    ds = _load_dataset(cfg, out)
    (out / "models").mkdir(parents=True, exist_ok=True)
    if kind == "lr":
        model = train_lr(ds, ridge=cfg["training"]["lr"]["ridge"])
    elif kind == "ann":
        ann = dict(cfg["training"]["ann"])
        hidden = tuple(ann.pop("hidden"))
        model = train_ann(ds, hidden=hidden, options=TrainOptions(**ann),
                          seed=derive_seed(cfg["seed"], "train", "ann"))
    else:
        raise ConfigError(f"unknown model kind {kind!r} (expected lr or ann)")
    model_path = out / "models" / f"{kind}.json"
    history = model.meta.pop("history", None)
    save_model(model, model_path)
    outputs = [model_path]
    if history is not None:
        log_path = out / "models" / f"{kind}_log.csv"
        with open(log_path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["epoch", "train_mse", "val_mse"])
            writer.writerows(history)
        outputs.append(log_path)
    _update_manifest(out, f"train_{kind}", _manifest_entry(
        cfg, cfg["seed"], outputs, time.monotonic() - t0))
    log.info("trained %s: train MSE %.4f, val MSE %.4f", kind.upper(),
             model.meta.get("train_mse", float("nan")),
             model.meta.get("val_mse", float("nan")))


# --------------------------------------------------------------------------
# Stage: evaluate

def _load_exact_record(out: Path, iid: str) -> ExactRecord:
    with open(_require(_exact_path(out, iid), "exact solve from the label stage")) as fh:
        data = json.load(fh)
    return ExactRecord(
        instance_id=data["instance_id"], objective=data["objective"],
        x=np.array(data["x"]) if data["x"] is not None else None,
        best_bound=data["best_bound"], gap=data["gap"], status=data["status"],
        wall_time=data["wall_time"],
        trajectory=[tuple(point) for point in data["trajectory"]])


def _eval_task(args: tuple) -> list[dict]:
    iid, inst_path, exact_json, cfg, model_paths, dist_pool = args
    inst = cflp.load_instance(inst_path)
    ts = cflp.to_two_stage(inst)
    with open(exact_json) as fh:
        data = json.load(fh)
    record = ExactRecord(
        instance_id=data["instance_id"], objective=data["objective"],
        x=np.array(data["x"]), best_bound=data["best_bound"], gap=data["gap"],
        status=data["status"], wall_time=data["wall_time"],
        trajectory=[tuple(p) for p in data["trajectory"]])
    models = {name: load_model(path) for name, path in model_paths.items()}
    results = evaluate_instance(
        inst, ts, record, models, cfg["seed"],
        methods=tuple(cfg["evaluation"]["methods"]),
        surrogate_cfg=SolverConfig(gap_limit=cfg["evaluation"]["surrogate_gap_limit"],
                                   time_limit=cfg["solver"]["time_limit"]),
        phi_cfg=SolverConfig(gap_limit=cfg["evaluation"]["phi_gap_limit"],
                             time_limit=cfg["solver"]["time_limit"]),
        dist_mode=cfg["evaluation"]["dist_mode"],
        dist_pool=np.array(dist_pool) if dist_pool is not None else None)
    rows = []
    for res in results:
        rows.append({
            "instance_id": res.instance_id, "method": res.method,
            "objective": res.objective, "wall_time": res.wall_time,
            "feature_time": res.feature_time, "predict_time": res.predict_time,
            "surrogate_time": res.surrogate_time, "solver_status": res.solver_status,
            "x": res.x.tolist(),
            "demand": res.demand.tolist() if res.demand is not None else None,
        })
    return rows


def cmd_evaluate(cfg: dict, out: Path, jobs: int) -> None:
    t0 = time.monotonic()
    ds = _load_dataset(cfg, out)
    test_ids = [iid for iid, s in zip(ds.instance_ids, ds.split) if s == "test"]
    if not test_ids:
        raise ArtifactError("no test-split instances to evaluate")

    methods = tuple(cfg["evaluation"]["methods"])
    if "GRB" not in methods:
        raise ConfigError("evaluation.methods must include GRB (comparison base)")
    model_paths = {}
    for name in ("LR", "ANN"):
        needed = name in methods or (name == "LR" and "DIST" in methods)
        if needed:
            model_paths[name] = str(_require(out / "models" / f"{name.lower()}.json",
                                             f"run `scenrep train {name.lower()}` first"))

    dist_pool = None
    if cfg["evaluation"]["dist_mode"] == "empirical" and "DIST" in methods:
        lr_model = load_model(model_paths["LR"])
        train_mask = ds.split == "train"
        dist_pool = predict(lr_model, ds.features[train_mask]).tolist()

    tasks = []
    for iid in test_ids:
        tasks.append((iid, str(_require(_instance_path(out, iid), "instance file")),
                      str(_require(_exact_path(out, iid), "exact record")),
                      cfg, model_paths, dist_pool))

    n = cfg["generator"]["n"]
    (out / "eval").mkdir(parents=True, exist_ok=True)
    raw_csv = out / "eval" / "raw_results.csv"
    done = 0
    with open(raw_csv, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["instance_id", "method", "objective", "diff_ratio", "wall_time",
                         "feature_time", "predict_time", "surrogate_time", "solver_status"]
                        + [f"x_{i}" for i in range(2 * n)]
                        + [f"demand_{i}" for i in range(n)])
        for rows in _parallel(tasks, _eval_task, jobs):
            grb_obj = next(r["objective"] for r in rows if r["method"] == "GRB")
            for row in rows:
                ratio = diff_ratio(row["objective"], grb_obj)
                demand = row["demand"] if row["demand"] is not None else [""] * n
                writer.writerow([row["instance_id"], row["method"], row["objective"],
                                 ratio, row["wall_time"], row["feature_time"],
                                 row["predict_time"], row["surrogate_time"],
                                 row["solver_status"]]
                                + list(row["x"]) + list(demand))
            fh.flush()
            done += 1
            if done % 25 == 0:
                log.info("evaluation progress: %d/%d (%.0fs)", done, len(tasks),
                         time.monotonic() - t0)
    _update_manifest(out, "evaluate", _manifest_entry(
        cfg, cfg["seed"], [raw_csv], time.monotonic() - t0))
    log.info("evaluated %d methods on %d test instances", len(methods), len(test_ids))


# --------------------------------------------------------------------------
# Stage: report

def cmd_report(cfg: dict, out: Path) -> None:
    t0 = time.monotonic()
    n = cfg["generator"]["n"]
    rows = _read_csv(out / "eval" / "raw_results.csv", "run `scenrep evaluate` first")
    results = []
    for row in rows:
        demand = None
        if row[f"demand_{0}"] != "":
            demand = np.array([float(row[f"demand_{i}"]) for i in range(n)])
        results.append(MethodResult(
            method=row["method"], instance_id=row["instance_id"],
            objective=float(row["objective"]), wall_time=float(row["wall_time"]),
            x=np.array([float(row[f"x_{i}"]) for i in range(2 * n)]),
            demand=demand, feature_time=float(row["feature_time"]),
            predict_time=float(row["predict_time"]),
            surrogate_time=float(row["surrogate_time"]),
            solver_status=row["solver_status"]))

    ids = sorted({r.instance_id for r in results})
    exact_records = {iid: _load_exact_record(out, iid) for iid in ids}
    labels = {}
    for row in _read_csv(out / "labels.csv", "run `scenrep label` first"):
        if row["instance_id"] in set(ids) and row["found"] == "1":
            labels[row["instance_id"]] = np.array(
                [float(row[f"xi_star_{i}"]) for i in range(n)])

    report = build_report(results, exact_records, labels)
    outputs = []

    def _write_stats(name: str, stats: dict, extra_cols=()):
        path = out / "eval" / name
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["method", "min", "max", "avg", "median", "std", *extra_cols])
            for method, entry in sorted(stats.items()):
                writer.writerow([method] + [entry[k] for k in
                                            ("min", "max", "avg", "median", "std")]
                                + [entry[k] for k in extra_cols])
        outputs.append(path)

    _write_stats("table1_diff_ratio.csv", report.diff_ratio_stats)
    time_rows = dict(report.time_stats)
    for tag, entry in report.quality_time_stats.items():
        time_rows[tag] = entry
    for entry in time_rows.values():
        entry.setdefault("censored", "")
    _write_stats("table2_times.csv", time_rows, extra_cols=("censored",))

    scatter_csv = out / "eval" / "fig1_scatter.csv"
    with open(scatter_csv, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["method", "avg_time", "avg_diff_ratio", "avg_diff_ratio_pct"])
        for method, entry in sorted(report.scatter.items()):
            writer.writerow([method, entry["avg_time"], entry["avg_diff_ratio"],
                             entry["avg_diff_ratio_pct"]])
    outputs.append(scatter_csv)

    for method, (edges, counts) in sorted(report.histograms.items()):
        hist_csv = out / "eval" / f"fig2_hist_{method}.csv"
        with open(hist_csv, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["bin_lo", "bin_hi", "count"])
            for k in range(len(counts)):
                writer.writerow([edges[k], edges[k + 1], int(counts[k])])
        outputs.append(hist_csv)

    _update_manifest(out, "report", _manifest_entry(
        cfg, cfg["seed"], outputs, time.monotonic() - t0))
    log.info("report written: %d files under %s", len(outputs), out / "eval")


# --------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="scenrep",
        description="Representative-scenario pipeline for two-stage programs")
    parser.add_argument("--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("generate", "label", "featurize", "train", "evaluate", "report"):
        p = sub.add_parser(name)
        if name == "train":
            p.add_argument("kind", choices=["lr", "ann"])
        p.add_argument("--config", default=None, help="JSON run configuration")
        p.add_argument("--seed", type=int, default=None, help="override root seed")
        p.add_argument("--jobs", type=int, default=1, help="worker processes")
        p.add_argument("--out", required=True, help="run directory")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config, args.seed)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        if args.command == "generate":
            cmd_generate(cfg, out)
        elif args.command == "label":
            cmd_label(cfg, out, args.jobs)
        elif args.command == "featurize":
            cmd_featurize(cfg, out)
        elif args.command == "train":
            cmd_train(cfg, out, args.kind)
        elif args.command == "evaluate":
            cmd_evaluate(cfg, out, args.jobs)
        elif args.command == "report":
            cmd_report(cfg, out)
        return 0
    except ConfigError as exc:
        log.error("config error: %s", exc)
        return 2
    except ArtifactError as exc:
        log.error("artifact error: %s", exc)
        return 3
    except BackendError as exc:
        log.error("backend error: %s", exc)
        return 4


if __name__ == "__main__":
    sys.exit(main())
