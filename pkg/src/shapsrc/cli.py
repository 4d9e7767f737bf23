"""Command-line entry point.

    shapsrc value     --config run.toml [--seed N] [--workers N] [--cache PATH] [--resume] [--out DIR]
    shapsrc exact     --config run.toml
    shapsrc baselines --config run.toml
    shapsrc select    --config run.toml [--values report.json]
    shapsrc rank      --config run.toml

Exit codes: 0 success, 2 configuration or input error, 3 oracle failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, kernels
from .config import ConfigError, Problem, RunConfig, build_problem, feature_linear_game, load_config
from .game import InvalidInputError, OracleFailure, full_key, make_source_ids, make_subset_key
from .oracle import BuiltinOracle, SourceCorpus, TabularOracle, TargetCorpus
from .ranker import (FeatureTable, build_ranker_dataset, leave_one_out_loss,
                     predict_source_values, train_ranker)
from .sampler import SampleSpec
from .select import DEFAULT_THRESHOLDS, select_topk, tune_threshold
from .shapley import (MAX_EXACT_SOURCES, Evaluator, SubsetScoreCache, baseline_loo, baseline_random,
                      baseline_single, exact_shapley, greedy_dfs, resolve_rho, seal_shap)

log = logging.getLogger("shapsrc")

REPORT_SCHEMA = 1


def _base_report(command: str, cfg: RunConfig, problem: Problem) -> dict:
    oracle = problem.oracle
    return {
        "schema_version": REPORT_SCHEMA,
        "shapsrc_version": __version__,
        "command": command,
        "seed": cfg.seed,
        "config_hash": cfg.hash(),
        "corpus_hashes": problem.corpus_hashes,
        "oracle": oracle.describe(),
        "kernel_backend": kernels.BACKEND,
        "sources": list(oracle.source_names),
        "targets": list(oracle.target_names),
        "score_range": list(oracle.score_range),
    }


def _write_json(path: Path, obj: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _write_values_csv(path: Path, values, sources, targets, column="value") -> None:
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["target", "source", column])
        for t, row in zip(targets, values):
            for s, v in zip(sources, row):
                w.writerow([t, s, repr(float(v))])


def _matrix(values) -> list[list[float]]:
    return [[float(v) for v in row] for row in np.asarray(values)]


def _open_cache(cfg: RunConfig, problem: Problem, resume: bool) -> SubsetScoreCache:
    o = problem.oracle
    return SubsetScoreCache(o.n_sources, o.n_targets, enabled=cfg.engine.use_cache,
                            path=cfg.cache_path if cfg.engine.use_cache else None,
                            resume=resume, fingerprint=problem.fingerprint)


def run_value(cfg: RunConfig, problem: Problem, workers: int, resume: bool) -> dict:
    cache = _open_cache(cfg, problem, resume)
    try:
        result = seal_shap(problem.oracle, cfg.engine, workers=workers, cache=cache)
    finally:
        cache.close()
    report = _base_report("value", cfg, problem)
    report.update({
        "values": _matrix(result.values),
        "epochs_run": result.epochs_run,
        "converged": result.converged,
        "cache_hits": result.cache_hits,
        "cache_misses": result.cache_misses,
        "oracle_trainings": result.oracle_trainings,
        "truncations": result.truncations,
        "full_score": result.full_score.tolist(),
        "rho": result.rho.tolist(),
        "trace": [None if np.isnan(c) else c for c in result.max_change],
        "wall_time": result.wall_time,
        "engine": {
            "nepoch": cfg.engine.nepoch, "tolerance": cfg.engine.tolerance,
            "rho": cfg.engine.rho.policy, "rho_value": cfg.engine.rho.value,
            "sample_rate": cfg.engine.sample_spec.rate, "window": cfg.engine.window,
            "epsilon": cfg.engine.epsilon, "use_cache": cfg.engine.use_cache,
            "epoch_block": cfg.engine.epoch_block,
        },
    })
    out = cfg.out_dir
    _write_json(out / "value_report.json", report)
    _write_values_csv(out / "values.csv", result.values, report["sources"], report["targets"])
    with (out / "history.csv").open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["epoch", "target", "source", "value"])
        for e, phi in enumerate(result.history, 1):
            for t, row in zip(report["targets"], phi):
                for s, v in zip(report["sources"], row):
                    w.writerow([e, t, s, repr(float(v))])
    return report


def run_exact(cfg: RunConfig, problem: Problem) -> dict:
    o = problem.oracle
    if o.n_sources > MAX_EXACT_SOURCES:
        raise InvalidInputError(
            f"exact valuation of {o.n_sources} sources needs 2**{o.n_sources} trainings; the limit is "
            f"{MAX_EXACT_SOURCES}. Run 'shapsrc value' for a Monte-Carlo estimate instead.")
    ev = Evaluator(o, cfg.engine.sample_spec)
    empty = resolve_rho(cfg.engine.rho, o, ev)
    values = exact_shapley(ev, o.n_sources, empty)
    report = _base_report("exact", cfg, problem)
    report.update({"values": _matrix(values), "empty_score": empty.tolist(),
                   "oracle_trainings": ev.trainings})
    _write_json(cfg.out_dir / "exact_report.json", report)
    _write_values_csv(cfg.out_dir / "exact_values.csv", values, report["sources"], report["targets"])
    return report


def run_baselines(cfg: RunConfig, problem: Problem) -> dict:
    o = problem.oracle
    spec = cfg.engine.sample_spec
    cache = SubsetScoreCache(o.n_sources, o.n_targets)
    bcfg = cfg.section("baselines")
    k = int(bcfg.get("greedy_k", min(3, o.n_sources)))
    report = _base_report("baselines", cfg, problem)
    report["baseline_single"] = _matrix(baseline_single(o, spec, cache))
    report["baseline_loo"] = _matrix(baseline_loo(o, spec, cache)) if o.n_sources >= 2 else None
    report["baseline_random"] = baseline_random(o.n_sources, cfg.seed).tolist()
    report["greedy_dfs"] = {name: greedy_dfs(o, t, k, spec, cache) for t, name in enumerate(o.target_names)}
    report["oracle_trainings"] = cache.misses
    _write_json(cfg.out_dir / "baselines_report.json", report)
    return report


def _target_index(cfg: RunConfig, problem: Problem, name: str | None, key: str) -> int:
    names = list(problem.oracle.target_names)
    if name is None:
        return 0
    if name not in names:
        raise cfg.error(f"unknown target {name!r}; targets are {names}", key)
    return names.index(name)


def run_select(cfg: RunConfig, problem: Problem, values_path: str | None, workers: int) -> dict:
    o = problem.oracle
    scfg = cfg.section("select")
    dev = _target_index(cfg, problem, scfg.get("dev_target"), "dev_target")
    path = values_path or scfg.get("values")
    if path:
        p = Path(path) if values_path else cfg.resolve(path)
        if not p.is_file():
            raise FileNotFoundError(f"values file not found: {p}")
        prior = json.loads(p.read_text())
        if prior.get("sources") != list(o.source_names):
            raise InvalidInputError(f"{p}: values were computed for different sources")
        values = np.asarray(prior["values"])[dev]
    else:
        values = seal_shap(o, cfg.engine, workers=workers).values[dev]
    candidates = [float(c) for c in scfg.get("candidates", DEFAULT_THRESHOLDS)]
    sel = tune_threshold(values, candidates, o, dev, cfg.engine.sample_spec)
    report = _base_report("select", cfg, problem)
    report["values"] = [float(v) for v in values]
    report["selection"] = sel.to_json()
    report["chosen_names"] = [o.source_names[i] for i in sel.chosen]
    if "k" in scfg:
        report["topk"] = select_topk(values, int(scfg["k"]))
    test_name = scfg.get("test_target")
    if test_name is not None and scfg.get("retrain", True):
        test = _target_index(cfg, problem, test_name, "test_target")
        full_spec = SampleSpec(1.0, cfg.seed)
        chosen = float(o.evaluate(make_subset_key(sel.chosen, o.n_sources), full_spec)[test])
        everything = float(o.evaluate(full_key(o.n_sources), full_spec)[test])
        report["retrain"] = {"target": test_name, "chosen_score": chosen, "all_sources_score": everything}
    _write_json(cfg.out_dir / "select_report.json", report)
    return report


def _corpus_factory(problem: Problem, kind: str):
    by_name = {s.name: s for s in problem.sources}

    def factory(target: str, others: list[str]):
        ids = make_source_ids(others)
        srcs = [SourceCorpus(i, by_name[n].instances) for i, n in zip(ids, others)]
        return BuiltinOracle(srcs, [TargetCorpus(target, by_name[target].instances)], kind)

    return factory


def run_rank(cfg: RunConfig, problem: Problem, workers: int) -> dict:
    rcfg = cfg.section("rank")
    features: FeatureTable | None = problem.features
    if features is None:
        raise cfg.error("rank needs [rank].features (CSV: target,source,f1..fK)", "rank")
    o = problem.oracle
    if isinstance(o, TabularOracle):
        prob = cfg.section("problem")
        if prob.get("game") != "feature-linear":
            raise cfg.error("tabular ranking needs game = 'feature-linear'", "game")
        names = list(o.source_names)
        coef, empty = prob.get("coef"), float(prob.get("empty", 0.0))

        def factory(target, others):
            return TabularOracle(feature_linear_game(features, target, others, coef, empty), others, [target])
    elif isinstance(o, BuiltinOracle):
        names = list(o.source_names)
        factory = _corpus_factory(problem, o.kind)
    else:
        raise cfg.error("rank supports tabular and built-in oracles", "kind")
    target = rcfg.get("target") or o.target_names[0]
    rows = build_ranker_dataset(names, features, cfg.engine, factory, workers=workers)
    lam = float(rcfg.get("lambda", 1.0))
    sweep = {repr(float(l)): leave_one_out_loss(rows, float(l)) for l in rcfg.get("lambdas", [])}
    model = train_ranker(rows, lam)
    sources = list(o.source_names)
    predicted = predict_source_values(model, features.matrix(target, sources))
    k = int(rcfg.get("k", min(3, len(sources))))
    report = _base_report("rank", cfg, problem)
    report.update({
        "target": target,
        "dataset": [{"target": r.target, "source": r.source, "features": r.features.tolist(),
                     "value": r.value} for r in rows],
        "model": model.to_json(),
        "predicted": dict(zip(sources, map(float, predicted))),
        "predicted_topk": [sources[i] for i in select_topk(predicted, k)],
        "lambda_sweep": sweep,
    })
    if target in o.target_names:
        t = list(o.target_names).index(target)
        actual = seal_shap(o, cfg.engine, workers=workers).values[t]
        report["seal_shap_values"] = dict(zip(sources, map(float, actual)))
        report["seal_shap_topk"] = [sources[i] for i in select_topk(actual, k)]
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    model.save(cfg.out_dir / "ranker_model.json")
    _write_json(cfg.out_dir / "rank_report.json", report)
    return report


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="shapsrc", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("value", "exact", "baselines", "select", "rank"):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="run configuration (TOML)")
        p.add_argument("--seed", type=int, help="override the configured seed")
        p.add_argument("--workers", type=int, default=1, help="concurrent oracle evaluations")
        p.add_argument("--cache", help="subset score cache file")
        p.add_argument("--resume", action="store_true", help="load an existing cache file")
        p.add_argument("--out", help="output directory")
        if name == "select":
            p.add_argument("--values", help="value report JSON from 'shapsrc value'")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=os.environ.get("SHAPSRC_LOG", "WARNING").upper(),
                        format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    if args.workers < 1:
        print("error: --workers must be at least 1", file=sys.stderr)
        return 2
    problem = None
    try:
        cfg = load_config(args.config, seed=args.seed, cache=args.cache, out=args.out)
        problem = build_problem(cfg, processes=args.workers)
        started = time.perf_counter()
        if args.command == "value":
            report = run_value(cfg, problem, args.workers, args.resume)
        elif args.command == "exact":
            report = run_exact(cfg, problem)
        elif args.command == "baselines":
            report = run_baselines(cfg, problem)
        elif args.command == "select":
            report = run_select(cfg, problem, args.values, args.workers)
        else:
            report = run_rank(cfg, problem, args.workers)
        log.info("%s finished in %.2fs", args.command, time.perf_counter() - started)
    except (ConfigError, InvalidInputError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OracleFailure as exc:
        print(f"oracle failure: {exc}", file=sys.stderr)
        if exc.payload is not None:
            print(f"payload: {exc.payload!r}", file=sys.stderr)
        partial = getattr(exc, "partial", None)
        if partial:
            print(f"partial: {json.dumps(partial)}", file=sys.stderr)
        return 3
    finally:
        if problem is not None:
            problem.oracle.close()
    keys = ("command", "values", "epochs_run", "converged", "predicted_topk", "chosen_names")
    summary = {k: report[k] for k in keys if k in report}
    print(json.dumps(summary))
    return 0


if __name__ == "__main__":
    sys.exit(main())
