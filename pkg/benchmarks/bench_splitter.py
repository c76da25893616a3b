#!/usr/bin/env python3
"""Benchmark: compiled vs pure-Python split-search kernel.

Times forest training (where the split search dominates) and batch
prediction on a synthetic log, once per available kernel, and prints the
speedup.  Results are identical between kernels by construction; only the
wall time differs.

    python benchmarks/bench_splitter.py --m 4000 --trees 50 --repeats 3
"""

import argparse
import time

from emiim import _kernels
from emiim.evaluation import ModelSpec, cross_validate
from emiim.forest import ForestConfig, flatten_forest, train_forest, vote_codes
from emiim.ingest import build_dataset, derive_social_context, label_records
from emiim.segmentation import fit_segments
from emiim.synthgen import alice_scenario_text, generate, parse_scenario
from emiim.types import encode_contexts


def build_inputs(m, seed):
    ruleset = parse_scenario(alice_scenario_text(), noise=0.1, n_records=m, seed=seed)
    records, _ = generate(ruleset)
    labeled = label_records(records)
    seg = fit_segments([(lr.record.timestamp, lr.label) for lr in labeled])
    social = derive_social_context(records)
    dataset = build_dataset(records, seg, social)
    return labeled, dataset


def time_kernel(name, dataset, labeled, trees, repeats):
    _kernels.set_active_kernel(name)
    cfg = ForestConfig(n_trees=trees, master_seed=7)

    train_times = []
    forest = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        forest = train_forest(dataset, cfg)
        train_times.append(time.perf_counter() - t0)

    contexts = [ex.context for ex in dataset.examples]
    codes = encode_contexts(contexts, dataset.feature_vocab)
    flat = flatten_forest(forest.trees, dataset.feature_vocab)
    t0 = time.perf_counter()
    vote_codes(flat, codes)
    predict_time = time.perf_counter() - t0

    t0 = time.perf_counter()
    report = cross_validate(labeled, ModelSpec.emiim(cfg), k=10, seed=3)
    cv_time = time.perf_counter() - t0

    return min(train_times), predict_time, cv_time, report.weighted_f_measure


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--m", type=int, default=4000, help="synthetic records")
    parser.add_argument("--trees", type=int, default=50)
    parser.add_argument("--repeats", type=int, default=3)
    parser.add_argument("--seed", type=int, default=7)
    args = parser.parse_args()

    labeled, dataset = build_inputs(args.m, args.seed)
    print(f"dataset: {len(dataset)} examples, {args.trees} trees, "
          f"kernels built: {sorted(_kernels.IMPLEMENTATIONS)}")
    print(f"{'kernel':<10} {'train (s)':>10} {'predict (s)':>12} {'10-fold CV (s)':>15} {'wf':>7}")

    results = {}
    default = _kernels.active_kernel()
    try:
        for name in sorted(_kernels.IMPLEMENTATIONS):
            train_s, predict_s, cv_s, wf = time_kernel(
                name, dataset, labeled, args.trees, args.repeats
            )
            results[name] = (train_s, cv_s)
            print(f"{name:<10} {train_s:>10.3f} {predict_s:>12.3f} {cv_s:>15.3f} {wf:>7.4f}")
    finally:
        _kernels.set_active_kernel(default)

    if {"compiled", "python"} <= results.keys():
        t_ratio = results["python"][0] / results["compiled"][0]
        cv_ratio = results["python"][1] / results["compiled"][1]
        print(f"speedup (python/compiled): train {t_ratio:.1f}x, CV {cv_ratio:.1f}x")


if __name__ == "__main__":
    main()
