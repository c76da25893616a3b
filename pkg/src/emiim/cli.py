"""Command-line entry point.

Subcommands: ingest, segment, synth, train, evaluate, compare, predict.
All runs are deterministic given (inputs, flags, seed); report files carry a
timestamp header line unless --no-timestamp is given.  The seed falls back to
the EMIIM_SEED environment variable, then to 0.
"""

from __future__ import annotations

import argparse
import os
import sys
from datetime import datetime
from pathlib import Path
from typing import Optional, Sequence

from . import evaluation, ingest, model_io, synthgen
from .errors import EmiimError, InvalidConfigError, InvalidInputError
from .evaluation import EMIIM, MIIM, ModelSpec
from .forest import ForestConfig
from .segmentation import SegmentationConfig, fit_segments, render_model
from .tree import TreeConfig
from .types import FEATURE_NAMES, ContextVector


def _default_seed() -> int:
    env = os.environ.get("EMIIM_SEED")
    if env:
        try:
            return int(env)
        except ValueError:
            raise InvalidConfigError(f"EMIIM_SEED must be an integer, got {env!r}") from None
    return 0


def _add_seed(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--seed", type=int, default=None,
                        help="RNG seed (default: $EMIIM_SEED or 0)")


def _add_out(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--out", type=Path, default=Path("."),
                        help="output directory (default: current)")


def _add_ingest_params(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--top-k", type=int, default=20,
                        help="contacts that get their own social id")
    parser.add_argument("--min-count", type=int, default=2,
                        help="minimum records for a contact to leave RARE")
    parser.add_argument("--base-min", type=int, default=60,
                        help="segmentation base granularity in minutes")


def _add_model_params(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--model", choices=["miim", "emiim"], default="emiim")
    parser.add_argument("--trees", type=int, default=100, help="ensemble size")
    parser.add_argument("--subset", type=int, default=None,
                        help="features sampled per node (default: floor(sqrt(D)))")
    parser.add_argument("--no-bootstrap", action="store_true",
                        help="train every tree on the full dataset")
    parser.add_argument("--max-depth", type=int, default=None)
    parser.add_argument("--min-samples-leaf", type=int, default=1)
    parser.add_argument("--min-gain", type=float, default=1e-12)


def _seg_cfg(args) -> SegmentationConfig:
    return SegmentationConfig(base_granularity_min=args.base_min)


def _social_cfg(args) -> ingest.SocialContextConfig:
    return ingest.SocialContextConfig(top_k=args.top_k, min_count=args.min_count)


def _model_spec(args, seed: int) -> ModelSpec:
    tree_cfg = TreeConfig(
        max_depth=args.max_depth,
        min_samples_leaf=args.min_samples_leaf,
        min_gain=args.min_gain,
    )
    if args.model == "miim":
        return ModelSpec.miim(tree=tree_cfg, master_seed=seed)
    return ModelSpec.emiim(
        ForestConfig(
            n_trees=args.trees,
            feature_subset_size=args.subset,
            bootstrap=not args.no_bootstrap,
            tree=tree_cfg,
            master_seed=seed,
        )
    )


def _write(path: Path, text: str, *, timestamp: bool) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    header = "" if not timestamp else f"# generated {datetime.now().isoformat(timespec='seconds')}\n"
    path.write_text(header + text, encoding="utf-8")


def _parse_log(path: Path) -> tuple[list, ingest.ParseReport]:
    records, report = ingest.parse_log(path)
    if report.skipped:
        for line_no, reason in report.skipped:
            print(f"skipped line {line_no}: {reason}", file=sys.stderr)
    return records, report


# ---------------------------------------------------------------------------
# subcommands

def _cmd_ingest(args) -> int:
    records, report = _parse_log(args.log)
    seg_model = fit_segments(
        [(lr.record.timestamp, lr.label) for lr in ingest.label_records(records)],
        _seg_cfg(args),
    )
    social_map = ingest.derive_social_context(records, _social_cfg(args))
    dataset = ingest.build_dataset(records, seg_model, social_map, user_id=args.log.stem)
    out = args.out / f"{args.log.stem}.dataset.csv"
    _write(out, ingest.dump_dataset(dataset), timestamp=False)
    print(f"parsed {report.parsed}/{report.total_rows} rows, "
          f"{len(dataset)} labeled examples -> {out}")
    return 0


def _cmd_segment(args) -> int:
    records, _ = _parse_log(args.log)
    labeled = ingest.label_records(records)
    model = fit_segments([(lr.record.timestamp, lr.label) for lr in labeled], _seg_cfg(args))
    sys.stdout.write(render_model(model))
    return 0


def _cmd_synth(args) -> int:
    seed = args.seed if args.seed is not None else _default_seed()
    if args.scenario == "alice":
        ruleset = synthgen.parse_scenario(
            synthgen.alice_scenario_text(),
            noise=args.eps, n_records=args.m, seed=seed, n_weeks=args.weeks,
        )
        stem = "alice"
    else:
        ruleset = synthgen.load_scenario(
            args.scenario, noise=args.eps, n_records=args.m, seed=seed, n_weeks=args.weeks,
        )
        stem = Path(args.scenario).stem
    records, report = synthgen.generate(ruleset)
    log_path = args.out / f"{stem}.log.csv"
    truth_path = args.out / f"{stem}.truth.csv"
    _write(log_path, synthgen.render_log(records), timestamp=False)
    _write(truth_path, synthgen.render_truth(report), timestamp=False)
    tally = "  ".join(f"{cls.display}={report.class_tally[cls]}" for cls in report.class_tally)
    print(f"wrote {log_path} and {truth_path} ({tally}, {report.n_flips} flipped)")
    return 0


def _train_model_bundle(args, seed: int) -> model_io.TrainedModel:
    records, _ = _parse_log(args.log)
    labeled = ingest.label_records(records)
    seg_model = fit_segments([(lr.record.timestamp, lr.label) for lr in labeled], _seg_cfg(args))
    social_map = ingest.derive_social_context(records, _social_cfg(args))
    dataset = ingest.build_dataset(records, seg_model, social_map, user_id=args.log.stem)
    spec = _model_spec(args, seed)
    trees, seeds, cfg = evaluation.train_model(dataset, spec)
    return model_io.TrainedModel(
        spec.kind, dataset.user_id, cfg, seg_model, social_map,
        dataset.feature_vocab, trees, seeds,
    )


def _cmd_train(args) -> int:
    seed = args.seed if args.seed is not None else _default_seed()
    bundle = _train_model_bundle(args, seed)
    out = args.model_out or (args.out / f"{args.log.stem}.{args.model}")
    out = Path(out)
    out.parent.mkdir(parents=True, exist_ok=True)
    model_io.save_model(bundle, out)
    print(f"trained {bundle.kind} on {args.log} ({len(bundle.trees)} trees) -> {out}")
    return 0


def _cmd_evaluate(args) -> int:
    seed = args.seed if args.seed is not None else _default_seed()
    records, _ = _parse_log(args.log)
    labeled = ingest.label_records(records)
    spec = _model_spec(args, seed)
    report = evaluation.cross_validate(
        labeled, spec, args.k, seed,
        seg_cfg=_seg_cfg(args), social_cfg=_social_cfg(args),
        stratify=args.stratify, user_id=args.log.stem,
    )
    text = evaluation.render_report(report)
    base = args.out / f"{args.log.stem}.{args.model}"
    _write(Path(f"{base}.report.txt"), text, timestamp=not args.no_timestamp)
    _write(Path(f"{base}.report.csv"), evaluation.report_csv(report), timestamp=not args.no_timestamp)
    sys.stdout.write(text)
    return 0


def _cmd_compare(args) -> int:
    seed = args.seed if args.seed is not None else _default_seed()
    record_sets = []
    ids = []
    for log in args.logs:
        records, _ = _parse_log(log)
        record_sets.append(ingest.label_records(records))
        ids.append(log.stem)
    specs = [
        ModelSpec.miim(
            tree=TreeConfig(max_depth=args.max_depth, min_samples_leaf=args.min_samples_leaf,
                            min_gain=args.min_gain),
            master_seed=seed,
        ),
        _model_spec_for_compare(args, seed),
    ]
    comparison = evaluation.compare_models(
        record_sets, specs, args.k, seed,
        seg_cfg=_seg_cfg(args), social_cfg=_social_cfg(args),
        stratify=args.stratify, user_ids=ids,
    )
    text = evaluation.render_comparison(comparison)
    _write(args.out / "comparison.txt", text, timestamp=not args.no_timestamp)
    _write(args.out / "comparison.csv", evaluation.comparison_csv(comparison),
           timestamp=not args.no_timestamp)
    sys.stdout.write(text)
    return 0


def _model_spec_for_compare(args, seed: int) -> ModelSpec:
    return ModelSpec.emiim(
        ForestConfig(
            n_trees=args.trees,
            feature_subset_size=args.subset,
            bootstrap=not args.no_bootstrap,
            tree=TreeConfig(max_depth=args.max_depth, min_samples_leaf=args.min_samples_leaf,
                            min_gain=args.min_gain),
            master_seed=seed,
        )
    )


def _parse_context(text: str) -> ContextVector:
    keys = {"segment": "time_segment", "day": "day_of_week",
            "location": "location", "contact": "social_contact"}
    values = {}
    for part in text.split(","):
        part = part.strip()
        if "=" not in part:
            raise InvalidInputError(f"context part {part!r} is not key=value")
        key, value = part.split("=", 1)
        key = key.strip().lower()
        if key not in keys:
            raise InvalidInputError(
                f"unknown context key {key!r} (expected segment, day, location, contact)")
        values[keys[key]] = value.strip()
    missing = [k for k in keys.values() if k not in values]
    if missing:
        raise InvalidInputError(f"context is missing: {', '.join(missing)}")
    return ContextVector(**values)


def _cmd_predict(args) -> int:
    bundle = model_io.load_model(args.model)
    context = _parse_context(args.context)
    behavior, votes = bundle.predict(context)
    print(behavior.display)
    print("votes: " + "  ".join(f"{cls.display}={votes[cls]}" for cls in votes))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="emiim",
        description="Context-aware call-handling prediction: single-tree baseline "
                    "(MIIM) vs. random-forest ensemble (E-MIIM).",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="parse a log and dump the labeled dataset")
    p.add_argument("--log", type=Path, required=True)
    _add_ingest_params(p)
    _add_out(p)
    p.set_defaults(func=_cmd_ingest)

    p = sub.add_parser("segment", help="fit and print the time segmentation")
    p.add_argument("--log", type=Path, required=True)
    p.add_argument("--base-min", type=int, default=60)
    p.set_defaults(func=_cmd_segment)

    p = sub.add_parser("synth", help="generate a synthetic log from planted rules")
    p.add_argument("--scenario", default="alice",
                   help="scenario file path, or 'alice' for the bundled default")
    p.add_argument("--m", type=int, default=2000, help="records to generate")
    p.add_argument("--eps", type=float, default=0.1, help="label flip probability")
    p.add_argument("--weeks", type=int, default=36, help="calendar horizon")
    _add_seed(p)
    _add_out(p)
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("train", help="train a model on a full log and save it")
    p.add_argument("--log", type=Path, required=True)
    p.add_argument("--model-out", type=Path, default=None,
                   help="model file path (default: <out>/<log>.<model>)")
    _add_model_params(p)
    _add_ingest_params(p)
    _add_seed(p)
    _add_out(p)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("evaluate", help="k-fold cross validation of one model")
    p.add_argument("--log", type=Path, required=True)
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--stratify", action="store_true")
    p.add_argument("--no-timestamp", action="store_true",
                   help="omit the timestamp header from report files")
    _add_model_params(p)
    _add_ingest_params(p)
    _add_seed(p)
    _add_out(p)
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("compare", help="MIIM vs E-MIIM over one or more logs")
    p.add_argument("--logs", type=Path, nargs="+", required=True)
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--stratify", action="store_true")
    p.add_argument("--no-timestamp", action="store_true")
    p.add_argument("--trees", type=int, default=100)
    p.add_argument("--subset", type=int, default=None)
    p.add_argument("--no-bootstrap", action="store_true")
    p.add_argument("--max-depth", type=int, default=None)
    p.add_argument("--min-samples-leaf", type=int, default=1)
    p.add_argument("--min-gain", type=float, default=1e-12)
    _add_ingest_params(p)
    _add_seed(p)
    _add_out(p)
    p.set_defaults(func=_cmd_compare)

    p = sub.add_parser("predict", help="classify one context with a saved model")
    p.add_argument("--model", type=Path, required=True)
    p.add_argument("--context", required=True,
                   help='e.g. "segment=S2,day=Mon,location=office,contact=C1"')
    p.set_defaults(func=_cmd_predict)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except EmiimError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
