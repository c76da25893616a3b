"""K-fold cross validation, per-class metrics, kappa, and model comparison.

Each fold refits the segmentation and the social map on its training records
only, so the temporal and social features never leak test labels.  Fold
partitions are a pure function of (n, k, seed); evaluating two models with
the same seed therefore uses byte-identical train/test splits.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .errors import InvalidFoldCountError, InvalidInputError
from .forest import ForestConfig, majority_codes, resolve_subset_size, train_forest, vote_codes
from .ingest import (
    LabeledRecord,
    SocialContextConfig,
    build_dataset,
    context_for_record,
    derive_social_context,
)
from .rng import make_rng, mix64
from .segmentation import SegmentationConfig, fit_segments
from .tree import TreeConfig, TreeNode, flatten_tree, grow_encoded
from .types import CLASSES, N_CLASSES, BehaviorClass, Dataset, encode_contexts, encode_examples

MIIM = "MIIM"
EMIIM = "E-MIIM"


@dataclass(frozen=True)
class ConfusionMatrix:
    """counts[i][j] = examples of actual class id i+1 predicted as id j+1."""

    counts: tuple[tuple[int, ...], ...]

    @property
    def total(self) -> int:
        return sum(sum(row) for row in self.counts)

    def row_sum(self, k: int) -> int:
        return sum(self.counts[k])

    def col_sum(self, k: int) -> int:
        return sum(row[k] for row in self.counts)

    def add(self, other: "ConfusionMatrix") -> "ConfusionMatrix":
        return ConfusionMatrix(
            tuple(
                tuple(a + b for a, b in zip(ra, rb))
                for ra, rb in zip(self.counts, other.counts)
            )
        )


def confusion(
    actual: Sequence[BehaviorClass], predicted: Sequence[BehaviorClass]
) -> ConfusionMatrix:
    if len(actual) != len(predicted) or not actual:
        raise InvalidInputError("actual/predicted must be equal-length and non-empty")
    counts = [[0] * N_CLASSES for _ in range(N_CLASSES)]
    for a, p in zip(actual, predicted):
        counts[a.value - 1][p.value - 1] += 1
    return ConfusionMatrix(tuple(tuple(row) for row in counts))


@dataclass(frozen=True)
class ClassMetrics:
    """One-vs-rest rates for a single class (one table row per class)."""

    behavior: BehaviorClass
    tp_rate: float
    fp_rate: float
    precision: float
    recall: float
    f_measure: float
    support: int
    zero_division: bool = False  # some 0/0 ratio was defined as 0


def _ratio(num: int, den: int) -> tuple[float, bool]:
    if den == 0:
        return 0.0, True
    return num / den, False


def f_measure(precision: float, recall: float) -> float:
    """Harmonic mean of precision and recall (0 when both are 0)."""
    if precision + recall == 0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


def class_metrics(cm: ConfusionMatrix, behavior: BehaviorClass) -> ClassMetrics:
    k = behavior.value - 1
    tp = cm.counts[k][k]
    fp = cm.col_sum(k) - tp
    fn = cm.row_sum(k) - tp
    tn = cm.total - tp - fp - fn
    tp_rate, z1 = _ratio(tp, tp + fn)
    fp_rate, z2 = _ratio(fp, fp + tn)
    precision, z3 = _ratio(tp, tp + fp)
    recall = tp_rate
    f = f_measure(precision, recall)
    zero = z1 or z2 or z3 or (precision + recall == 0)
    return ClassMetrics(behavior, tp_rate, fp_rate, precision, recall, f, cm.row_sum(k), zero)


def kappa(cm: ConfusionMatrix) -> float:
    """Chance-corrected agreement from the matrix marginals.

    expected is the accuracy of a predictor drawing independently from the
    prediction marginals; a degenerate expected of 1 yields 0 by convention.
    """
    n = cm.total
    if n == 0:
        raise InvalidInputError("empty confusion matrix")
    observed = sum(cm.counts[k][k] for k in range(N_CLASSES)) / n
    expected = sum(cm.row_sum(k) * cm.col_sum(k) for k in range(N_CLASSES)) / (n * n)
    if expected == 1.0:
        return 0.0
    return (observed - expected) / (1.0 - expected)


def weighted_average(values: Sequence[float], supports: Sequence[int]) -> float:
    if len(values) != len(supports):
        raise InvalidInputError("values and supports differ in length")
    total = sum(supports)
    if total <= 0:
        raise InvalidInputError("total support must be positive")
    return sum(v * s for v, s in zip(values, supports)) / total


def kfold_split(n: int, k: int, seed: int) -> list[np.ndarray]:
    """Shuffle 0..n-1 by seed and deal into k folds with sizes differing <= 1."""
    if k < 2 or k > n:
        raise InvalidFoldCountError(f"fold count {k} outside [2, {n}]")
    order = make_rng(seed).permutation(n)
    base, extra = divmod(n, k)
    folds = []
    start = 0
    for i in range(k):
        size = base + (1 if i < extra else 0)
        folds.append(np.sort(order[start : start + size]))
        start += size
    return folds


def stratified_kfold_split(
    labels: Sequence[BehaviorClass], k: int, seed: int
) -> list[np.ndarray]:
    """Per-class shuffle, then deal round-robin so folds mirror class balance."""
    n = len(labels)
    if k < 2 or k > n:
        raise InvalidFoldCountError(f"fold count {k} outside [2, {n}]")
    rng = make_rng(seed)
    folds: list[list[int]] = [[] for _ in range(k)]
    cursor = 0
    for cls in CLASSES:
        members = np.asarray([i for i, lab in enumerate(labels) if lab is cls])
        if members.size == 0:
            continue
        members = members[rng.permutation(members.size)]
        for i in members:
            folds[cursor % k].append(int(i))
            cursor += 1
    return [np.sort(np.asarray(f, dtype=np.int64)) for f in folds]


@dataclass(frozen=True)
class ModelSpec:
    """Which model to train: the single-tree baseline or the ensemble.

    The baseline reads only ``forest.tree`` (with feature subsetting forced
    off) and ``forest.master_seed``.
    """

    kind: str
    forest: ForestConfig = ForestConfig()

    @staticmethod
    def miim(tree: TreeConfig = TreeConfig(), master_seed: int = 0) -> "ModelSpec":
        return ModelSpec(MIIM, ForestConfig(n_trees=1, bootstrap=False, tree=tree, master_seed=master_seed))

    @staticmethod
    def emiim(forest: ForestConfig = ForestConfig()) -> "ModelSpec":
        return ModelSpec(EMIIM, forest)


def train_model(
    dataset: Dataset, spec: ModelSpec, master_seed: Optional[int] = None
) -> tuple[tuple[TreeNode, ...], tuple[int, ...], ForestConfig]:
    """Train per spec; returns (trees, per-tree seeds, effective config)."""
    seed = spec.forest.master_seed if master_seed is None else master_seed
    if spec.kind == MIIM:
        tree_cfg = replace(spec.forest.tree, feature_subset_size=None)
        cfg = replace(spec.forest, n_trees=1, bootstrap=False, tree=tree_cfg,
                      feature_subset_size=None, master_seed=seed)
        codes, labels = encode_examples(dataset.examples, dataset.feature_vocab)
        idx = np.arange(len(dataset), dtype=np.int64)
        tree = grow_encoded(codes, labels, idx, dataset.feature_vocab, tree_cfg,
                            make_rng(mix64(seed, 0)))
        return (tree,), (mix64(seed, 0),), cfg
    if spec.kind == EMIIM:
        cfg = replace(spec.forest, master_seed=seed)
        forest = train_forest(dataset, cfg)
        return forest.trees, forest.per_tree_seeds, replace(
            cfg, feature_subset_size=resolve_subset_size(cfg, len(dataset.feature_vocab))
        )
    raise InvalidInputError(f"unknown model kind {spec.kind!r}")


@dataclass(frozen=True)
class FoldResult:
    fold: int
    n_test: int
    accuracy: float
    weighted_precision: float
    weighted_recall: float
    weighted_f_measure: float
    kappa: float


@dataclass(frozen=True)
class EvalReport:
    model_kind: str
    user_id: str
    confusion: ConfusionMatrix
    per_class: tuple[ClassMetrics, ...]
    weighted_precision: float
    weighted_recall: float
    weighted_f_measure: float
    kappa: float
    accuracy: float
    folds: tuple[FoldResult, ...]
    k: int
    seed: int

    @property
    def n_examples(self) -> int:
        return self.confusion.total


def _summarize(cm: ConfusionMatrix) -> tuple[tuple[ClassMetrics, ...], float, float, float, float, float]:
    per_class = tuple(class_metrics(cm, cls) for cls in CLASSES)
    supports = [m.support for m in per_class]
    wp = weighted_average([m.precision for m in per_class], supports)
    wr = weighted_average([m.recall for m in per_class], supports)
    wf = weighted_average([m.f_measure for m in per_class], supports)
    acc = sum(cm.counts[k][k] for k in range(N_CLASSES)) / cm.total
    return per_class, wp, wr, wf, kappa(cm), acc


def cross_validate(
    records: Sequence[LabeledRecord],
    spec: ModelSpec,
    k: int = 10,
    seed: int = 0,
    *,
    seg_cfg: SegmentationConfig = SegmentationConfig(),
    social_cfg: SocialContextConfig = SocialContextConfig(),
    stratify: bool = False,
    user_id: str = "user",
) -> EvalReport:
    """K-fold evaluation over labeled call records.

    Contexts are rebuilt per fold: segmentation and social map come from the
    nine training parts, and the held-out part is featurized through them
    before prediction.  The pooled confusion matrix over all folds is the
    primary result; per-fold metrics are also reported.
    """
    n = len(records)
    labels_all = [lr.label for lr in records]
    folds = (
        stratified_kfold_split(labels_all, k, seed) if stratify else kfold_split(n, k, seed)
    )
    pooled: Optional[ConfusionMatrix] = None
    fold_results = []
    for j, test_idx in enumerate(folds):
        in_test = np.zeros(n, dtype=bool)
        in_test[test_idx] = True
        train = [records[i] for i in range(n) if not in_test[i]]
        test = [records[i] for i in test_idx]

        seg_model = fit_segments([(lr.record.timestamp, lr.label) for lr in train], seg_cfg)
        social_map = derive_social_context([lr.record for lr in train], social_cfg)
        dataset = build_dataset([lr.record for lr in train], seg_model, social_map, user_id)
        trees, _seeds, cfg = train_model(dataset, spec, mix64(spec.forest.master_seed, j))

        contexts = [context_for_record(lr.record, seg_model, social_map) for lr in test]
        codes = encode_contexts(contexts, dataset.feature_vocab)
        flat = [flatten_tree(t, dataset.feature_vocab) for t in trees]
        preds = majority_codes(vote_codes(flat, codes))
        predicted = [BehaviorClass(int(p) + 1) for p in preds]
        actual = [lr.label for lr in test]

        cm = confusion(actual, predicted)
        pooled = cm if pooled is None else pooled.add(cm)
        _, wp, wr, wf, kap, acc = _summarize(cm)
        fold_results.append(FoldResult(j, len(test), acc, wp, wr, wf, kap))

    per_class, wp, wr, wf, kap, acc = _summarize(pooled)
    return EvalReport(
        spec.kind, user_id, pooled, per_class, wp, wr, wf, kap, acc,
        tuple(fold_results), k, seed,
    )


@dataclass(frozen=True)
class ModelSummary:
    """Across-dataset averages of the pooled weighted metrics."""

    model_kind: str
    precision: float
    recall: float
    f_measure: float
    kappa: float


@dataclass(frozen=True)
class ComparisonReport:
    summaries: tuple[ModelSummary, ...]
    reports: tuple[tuple[EvalReport, ...], ...]  # [model][dataset]
    k: int
    seed: int


def compare_models(
    record_sets: Sequence[Sequence[LabeledRecord]],
    specs: Sequence[ModelSpec],
    k: int = 10,
    seed: int = 0,
    *,
    seg_cfg: SegmentationConfig = SegmentationConfig(),
    social_cfg: SocialContextConfig = SocialContextConfig(),
    stratify: bool = False,
    user_ids: Optional[Sequence[str]] = None,
) -> ComparisonReport:
    """Evaluate every spec on every dataset with shared fold seeds.

    The shared (n, k, seed) fold contract guarantees each model sees the
    identical train/test partitions, so comparisons are paired.
    """
    if not record_sets:
        raise InvalidInputError("need at least one dataset")
    ids = list(user_ids) if user_ids else [f"user{i + 1}" for i in range(len(record_sets))]
    all_reports = []
    summaries = []
    for spec in specs:
        reports = tuple(
            cross_validate(
                records, spec, k, seed,
                seg_cfg=seg_cfg, social_cfg=social_cfg, stratify=stratify, user_id=uid,
            )
            for records, uid in zip(record_sets, ids)
        )
        all_reports.append(reports)
        m = len(reports)
        summaries.append(
            ModelSummary(
                spec.kind,
                sum(r.weighted_precision for r in reports) / m,
                sum(r.weighted_recall for r in reports) / m,
                sum(r.weighted_f_measure for r in reports) / m,
                sum(r.kappa for r in reports) / m,
            )
        )
    return ComparisonReport(tuple(summaries), tuple(all_reports), k, seed)


# ---------------------------------------------------------------------------
# rendering

def _row(label: str, cells: Sequence[str], widths: Sequence[int]) -> str:
    parts = [label.ljust(widths[0])]
    parts += [c.rjust(w) for c, w in zip(cells, widths[1:])]
    return "  ".join(parts).rstrip()


def render_report(report: EvalReport) -> str:
    """Aligned per-class table plus the weighted summary block."""
    widths = (8, 8, 8, 9, 7, 9, 7)
    lines = [
        f"Model: {report.model_kind}   user: {report.user_id}   "
        f"examples: {report.n_examples}   folds: {report.k}   seed: {report.seed}",
        "",
        _row("Class", ["TP Rate", "FP Rate", "Precision", "Recall", "F-measure", "Support"], widths),
    ]
    for m in report.per_class:
        flag = "*" if m.zero_division else ""
        lines.append(
            _row(
                f"Class {m.behavior.value}",
                [f"{m.tp_rate:.3f}", f"{m.fp_rate:.3f}", f"{m.precision:.3f}",
                 f"{m.recall:.3f}", f"{m.f_measure:.3f}", f"{m.support}{flag}"],
                widths,
            )
        )
    if any(m.zero_division for m in report.per_class):
        lines.append("(*) some 0/0 ratios were defined as 0")
    lines += [
        "",
        f"Weighted precision: {report.weighted_precision:.6f}",
        f"Weighted recall:    {report.weighted_recall:.6f}",
        f"Weighted f-measure: {report.weighted_f_measure:.6f}",
        f"Accuracy:           {report.accuracy:.6f}",
        f"Kappa:              {report.kappa:.6f}",
        "",
        "Fold      n  Accuracy  W-Precision  W-Recall  W-F-measure    Kappa",
    ]
    for fr in report.folds:
        lines.append(
            f"{fr.fold:>4}  {fr.n_test:>5}  {fr.accuracy:>8.4f}  {fr.weighted_precision:>11.4f}"
            f"  {fr.weighted_recall:>8.4f}  {fr.weighted_f_measure:>11.4f}  {fr.kappa:>7.4f}"
        )
    return "\n".join(lines) + "\n"


def report_csv(report: EvalReport) -> str:
    """Delimited form: per-class rows then a summary block."""
    lines = ["class,tp_rate,fp_rate,precision,recall,f_measure"]
    for m in report.per_class:
        lines.append(
            f"Class {m.behavior.value},{m.tp_rate:.6f},{m.fp_rate:.6f},"
            f"{m.precision:.6f},{m.recall:.6f},{m.f_measure:.6f}"
        )
    lines += [
        "",
        "metric,value",
        f"weighted_precision,{report.weighted_precision:.6f}",
        f"weighted_recall,{report.weighted_recall:.6f}",
        f"weighted_f_measure,{report.weighted_f_measure:.6f}",
        f"accuracy,{report.accuracy:.6f}",
        f"kappa,{report.kappa:.6f}",
    ]
    return "\n".join(lines) + "\n"


def render_comparison(comparison: ComparisonReport) -> str:
    lines = [
        f"Datasets: {len(comparison.reports[0])}   folds: {comparison.k}   seed: {comparison.seed}",
        "",
        "Model      Precision    Recall  F-measure     Kappa",
    ]
    for s in comparison.summaries:
        lines.append(
            f"{s.model_kind:<9}  {s.precision:>9.4f}  {s.recall:>8.4f}"
            f"  {s.f_measure:>9.4f}  {s.kappa:>8.4f}"
        )
    return "\n".join(lines) + "\n"


def comparison_csv(comparison: ComparisonReport) -> str:
    lines = ["model,precision,recall,f_measure,kappa"]
    for s in comparison.summaries:
        lines.append(
            f"{s.model_kind},{s.precision:.6f},{s.recall:.6f},{s.f_measure:.6f},{s.kappa:.6f}"
        )
    return "\n".join(lines) + "\n"
