"""Text-based model persistence.

The file is line-oriented with tab-separated fields: a versioned header, the
effective training configuration, the fitted segmentation and social map, the
feature vocabulary, and every tree in preorder (``split``/``leaf`` records).
The format is diffable and round-trips losslessly: loading and re-saving a
model reproduces the file byte for byte.  Category labels may not contain
tabs or newlines.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Optional, Sequence

from .errors import InvalidInputError, ModelParseError, UnsupportedVersionError
from .forest import ForestConfig
from .segmentation import Segment, SegmentationConfig, SegmentationModel
from .tree import Leaf, Split, TreeConfig, TreeNode
from .types import CLASSES, N_CLASSES, BehaviorClass, ContextVector

MAGIC = "emiim-model"
FORMAT_VERSION = 1


@dataclass(frozen=True)
class TrainedModel:
    """Everything needed to featurize and classify a call event."""

    kind: str  # MIIM | E-MIIM
    user_id: str
    config: ForestConfig
    segmentation: SegmentationModel
    social_map: dict[str, str]
    feature_vocab: tuple[tuple[str, ...], ...]
    trees: tuple[TreeNode, ...]
    per_tree_seeds: tuple[int, ...]

    def predict(self, context: ContextVector | Sequence[str]) -> tuple[BehaviorClass, dict[BehaviorClass, int]]:
        from .forest import Forest, predict_forest

        forest = Forest(self.trees, self.per_tree_seeds, self.config, self.feature_vocab)
        return predict_forest(forest, context)


def _check_label(value: str) -> str:
    if "\t" in value or "\n" in value:
        raise InvalidInputError(f"label {value!r} may not contain tab or newline")
    return value


def _format_float(x: float) -> str:
    return repr(float(x))


def _config_line(cfg: ForestConfig) -> str:
    t = cfg.tree
    fields = [
        f"n_trees={cfg.n_trees}",
        f"feature_subset_size={cfg.feature_subset_size if cfg.feature_subset_size is not None else 'none'}",
        f"bootstrap={int(cfg.bootstrap)}",
        f"master_seed={cfg.master_seed}",
        f"max_depth={t.max_depth if t.max_depth is not None else 'none'}",
        f"min_samples_leaf={t.min_samples_leaf}",
        f"min_gain={_format_float(t.min_gain)}",
    ]
    return "config\t" + "\t".join(fields)


def _parse_config(parts: list[str], path: str) -> ForestConfig:
    kv = {}
    for part in parts:
        if "=" not in part:
            raise ModelParseError(f"{path}: bad config field {part!r}")
        key, value = part.split("=", 1)
        kv[key] = value
    try:
        maybe = lambda v: None if v == "none" else int(v)
        return ForestConfig(
            n_trees=int(kv["n_trees"]),
            feature_subset_size=maybe(kv["feature_subset_size"]),
            bootstrap=bool(int(kv["bootstrap"])),
            master_seed=int(kv["master_seed"]),
            tree=TreeConfig(
                max_depth=maybe(kv["max_depth"]),
                min_samples_leaf=int(kv["min_samples_leaf"]),
                min_gain=float(kv["min_gain"]),
            ),
        )
    except (KeyError, ValueError) as exc:
        raise ModelParseError(f"{path}: bad config: {exc}") from exc


def serialize_model(model: TrainedModel) -> str:
    lines = [
        f"{MAGIC}\t{FORMAT_VERSION}",
        f"kind\t{model.kind}",
        f"user\t{_check_label(model.user_id)}",
        _config_line(model.config),
    ]

    seg = model.segmentation
    lines.append(
        f"segmentation\t{len(seg.segments)}\t{seg.config.base_granularity_min}\t{int(seg.config.per_day)}"
    )
    for s in seg.segments:
        dominant = s.dominant.value if s.dominant else 0
        lines.append(
            f"segment\t{s.day}\t{s.start_minute}\t{s.end_minute}\t{_check_label(s.segment_id)}\t{dominant}"
        )

    lines.append(f"social\t{len(model.social_map)}")
    for contact, sid in model.social_map.items():
        lines.append(f"contact\t{_check_label(contact)}\t{_check_label(sid)}")

    for name_index, vocab in enumerate(model.feature_vocab):
        cells = "\t".join(_check_label(v) for v in vocab)
        lines.append(f"vocab\t{name_index}\t{len(vocab)}" + (f"\t{cells}" if vocab else ""))

    lines.append(f"trees\t{len(model.trees)}")
    for i, (tree, seed) in enumerate(zip(model.trees, model.per_tree_seeds)):
        lines.append(f"tree\t{i}\t{seed}")
        _write_tree(tree, lines)
    lines.append("end")
    return "\n".join(lines) + "\n"


def _write_tree(node: TreeNode, lines: list[str]) -> None:
    if isinstance(node, Leaf):
        counts = "\t".join(str(c) for c in node.class_counts)
        lines.append(f"leaf\t{node.label.value}\t{counts}")
    else:
        lines.append(f"split\t{node.feature_index}\t{_check_label(node.category)}")
        _write_tree(node.left, lines)
        _write_tree(node.right, lines)


def save_model(model: TrainedModel, path: str | Path) -> None:
    Path(path).write_text(serialize_model(model), encoding="utf-8")


class _Lines:
    def __init__(self, text: str):
        self.rows = text.splitlines()
        self.pos = 0

    def next(self, context: str) -> list[str]:
        if self.pos >= len(self.rows):
            raise ModelParseError(f"{context}: unexpected end of file")
        row = self.rows[self.pos]
        self.pos += 1
        return row.split("\t")

    def expect(self, tag: str, context: str) -> list[str]:
        parts = self.next(context)
        if parts[0] != tag:
            raise ModelParseError(f"{context}: expected {tag!r}, found {parts[0]!r}")
        return parts[1:]


def deserialize_model(text: str) -> TrainedModel:
    lines = _Lines(text)
    header = lines.next("header")
    if header[0] != MAGIC:
        raise ModelParseError("header: not an emiim model file")
    try:
        version = int(header[1])
    except (IndexError, ValueError):
        raise ModelParseError("header: missing format version") from None
    if version != FORMAT_VERSION:
        raise UnsupportedVersionError(
            f"model format version {version} is not supported (expected {FORMAT_VERSION})"
        )

    kind = lines.expect("kind", "kind")[0]
    user_id = lines.expect("user", "user")[0]
    config = _parse_config(lines.expect("config", "config"), "config")

    seg_head = lines.expect("segmentation", "segmentation")
    try:
        n_segments, base_min, per_day = int(seg_head[0]), int(seg_head[1]), bool(int(seg_head[2]))
    except (IndexError, ValueError):
        raise ModelParseError("segmentation: bad header") from None
    segments = []
    for i in range(n_segments):
        path = f"segment {i}"
        parts = lines.expect("segment", path)
        try:
            day, start, end = int(parts[0]), int(parts[1]), int(parts[2])
            seg_id = parts[3]
            dominant = int(parts[4])
        except (IndexError, ValueError):
            raise ModelParseError(f"{path}: bad fields") from None
        segments.append(
            Segment(day, start, end, seg_id, BehaviorClass(dominant) if dominant else None)
        )
    segmentation = SegmentationModel(
        tuple(segments), SegmentationConfig(base_min, per_day)
    )

    n_social = int(lines.expect("social", "social")[0])
    social_map = {}
    for i in range(n_social):
        parts = lines.expect("contact", f"contact {i}")
        if len(parts) != 2:
            raise ModelParseError(f"contact {i}: expected raw and id")
        social_map[parts[0]] = parts[1]

    vocab = []
    for f in range(4):
        parts = lines.expect("vocab", f"vocab {f}")
        try:
            index, count = int(parts[0]), int(parts[1])
        except (IndexError, ValueError):
            raise ModelParseError(f"vocab {f}: bad header") from None
        if index != f or len(parts) != 2 + count:
            raise ModelParseError(f"vocab {f}: inconsistent length")
        vocab.append(tuple(parts[2:]))

    n_trees = int(lines.expect("trees", "trees")[0])
    trees = []
    seeds = []
    for i in range(n_trees):
        parts = lines.expect("tree", f"tree {i}")
        try:
            index, seed = int(parts[0]), int(parts[1])
        except (IndexError, ValueError):
            raise ModelParseError(f"tree {i}: bad header") from None
        if index != i:
            raise ModelParseError(f"tree {i}: out-of-order index {index}")
        seeds.append(seed)
        trees.append(_read_tree(lines, f"tree {i}/root"))
    tail = lines.next("end")
    if tail[0] != "end":
        raise ModelParseError(f"end: expected 'end', found {tail[0]!r}")

    return TrainedModel(
        kind, user_id, config, segmentation, social_map,
        tuple(vocab), tuple(trees), tuple(seeds),
    )


def _read_tree(lines: _Lines, path: str) -> TreeNode:
    parts = lines.next(path)
    if parts[0] == "leaf":
        try:
            label = BehaviorClass(int(parts[1]))
            counts = tuple(int(c) for c in parts[2 : 2 + N_CLASSES])
        except (IndexError, ValueError):
            raise ModelParseError(f"{path}: bad leaf record") from None
        if len(counts) != N_CLASSES:
            raise ModelParseError(f"{path}: leaf needs {N_CLASSES} counts")
        return Leaf(label, counts)
    if parts[0] == "split":
        try:
            feature_index = int(parts[1])
            category = parts[2]
        except (IndexError, ValueError):
            raise ModelParseError(f"{path}: bad split record") from None
        left = _read_tree(lines, f"{path}/left")
        right = _read_tree(lines, f"{path}/right")
        return Split(feature_index, category, left, right)
    raise ModelParseError(f"{path}: expected leaf or split, found {parts[0]!r}")


def load_model(path: str | Path) -> TrainedModel:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ModelParseError(f"cannot read model file: {exc}") from exc
    return deserialize_model(text)
