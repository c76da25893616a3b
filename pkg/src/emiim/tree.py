"""CART-style decision tree over categorical contexts.

Splits are binary one-vs-rest on a single category: the left branch takes
``feature == category``, the right branch everything else, so values never
seen in training always route right.  Node impurity is the Gini index and
splits maximize the Gini improvement.  Grown with all features considered at
every node this tree is the single-tree baseline model; with per-node feature
subsampling it is the ensemble's base learner.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Optional, Sequence, Union

import numpy as np

from . import _kernels
from .errors import InvalidConfigError, InvalidInputError, InvalidPartitionError
from .rng import sample_without_replacement
from .types import N_CLASSES, BehaviorClass

#: An example for tree operations: (categorical values, label).
Example = tuple[Sequence[str], BehaviorClass]


@dataclass(frozen=True)
class TreeConfig:
    """Growth limits.  feature_subset_size d is the per-node random feature
    count; None means every feature is considered (baseline mode)."""

    max_depth: Optional[int] = None
    min_samples_leaf: int = 1
    min_gain: float = 1e-12
    feature_subset_size: Optional[int] = None

    def __post_init__(self) -> None:
        if self.max_depth is not None and self.max_depth < 0:
            raise InvalidConfigError("max_depth must be >= 0")
        if self.min_samples_leaf < 1:
            raise InvalidConfigError("min_samples_leaf must be >= 1")
        if self.feature_subset_size is not None and self.feature_subset_size < 1:
            raise InvalidConfigError("feature_subset_size must be >= 1")


@dataclass(frozen=True)
class Leaf:
    label: BehaviorClass
    class_counts: tuple[int, ...]


@dataclass(frozen=True)
class Split:
    feature_index: int
    category: str
    left: "TreeNode"
    right: "TreeNode"


TreeNode = Union[Leaf, Split]


@dataclass(frozen=True)
class SplitCandidate:
    feature_index: int
    category: str
    gain: float


def gini_index(class_counts: Sequence[int]) -> float:
    """1 - sum of squared class probabilities; an empty node counts as pure."""
    total = sum(class_counts)
    if total == 0:
        return 0.0
    return 1.0 - sum((c / total) ** 2 for c in class_counts)


def gini_gain(
    parent_counts: Sequence[int],
    left_counts: Sequence[int],
    right_counts: Sequence[int],
) -> float:
    """Impurity reduction of a binary split, weighted by child proportions."""
    if len(parent_counts) != len(left_counts) or len(parent_counts) != len(right_counts):
        raise InvalidPartitionError("count vectors differ in length")
    for p, l, r in zip(parent_counts, left_counts, right_counts):
        if l + r != p:
            raise InvalidPartitionError("children do not partition the parent counts")
    n = sum(parent_counts)
    if n == 0:
        raise InvalidPartitionError("parent node is empty")
    n_left = sum(left_counts)
    n_right = sum(right_counts)
    return (
        gini_index(parent_counts)
        - (n_left / n) * gini_index(left_counts)
        - (n_right / n) * gini_index(right_counts)
    )


def _encode_pairs(
    examples: Sequence[Example],
) -> tuple[np.ndarray, np.ndarray, tuple[tuple[str, ...], ...]]:
    """Encode ad-hoc examples against their own sorted per-feature vocab."""
    n_features = len(examples[0][0])
    vocab = tuple(
        tuple(sorted({tuple(values)[f] for values, _ in examples}))
        for f in range(n_features)
    )
    maps = [{v: i for i, v in enumerate(vs)} for vs in vocab]
    codes = np.empty((len(examples), n_features), dtype=np.int32)
    labels = np.empty(len(examples), dtype=np.int8)
    for i, (values, label) in enumerate(examples):
        for f, value in enumerate(values):
            codes[i, f] = maps[f][value]
        labels[i] = label.value - 1
    return codes, labels, vocab


def _kernel_split(codes, labels, idx, feature_indices, n_cats, min_samples_leaf, min_gain):
    features = np.asarray(sorted(feature_indices), dtype=np.int32)
    return _kernels.best_split_codes(
        codes, labels, idx, features, n_cats, N_CLASSES, min_samples_leaf, min_gain
    )


def best_split(
    examples: Sequence[Example],
    candidate_features: Sequence[int],
    *,
    min_samples_leaf: int = 1,
    min_gain: float = 1e-12,
) -> Optional[SplitCandidate]:
    """Best (feature, category) split of the examples, or None.

    Ties break toward the lower feature index, then the lexicographically
    smaller category.  Candidates leaving either child below
    min_samples_leaf are not considered.
    """
    if not examples:
        raise InvalidInputError("cannot split an empty example set")
    n_features = len(examples[0][0])
    if not candidate_features:
        raise InvalidInputError("no candidate features")
    if any(f < 0 or f >= n_features for f in candidate_features):
        raise InvalidInputError("candidate feature index out of range")
    codes, labels, vocab = _encode_pairs(examples)
    n_cats = np.asarray([len(v) for v in vocab], dtype=np.int32)
    idx = np.arange(len(examples), dtype=np.int64)
    f, code, gain = _kernel_split(
        codes, labels, idx, candidate_features, n_cats, min_samples_leaf, min_gain
    )
    if f < 0:
        return None
    return SplitCandidate(f, vocab[f][code], gain)


def _majority_leaf(counts: np.ndarray) -> Leaf:
    # argmax returns the first maximum, i.e. the smallest class id on ties
    label = BehaviorClass(int(np.argmax(counts)) + 1)
    return Leaf(label, tuple(int(c) for c in counts))


def grow_encoded(
    codes: np.ndarray,
    labels: np.ndarray,
    idx: np.ndarray,
    vocab: Sequence[Sequence[str]],
    cfg: TreeConfig,
    rng: Optional[np.random.Generator] = None,
) -> TreeNode:
    """Grow a tree over pre-encoded arrays; ``idx`` selects the root rows."""
    if idx.size == 0:
        raise InvalidInputError("cannot grow a tree from zero examples")
    n_cats = np.asarray([len(v) for v in vocab], dtype=np.int32)
    n_features = len(vocab)
    d = cfg.feature_subset_size

    def grow(node_idx: np.ndarray, depth: int) -> TreeNode:
        counts = np.bincount(labels[node_idx], minlength=N_CLASSES)
        if (
            counts.max() == node_idx.size
            or (cfg.max_depth is not None and depth >= cfg.max_depth)
            or node_idx.size < 2 * cfg.min_samples_leaf
        ):
            return _majority_leaf(counts)
        if d is None or d >= n_features:
            candidates = range(n_features)
        else:
            if rng is None:
                raise InvalidInputError("feature subsampling requires an rng")
            candidates = sample_without_replacement(rng, n_features, d)
        f, code, _gain = _kernel_split(
            codes, labels, node_idx, candidates, n_cats, cfg.min_samples_leaf, cfg.min_gain
        )
        if f < 0:
            return _majority_leaf(counts)
        mask = codes[node_idx, f] == code
        left = grow(node_idx[mask], depth + 1)
        right = grow(node_idx[~mask], depth + 1)
        return Split(f, vocab[f][code], left, right)

    return grow(np.asarray(idx, dtype=np.int64), 0)


def build_tree(
    examples: Sequence[Example],
    cfg: TreeConfig = TreeConfig(),
    rng: Optional[np.random.Generator] = None,
) -> TreeNode:
    """Grow a tree from (values, label) pairs using their own vocabulary."""
    if not examples:
        raise InvalidInputError("cannot grow a tree from zero examples")
    codes, labels, vocab = _encode_pairs(examples)
    idx = np.arange(len(examples), dtype=np.int64)
    return grow_encoded(codes, labels, idx, vocab, cfg, rng)


def predict_tree(tree: TreeNode, context: Sequence[str]) -> BehaviorClass:
    """Descend to a leaf: left iff context[feature] == category."""
    node = tree
    while isinstance(node, Split):
        node = node.left if context[node.feature_index] == node.category else node.right
    return node.label


def iter_nodes(tree: TreeNode) -> Iterator[TreeNode]:
    """Preorder traversal."""
    stack = [tree]
    while stack:
        node = stack.pop()
        yield node
        if isinstance(node, Split):
            stack.append(node.right)
            stack.append(node.left)


def tree_depth(tree: TreeNode) -> int:
    if isinstance(tree, Leaf):
        return 0
    return 1 + max(tree_depth(tree.left), tree_depth(tree.right))


@dataclass(frozen=True)
class FlatTree:
    """Array form of a tree for vectorized prediction over encoded contexts."""

    feature: np.ndarray  # int32; -1 marks a leaf
    code: np.ndarray  # int32 category code in the model vocabulary
    left: np.ndarray  # int32 child slot
    right: np.ndarray
    leaf_label: np.ndarray  # int8 0-based label; -1 on split slots

    def predict_codes(self, codes: np.ndarray) -> np.ndarray:
        """Predict 0-based labels for encoded contexts (-1 = unseen value)."""
        pos = np.zeros(codes.shape[0], dtype=np.int32)
        active = np.nonzero(self.feature[pos] >= 0)[0]
        while active.size:
            p = pos[active]
            go_left = codes[active, self.feature[p]] == self.code[p]
            pos[active] = np.where(go_left, self.left[p], self.right[p])
            active = active[self.feature[pos[active]] >= 0]
        return self.leaf_label[pos]


def flatten_tree(tree: TreeNode, vocab: Sequence[Sequence[str]]) -> FlatTree:
    maps = [{v: i for i, v in enumerate(vs)} for vs in vocab]
    feature: list[int] = []
    code: list[int] = []
    left: list[int] = []
    right: list[int] = []
    leaf_label: list[int] = []

    def add(node: TreeNode) -> int:
        slot = len(feature)
        feature.append(-1)
        code.append(-1)
        left.append(-1)
        right.append(-1)
        leaf_label.append(-1)
        if isinstance(node, Leaf):
            leaf_label[slot] = node.label.value - 1
        else:
            feature[slot] = node.feature_index
            code[slot] = maps[node.feature_index][node.category]
            left[slot] = add(node.left)
            right[slot] = add(node.right)
        return slot

    add(tree)
    return FlatTree(
        np.asarray(feature, dtype=np.int32),
        np.asarray(code, dtype=np.int32),
        np.asarray(left, dtype=np.int32),
        np.asarray(right, dtype=np.int32),
        np.asarray(leaf_label, dtype=np.int8),
    )
