"""Bootstrap-aggregated ensemble of randomized trees with majority voting.

Each of the N trees trains on a bootstrap resample (uniform with replacement,
same size) and considers a random subset of d features at every node.  Tree i
draws all randomness from a generator seeded with mix64(master_seed, i), so
training is reproducible and independent of scheduling order.  Prediction is
a hard majority vote; ties break toward the smaller class id.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from math import floor, sqrt
from typing import Sequence, Union

import numpy as np

from .errors import EmptyDatasetError, InvalidConfigError
from .rng import make_rng, mix64
from .tree import FlatTree, TreeConfig, TreeNode, flatten_tree, grow_encoded, predict_tree
from .types import CLASSES, N_CLASSES, BehaviorClass, ContextVector, Dataset, encode_examples


@dataclass(frozen=True)
class ForestConfig:
    """Ensemble knobs.  feature_subset_size None resolves to floor(sqrt(D))
    (at least 1) at train time; tree carries the per-tree growth limits."""

    n_trees: int = 100
    feature_subset_size: int | None = None
    bootstrap: bool = True
    tree: TreeConfig = TreeConfig()
    master_seed: int = 0

    def __post_init__(self) -> None:
        if self.n_trees < 1:
            raise InvalidConfigError("n_trees must be >= 1")
        if self.feature_subset_size is not None and self.feature_subset_size < 1:
            raise InvalidConfigError("feature_subset_size must be >= 1")


@dataclass(frozen=True)
class Forest:
    trees: tuple[TreeNode, ...]
    per_tree_seeds: tuple[int, ...]
    config: ForestConfig
    feature_vocab: tuple[tuple[str, ...], ...]


def resolve_subset_size(cfg: ForestConfig, n_features: int) -> int:
    if cfg.feature_subset_size is not None:
        return min(cfg.feature_subset_size, n_features)
    return max(1, floor(sqrt(n_features)))


def bootstrap_sample(dataset: Dataset | int, rng: np.random.Generator) -> np.ndarray:
    """n indices drawn uniformly with replacement from 0..n-1."""
    n = dataset if isinstance(dataset, int) else len(dataset)
    if n < 1:
        raise EmptyDatasetError("cannot bootstrap an empty dataset")
    return rng.integers(0, n, size=n, dtype=np.int64)


def train_forest(dataset: Dataset, cfg: ForestConfig = ForestConfig()) -> Forest:
    if len(dataset) == 0:
        raise EmptyDatasetError("cannot train on an empty dataset")
    codes, labels = encode_examples(dataset.examples, dataset.feature_vocab)
    d = resolve_subset_size(cfg, len(dataset.feature_vocab))
    tree_cfg = replace(cfg.tree, feature_subset_size=d)
    seeds = tuple(mix64(cfg.master_seed, i) for i in range(cfg.n_trees))
    trees = []
    full = np.arange(len(dataset), dtype=np.int64)
    for seed in seeds:
        rng = make_rng(seed)
        idx = bootstrap_sample(len(dataset), rng) if cfg.bootstrap else full
        trees.append(grow_encoded(codes, labels, idx, dataset.feature_vocab, tree_cfg, rng))
    return Forest(tuple(trees), seeds, cfg, dataset.feature_vocab)


def predict_forest(
    forest: Forest, context: ContextVector | Sequence[str]
) -> tuple[BehaviorClass, dict[BehaviorClass, int]]:
    """Majority vote over the trees; returns the winner and the full tally."""
    values = context.values() if isinstance(context, ContextVector) else tuple(context)
    tally = [0] * N_CLASSES
    for tree in forest.trees:
        tally[predict_tree(tree, values).value - 1] += 1
    winner = max(range(N_CLASSES), key=lambda c: (tally[c], -c))
    return BehaviorClass(winner + 1), {cls: tally[cls.value - 1] for cls in CLASSES}


def flatten_forest(
    trees: Sequence[TreeNode], vocab: Sequence[Sequence[str]]
) -> list[FlatTree]:
    return [flatten_tree(t, vocab) for t in trees]


def vote_codes(flat_trees: Sequence[FlatTree], codes: np.ndarray) -> np.ndarray:
    """Vote counts [n, 3] over encoded contexts."""
    votes = np.zeros((codes.shape[0], N_CLASSES), dtype=np.int32)
    rows = np.arange(codes.shape[0])
    for flat in flat_trees:
        votes[rows, flat.predict_codes(codes).astype(np.int32)] += 1
    return votes


def majority_codes(votes: np.ndarray) -> np.ndarray:
    """0-based winning labels; argmax takes the first (smallest id) on ties."""
    return votes.argmax(axis=1).astype(np.int8)
