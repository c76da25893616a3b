import random

import numpy as np
import pytest

from emiim.errors import EmptyDatasetError, InvalidConfigError
from emiim.forest import (
    Forest,
    ForestConfig,
    bootstrap_sample,
    flatten_forest,
    majority_codes,
    predict_forest,
    resolve_subset_size,
    train_forest,
    vote_codes,
)
from emiim.model_io import serialize_model, TrainedModel
from emiim.rng import make_rng, mix64
from emiim.segmentation import fit_segments
from emiim.tree import Leaf, TreeConfig, build_tree, predict_tree
from emiim.types import (
    BehaviorClass,
    CLASSES,
    ContextVector,
    LabeledExample,
    encode_contexts,
    make_dataset,
)
from helpers import full_context_grid, random_dataset
from oracles import oracle_vote_winner


class TestBootstrapSample:
    def test_single_element(self):
        idx = bootstrap_sample(1, make_rng(0))
        assert idx.tolist() == [0]

    def test_deterministic(self):
        rnd = random.Random(1)
        ds = random_dataset(rnd, 30)
        a = bootstrap_sample(ds, make_rng(42))
        b = bootstrap_sample(ds, make_rng(42))
        assert (a == b).all()
        assert a.shape == (30,)
        assert a.min() >= 0 and a.max() < 30

    def test_distinct_fraction_near_one_minus_inv_e(self):
        n = 10_000
        fractions = [
            len(np.unique(bootstrap_sample(n, make_rng(seed)))) / n for seed in range(20)
        ]
        assert abs(np.mean(fractions) - 0.632) < 0.01

    def test_empty_raises(self):
        with pytest.raises(EmptyDatasetError):
            bootstrap_sample(0, make_rng(0))


class TestTrainForest:
    def test_config_validation(self):
        with pytest.raises(InvalidConfigError):
            ForestConfig(n_trees=0)
        with pytest.raises(InvalidConfigError):
            ForestConfig(feature_subset_size=0)

    def test_default_subset_size_is_sqrt_d(self):
        assert resolve_subset_size(ForestConfig(), 4) == 2
        assert resolve_subset_size(ForestConfig(), 1) == 1
        assert resolve_subset_size(ForestConfig(feature_subset_size=3), 4) == 3

    def test_seed_derivation_is_pure(self):
        rnd = random.Random(5)
        ds = random_dataset(rnd, 40)
        forest = train_forest(ds, ForestConfig(n_trees=5, master_seed=77))
        assert forest.per_tree_seeds == tuple(mix64(77, i) for i in range(5))

    def test_pure_dataset_gives_single_leaf_trees(self):
        ctx = ContextVector("S1", "Mon", "home", "C1")
        ds = make_dataset(
            [LabeledExample(ctx, BehaviorClass.REJECT)] * 12,
            (("S1",), ("Mon",), ("home",), ("C1",)),
        )
        forest = train_forest(ds, ForestConfig(n_trees=7, master_seed=1))
        for tree in forest.trees:
            assert isinstance(tree, Leaf)
            assert tree.label is BehaviorClass.REJECT

    def test_degenerate_ensemble_equals_single_tree(self):
        rnd = random.Random(11)
        ds = random_dataset(rnd, 50)
        cfg = ForestConfig(n_trees=1, bootstrap=False,
                           feature_subset_size=len(ds.feature_vocab), master_seed=3)
        forest = train_forest(ds, cfg)
        pairs = [(ex.context.values(), ex.label) for ex in ds.examples]
        solo = build_tree(pairs, TreeConfig(), make_rng(mix64(3, 0)))
        for ctx in full_context_grid(ds.feature_vocab):
            assert predict_forest(forest, ctx)[0] is predict_tree(solo, ctx.values())

    def test_training_deterministic_via_serialization(self):
        rnd = random.Random(13)
        ds = random_dataset(rnd, 60)
        cfg = ForestConfig(n_trees=8, master_seed=5)
        seg = fit_segments([])

        def snapshot():
            forest = train_forest(ds, cfg)
            model = TrainedModel("E-MIIM", "u", cfg, seg, {}, ds.feature_vocab,
                                 forest.trees, forest.per_tree_seeds)
            return serialize_model(model)

        assert snapshot() == snapshot()

    def test_empty_dataset_raises(self):
        ds = random_dataset(random.Random(1), 5)
        empty = make_dataset([], ds.feature_vocab)
        with pytest.raises(EmptyDatasetError):
            train_forest(empty)

    @pytest.mark.parametrize("n_trees", [1, 10, 100])
    def test_ensemble_size_sweep(self, n_trees):
        rnd = random.Random(n_trees)
        ds = random_dataset(rnd, 40)
        forest = train_forest(ds, ForestConfig(n_trees=n_trees, master_seed=2))
        assert len(forest.trees) == n_trees
        _, votes = predict_forest(forest, ds.examples[0].context)
        assert sum(votes.values()) == n_trees


class TestPredictForest:
    def _forest_of_leaves(self, labels):
        trees = tuple(Leaf(lab, (0, 0, 0)) for lab in labels)
        cfg = ForestConfig(n_trees=len(trees))
        vocab = (("S1",), ("Mon",), ("home",), ("C1",))
        return Forest(trees, tuple(range(len(trees))), cfg, vocab)

    def test_strict_majority(self):
        forest = self._forest_of_leaves(
            [BehaviorClass.ACCEPT, BehaviorClass.ACCEPT, BehaviorClass.REJECT]
        )
        winner, votes = predict_forest(forest, ("S1", "Mon", "home", "C1"))
        assert winner is BehaviorClass.ACCEPT
        assert votes == {
            BehaviorClass.ACCEPT: 2, BehaviorClass.REJECT: 1, BehaviorClass.MISSED: 0,
        }

    def test_three_way_tie_breaks_to_smallest_id(self):
        forest = self._forest_of_leaves(
            [BehaviorClass.MISSED, BehaviorClass.REJECT, BehaviorClass.ACCEPT]
        )
        winner, _ = predict_forest(forest, ("S1", "Mon", "home", "C1"))
        assert winner is BehaviorClass.ACCEPT

    def test_single_tree_forest_equals_tree_prediction(self):
        rnd = random.Random(19)
        ds = random_dataset(rnd, 30)
        forest = train_forest(ds, ForestConfig(n_trees=1, master_seed=9))
        for ctx in full_context_grid(ds.feature_vocab):
            assert predict_forest(forest, ctx)[0] is predict_tree(forest.trees[0], ctx.values())

    def test_vote_conservation(self):
        rnd = random.Random(23)
        ds = random_dataset(rnd, 40)
        forest = train_forest(ds, ForestConfig(n_trees=11, master_seed=4))
        for ctx in full_context_grid(ds.feature_vocab)[:30]:
            _, votes = predict_forest(forest, ctx)
            assert sum(votes.values()) == 11

    def test_matches_vote_oracle_on_enumerated_patterns(self):
        for n in range(1, 6):
            for pattern in np.ndindex(*(3,) * n):
                labels = [BehaviorClass(p + 1) for p in pattern]
                forest = self._forest_of_leaves(labels)
                winner, votes = predict_forest(forest, ("S1", "Mon", "home", "C1"))
                assert winner is oracle_vote_winner(votes)

    def test_batch_votes_agree_with_scalar_path(self):
        rnd = random.Random(29)
        ds = random_dataset(rnd, 50)
        forest = train_forest(ds, ForestConfig(n_trees=15, master_seed=8))
        grid = full_context_grid(ds.feature_vocab)
        codes = encode_contexts(grid, ds.feature_vocab)
        votes = vote_codes(flatten_forest(forest.trees, ds.feature_vocab), codes)
        preds = majority_codes(votes)
        for i, ctx in enumerate(grid):
            winner, tally = predict_forest(forest, ctx)
            assert BehaviorClass(int(preds[i]) + 1) is winner
            assert votes[i].tolist() == [tally[cls] for cls in CLASSES]
