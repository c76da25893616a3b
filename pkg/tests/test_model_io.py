import random

import pytest

from emiim.errors import ModelParseError, UnsupportedVersionError
from emiim.evaluation import ModelSpec, train_model
from emiim.forest import Forest, ForestConfig, predict_forest, train_forest
from emiim.ingest import build_dataset, derive_social_context, label_records
from emiim.model_io import (
    TrainedModel,
    deserialize_model,
    load_model,
    save_model,
    serialize_model,
)
from emiim.segmentation import fit_segments
from emiim.synthgen import alice_scenario_text, generate, parse_scenario
from helpers import full_context_grid


def _trained_bundle(kind="E-MIIM", n_trees=3, m=300, seed=4):
    ruleset = parse_scenario(alice_scenario_text(), noise=0.1, n_records=m, seed=seed)
    records, _ = generate(ruleset)
    labeled = label_records(records)
    seg = fit_segments([(lr.record.timestamp, lr.label) for lr in labeled])
    social = derive_social_context(records)
    dataset = build_dataset(records, seg, social, user_id="alice")
    if kind == "E-MIIM":
        spec = ModelSpec.emiim(ForestConfig(n_trees=n_trees, master_seed=9))
    else:
        spec = ModelSpec.miim(master_seed=9)
    trees, seeds, cfg = train_model(dataset, spec)
    return TrainedModel(kind, "alice", cfg, seg, social, dataset.feature_vocab, trees, seeds)


class TestRoundTrip:
    def test_resave_is_byte_identical(self):
        bundle = _trained_bundle(n_trees=1)
        text = serialize_model(bundle)
        again = serialize_model(deserialize_model(text))
        assert text == again

    def test_loaded_model_predicts_identically_on_vocab_grid(self):
        bundle = _trained_bundle(n_trees=5)
        loaded = deserialize_model(serialize_model(bundle))
        grid = full_context_grid(bundle.feature_vocab)
        rnd = random.Random(0)
        for ctx in rnd.sample(grid, min(400, len(grid))):
            assert loaded.predict(ctx) == bundle.predict(ctx)

    def test_file_round_trip(self, tmp_path):
        bundle = _trained_bundle(kind="MIIM")
        path = tmp_path / "alice.miim"
        save_model(bundle, path)
        loaded = load_model(path)
        assert loaded.kind == "MIIM"
        assert loaded.feature_vocab == bundle.feature_vocab
        assert loaded.social_map == bundle.social_map
        assert loaded.segmentation == bundle.segmentation
        assert loaded.trees == bundle.trees

    def test_config_fields_survive(self):
        bundle = _trained_bundle(n_trees=2)
        loaded = deserialize_model(serialize_model(bundle))
        assert loaded.config == bundle.config
        assert loaded.per_tree_seeds == bundle.per_tree_seeds


class TestErrors:
    def test_unsupported_version(self):
        text = serialize_model(_trained_bundle(n_trees=1))
        bumped = text.replace("emiim-model\t1", "emiim-model\t99", 1)
        with pytest.raises(UnsupportedVersionError, match="99"):
            deserialize_model(bumped)

    def test_wrong_magic(self):
        with pytest.raises(ModelParseError, match="not an emiim model"):
            deserialize_model("something-else\t1\n")

    def test_truncated_file_reports_node_path(self):
        text = serialize_model(_trained_bundle(n_trees=1))
        lines = text.splitlines()
        # drop the final leaf and terminator so a subtree is missing
        truncated = "\n".join(lines[:-2]) + "\n"
        with pytest.raises(ModelParseError, match="tree 0"):
            deserialize_model(truncated)

    def test_corrupt_node_record(self):
        text = serialize_model(_trained_bundle(n_trees=1))
        corrupted = text.replace("leaf\t", "lief\t", 1)
        with pytest.raises(ModelParseError, match="leaf or split"):
            deserialize_model(corrupted)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ModelParseError, match="cannot read"):
            load_model(tmp_path / "nope.model")
