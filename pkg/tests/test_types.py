import random
from datetime import datetime

import pytest

from emiim.errors import EmptyDatasetError, InvalidInputError
from emiim.types import (
    CLASSES,
    BehaviorClass,
    CallRecord,
    CallType,
    ContextVector,
    Dataset,
    LabeledExample,
    class_priors,
    encode_contexts,
    encode_examples,
    make_dataset,
)
from helpers import random_dataset


class TestBehaviorClass:
    def test_ids_are_stable(self):
        assert BehaviorClass.ACCEPT.value == 1
        assert BehaviorClass.REJECT.value == 2
        assert BehaviorClass.MISSED.value == 3
        assert len(BehaviorClass) == 3

    def test_display_names(self):
        assert [c.display for c in CLASSES] == ["Accept", "Reject", "Missed"]


class TestCallRecord:
    def test_truncates_to_minute_and_drops_tz(self):
        rec = CallRecord(
            datetime.fromisoformat("2024-03-04T09:15:42+02:00"),
            "+15551234", CallType.INCOMING, 45, "office",
        )
        assert rec.timestamp == datetime(2024, 3, 4, 9, 15)
        assert rec.timestamp.tzinfo is None

    def test_negative_duration_rejected(self):
        with pytest.raises(ValueError, match="negative duration"):
            CallRecord(datetime(2024, 1, 1, 9, 0), "x", CallType.INCOMING, -3)

    def test_missed_must_have_zero_duration(self):
        with pytest.raises(ValueError, match="missed call"):
            CallRecord(datetime(2024, 1, 1, 9, 0), "x", CallType.MISSED, 5)
        rec = CallRecord(datetime(2024, 1, 1, 9, 0), "x", CallType.MISSED, 0, "home")
        assert rec.duration_s == 0


def _dataset_with_counts(n_accept, n_reject, n_missed):
    ctx = ContextVector("S1", "Mon", "home", "C1")
    examples = (
        [LabeledExample(ctx, BehaviorClass.ACCEPT)] * n_accept
        + [LabeledExample(ctx, BehaviorClass.REJECT)] * n_reject
        + [LabeledExample(ctx, BehaviorClass.MISSED)] * n_missed
    )
    vocab = (("S1",), ("Mon",), ("home",), ("C1",))
    return make_dataset(examples, vocab)


class TestClassPriors:
    def test_single_class(self):
        priors = class_priors(_dataset_with_counts(10, 0, 0))
        assert priors == {
            BehaviorClass.ACCEPT: 1.0,
            BehaviorClass.REJECT: 0.0,
            BehaviorClass.MISSED: 0.0,
        }

    def test_uniform(self):
        priors = class_priors(_dataset_with_counts(5, 5, 5))
        for cls in CLASSES:
            assert priors[cls] == pytest.approx(1 / 3, abs=1e-12)

    def test_hand_computed(self):
        priors = class_priors(_dataset_with_counts(7, 2, 1))
        assert priors[BehaviorClass.ACCEPT] == pytest.approx(0.7, abs=1e-12)
        assert priors[BehaviorClass.REJECT] == pytest.approx(0.2, abs=1e-12)
        assert priors[BehaviorClass.MISSED] == pytest.approx(0.1, abs=1e-12)

    def test_sums_to_one(self):
        rnd = random.Random(11)
        for _ in range(20):
            ds = random_dataset(rnd, rnd.randrange(1, 40))
            assert sum(class_priors(ds).values()) == pytest.approx(1.0, abs=1e-9)

    def test_empty_dataset_raises(self):
        empty = Dataset((), (("S1",), ("Mon",), ("home",), ("C1",)),
                        {cls: 0 for cls in CLASSES})
        with pytest.raises(EmptyDatasetError):
            class_priors(empty)

    def test_concatenation_is_count_weighted_mixture(self):
        rnd = random.Random(5)
        for _ in range(10):
            a = random_dataset(rnd, rnd.randrange(1, 30))
            b = random_dataset(rnd, rnd.randrange(1, 30))
            merged = make_dataset(a.examples + b.examples, a.feature_vocab)
            pa, pb, pm = class_priors(a), class_priors(b), class_priors(merged)
            wa = len(a) / (len(a) + len(b))
            for cls in CLASSES:
                assert pm[cls] == pytest.approx(wa * pa[cls] + (1 - wa) * pb[cls], abs=1e-9)


class TestDatasetInvariants:
    def test_counts_must_match(self):
        ctx = ContextVector("S1", "Mon", "home", "C1")
        with pytest.raises(InvalidInputError):
            Dataset(
                (LabeledExample(ctx, BehaviorClass.ACCEPT),),
                (("S1",), ("Mon",), ("home",), ("C1",)),
                {BehaviorClass.ACCEPT: 2, BehaviorClass.REJECT: 0, BehaviorClass.MISSED: 0},
            )

    def test_values_must_be_in_vocab(self):
        ctx = ContextVector("S9", "Mon", "home", "C1")
        with pytest.raises(InvalidInputError, match="S9"):
            make_dataset([LabeledExample(ctx, BehaviorClass.ACCEPT)],
                         (("S1",), ("Mon",), ("home",), ("C1",)))

    def test_vocab_must_be_sorted(self):
        with pytest.raises(InvalidInputError, match="sorted"):
            Dataset((), (("S2", "S1"), ("Mon",), ("home",), ("C1",)),
                    {cls: 0 for cls in CLASSES})


class TestEncoding:
    def test_round_trip_codes(self):
        rnd = random.Random(3)
        ds = random_dataset(rnd, 25)
        codes, labels = encode_examples(ds.examples, ds.feature_vocab)
        for i, ex in enumerate(ds.examples):
            decoded = tuple(
                ds.feature_vocab[f][codes[i, f]] for f in range(len(ds.feature_vocab))
            )
            assert decoded == ex.context.values()
            assert labels[i] == ex.label.value - 1

    def test_unseen_context_value_encodes_to_minus_one(self):
        rnd = random.Random(4)
        ds = random_dataset(rnd, 5)
        ctx = ContextVector("NOPE", "Mon", "home", "C1")
        codes = encode_contexts([ctx], ds.feature_vocab)
        assert codes[0, 0] == -1
        assert (codes[0, 1:] >= 0).all()
