"""Shared vocabulary: behavior classes, call records, contexts, datasets.

All types are immutable after construction and safe to share across threads.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime
from enum import Enum, IntEnum
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import EmptyDatasetError, InvalidInputError

#: Reserved categorical values.  UNKNOWN stands in for a missing location or
#: contact; RARE is the bucket for contacts outside the social top-k.
UNKNOWN = "UNKNOWN"
RARE = "RARE"

DAY_LABELS = ("Mon", "Tue", "Wed", "Thu", "Fri", "Sat", "Sun")

#: Context feature order; indices into this tuple are the feature indices used
#: by split nodes, model files, and the encoded arrays.
FEATURE_NAMES = ("time_segment", "day_of_week", "location", "social_contact")

MINUTES_PER_DAY = 1440


class BehaviorClass(IntEnum):
    """Outcome of an incoming call.

    The numeric ids (1..3) are stable: they appear in serialized files and
    every tie anywhere in the pipeline breaks toward the smaller id.
    """

    ACCEPT = 1
    REJECT = 2
    MISSED = 3

    @property
    def display(self) -> str:
        return self.name.capitalize()


CLASSES = (BehaviorClass.ACCEPT, BehaviorClass.REJECT, BehaviorClass.MISSED)
N_CLASSES = len(CLASSES)


class CallType(Enum):
    INCOMING = "incoming"
    OUTGOING = "outgoing"
    MISSED = "missed"


@dataclass(frozen=True)
class CallRecord:
    """One raw log event.

    Timestamps are local wall-clock time truncated to minute precision; any
    timezone attached by the source is dropped without conversion.
    """

    timestamp: datetime
    contact_raw: str
    call_type: CallType
    duration_s: int
    location: str | None = None

    def __post_init__(self) -> None:
        if self.duration_s < 0:
            raise ValueError("negative duration")
        if self.call_type is CallType.MISSED and self.duration_s != 0:
            raise ValueError("missed call with nonzero duration")
        ts = self.timestamp
        if ts.tzinfo is not None or ts.second or ts.microsecond:
            object.__setattr__(
                self, "timestamp", ts.replace(tzinfo=None, second=0, microsecond=0)
            )


@dataclass(frozen=True)
class ContextVector:
    """The categorical feature tuple fed to the classifiers (D = 4)."""

    time_segment: str
    day_of_week: str
    location: str
    social_contact: str

    def values(self) -> tuple[str, str, str, str]:
        return (self.time_segment, self.day_of_week, self.location, self.social_contact)


@dataclass(frozen=True)
class LabeledExample:
    context: ContextVector
    label: BehaviorClass


@dataclass(frozen=True)
class Dataset:
    """Labeled per-user examples plus the categorical vocabulary they use.

    ``feature_vocab`` holds one lexicographically sorted tuple per feature in
    FEATURE_NAMES order; sorted order is load-bearing because split ties break
    on the lexicographically smaller category.
    """

    examples: tuple[LabeledExample, ...]
    feature_vocab: tuple[tuple[str, ...], ...]
    class_counts: Mapping[BehaviorClass, int]
    user_id: str = "user"

    def __post_init__(self) -> None:
        if len(self.feature_vocab) != len(FEATURE_NAMES):
            raise InvalidInputError("feature_vocab must cover all features")
        for name, vocab in zip(FEATURE_NAMES, self.feature_vocab):
            if list(vocab) != sorted(vocab) or len(set(vocab)) != len(vocab):
                raise InvalidInputError(f"vocab for {name} must be sorted and unique")
        tally = {cls: 0 for cls in CLASSES}
        lookups = [set(v) for v in self.feature_vocab]
        for ex in self.examples:
            tally[ex.label] += 1
            for f, value in enumerate(ex.context.values()):
                if value not in lookups[f]:
                    raise InvalidInputError(
                        f"value {value!r} missing from vocab of {FEATURE_NAMES[f]}"
                    )
        if tally != {cls: self.class_counts.get(cls, 0) for cls in CLASSES}:
            raise InvalidInputError("class_counts inconsistent with examples")

    def __len__(self) -> int:
        return len(self.examples)


def make_dataset(
    examples: Iterable[LabeledExample],
    feature_vocab: Sequence[Sequence[str]],
    user_id: str = "user",
) -> Dataset:
    """Build a Dataset, deriving class_counts from the examples."""
    examples = tuple(examples)
    counts = {cls: 0 for cls in CLASSES}
    for ex in examples:
        counts[ex.label] += 1
    vocab = tuple(tuple(v) for v in feature_vocab)
    return Dataset(examples, vocab, counts, user_id)


def class_priors(dataset: Dataset) -> dict[BehaviorClass, float]:
    """Empirical class probabilities; they sum to 1 over a non-empty dataset."""
    n = len(dataset)
    if n == 0:
        raise EmptyDatasetError("cannot take class priors of an empty dataset")
    return {cls: dataset.class_counts.get(cls, 0) / n for cls in CLASSES}


def encode_examples(
    examples: Sequence[LabeledExample],
    feature_vocab: Sequence[Sequence[str]],
) -> tuple[np.ndarray, np.ndarray]:
    """Encode examples as (codes int32 [n, D], labels int8 [n], 0-based).

    Every context value must be present in the vocabulary.
    """
    maps = [{v: i for i, v in enumerate(vocab)} for vocab in feature_vocab]
    n = len(examples)
    codes = np.empty((n, len(feature_vocab)), dtype=np.int32)
    labels = np.empty(n, dtype=np.int8)
    for i, ex in enumerate(examples):
        for f, value in enumerate(ex.context.values()):
            try:
                codes[i, f] = maps[f][value]
            except KeyError:
                raise InvalidInputError(
                    f"value {value!r} missing from vocab of {FEATURE_NAMES[f]}"
                ) from None
        labels[i] = ex.label.value - 1
    return codes, labels


def encode_contexts(
    contexts: Sequence[ContextVector] | Sequence[Sequence[str]],
    feature_vocab: Sequence[Sequence[str]],
) -> np.ndarray:
    """Encode contexts against a vocabulary; unseen values become -1.

    Code -1 never equals a split category, so unseen values route down the
    "not equal" branch during prediction.
    """
    maps = [{v: i for i, v in enumerate(vocab)} for vocab in feature_vocab]
    codes = np.empty((len(contexts), len(feature_vocab)), dtype=np.int32)
    for i, ctx in enumerate(contexts):
        values = ctx.values() if isinstance(ctx, ContextVector) else ctx
        for f, value in enumerate(values):
            codes[i, f] = maps[f].get(value, -1)
    return codes
