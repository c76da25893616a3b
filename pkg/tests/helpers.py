"""Shared builders for randomized test inputs."""

import random
from itertools import product

from emiim.types import BehaviorClass, ContextVector, LabeledExample, make_dataset

SEGMENTS = ("S1", "S2", "S3")
DAYS = ("Mon", "Tue", "Sat")
LOCATIONS = ("home", "office")
CONTACTS = ("C1", "C2", "RARE")


def random_pairs(rnd: random.Random, n, n_features=3, n_categories=3, n_classes=3):
    """(values, label) pairs over small generic categorical features."""
    cats = [f"v{j}" for j in range(n_categories)]
    return [
        (
            tuple(rnd.choice(cats) for _ in range(n_features)),
            BehaviorClass(rnd.randrange(n_classes) + 1),
        )
        for _ in range(n)
    ]


def random_context(rnd: random.Random) -> ContextVector:
    return ContextVector(
        rnd.choice(SEGMENTS), rnd.choice(DAYS), rnd.choice(LOCATIONS), rnd.choice(CONTACTS)
    )


def random_dataset(rnd: random.Random, n, user_id="user"):
    """A well-formed Dataset over the small fixed context vocabulary."""
    examples = [
        LabeledExample(random_context(rnd), BehaviorClass(rnd.randrange(3) + 1))
        for _ in range(n)
    ]
    vocab = (
        tuple(sorted(SEGMENTS)),
        tuple(sorted(DAYS)),
        tuple(sorted(LOCATIONS)),
        tuple(sorted(CONTACTS)),
    )
    return make_dataset(examples, vocab, user_id)


def full_context_grid(vocab):
    """Every context in the vocabulary product."""
    return [ContextVector(*combo) for combo in product(*vocab)]
