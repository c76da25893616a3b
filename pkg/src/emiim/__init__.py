"""Context-aware call-handling prediction from phone logs.

The pipeline ingests per-user call logs, derives temporal, spatial, and
social context features, and trains two classifiers over them: a single
Gini decision tree (MIIM, the baseline) and a bagged random-forest ensemble
(E-MIIM).  Cross-validated evaluation reports per-class rates, weighted
precision/recall/f-measure, and kappa.
"""

from .errors import EmiimError
from .types import (
    RARE,
    UNKNOWN,
    BehaviorClass,
    CallRecord,
    CallType,
    ContextVector,
    Dataset,
    LabeledExample,
    class_priors,
    make_dataset,
)

__version__ = "0.1.0"

__all__ = [
    "BehaviorClass",
    "CallRecord",
    "CallType",
    "ContextVector",
    "Dataset",
    "EmiimError",
    "LabeledExample",
    "RARE",
    "UNKNOWN",
    "class_priors",
    "make_dataset",
    "__version__",
]
