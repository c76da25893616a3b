"""Pure-Python (numpy) split-search kernel.

Semantics contract shared with the compiled kernel in ``_splitter.pyx``:

* Candidates are every (feature, category) pair with at least one example in
  the node, restricted to ``features``; a candidate is feasible only when both
  children hold at least ``min_samples_leaf`` examples.
* The Gini improvement of a candidate is computed as a single IEEE division
  of two exactly-representable int64 integers,

      num = l2*(n*nr) + r2*(n*nl) - p2*(nl*nr)      den = n*n*nl*nr

  where l2/r2/p2 are the sums of squared child/parent class counts.  Both
  kernels therefore produce bit-identical gains and, with the shared tie rule
  (lowest feature index, then smallest category code), select identical
  splits.  int64 exactness bounds the node size to MAX_NODE_EXAMPLES.
* Returns (feature, category_code, gain), or (-1, -1, 0.0) when no feasible
  candidate improves on ``min_gain``.
"""

from __future__ import annotations

import numpy as np

from ..errors import InvalidInputError

#: 4*n**4/27 must stay below 2**63 for the exact integer gain arithmetic.
MAX_NODE_EXAMPLES = 50_000


def best_split_codes(codes, labels, idx, features, n_cats, n_classes,
                     min_samples_leaf, min_gain):
    m = idx.shape[0]
    if m == 0:
        raise InvalidInputError("empty example set")
    if m > MAX_NODE_EXAMPLES:
        raise InvalidInputError(
            f"node has {m} examples; exact gain arithmetic supports at most "
            f"{MAX_NODE_EXAMPLES}"
        )
    lab = labels[idx].astype(np.int64)
    parent = np.bincount(lab, minlength=n_classes)
    p2 = int((parent * parent).sum())
    n = int(m)

    best_f, best_code, best_gain = -1, -1, -1.0
    for f in features:
        f = int(f)
        k = int(n_cats[f])
        col = codes[idx, f].astype(np.int64)
        cnt = np.bincount(col * n_classes + lab, minlength=k * n_classes)
        cnt = cnt.reshape(k, n_classes)
        nl = cnt.sum(axis=1)
        nr = n - nl
        feasible = (nl >= max(min_samples_leaf, 1)) & (nr >= min_samples_leaf)
        if not feasible.any():
            continue
        l2 = (cnt * cnt).sum(axis=1)
        rcnt = parent[np.newaxis, :] - cnt
        r2 = (rcnt * rcnt).sum(axis=1)
        num = l2 * (n * nr) + r2 * (n * nl) - p2 * (nl * nr)
        den = (n * n) * (nl * nr)
        gains = np.where(
            feasible,
            num.astype(np.float64) / np.where(den > 0, den, 1).astype(np.float64),
            -np.inf,
        )
        j = int(np.argmax(gains))  # first maximum = smallest category code
        g = float(gains[j])
        if g > best_gain:
            best_f, best_code, best_gain = f, j, g

    if best_f < 0 or best_gain <= min_gain:
        return (-1, -1, 0.0)
    return (best_f, best_code, best_gain)
