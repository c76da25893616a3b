"""Compiled split-search kernel.

Must stay semantically identical to ``py_splitter.best_split_codes``: gains
are one IEEE division of two exactly-computed int64 integers, candidates are
scanned ascending by (feature, category code) with strict-greater updates, so
both kernels select the same split bit-for-bit.  See py_splitter for the
full contract.
"""

from libc.stdlib cimport calloc, free

cimport numpy as cnp

from emiim.errors import InvalidInputError

MAX_NODE_EXAMPLES = 50_000


def best_split_codes(const cnp.int32_t[:, ::1] codes,
                     const cnp.int8_t[::1] labels,
                     const cnp.int64_t[::1] idx,
                     const cnp.int32_t[::1] features,
                     const cnp.int32_t[::1] n_cats,
                     int n_classes,
                     int min_samples_leaf,
                     double min_gain):
    cdef Py_ssize_t m = idx.shape[0]
    if m == 0:
        raise InvalidInputError("empty example set")
    if m > MAX_NODE_EXAMPLES:
        raise InvalidInputError(
            f"node has {m} examples; exact gain arithmetic supports at most "
            f"{MAX_NODE_EXAMPLES}")
    if min_samples_leaf < 1:
        min_samples_leaf = 1

    cdef Py_ssize_t fi, t
    cdef int f, k, v, c
    cdef int max_cats = 0
    for fi in range(features.shape[0]):
        f = features[fi]
        if n_cats[f] > max_cats:
            max_cats = n_cats[f]

    cdef long long *cnt = <long long *> calloc(max_cats * n_classes, sizeof(long long))
    cdef long long *nl = <long long *> calloc(max_cats, sizeof(long long))
    cdef long long *parent = <long long *> calloc(n_classes, sizeof(long long))
    if cnt == NULL or nl == NULL or parent == NULL:
        free(cnt); free(nl); free(parent)
        raise MemoryError()

    cdef cnp.int64_t row
    cdef long long n = m
    cdef long long p2 = 0, l2, r2, nnl, nnr, num, den, cc, rc
    cdef double gain, best_gain = -1.0
    cdef int best_f = -1, best_code = -1

    try:
        for t in range(m):
            parent[labels[idx[t]]] += 1
        for c in range(n_classes):
            p2 += parent[c] * parent[c]

        for fi in range(features.shape[0]):
            f = features[fi]
            k = n_cats[f]
            for v in range(k):
                nl[v] = 0
                for c in range(n_classes):
                    cnt[v * n_classes + c] = 0
            for t in range(m):
                row = idx[t]
                v = codes[row, f]
                cnt[v * n_classes + labels[row]] += 1
                nl[v] += 1
            for v in range(k):
                nnl = nl[v]
                if nnl < min_samples_leaf:
                    continue
                nnr = n - nnl
                if nnr < min_samples_leaf:
                    continue
                l2 = 0
                r2 = 0
                for c in range(n_classes):
                    cc = cnt[v * n_classes + c]
                    rc = parent[c] - cc
                    l2 += cc * cc
                    r2 += rc * rc
                num = l2 * (n * nnr) + r2 * (n * nnl) - p2 * (nnl * nnr)
                den = (n * n) * (nnl * nnr)
                gain = (<double> num) / (<double> den)
                if gain > best_gain:
                    best_gain = gain
                    best_f = f
                    best_code = v
    finally:
        free(cnt)
        free(nl)
        free(parent)

    if best_f < 0 or best_gain <= min_gain:
        return (-1, -1, 0.0)
    return (best_f, best_code, best_gain)
