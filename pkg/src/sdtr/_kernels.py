"""Numeric inner loops with a numba path and a pure-numpy fallback.

The backend is chosen once at import time. Set ``SDTR_NO_NUMBA=1`` to force
the numpy path (useful on platforms without numba, and for cross-checking).
Both paths must produce identical results; tests call each one directly.
"""

import os

import numpy as np

_DISABLED = os.environ.get("SDTR_NO_NUMBA", "").strip().lower() in ("1", "true", "yes")

try:
    if _DISABLED:
        raise ImportError("numba disabled by SDTR_NO_NUMBA")
    from numba import njit

    HAS_NUMBA = True
except ImportError:
    HAS_NUMBA = False

BACKEND = "numba" if HAS_NUMBA else "numpy"


# --------------------------------------------------------------------------
# Edit distance table
# --------------------------------------------------------------------------


def edit_table_numpy(ref: np.ndarray, hyp: np.ndarray) -> np.ndarray:
    """Full Levenshtein cost table, one row at a time.

    Within a row the insertion recurrence ``D[i, j] = D[i, j-1] + 1`` is a
    running minimum of ``tmp[k] - k`` shifted back by ``j``.
    """
    n, m = len(ref), len(hyp)
    table = np.empty((n + 1, m + 1), dtype=np.int32)
    cols = np.arange(m + 1, dtype=np.int32)
    table[0] = cols
    for i in range(1, n + 1):
        prev = table[i - 1]
        tmp = np.empty(m + 1, dtype=np.int32)
        tmp[0] = i
        if m:
            diag = prev[:-1] + (hyp != ref[i - 1]).astype(np.int32)
            tmp[1:] = np.minimum(prev[1:] + 1, diag)
        table[i] = np.minimum.accumulate(tmp - cols) + cols
    return table


def _edit_table_loops(ref, hyp):
    n = ref.shape[0]
    m = hyp.shape[0]
    table = np.empty((n + 1, m + 1), dtype=np.int32)
    for j in range(m + 1):
        table[0, j] = j
    for i in range(1, n + 1):
        table[i, 0] = i
        r = ref[i - 1]
        for j in range(1, m + 1):
            best = table[i - 1, j - 1] + (0 if r == hyp[j - 1] else 1)
            up = table[i - 1, j] + 1
            if up < best:
                best = up
            left = table[i, j - 1] + 1
            if left < best:
                best = left
            table[i, j] = best
    return table


# --------------------------------------------------------------------------
# Okapi accumulation over posting lists
# --------------------------------------------------------------------------


def bm25_accumulate_numpy(offsets, post_docs, post_tfs, doc_lengths,
                          term_ids, term_weights, k1, b, avdl, n_docs):
    """Score every document for the given query terms.

    ``term_weights`` already folds idf and query term frequency together.
    Postings within one term never repeat a document, so fancy-index
    accumulation is safe.
    """
    scores = np.zeros(n_docs, dtype=np.float64)
    for t, w in zip(term_ids, term_weights):
        lo, hi = offsets[t], offsets[t + 1]
        if hi == lo or w == 0.0:
            continue
        docs = post_docs[lo:hi]
        tf = post_tfs[lo:hi].astype(np.float64)
        norm = k1 * (1.0 - b + b * doc_lengths[docs] / avdl)
        scores[docs] += w * (tf * (k1 + 1.0) / (tf + norm))
    return scores


def _bm25_accumulate_loops(offsets, post_docs, post_tfs, doc_lengths,
                           term_ids, term_weights, k1, b, avdl, n_docs):
    scores = np.zeros(n_docs, dtype=np.float64)
    for q in range(term_ids.shape[0]):
        t = term_ids[q]
        w = term_weights[q]
        if w == 0.0:
            continue
        for p in range(offsets[t], offsets[t + 1]):
            d = post_docs[p]
            tf = float(post_tfs[p])
            norm = k1 * (1.0 - b + b * doc_lengths[d] / avdl)
            scores[d] += w * (tf * (k1 + 1.0) / (tf + norm))
    return scores


if HAS_NUMBA:
    edit_table_numba = njit(cache=True)(_edit_table_loops)
    bm25_accumulate_numba = njit(cache=True)(_bm25_accumulate_loops)
    edit_table = edit_table_numba
    bm25_accumulate = bm25_accumulate_numba
else:
    edit_table_numba = None
    bm25_accumulate_numba = None
    edit_table = edit_table_numpy
    bm25_accumulate = bm25_accumulate_numpy
