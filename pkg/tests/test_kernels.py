import os
import subprocess
import sys

import numpy as np
import pytest

from sdtr import _kernels

needs_numba = pytest.mark.skipif(not _kernels.HAS_NUMBA, reason="numba backend disabled")


def _levenshtein(a, b):
    prev = list(range(len(b) + 1))
    for i, x in enumerate(a, 1):
        cur = [i]
        for j, y in enumerate(b, 1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (x != y)))
        prev = cur
    return prev[-1]


@pytest.mark.parametrize("n,m", [(0, 0), (0, 4), (3, 0), (1, 1), (7, 5), (30, 30)])
def test_edit_table_numpy_matches_loops(n, m):
    rng = np.random.default_rng(n * 100 + m)
    a = rng.integers(0, 4, n)
    b = rng.integers(0, 4, m)
    table = _kernels.edit_table_numpy(a, b)
    np.testing.assert_array_equal(table, _kernels._edit_table_loops(a, b))
    assert table[-1, -1] == _levenshtein(a.tolist(), b.tolist())


@needs_numba
def test_edit_table_numba_matches_numpy():
    rng = np.random.default_rng(0)
    for _ in range(50):
        a = rng.integers(0, 5, rng.integers(0, 25))
        b = rng.integers(0, 5, rng.integers(0, 25))
        np.testing.assert_array_equal(_kernels.edit_table_numba(a, b), _kernels.edit_table_numpy(a, b))


def _random_csr(rng, n_docs=40, n_terms=30):
    tf = rng.integers(0, 4, size=(n_terms, n_docs)) * (rng.random((n_terms, n_docs)) < 0.3)
    offsets = np.concatenate([[0], np.cumsum((tf > 0).sum(axis=1))]).astype(np.int64)
    rows, cols = np.nonzero(tf)
    return offsets, cols.astype(np.int64), tf[rows, cols].astype(np.int64), tf.sum(axis=0).astype(np.int64)


@pytest.mark.parametrize("backend", ["numpy", pytest.param("numba", marks=needs_numba)])
def test_bm25_backends_agree(backend):
    rng = np.random.default_rng(3)
    offsets, docs, tfs, lengths = _random_csr(rng)
    ids = np.array([0, 4, 7, 29], dtype=np.int64)
    weights = np.array([1.5, 0.2, 0.0, 2.0])
    avdl = lengths.mean()
    ref = _kernels._bm25_accumulate_loops(offsets, docs, tfs, lengths, ids, weights, 1.2, 0.75, avdl, 40)
    fn = _kernels.bm25_accumulate_numpy if backend == "numpy" else _kernels.bm25_accumulate_numba
    np.testing.assert_allclose(fn(offsets, docs, tfs, lengths, ids, weights, 1.2, 0.75, avdl, 40), ref,
                               rtol=1e-12)


def test_env_flag_selects_numpy_backend():
    env = dict(os.environ, SDTR_NO_NUMBA="1")
    out = subprocess.run([sys.executable, "-c", "from sdtr import _kernels; print(_kernels.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "numpy"
