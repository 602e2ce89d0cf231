"""Time the numba and numpy kernels on the same inputs.

    python3 benchmarks/bench_kernels.py [--repeat N]

Prints one line per kernel and backend with the best wall time of N runs.
The numba timings exclude the first (compiling) call.
"""

import argparse
import time

import numpy as np

from sdtr import _kernels
from sdtr.index import build_index, _query_weights
from sdtr.synth import generate_two_domains


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        start = time.perf_counter()
        fn()
        times.append(time.perf_counter() - start)
    return min(times)


def edit_inputs(rng, n_pairs=300, length=40):
    return [(rng.integers(0, 50, length).astype(np.int64), rng.integers(0, 50, length).astype(np.int64))
            for _ in range(n_pairs)]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    rng = np.random.default_rng(0)

    pairs = edit_inputs(rng)
    domain, _ = generate_two_domains(seed=0, n_docs=2000, n_topics=20)
    index = build_index(domain.collection)
    queries = [rng.choice(index.terms, 8) for _ in range(200)]
    weighted = [_query_weights(index, list(q)) for q in queries]

    def edits(kernel):
        return lambda: [kernel(r, h) for r, h in pairs]

    def bm25(kernel):
        return lambda: [kernel(index.offsets, index.post_docs, index.post_tfs, index.doc_lengths,
                               ids, w, 1.2, 0.75, index.avg_doc_length, index.doc_count)
                        for ids, w in weighted]

    backends = {"numpy": (_kernels.edit_table_numpy, _kernels.bm25_accumulate_numpy)}
    if _kernels.HAS_NUMBA:
        backends["numba"] = (_kernels.edit_table_numba, _kernels.bm25_accumulate_numba)
        # warm up so compilation is not timed
        edits(_kernels.edit_table_numba)()
        bm25(_kernels.bm25_accumulate_numba)()
    else:
        print("numba unavailable; numpy only")

    print(f"edit table: {len(pairs)} pairs of length 40; bm25: {len(weighted)} queries over "
          f"{index.doc_count} docs, {len(index)} terms")
    for name, (edit_k, bm25_k) in backends.items():
        t_edit = best_of(edits(edit_k), args.repeat)
        t_bm25 = best_of(bm25(bm25_k), args.repeat)
        print(f"{name:6s} edit_table {t_edit * 1e3:8.2f} ms   bm25_accumulate {t_bm25 * 1e3:8.2f} ms")


if __name__ == "__main__":
    main()
