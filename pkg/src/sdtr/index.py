"""Inverted index over content words and Okapi BM25 ranking."""

from __future__ import annotations

import io
import json
import math
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import _kernels
from .corpus import Collection, TokenizerConfig, extract_content_words, tokenize

DEFAULT_K = 1000


@dataclass(frozen=True)
class OkapiParams:
    k1: float = 1.2
    b: float = 0.75

    def __post_init__(self):
        if self.k1 < 0:
            raise ValueError(f"k1 must be non-negative, got {self.k1}")
        if not 0.0 <= self.b <= 1.0:
            raise ValueError(f"b must lie in [0, 1], got {self.b}")


@dataclass(frozen=True)
class ScoredDoc:
    doc_id: str
    score: float


class InvertedIndex:
    """Term dictionary with CSR posting lists.

    Posting list for term id ``t`` is ``post_docs[offsets[t]:offsets[t+1]]``
    (document ordinals, ascending) with matching ``post_tfs``.
    """

    def __init__(self, doc_ids: Sequence[str], terms: Sequence[str], offsets: np.ndarray,
                 post_docs: np.ndarray, post_tfs: np.ndarray, doc_lengths: np.ndarray):
        self.doc_ids = list(doc_ids)
        self.terms = list(terms)
        self.term_ids = {t: i for i, t in enumerate(self.terms)}
        self.offsets = np.ascontiguousarray(offsets, dtype=np.int64)
        self.post_docs = np.ascontiguousarray(post_docs, dtype=np.int64)
        self.post_tfs = np.ascontiguousarray(post_tfs, dtype=np.int64)
        self.doc_lengths = np.ascontiguousarray(doc_lengths, dtype=np.int64)
        self.doc_freqs = np.diff(self.offsets)

    @property
    def doc_count(self) -> int:
        return len(self.doc_ids)

    @property
    def avg_doc_length(self) -> float:
        return float(self.doc_lengths.sum()) / self.doc_count

    def __len__(self) -> int:
        return len(self.terms)

    def postings(self, term: str) -> list[tuple[int, int]]:
        t = self.term_ids.get(term)
        if t is None:
            return []
        lo, hi = self.offsets[t], self.offsets[t + 1]
        return list(zip(self.post_docs[lo:hi].tolist(), self.post_tfs[lo:hi].tolist()))

    def term_frequency(self, term: str, doc_ordinal: int) -> int:
        t = self.term_ids.get(term)
        if t is None:
            return 0
        lo, hi = self.offsets[t], self.offsets[t + 1]
        docs = self.post_docs[lo:hi]
        k = int(np.searchsorted(docs, doc_ordinal))
        if k < len(docs) and docs[k] == doc_ordinal:
            return int(self.post_tfs[lo + k])
        return 0

    def idf(self, term: str) -> float:
        t = self.term_ids.get(term)
        df = 0 if t is None else int(self.doc_freqs[t])
        return okapi_idf(self.doc_count, df)

    def stats(self) -> dict:
        return {
            "doc_count": self.doc_count,
            "term_count": len(self.terms),
            "avg_doc_length": self.avg_doc_length,
        }

    # -- serialization -------------------------------------------------

    def save(self, path: str | Path) -> None:
        meta = {"doc_ids": self.doc_ids, "terms": self.terms}
        with Path(path).open("wb") as fh:
            np.savez_compressed(
                fh,
                meta=np.frombuffer(json.dumps(meta, ensure_ascii=False).encode("utf-8"), dtype=np.uint8),
                offsets=self.offsets, post_docs=self.post_docs,
                post_tfs=self.post_tfs, doc_lengths=self.doc_lengths,
            )

    @classmethod
    def load(cls, path: str | Path) -> "InvertedIndex":
        with np.load(io.BytesIO(Path(path).read_bytes())) as z:
            meta = json.loads(z["meta"].tobytes().decode("utf-8"))
            return cls(meta["doc_ids"], meta["terms"], z["offsets"], z["post_docs"],
                       z["post_tfs"], z["doc_lengths"])


def okapi_idf(n_docs: int, df: int) -> float:
    """Robertson/Sparck Jones weight, floored at zero."""
    if df == 0:
        return 0.0
    return max(0.0, math.log((n_docs - df + 0.5) / (df + 0.5)))


def build_index(collection: Collection, config: TokenizerConfig | None = None) -> InvertedIndex:
    """Index the content words of every document.

    Term ids follow sorted term order so the layout does not depend on the
    order in which terms are first seen.
    """
    config = config or TokenizerConfig()
    if len(collection) == 0:
        raise ValueError("cannot index an empty collection")
    per_doc = []
    lengths = np.zeros(len(collection), dtype=np.int64)
    vocab: set[str] = set()
    for i, doc in enumerate(collection):
        words = extract_content_words(tokenize(doc.text, config), config)
        lengths[i] = len(words)
        tf = Counter(words)
        per_doc.append(tf)
        vocab.update(tf)
    terms = sorted(vocab)
    term_ids = {t: i for i, t in enumerate(terms)}

    n_post = sum(len(tf) for tf in per_doc)
    t_col = np.empty(n_post, dtype=np.int64)
    d_col = np.empty(n_post, dtype=np.int64)
    f_col = np.empty(n_post, dtype=np.int64)
    p = 0
    for d, tf in enumerate(per_doc):
        for term, count in tf.items():
            t_col[p], d_col[p], f_col[p] = term_ids[term], d, count
            p += 1
    order = np.lexsort((d_col, t_col))
    t_col, d_col, f_col = t_col[order], d_col[order], f_col[order]
    offsets = np.zeros(len(terms) + 1, dtype=np.int64)
    np.cumsum(np.bincount(t_col, minlength=len(terms)), out=offsets[1:])
    return InvertedIndex(collection.doc_ids, terms, offsets, d_col, f_col, lengths)


def _query_weights(index: InvertedIndex, query_terms: Iterable[str]):
    qtf = Counter(query_terms)
    ids, weights = [], []
    n = index.doc_count
    for term in sorted(qtf):
        t = index.term_ids.get(term)
        if t is None:
            continue
        w = okapi_idf(n, int(index.doc_freqs[t])) * qtf[term]
        if w > 0.0:
            ids.append(t)
            weights.append(w)
    return np.asarray(ids, dtype=np.int64), np.asarray(weights, dtype=np.float64)


def okapi_score(index: InvertedIndex, query_terms: Sequence[str], doc_ordinal: int,
                params: OkapiParams | None = None) -> float:
    """BM25 score of one document; unknown terms contribute nothing."""
    params = params or OkapiParams()
    if not 0 <= doc_ordinal < index.doc_count:
        raise IndexError(f"doc_ordinal {doc_ordinal} out of range")
    dl = float(index.doc_lengths[doc_ordinal])
    avdl = index.avg_doc_length
    score = 0.0
    for term, q in sorted(Counter(query_terms).items()):
        tf = index.term_frequency(term, doc_ordinal)
        if tf == 0:
            continue
        w = index.idf(term) * q
        if w == 0.0:
            continue
        norm = params.k1 * (1.0 - params.b + params.b * dl / avdl)
        score += w * (tf * (params.k1 + 1.0) / (tf + norm))
    return score


def score_all(index: InvertedIndex, query_terms: Sequence[str],
              params: OkapiParams | None = None) -> np.ndarray:
    """Scores for every document ordinal."""
    params = params or OkapiParams()
    ids, weights = _query_weights(index, query_terms)
    if len(ids) == 0:
        return np.zeros(index.doc_count)
    return _kernels.bm25_accumulate(
        index.offsets, index.post_docs, index.post_tfs, index.doc_lengths,
        ids, weights, float(params.k1), float(params.b), index.avg_doc_length, index.doc_count,
    )


def rank_scores(doc_ids: Sequence[str], scores: np.ndarray, k: int) -> list[ScoredDoc]:
    hits = np.flatnonzero(scores > 0.0)
    ranked = sorted(hits.tolist(), key=lambda i: (-scores[i], doc_ids[i]))
    return [ScoredDoc(doc_ids[i], float(scores[i])) for i in ranked[:k]]


def search(index: InvertedIndex, query_terms: Sequence[str], k: int = DEFAULT_K,
           params: OkapiParams | None = None) -> list[ScoredDoc]:
    """Top-``k`` documents with positive score, best first, ties by doc id."""
    if k < 1:
        raise ValueError("k must be at least 1")
    if not query_terms:
        return []
    return rank_scores(index.doc_ids, score_all(index, query_terms, params), k)


def query_terms_from_text(text: str, config: TokenizerConfig | None = None) -> list[str]:
    config = config or TokenizerConfig()
    return extract_content_words(tokenize(text, config), config)


# --------------------------------------------------------------------------
# TREC run files
# --------------------------------------------------------------------------


def format_run(results: Mapping[str, Sequence[ScoredDoc]], tag: str = "sdtr") -> str:
    lines = []
    for qid, docs in results.items():
        for rank, hit in enumerate(docs, start=1):
            lines.append(f"{qid} Q0 {hit.doc_id} {rank} {hit.score!r} {tag}")
    return "".join(line + "\n" for line in lines)


def write_run(results: Mapping[str, Sequence[ScoredDoc]], path: str | Path, tag: str = "sdtr") -> None:
    Path(path).write_text(format_run(results, tag), encoding="utf-8")


def read_run(path: str | Path) -> dict[str, list[ScoredDoc]]:
    """Parse a run file, ordering each topic by descending score then doc id."""
    run: dict[str, list[ScoredDoc]] = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        parts = line.split()
        if len(parts) != 6:
            raise ValueError(f"{path}:{lineno}: expected 6 fields, got {len(parts)}")
        qid, _, doc_id, _, score, _ = parts
        run.setdefault(qid, []).append(ScoredDoc(doc_id, float(score)))
    for qid, docs in run.items():
        docs.sort(key=lambda h: (-h.score, h.doc_id))
        if len({h.doc_id for h in docs}) != len(docs):
            raise ValueError(f"{path}: duplicate document in topic {qid}")
    return run
