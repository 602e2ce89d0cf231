"""Recognition-error simulation and word/term error rates.

A seeded noisy channel stands in for the recognizer: out-of-vocabulary
words can never be emitted, and in-vocabulary words are corrupted at a
target rate with replacements drawn from a language model.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from . import _kernels
from .corpus import TokenizerConfig, extract_content_words
from .lm import NGramModel

MATCH, SUBSTITUTE, INSERT, DELETE = "match", "substitute", "insert", "delete"


class AlignOp(NamedTuple):
    kind: str
    ref_token: str | None
    hyp_token: str | None


@dataclass(frozen=True)
class Alignment:
    ops: tuple[AlignOp, ...]

    def count(self, kind: str) -> int:
        return sum(1 for op in self.ops if op.kind == kind)

    @property
    def cost(self) -> int:
        return sum(1 for op in self.ops if op.kind != MATCH)

    @property
    def ref_tokens(self) -> list[str]:
        return [op.ref_token for op in self.ops if op.kind != INSERT]

    @property
    def hyp_tokens(self) -> list[str]:
        return [op.hyp_token for op in self.ops if op.kind != DELETE]


@dataclass(frozen=True)
class ErrorRates:
    substitutions: int
    insertions: int
    deletions: int
    ref_length: int

    @property
    def errors(self) -> int:
        return self.substitutions + self.insertions + self.deletions

    @property
    def rate(self) -> float:
        return self.errors / self.ref_length

    def __add__(self, other: "ErrorRates") -> "ErrorRates":
        return ErrorRates(self.substitutions + other.substitutions,
                          self.insertions + other.insertions,
                          self.deletions + other.deletions,
                          self.ref_length + other.ref_length)


def _encode_pair(ref: Sequence[str], hyp: Sequence[str]):
    ids: dict[str, int] = {}
    r = np.fromiter((ids.setdefault(t, len(ids)) for t in ref), dtype=np.int64, count=len(ref))
    h = np.fromiter((ids.setdefault(t, len(ids)) for t in hyp), dtype=np.int64, count=len(hyp))
    return r, h


def edit_distance(ref: Sequence[str], hyp: Sequence[str]) -> int:
    r, h = _encode_pair(ref, hyp)
    return int(_kernels.edit_table(r, h)[-1, -1])


def align(ref: Sequence[str], hyp: Sequence[str]) -> Alignment:
    """Minimum-edit alignment under unit costs.

    Traceback prefers match, then substitute, delete and insert, so the
    operation sequence is deterministic.
    """
    r, h = _encode_pair(ref, hyp)
    table = _kernels.edit_table(r, h)
    i, j = len(ref), len(hyp)
    ops = []
    while i > 0 or j > 0:
        here = table[i, j]
        if i > 0 and j > 0:
            diag = table[i - 1, j - 1]
            if r[i - 1] == h[j - 1] and diag == here:
                ops.append(AlignOp(MATCH, ref[i - 1], hyp[j - 1]))
                i, j = i - 1, j - 1
                continue
            if diag + 1 == here:
                ops.append(AlignOp(SUBSTITUTE, ref[i - 1], hyp[j - 1]))
                i, j = i - 1, j - 1
                continue
        if i > 0 and table[i - 1, j] + 1 == here:
            ops.append(AlignOp(DELETE, ref[i - 1], None))
            i -= 1
        else:
            ops.append(AlignOp(INSERT, None, hyp[j - 1]))
            j -= 1
    ops.reverse()
    return Alignment(tuple(ops))


def word_error_rate(ref: Sequence[str], hyp: Sequence[str]) -> ErrorRates:
    if len(ref) == 0:
        raise ValueError("reference must contain at least one token")
    a = align(ref, hyp)
    return ErrorRates(a.count(SUBSTITUTE), a.count(INSERT), a.count(DELETE), len(ref))


def term_error_rate(ref: Sequence[str], hyp: Sequence[str],
                    config: TokenizerConfig | None = None) -> ErrorRates:
    """Error rate over content words only."""
    config = config or TokenizerConfig()
    ref_terms = extract_content_words(ref, config)
    if not ref_terms:
        raise ValueError("reference contains no content words")
    return word_error_rate(ref_terms, extract_content_words(hyp, config))


# --------------------------------------------------------------------------
# Noisy channel
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class DegradationConfig:
    model: NGramModel
    target_wer: float = 0.2
    seed: int = 0
    p_sub: float = 0.7
    p_del: float = 0.15
    p_ins: float = 0.15

    def __post_init__(self):
        mix = (self.p_sub, self.p_del, self.p_ins)
        if any(p < 0 or not math.isfinite(p) for p in mix) or abs(sum(mix) - 1.0) > 1e-9:
            raise ValueError(f"error mix must be non-negative and sum to 1, got {mix}")
        if not 0.0 <= self.target_wer <= 1.0:
            raise ValueError(f"target_wer must lie in [0, 1], got {self.target_wer}")


def query_rng(seed: int, query_index: int = 0) -> np.random.Generator:
    """Per-query generator; stable across platforms for a given (seed, index)."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed & (2**64 - 1), query_index])))


def _draw(model: NGramModel, history: list[int], exclude: Iterable[int], rng: np.random.Generator) -> int:
    p = model.distribution(history).copy()
    v = model.vocab
    p[v.unk_id] = 0.0
    p[v.eos_id] = 0.0
    for i in exclude:
        if 0 <= i < len(p):
            p[i] = 0.0
    cdf = np.cumsum(p)
    total = cdf[-1]
    if total <= 0.0:
        raise ValueError("language model has no word to emit")
    k = int(np.searchsorted(cdf, rng.random() * total, side="right"))
    k = min(k, len(p) - 1)
    while k > 0 and p[k] == 0.0:
        k -= 1
    return k


def degrade_query(query: Sequence[str], config: DegradationConfig,
                  rng: np.random.Generator | None = None) -> list[str]:
    """Corrupt a token sequence as a recognizer with ``config.model`` might.

    Out-of-vocabulary tokens are always substituted. Each in-vocabulary
    token is corrupted with probability ``target_wer``: substituted,
    deleted, or followed by one inserted word. Replacement words are drawn
    from the model given the previously emitted words, never equal to the
    original token or the next one.
    """
    if rng is None:
        rng = query_rng(config.seed)
    model = config.model
    v = model.vocab
    keep = model.order - 1
    history = [v.bos_id]
    out: list[str] = []

    def emit(word_id: int):
        out.append(v.words[word_id])
        history.append(word_id)
        if len(history) > keep + 1:
            del history[0]

    cut_sub = config.p_sub
    cut_del = config.p_sub + config.p_del
    ids = [v.index.get(tok) for tok in query]
    for i, wid in enumerate(ids):
        # a draw equal to the next reference word would let the aligner
        # merge two errors into one, so it is excluded as well
        nxt = ids[i + 1] if i + 1 < len(ids) and ids[i + 1] is not None else -1
        if wid is None:
            emit(_draw(model, history, (nxt,), rng))
            continue
        if rng.random() >= config.target_wer:
            emit(wid)
            continue
        u = rng.random()
        if u < cut_sub:
            emit(_draw(model, history, (wid, nxt), rng))
        elif u < cut_del:
            pass
        else:
            emit(wid)
            emit(_draw(model, history, (wid, nxt), rng))
    return out


# --------------------------------------------------------------------------
# Degraded-query TSV files
# --------------------------------------------------------------------------


def write_degraded(rows: Iterable[tuple[str, int, Sequence[str]]], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for qid, seed, tokens in rows:
            fh.write(f"{qid}\t{seed}\t{' '.join(tokens)}\n")


def read_degraded(path: str | Path) -> list[tuple[str, int, str]]:
    rows = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        if not line:
            continue
        parts = line.split("\t")
        if len(parts) != 3:
            raise ValueError(f"{path}:{lineno}: expected query_id, seed and text")
        rows.append((parts[0], int(parts[1]), parts[2]))
    return rows
