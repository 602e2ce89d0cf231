"""Word n-gram language models with Witten-Bell interpolation.

The model predicts over a closed set: the selected vocabulary words plus
``<unk>`` and ``</s>``. ``<s>`` only ever appears as history and has
probability zero as a prediction.
"""

from __future__ import annotations

import math
from collections import Counter, defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .corpus import Collection, TokenizerConfig, sentence_token_streams, tokenize

UNK = "<unk>"
BOS = "<s>"
EOS = "</s>"
DEFAULT_V_MAX = 20000
HEADER_TAG = "#sdtr-ngram"


class Vocabulary:
    """Top-frequency word list plus the reserved symbols.

    Word ids are ``0..len(words)-1`` in selection order, followed by
    ``<unk>``, ``</s>`` and ``<s>``.
    """

    def __init__(self, words: Sequence[str], v_max: int = DEFAULT_V_MAX):
        if len(words) > v_max:
            raise ValueError(f"{len(words)} words exceed v_max={v_max}")
        self.words = list(words)
        self.v_max = v_max
        self.index = {w: i for i, w in enumerate(self.words)}
        if len(self.index) != len(self.words):
            raise ValueError("vocabulary words must be unique")
        for sym in (UNK, BOS, EOS):
            if sym in self.index:
                raise ValueError(f"reserved symbol {sym} cannot be a vocabulary word")
        n = len(self.words)
        self.unk_id, self.eos_id, self.bos_id = n, n + 1, n + 2

    @property
    def size(self) -> int:
        """Number of predictable symbols (words, ``<unk>``, ``</s>``)."""
        return len(self.words) + 2

    def __len__(self) -> int:
        return len(self.words)

    def __contains__(self, word: str) -> bool:
        return word in self.index

    def __eq__(self, other) -> bool:
        return isinstance(other, Vocabulary) and self.words == other.words and self.v_max == other.v_max

    def id_of(self, word: str) -> int:
        return self.index.get(word, self.unk_id)

    def encode(self, tokens: Iterable[str]) -> list[int]:
        get, unk = self.index.get, self.unk_id
        return [get(t, unk) for t in tokens]

    def symbol(self, i: int) -> str:
        if i < len(self.words):
            return self.words[i]
        return (UNK, EOS, BOS)[i - len(self.words)]


@dataclass(frozen=True)
class LmStats:
    type_count: int
    token_count: int
    coverage: float


def build_vocabulary(collection: Collection, config: TokenizerConfig | None = None,
                     v_max: int = DEFAULT_V_MAX) -> tuple[Vocabulary, LmStats]:
    """Select the ``v_max`` most frequent types (ties in lexicographic order)."""
    config = config or TokenizerConfig()
    if len(collection) == 0:
        raise ValueError("cannot build a vocabulary from an empty collection")
    if v_max < 1:
        raise ValueError("v_max must be positive")
    freq: Counter[str] = Counter()
    for doc in collection:
        freq.update(tokenize(doc.text, config))
    ranked = sorted(freq.items(), key=lambda kv: (-kv[1], kv[0]))[:v_max]
    vocab = Vocabulary([w for w, _ in ranked], v_max)
    total = sum(freq.values())
    covered = sum(c for _, c in ranked)
    return vocab, LmStats(len(freq), total, covered / total if total else 0.0)


class NGramModel:
    """Interpolated Witten-Bell model of order 1 to 3.

    ``counts[k]`` maps a length-``k`` context (tuple of ids) to a
    ``{word_id: count}`` table.
    """

    def __init__(self, vocab: Vocabulary, order: int, counts: list[dict] | None = None):
        if order not in (1, 2, 3):
            raise ValueError(f"order must be 1, 2 or 3, got {order}")
        self.vocab = vocab
        self.order = order
        self.counts: list[dict[tuple, dict[int, int]]] = counts or [{} for _ in range(order)]
        self._summ = [
            {ctx: (sum(t.values()), len(t)) for ctx, t in level.items()} for level in self.counts
        ]
        self._dist_cache: dict[tuple, np.ndarray] = {}

    def _context(self, history: Sequence[int]) -> tuple:
        if self.order == 1:
            return ()
        return tuple(history[-(self.order - 1):])

    def prob(self, word_id: int, history: Sequence[int] = ()) -> float:
        """p(word | history) with history given as ids (oldest first)."""
        if word_id == self.vocab.bos_id:
            return 0.0
        h = self._context(history)
        p = 1.0 / self.vocab.size
        for k in range(len(h) + 1):
            ctx = h[len(h) - k:]
            summ = self._summ[k].get(ctx)
            if summ is None:
                continue
            total, types = summ
            p = (self.counts[k][ctx].get(word_id, 0) + types * p) / (total + types)
        return p

    def distribution(self, history: Sequence[int] = ()) -> np.ndarray:
        """Vector of p(w | history) over the ``vocab.size`` predictable ids."""
        h = self._context(history)
        cached = self._dist_cache.get(h)
        if cached is not None:
            return cached
        p = np.full(self.vocab.size, 1.0 / self.vocab.size)
        for k in range(len(h) + 1):
            ctx = h[len(h) - k:]
            summ = self._summ[k].get(ctx)
            if summ is None:
                continue
            total, types = summ
            table = self.counts[k][ctx]
            p = p * types
            p[np.fromiter(table.keys(), dtype=np.int64, count=len(table))] += np.fromiter(
                table.values(), dtype=np.float64, count=len(table))
            p /= total + types
        p.flags.writeable = False
        self._dist_cache[h] = p
        return p

    def prob_of(self, word: str, history: Sequence[str] = ()) -> float:
        """String-level convenience wrapper around :meth:`prob`."""
        ids = [self._sym_id(t) for t in history]
        return self.prob(self._sym_id(word), ids)

    def _sym_id(self, token: str) -> int:
        if token == BOS:
            return self.vocab.bos_id
        if token == EOS:
            return self.vocab.eos_id
        return self.vocab.id_of(token)

    def contexts(self, k: int) -> list[tuple]:
        return list(self.counts[k])

    # -- serialization ---------------------------------------------------

    def dumps(self) -> str:
        v = self.vocab
        lines = [f"{HEADER_TAG}\torder={self.order}\tv_max={v.v_max}\tunk={UNK}\tbos={BOS}\teos={EOS}",
                 f"\\vocab\t{len(v.words)}"]
        lines.extend(v.words)
        for k, level in enumerate(self.counts):
            rows = sorted((ctx, w, c) for ctx, table in level.items() for w, c in table.items())
            lines.append(f"\\counts\t{k + 1}\t{len(rows)}")
            for ctx, w, c in rows:
                lines.append(f"{' '.join(v.symbol(i) for i in ctx)}\t{v.symbol(w)}\t{c}")
        lines.append("\\end")
        return "\n".join(lines) + "\n"

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.dumps(), encoding="utf-8")

    @classmethod
    def loads(cls, text: str) -> "NGramModel":
        lines = text.split("\n")
        head = lines[0].split("\t")
        if head[0] != HEADER_TAG:
            raise ValueError("not an sdtr n-gram model file")
        fields = dict(f.split("=", 1) for f in head[1:])
        if (fields.get("unk"), fields.get("bos"), fields.get("eos")) != (UNK, BOS, EOS):
            raise ValueError("reserved symbols in model header do not match")
        order, v_max = int(fields["order"]), int(fields["v_max"])
        tag, n_words = lines[1].split("\t")
        if tag != "\\vocab":
            raise ValueError("missing \\vocab section")
        pos = 2 + int(n_words)
        vocab = Vocabulary(lines[2:pos], v_max)
        sym = {vocab.symbol(i): i for i in range(vocab.size + 1)}
        counts = []
        for k in range(order):
            tag, level_no, n_rows = lines[pos].split("\t")
            if tag != "\\counts" or int(level_no) != k + 1:
                raise ValueError(f"expected \\counts section {k + 1}")
            level: dict[tuple, dict[int, int]] = {}
            for line in lines[pos + 1: pos + 1 + int(n_rows)]:
                ctx_s, w, c = line.split("\t")
                ctx = tuple(sym[s] for s in ctx_s.split(" ")) if ctx_s else ()
                level.setdefault(ctx, {})[sym[w]] = int(c)
            counts.append(level)
            pos += 1 + int(n_rows)
        if lines[pos] != "\\end":
            raise ValueError("missing \\end marker")
        return cls(vocab, order, counts)

    @classmethod
    def load(cls, path: str | Path) -> "NGramModel":
        return cls.loads(Path(path).read_text(encoding="utf-8"))


def train_ngram(collection: Collection, vocab: Vocabulary, order: int = 3,
                config: TokenizerConfig | None = None) -> NGramModel:
    """Count n-grams over ``<s> ... </s>``-wrapped sentences of every document."""
    if order not in (1, 2, 3):
        raise ValueError(f"order must be 1, 2 or 3, got {order}")
    config = config or TokenizerConfig()
    raw = [defaultdict(Counter) for _ in range(order)]
    for doc in collection:
        for sent in sentence_token_streams(doc.text, config):
            ids = [vocab.bos_id, *vocab.encode(sent), vocab.eos_id]
            for i in range(1, len(ids)):
                w = ids[i]
                for k in range(min(order - 1, i) + 1):
                    raw[k][tuple(ids[i - k:i])][w] += 1
    counts = [{ctx: dict(t) for ctx, t in level.items()} for level in raw]
    return NGramModel(vocab, order, counts)


def sequence_logprob(model: NGramModel, tokens: Sequence[str]) -> tuple[float, int, int]:
    """log2 probability of one ``<s> tokens </s>`` sentence.

    Returns ``(logprob, oov_count, scored_token_count)``.
    """
    v = model.vocab
    ids = v.encode(tokens)
    oov = sum(1 for i in ids if i == v.unk_id)
    history = [v.bos_id]
    total = 0.0
    for w in [*ids, v.eos_id]:
        total += math.log2(model.prob(w, history))
        history.append(w)
    return total, oov, len(ids) + 1


def perplexity(model: NGramModel, test_collection: Collection,
               config: TokenizerConfig | None = None) -> tuple[float, float]:
    """Test-set perplexity (base 2) and OOV rate over all sentences."""
    config = config or TokenizerConfig()
    if len(test_collection) == 0:
        raise ValueError("empty test collection")
    logprob, oov, scored, words = 0.0, 0, 0, 0
    for doc in test_collection:
        for sent in sentence_token_streams(doc.text, config):
            lp, o, n = sequence_logprob(model, sent)
            logprob += lp
            oov += o
            scored += n
            words += len(sent)
    if words == 0:
        raise ValueError("test collection contains no tokens")
    return 2.0 ** (-logprob / scored), oov / words


def coverage(vocab: Vocabulary, collection: Collection, config: TokenizerConfig | None = None) -> float:
    """Fraction of the collection's tokens that are vocabulary words."""
    config = config or TokenizerConfig()
    if len(collection) == 0:
        raise ValueError("empty collection")
    total = covered = 0
    for doc in collection:
        toks = tokenize(doc.text, config)
        total += len(toks)
        covered += sum(1 for t in toks if t in vocab)
    if total == 0:
        raise ValueError("collection contains no tokens")
    return covered / total
