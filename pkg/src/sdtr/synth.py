"""Seeded two-domain test collections with topics and relevance judgements.

Each domain has its own pseudo-word content lexicon (disjoint across
domains) over a shared set of English function words. Documents written
about a topic draw heavily from that topic's key terms, so the topic's
documents are the relevant set. Queries mix function words, key terms and
one word that never occurs in the domain's documents, giving the in-domain
language model a small, content-word-only OOV rate.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .corpus import Collection, Document, TokenizerConfig, write_jsonl
from .evaluation import Qrels, Topic, format_topics

FUNCTION_WORDS = (
    "the", "of", "and", "in", "to", "a", "is", "for", "on", "with", "by", "are",
    "that", "this", "from", "which", "as", "at", "be", "these", "about", "there",
    "any", "some", "their", "was", "were", "or", "an", "such", "into", "between",
)
_ONSETS = ("b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z", "ch", "sh", "tr", "pl")
_VOWELS = ("a", "e", "i", "o", "u", "ai", "ou")


@dataclass
class SyntheticDomain:
    name: str
    dialect: str
    collection: Collection
    topics: list[Topic]
    qrels: Qrels
    lexicon: list[str]

    def write(self, directory: str | Path) -> dict[str, Path]:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        paths = {
            "collection": directory / f"{self.name}.docs.jsonl",
            "topics": directory / f"{self.name}.topics.sgml",
            "qrels": directory / f"{self.name}.qrels",
        }
        write_jsonl(self.collection, paths["collection"])
        paths["topics"].write_text(format_topics(self.topics, self.dialect), encoding="utf-8")
        self.qrels.save(paths["qrels"])
        return paths


def _pseudo_words(rng: np.random.Generator, n: int, banned: set[str]) -> list[str]:
    words: list[str] = []
    seen = set(banned)
    while len(words) < n:
        syll = int(rng.integers(2, 4))
        w = "".join(_ONSETS[rng.integers(len(_ONSETS))] + _VOWELS[rng.integers(len(_VOWELS))]
                     for _ in range(syll))
        if w not in seen:
            seen.add(w)
            words.append(w)
    return words


def _sentence(rng, length, topic_terms, background, bg_cdf, p_topic):
    out = []
    for _ in range(length):
        if rng.random() < 0.45:
            out.append(FUNCTION_WORDS[rng.integers(len(FUNCTION_WORDS))])
        elif topic_terms is not None and rng.random() < p_topic:
            out.append(topic_terms[rng.integers(len(topic_terms))])
        else:
            out.append(background[int(np.searchsorted(bg_cdf, rng.random(), side="right"))])
    return " ".join(out)


def generate_domain(name: str, lexicon: list[str], rng: np.random.Generator, *, dialect: str,
                    n_docs: int = 500, n_topics: int = 20, rel_per_topic: int = 12,
                    terms_per_topic: int = 10, zipf_s: float = 1.0,
                    p_topic: float = 0.12, band_ratio: float = 0.5) -> SyntheticDomain:
    ranks = np.arange(1, len(lexicon) + 1, dtype=np.float64)
    weights = ranks ** -zipf_s
    bg_cdf = np.cumsum(weights / weights.sum())
    bg_cdf[-1] = 1.0

    # key terms come from a shared mid-frequency band, so topics overlap
    band = lexicon[50: 50 + max(terms_per_topic, int(n_topics * terms_per_topic * band_ratio))]
    topic_terms = [[band[i] for i in rng.permutation(len(band))[:terms_per_topic]]
                   for _ in range(n_topics)]

    n_rel = min(n_docs, n_topics * rel_per_topic)
    slots = rng.permutation(n_docs)
    doc_topic = np.full(n_docs, -1)
    doc_topic[slots[:n_rel]] = np.arange(n_rel) % n_topics

    width = len(str(n_docs))
    docs = []
    for d in range(n_docs):
        t = doc_topic[d]
        terms = topic_terms[t] if t >= 0 else None
        sentences = [_sentence(rng, int(rng.integers(8, 17)), terms, lexicon, bg_cdf, p_topic)
                     for _ in range(int(rng.integers(5, 11)))]
        docs.append(Document(f"{name}-{d:0{width}d}", ". ".join(sentences) + "."))
    collection = Collection(docs)

    seen = set()
    for doc in docs:
        seen.update(doc.text.replace(".", " ").split())
    unseen = [w for w in lexicon if w not in seen]

    topics, grades = [], {}
    for t in range(n_topics):
        tid = f"{t + 1:04d}" if dialect == "ntcir" else str(1001 + t)
        terms = topic_terms[t]
        order = rng.permutation(len(terms))
        k = [terms[i] for i in order]
        rare = unseen[rng.integers(len(unseen))] if unseen else k[-1]
        description = (f"are there any {k[0]} {k[1]} about the {k[2]} of {rare} "
                       f"in which {k[3]} are {k[4]}?")
        narrative = (f"the {k[0]} {k[1]} of the {k[2]} is {k[3]} with {rare}. "
                     f"a {k[4]} {k[5]} in {k[0]} are {k[6]} to the {k[7]}. "
                     f"{k[1]} {k[8]} from {k[2]} is not {k[9]}.")
        topics.append(Topic(tid, title=f"{k[0]} {k[1]}", description=description, narrative=narrative))
        grades[tid] = {docs[d].doc_id: 1 for d in np.flatnonzero(doc_topic == t)}
    return SyntheticDomain(name, dialect, collection, topics, Qrels(grades), lexicon)


def generate_two_domains(seed: int = 0, n_docs: int = 500, n_topics: int = 20,
                         lexicon_size: int = 4000, **kwargs) -> tuple[SyntheticDomain, SyntheticDomain]:
    """Domains ``sci`` (ntcir-style topics) and ``news`` (irex-style topics)."""
    rng = np.random.default_rng(seed)
    stop = set(TokenizerConfig().stopwords)
    words = _pseudo_words(rng, 2 * lexicon_size, stop | set(FUNCTION_WORDS))
    a = generate_domain("sci", words[:lexicon_size], rng, dialect="ntcir",
                        n_docs=n_docs, n_topics=n_topics, **kwargs)
    b = generate_domain("news", words[lexicon_size:], rng, dialect="irex",
                        n_docs=n_docs, n_topics=n_topics, **kwargs)
    return a, b
