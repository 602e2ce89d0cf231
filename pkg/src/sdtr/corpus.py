"""Document collections, tokenization and content-word extraction."""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Iterable, Iterator, Sequence

DEFAULT_TOKEN_PATTERN = r"\w+"
SENTENCE_END = re.compile(r"[.!?。]+")


class CollectionError(ValueError):
    """Raised when a collection file cannot be loaded."""


@dataclass(frozen=True)
class Document:
    doc_id: str
    text: str

    def __post_init__(self):
        if not isinstance(self.doc_id, str) or not self.doc_id:
            raise CollectionError("doc_id must be a non-empty string")


class Collection(Sequence[Document]):
    """An immutable, ordered set of documents with unique ids."""

    def __init__(self, documents: Iterable[Document]):
        docs = tuple(documents)
        seen: set[str] = set()
        for doc in docs:
            if doc.doc_id in seen:
                raise CollectionError(f"duplicate doc_id {doc.doc_id!r}")
            seen.add(doc.doc_id)
        self._docs = docs

    def __len__(self) -> int:
        return len(self._docs)

    def __getitem__(self, i):
        return self._docs[i]

    def __iter__(self) -> Iterator[Document]:
        return iter(self._docs)

    def __repr__(self) -> str:
        return f"Collection({len(self._docs)} documents)"

    @property
    def doc_ids(self) -> list[str]:
        return [d.doc_id for d in self._docs]

    def token_counts(self, config: "TokenizerConfig | None" = None) -> list[int]:
        """Per-document token counts (no stopword removal)."""
        config = config or TokenizerConfig()
        return [len(tokenize(d.text, config)) for d in self._docs]

    def stats(self, config: "TokenizerConfig | None" = None) -> dict:
        counts = self.token_counts(config)
        return {"doc_count": len(counts), "total_tokens": sum(counts)}


@lru_cache(maxsize=None)
def _bundled_stopwords() -> frozenset[str]:
    text = resources.files("sdtr").joinpath("data/stopwords_en.txt").read_text("utf-8")
    return parse_stoplist(text)


def parse_stoplist(text: str) -> frozenset[str]:
    words = []
    for line in text.splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            words.append(line)
    return frozenset(words)


def load_stoplist(path: str | Path) -> frozenset[str]:
    return parse_stoplist(Path(path).read_text(encoding="utf-8"))


@dataclass(frozen=True)
class TokenizerConfig:
    """Normalization settings shared by indexing, LM training and scoring.

    ``token_pattern`` is a regular expression whose matches are the tokens;
    the default ``\\w+`` segments on Unicode word boundaries and drops
    punctuation. Stopwords only affect :func:`extract_content_words`.
    """

    lowercase: bool = True
    stopwords: frozenset[str] = field(default_factory=_bundled_stopwords)
    token_pattern: str = DEFAULT_TOKEN_PATTERN

    @classmethod
    def with_stoplist_file(cls, path: str | Path, **kwargs) -> "TokenizerConfig":
        return cls(stopwords=load_stoplist(path), **kwargs)


@lru_cache(maxsize=16)
def _compiled(pattern: str) -> re.Pattern:
    return re.compile(pattern)


def tokenize(text: str, config: TokenizerConfig | None = None) -> list[str]:
    config = config or TokenizerConfig()
    if config.lowercase:
        text = text.lower()
    return _compiled(config.token_pattern).findall(text)


def extract_content_words(tokens: Sequence[str], config: TokenizerConfig | None = None) -> list[str]:
    """Drop stopwords, keeping order and repeats."""
    config = config or TokenizerConfig()
    stop = config.stopwords
    return [t for t in tokens if t not in stop]


def split_sentences(text: str) -> list[str]:
    """Split on terminal punctuation; text without any becomes one sentence."""
    parts = SENTENCE_END.split(text)
    return [p for p in parts if p.strip()]


def sentence_token_streams(text: str, config: TokenizerConfig | None = None) -> list[list[str]]:
    """Tokenized sentences of a document, empty sentences removed."""
    config = config or TokenizerConfig()
    out = []
    for sentence in split_sentences(text):
        toks = tokenize(sentence, config)
        if toks:
            out.append(toks)
    return out


# --------------------------------------------------------------------------
# Loading
# --------------------------------------------------------------------------


def _read_jsonl(path: Path) -> list[Document]:
    docs = []
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CollectionError(f"{path}:{lineno}: invalid JSON ({exc.msg})") from None
            if not isinstance(rec, dict) or "doc_id" not in rec or "text" not in rec:
                raise CollectionError(f"{path}:{lineno}: record needs 'doc_id' and 'text'")
            doc_id, text = rec["doc_id"], rec["text"]
            if not isinstance(doc_id, str) or not doc_id or not isinstance(text, str):
                raise CollectionError(f"{path}:{lineno}: 'doc_id' must be a non-empty string and 'text' a string")
            docs.append(Document(doc_id, text))
    return docs


_DOC_RE = re.compile(r"<DOC>(.*?)</DOC>", re.S | re.I)
_DOCNO_RE = re.compile(r"<DOCNO>(.*?)</DOCNO>", re.S | re.I)
_TEXT_RE = re.compile(r"<TEXT>(.*?)</TEXT>", re.S | re.I)


def parse_trec_sgml(data: str, source: str = "<string>") -> list[Document]:
    docs = []
    pos = 0
    record = 0
    for m in _DOC_RE.finditer(data):
        record += 1
        if data[pos:m.start()].strip():
            raise CollectionError(f"{source}: record {record}: text outside <DOC> element")
        body = m.group(1)
        if re.search(r"<DOC>", body, re.I):
            raise CollectionError(f"{source}: record {record}: nested or unclosed <DOC>")
        docno = _DOCNO_RE.search(body)
        if docno is None or not docno.group(1).strip():
            raise CollectionError(f"{source}: record {record}: missing <DOCNO>")
        texts = _TEXT_RE.findall(body)
        if len(texts) != len(re.findall(r"<TEXT>", body, re.I)):
            raise CollectionError(f"{source}: record {record}: unclosed <TEXT>")
        docs.append(Document(docno.group(1).strip(), "\n".join(t.strip() for t in texts)))
        pos = m.end()
    if data[pos:].strip():
        raise CollectionError(f"{source}: record {record + 1}: unclosed <DOC> or trailing text")
    return docs


def load_collection(path: str | Path, format: str = "jsonl") -> Collection:
    """Load a collection from ``jsonl`` or ``trec_sgml``.

    Duplicate ids and malformed records raise :class:`CollectionError`.
    """
    path = Path(path)
    if format == "jsonl":
        docs = _read_jsonl(path)
    elif format == "trec_sgml":
        docs = parse_trec_sgml(path.read_text(encoding="utf-8"), str(path))
    else:
        raise CollectionError(f"unknown collection format {format!r}")
    return Collection(docs)


def guess_format(path: str | Path) -> str:
    suffix = Path(path).suffix.lower()
    return "trec_sgml" if suffix in (".sgml", ".sgm", ".trec", ".xml") else "jsonl"


def write_jsonl(collection: Iterable[Document], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for doc in collection:
            fh.write(json.dumps({"doc_id": doc.doc_id, "text": doc.text}, ensure_ascii=False) + "\n")
