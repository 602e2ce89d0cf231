"""Topic parsing, relevance judgements and TREC-style effectiveness measures."""

from __future__ import annotations

import csv
import json
import logging
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

log = logging.getLogger(__name__)

RECALL_LEVELS = tuple(i / 10 for i in range(11))
DIALECTS = ("ntcir", "irex")
QUERY_FIELD = {"ntcir": "description", "irex": "narrative"}


class TopicError(ValueError):
    pass


class EvaluationError(ValueError):
    pass


@dataclass(frozen=True)
class Topic:
    topic_id: str
    title: str = ""
    description: str = ""
    narrative: str = ""


_TOPIC_OPEN = re.compile(r"<TOPIC(\s[^>]*)?>", re.I)
_TOPIC_CLOSE = re.compile(r"</TOPIC>", re.I)
_Q_ATTR = re.compile(r"""\bq\s*=\s*(?:"([^"]*)"|'([^']*)'|([^\s>]+))""", re.I)
_FIELDS = {"title": "TITLE", "description": "DESCRIPTION", "narrative": "NARRATIVE"}


def _norm(text: str) -> str:
    return " ".join(text.split())


def _element(body: str, tag: str, offset: int) -> str | None:
    opened = re.search(rf"<{tag}>", body, re.I)
    if opened is None:
        return None
    closed = re.search(rf"</{tag}>", body[opened.end():], re.I)
    if closed is None:
        raise TopicError(f"unclosed <{tag}> in topic block at offset {offset}")
    return body[opened.end(): opened.end() + closed.start()]


def parse_topics_text(text: str, dialect: str) -> list[Topic]:
    """Parse ``<TOPIC>`` blocks.

    ``ntcir`` topics carry the id as an attribute (``<TOPIC q=0123>``),
    ``irex`` topics as a ``<TOPIC-ID>`` element.
    """
    if dialect not in DIALECTS:
        raise TopicError(f"unknown topic dialect {dialect!r}")
    topics: list[Topic] = []
    seen: set[str] = set()
    pos = 0
    while True:
        opened = _TOPIC_OPEN.search(text, pos)
        if opened is None:
            break
        closed = _TOPIC_CLOSE.search(text, opened.end())
        nxt = _TOPIC_OPEN.search(text, opened.end())
        if closed is None or (nxt is not None and nxt.start() < closed.start()):
            raise TopicError(f"unclosed <TOPIC> at offset {opened.start()}")
        body = text[opened.end():closed.start()]
        offset = opened.start()
        if dialect == "ntcir":
            m = _Q_ATTR.search(opened.group(1) or "")
            topic_id = next((g for g in m.groups() if g is not None), "") if m else ""
        else:
            topic_id = _element(body, "TOPIC-ID", offset) or ""
        topic_id = _norm(topic_id)
        if not topic_id:
            raise TopicError(f"missing topic id in topic block at offset {offset}")
        if topic_id in seen:
            raise TopicError(f"duplicate topic id {topic_id!r} at offset {offset}")
        seen.add(topic_id)
        fields = {name: _norm(_element(body, tag, offset) or "") for name, tag in _FIELDS.items()}
        topics.append(Topic(topic_id, **fields))
        pos = closed.end()
    return topics


def parse_topics(path: str | Path, dialect: str) -> list[Topic]:
    return parse_topics_text(Path(path).read_text(encoding="utf-8"), dialect)


def select_query_field(topic: Topic, dialect: str) -> str:
    """The field that is spoken as the query: descriptions for ``ntcir``, narratives for ``irex``."""
    if dialect not in QUERY_FIELD:
        raise TopicError(f"unknown topic dialect {dialect!r}")
    name = QUERY_FIELD[dialect]
    value = getattr(topic, name)
    if not value:
        raise TopicError(f"topic {topic.topic_id} has an empty {name}")
    return value


def format_topics(topics: Sequence[Topic], dialect: str) -> str:
    out = []
    for t in topics:
        if dialect == "ntcir":
            out.append(f"<TOPIC q={t.topic_id}>")
        else:
            out.append("<TOPIC>")
            out.append(f"<TOPIC-ID>{t.topic_id}</TOPIC-ID>")
        for name, tag in _FIELDS.items():
            value = getattr(t, name)
            if value:
                out.append(f"<{tag}>{value}</{tag}>")
        out.append("</TOPIC>")
    return "\n".join(out) + "\n"


# --------------------------------------------------------------------------
# Qrels
# --------------------------------------------------------------------------


class Qrels:
    """Binary relevance judgements built from graded trec qrels.

    A judgement counts as relevant when its grade is at least ``threshold``.
    """

    def __init__(self, grades: Mapping[str, Mapping[str, int]], threshold: int = 1):
        self.grades = {q: dict(d) for q, d in grades.items()}
        self.threshold = threshold
        self._relevant = {
            q: frozenset(doc for doc, g in d.items() if g >= threshold) for q, d in self.grades.items()
        }

    def topics(self) -> list[str]:
        return list(self.grades)

    def relevant(self, topic_id: str) -> frozenset[str]:
        return self._relevant.get(topic_id, frozenset())

    def __contains__(self, topic_id: str) -> bool:
        return topic_id in self.grades

    @classmethod
    def load(cls, path: str | Path, threshold: int = 1) -> "Qrels":
        grades: dict[str, dict[str, int]] = {}
        for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
            if not line.strip():
                continue
            parts = line.split()
            if len(parts) != 4:
                raise EvaluationError(f"{path}:{lineno}: expected 'topic 0 doc rel'")
            try:
                grade = int(parts[3])
            except ValueError:
                raise EvaluationError(f"{path}:{lineno}: relevance must be an integer") from None
            grades.setdefault(parts[0], {})[parts[2]] = grade
        return cls(grades, threshold)

    def dumps(self) -> str:
        return "".join(f"{q} 0 {d} {g}\n" for q, docs in self.grades.items() for d, g in docs.items())

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.dumps(), encoding="utf-8")


# --------------------------------------------------------------------------
# Measures
# --------------------------------------------------------------------------


def _relevant_or_raise(qrels: Qrels, topic_id: str) -> frozenset[str]:
    rel = qrels.relevant(topic_id)
    if not rel:
        raise EvaluationError(f"topic {topic_id} has no relevant documents")
    return rel


def average_precision(run: Sequence[str], qrels: Qrels, topic_id: str) -> float:
    """Non-interpolated AP; unretrieved relevant documents count as zero."""
    rel = _relevant_or_raise(qrels, topic_id)
    hits = 0
    total = 0.0
    for rank, doc in enumerate(run, start=1):
        if doc in rel:
            hits += 1
            total += hits / rank
    return total / len(rel)


def recall_precision_curve(run: Sequence[str], qrels: Qrels, topic_id: str) -> list[float]:
    """Interpolated precision at recall 0.0, 0.1, ..., 1.0."""
    rel = _relevant_or_raise(qrels, topic_id)
    points = []
    hits = 0
    for rank, doc in enumerate(run, start=1):
        if doc in rel:
            hits += 1
            points.append((hits / len(rel), hits / rank))
    curve = []
    for level in RECALL_LEVELS:
        eligible = [p for r, p in points if r >= level]
        curve.append(max(eligible) if eligible else 0.0)
    return curve


@dataclass
class EvalReport:
    per_topic_ap: dict[str, float]
    per_topic_curve: dict[str, list[float]] = field(repr=False)

    @property
    def mean_ap(self) -> float:
        return sum(self.per_topic_ap.values()) / len(self.per_topic_ap)

    @property
    def mean_curve(self) -> list[float]:
        n = len(self.per_topic_curve)
        return [sum(c[i] for c in self.per_topic_curve.values()) / n for i in range(len(RECALL_LEVELS))]

    def to_dict(self) -> dict:
        return {
            "mean_ap": self.mean_ap,
            "per_topic_ap": dict(sorted(self.per_topic_ap.items())),
            "recall_levels": list(RECALL_LEVELS),
            "mean_interpolated_precision": self.mean_curve,
        }


def evaluate_run(run: Mapping[str, Sequence], qrels: Qrels, complete: bool = False) -> EvalReport:
    """Evaluate every run topic that has relevant documents.

    ``run`` maps topic ids to ranked doc ids (or objects with ``doc_id``).
    With ``complete``, judged topics missing from the run (a run file cannot
    list a topic that retrieved nothing) are scored as empty rankings.
    """
    if complete:
        run = {**{t: [] for t in qrels.topics() if qrels.relevant(t)}, **run}
    if not run:
        raise EvaluationError("empty run")
    aps: dict[str, float] = {}
    curves: dict[str, list[float]] = {}
    for topic_id in sorted(run):
        docs = [d if isinstance(d, str) else d.doc_id for d in run[topic_id]]
        if topic_id not in qrels:
            log.warning("topic %s is not in the qrels; skipped", topic_id)
            continue
        if not qrels.relevant(topic_id):
            log.warning("topic %s has no relevant documents; skipped", topic_id)
            continue
        aps[topic_id] = average_precision(docs, qrels, topic_id)
        curves[topic_id] = recall_precision_curve(docs, qrels, topic_id)
    extra = set(qrels.topics()) - set(run)
    if extra:
        log.warning("%d qrels topics have no run entries; ignored", len(extra))
    if not aps:
        raise EvaluationError("no topic in the run could be evaluated")
    return EvalReport(aps, curves)


def average_reports(reports: Sequence[EvalReport]) -> EvalReport:
    """Average per-topic values across repeated runs (e.g. degradation seeds)."""
    if not reports:
        raise EvaluationError("no reports to average")
    topics = sorted(set().union(*(r.per_topic_ap for r in reports)))
    aps, curves = {}, {}
    for t in topics:
        have = [r for r in reports if t in r.per_topic_ap]
        aps[t] = sum(r.per_topic_ap[t] for r in have) / len(have)
        curves[t] = [sum(r.per_topic_curve[t][i] for r in have) / len(have) for i in range(len(RECALL_LEVELS))]
    return EvalReport(aps, curves)


def write_report_json(report: EvalReport, path: str | Path) -> None:
    Path(path).write_text(json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8")


def write_curve_csv(curve: Sequence[float], path: str | Path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["recall", "precision"])
        for level, p in zip(RECALL_LEVELS, curve):
            w.writerow([f"{level:.1f}", repr(float(p))])
