"""Cross-domain speech-driven retrieval experiment.

For every target domain the experiment runs written queries, then queries
passed through the noisy channel driven by each domain's language model,
averaging over the degradation seeds. Results are written as a
``report.json`` matrix plus recall-precision CSVs.
"""

from __future__ import annotations

import configparser
import json
import logging
from contextlib import contextmanager
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

from .asrsim import (DegradationConfig, ErrorRates, degrade_query, query_rng, term_error_rate, word_error_rate,
                     write_degraded)
from .corpus import Collection, Document, TokenizerConfig, extract_content_words, guess_format, load_collection, tokenize
from .evaluation import (EvalReport, Qrels, Topic, average_reports, evaluate_run, parse_topics,
                         select_query_field, write_curve_csv)
from .index import DEFAULT_K, InvertedIndex, OkapiParams, build_index, search, write_run
from .lm import DEFAULT_V_MAX, NGramModel, build_vocabulary, perplexity, train_ngram

log = logging.getLogger(__name__)

DEFAULT_SEEDS = (1, 2, 3, 4)


class ExperimentError(RuntimeError):
    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"stage '{stage}' failed: {cause}")
        self.stage = stage
        self.cause = cause


@dataclass
class DomainSpec:
    name: str
    collection: Path
    topics: Path
    qrels: Path
    dialect: str
    collection_format: str = ""

    def __post_init__(self):
        self.collection, self.topics, self.qrels = Path(self.collection), Path(self.topics), Path(self.qrels)
        if not self.collection_format:
            self.collection_format = guess_format(self.collection)


@dataclass
class ExperimentConfig:
    domains: list[DomainSpec]
    out_dir: Path = Path("experiment-out")
    v_max: int = DEFAULT_V_MAX
    order: int = 3
    k1: float = 1.2
    b: float = 0.75
    k: int = DEFAULT_K
    target_wers: list[float] = field(default_factory=lambda: [0.2])
    seeds: list[int] = field(default_factory=lambda: list(DEFAULT_SEEDS))
    mix: tuple[float, float, float] = (0.7, 0.15, 0.15)
    rel_threshold: int = 1

    def validate(self) -> None:
        if len(self.domains) < 2:
            raise ValueError("at least two domains are required")
        names = [d.name for d in self.domains]
        if len(set(names)) != len(names):
            raise ValueError(f"domain names must be unique: {names}")
        for d in self.domains:
            for p in (d.collection, d.topics, d.qrels):
                if not p.exists():
                    raise FileNotFoundError(f"{p}: no such file (domain {d.name})")
        if not self.seeds:
            raise ValueError("seed list must not be empty")
        if not self.target_wers:
            raise ValueError("target_wer grid must not be empty")
        OkapiParams(self.k1, self.b)

    def summary(self) -> dict:
        return {
            "domains": [d.name for d in self.domains],
            "v_max": self.v_max, "order": self.order,
            "okapi": {"k1": self.k1, "b": self.b}, "k": self.k,
            "target_wers": list(self.target_wers), "seeds": list(self.seeds),
            "mix": {"sub": self.mix[0], "del": self.mix[1], "ins": self.mix[2]},
            "rel_threshold": self.rel_threshold,
        }


def _floats(value: str) -> list[float]:
    return [float(x) for x in value.replace(",", " ").split()]


def _ints(value: str) -> list[int]:
    return [int(x) for x in value.replace(",", " ").split()]


def load_config(path: str | Path) -> ExperimentConfig:
    """Read an INI-style experiment file.

    ``[experiment]`` holds scalar settings; each ``[domain NAME]`` section
    names ``collection``, ``topics``, ``qrels`` and ``dialect``. Relative
    paths resolve against the config file's directory.
    """
    path = Path(path)
    parser = configparser.ConfigParser()
    if not parser.read(path, encoding="utf-8"):
        raise FileNotFoundError(f"{path}: cannot read config")
    base = path.parent
    domains = []
    for section in parser.sections():
        if not section.startswith("domain "):
            continue
        s = parser[section]
        domains.append(DomainSpec(
            name=section.split(None, 1)[1].strip(),
            collection=base / s["collection"], topics=base / s["topics"], qrels=base / s["qrels"],
            dialect=s["dialect"], collection_format=s.get("format", ""),
        ))
    cfg = ExperimentConfig(domains)
    if parser.has_section("experiment"):
        e = parser["experiment"]
        if "out" in e:
            cfg.out_dir = base / e["out"]
        cfg.v_max = e.getint("v_max", cfg.v_max)
        cfg.order = e.getint("order", cfg.order)
        cfg.k1 = e.getfloat("k1", cfg.k1)
        cfg.b = e.getfloat("b", cfg.b)
        cfg.k = e.getint("k", cfg.k)
        cfg.rel_threshold = e.getint("rel_threshold", cfg.rel_threshold)
        if "target_wer" in e:
            cfg.target_wers = _floats(e["target_wer"])
        if "seeds" in e:
            cfg.seeds = _ints(e["seeds"])
        if "mix" in e:
            mix = _floats(e["mix"])
            if len(mix) != 3:
                raise ValueError("mix needs three values: sub, del, ins")
            cfg.mix = tuple(mix)
    return cfg


def write_config(cfg: ExperimentConfig, path: str | Path) -> None:
    path = Path(path)
    parser = configparser.ConfigParser()
    parser["experiment"] = {
        "out": str(cfg.out_dir), "v_max": str(cfg.v_max), "order": str(cfg.order),
        "k1": repr(cfg.k1), "b": repr(cfg.b), "k": str(cfg.k),
        "target_wer": ", ".join(repr(w) for w in cfg.target_wers),
        "seeds": ", ".join(str(s) for s in cfg.seeds),
        "mix": ", ".join(repr(m) for m in cfg.mix),
        "rel_threshold": str(cfg.rel_threshold),
    }
    for d in cfg.domains:
        parser[f"domain {d.name}"] = {
            "collection": str(d.collection), "topics": str(d.topics), "qrels": str(d.qrels),
            "dialect": d.dialect, "format": d.collection_format,
        }
    with path.open("w", encoding="utf-8") as fh:
        parser.write(fh)


# --------------------------------------------------------------------------
# Pipeline pieces, shared with the CLI so both paths compute the same thing
# --------------------------------------------------------------------------


def query_texts(topics: Sequence[Topic], dialect: str) -> list[tuple[str, str]]:
    return [(t.topic_id, select_query_field(t, dialect)) for t in topics]


def degrade_queries(queries: Sequence[tuple[str, str]], model: NGramModel, target_wer: float, seed: int,
                    mix=(0.7, 0.15, 0.15), config: TokenizerConfig | None = None) -> list[tuple[str, list[str]]]:
    """Degrade each query with a generator derived from ``(seed, position)``."""
    config = config or TokenizerConfig()
    dc = DegradationConfig(model, target_wer, seed, *mix)
    return [(qid, degrade_query(tokenize(text, config), dc, query_rng(seed, i)))
            for i, (qid, text) in enumerate(queries)]


def run_queries(index: InvertedIndex, queries: Sequence[tuple[str, Sequence[str]]], k: int,
                params: OkapiParams, config: TokenizerConfig | None = None) -> dict:
    """Search token-sequence queries; stopwords are stripped here."""
    config = config or TokenizerConfig()
    return {qid: search(index, extract_content_words(tokens, config), k, params) for qid, tokens in queries}


def error_totals(refs: Sequence[Sequence[str]], hyps: Sequence[Sequence[str]],
                 config: TokenizerConfig | None = None) -> tuple[ErrorRates, ErrorRates]:
    """Pooled word and term error counts over a query set."""
    config = config or TokenizerConfig()
    wer = ErrorRates(0, 0, 0, 0)
    ter = ErrorRates(0, 0, 0, 0)
    for ref, hyp in zip(refs, hyps):
        if ref:
            wer = wer + word_error_rate(ref, hyp)
        if extract_content_words(ref, config):
            ter = ter + term_error_rate(ref, hyp, config)
    return wer, ter


@contextmanager
def _stage(name: str):
    log.info("stage: %s", name)
    try:
        yield
    except ExperimentError:
        raise
    except Exception as exc:
        raise ExperimentError(name, exc) from exc


def _wer_key(w: float) -> str:
    return f"{w:g}"


def run_experiment(cfg: ExperimentConfig, config: TokenizerConfig | None = None) -> dict:
    """Run every (target domain, LM, target WER) condition and write the report."""
    config = config or TokenizerConfig()
    with _stage("validate config"):
        cfg.validate()
    out = Path(cfg.out_dir)
    for sub in ("", "models", "runs", "degraded", "curves"):
        (out / sub).mkdir(parents=True, exist_ok=True)
    params = OkapiParams(cfg.k1, cfg.b)

    collections: dict[str, Collection] = {}
    indexes: dict[str, InvertedIndex] = {}
    models: dict[str, NGramModel] = {}
    queries: dict[str, list[tuple[str, str]]] = {}
    qrels: dict[str, Qrels] = {}
    domain_info: dict[str, dict] = {}
    for d in cfg.domains:
        with _stage(f"load domain {d.name}"):
            collections[d.name] = load_collection(d.collection, d.collection_format)
            queries[d.name] = query_texts(parse_topics(d.topics, d.dialect), d.dialect)
            qrels[d.name] = Qrels.load(d.qrels, cfg.rel_threshold)
        with _stage(f"index {d.name}"):
            indexes[d.name] = build_index(collections[d.name], config)
            indexes[d.name].save(out / "models" / f"{d.name}.index")
        with _stage(f"train LM {d.name}"):
            vocab, stats = build_vocabulary(collections[d.name], config, cfg.v_max)
            models[d.name] = train_ngram(collections[d.name], vocab, cfg.order, config)
            models[d.name].save(out / "models" / f"{d.name}.lm")
        domain_info[d.name] = {"index": indexes[d.name].stats(), "lm": asdict(stats)}

    results: dict[str, dict] = {}
    for target in (d.name for d in cfg.domains):
        index, qs, rels = indexes[target], queries[target], qrels[target]
        refs = [tokenize(text, config) for _, text in qs]
        with _stage(f"{target}: written queries"):
            run = run_queries(index, [(qid, tok) for (qid, _), tok in zip(qs, refs)], cfg.k, params, config)
            write_run(run, out / "runs" / f"{target}__text.run", tag="text")
            text_report = evaluate_run(run, rels)
            write_curve_csv(text_report.mean_curve, out / "curves" / f"{target}__text.csv")
        results[target] = {"text": {"ap": text_report.mean_ap}, "lm": {}}
        test_set = Collection(Document(qid, text) for qid, text in qs)

        for lm_name, model in models.items():
            with _stage(f"{target}: perplexity under {lm_name} LM"):
                pp, oov = perplexity(model, test_set, config)
            per_wer = {}
            for w in cfg.target_wers:
                label = f"{target}__lm-{lm_name}__wer-{_wer_key(w)}"
                with _stage(label):
                    reports: list[EvalReport] = []
                    wer_tot = ErrorRates(0, 0, 0, 0)
                    ter_tot = ErrorRates(0, 0, 0, 0)
                    ap_by_seed = []
                    for seed in cfg.seeds:
                        degraded = degrade_queries(qs, model, w, seed, cfg.mix, config)
                        write_degraded(((qid, seed, tok) for qid, tok in degraded),
                                       out / "degraded" / f"{label}__seed-{seed}.tsv")
                        run = run_queries(index, degraded, cfg.k, params, config)
                        write_run(run, out / "runs" / f"{label}__seed-{seed}.run", tag=f"lm-{lm_name}")
                        report = evaluate_run(run, rels)
                        reports.append(report)
                        ap_by_seed.append(report.mean_ap)
                        wt, tt = error_totals(refs, [tok for _, tok in degraded], config)
                        wer_tot, ter_tot = wer_tot + wt, ter_tot + tt
                    merged = average_reports(reports)
                    write_curve_csv(merged.mean_curve, out / "curves" / f"{label}.csv")
                per_wer[_wer_key(w)] = {
                    "ap": sum(ap_by_seed) / len(ap_by_seed),
                    "ap_by_seed": ap_by_seed,
                    "wer": wer_tot.rate if wer_tot.ref_length else None,
                    "ter": ter_tot.rate if ter_tot.ref_length else None,
                    "pp": pp,
                    "oov": oov,
                }
            results[target]["lm"][lm_name] = per_wer

    report = {"config": cfg.summary(), "domains": domain_info, "results": results}
    (out / "report.json").write_text(json.dumps(report, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return report


def format_table(report: dict) -> str:
    """Plain-text matrix shaped like a results table: one block per target domain."""
    lines = []
    for target, res in report["results"].items():
        lines.append(f"target={target}  text AP={res['text']['ap']:.3f}")
        lines.append(f"  {'LM':<10}{'WER-target':>11}{'AP':>8}{'WER':>8}{'TER':>8}{'PP':>9}{'OOV':>8}")
        for lm_name, per_wer in res["lm"].items():
            for wkey, row in per_wer.items():
                lines.append(
                    f"  {lm_name:<10}{wkey:>11}{row['ap']:>8.3f}{_pct(row['wer']):>8}{_pct(row['ter']):>8}"
                    f"{row['pp']:>9.1f}{_pct(row['oov']):>8}")
    return "\n".join(lines)


def _pct(x):
    return "-" if x is None else f"{100 * x:.1f}%"
