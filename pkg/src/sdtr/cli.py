"""Command-line entry point.

Exit codes: 0 success, 1 usage error, 2 data or validation error,
3 internal error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .asrsim import ErrorRates, read_degraded, write_degraded
from .corpus import Collection, Document, TokenizerConfig, guess_format, load_collection, load_stoplist, tokenize
from .evaluation import Qrels, evaluate_run, parse_topics, write_curve_csv, write_report_json
from .experiment import (ExperimentConfig, ExperimentError, DomainSpec, degrade_queries, error_totals,
                         format_table, load_config, query_texts, run_experiment, run_queries, write_config)
from .index import InvertedIndex, OkapiParams, build_index, read_run, write_run
from .lm import NGramModel, build_vocabulary, coverage, perplexity, train_ngram
from .synth import generate_two_domains

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_INTERNAL = 0, 1, 2, 3

log = logging.getLogger("sdtr")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _tokenizer(args) -> TokenizerConfig:
    kwargs = {"lowercase": not args.no_lowercase}
    if args.stoplist:
        kwargs["stopwords"] = load_stoplist(args.stoplist)
    return TokenizerConfig(**kwargs)


def _require(*paths):
    for p in paths:
        if p is not None and not Path(p).exists():
            raise FileNotFoundError(f"{p}: no such file")


def _seeds(value: str) -> list[int]:
    return [int(x) for x in value.replace(",", " ").split()]


def _floats(value: str) -> list[float]:
    return [float(x) for x in value.replace(",", " ").split()]


def _emit(obj) -> None:
    print(json.dumps(obj, indent=2, sort_keys=True))


def _load_queries(args, config):
    """(qid, tokens) pairs from either a topic file or a degraded-query TSV."""
    if args.queries:
        _require(args.queries)
        rows = read_degraded(args.queries)
        if args.seed is not None:
            rows = [r for r in rows if r[1] == args.seed]
        qids = [r[0] for r in rows]
        if len(set(qids)) != len(qids):
            raise UsageError("queries file holds several seeds per query; pick one with --seed")
        return [(qid, tokenize(text, config)) for qid, _, text in rows]
    if not args.topics or not args.dialect:
        raise UsageError("give --queries, or --topics with --dialect")
    _require(args.topics)
    return [(qid, tokenize(text, config)) for qid, text in query_texts(parse_topics(args.topics, args.dialect), args.dialect)]


# --------------------------------------------------------------------------
# Commands
# --------------------------------------------------------------------------


def cmd_index(args) -> int:
    _require(args.collection)
    config = _tokenizer(args)
    coll = load_collection(args.collection, args.format or guess_format(args.collection))
    index = build_index(coll, config)
    index.save(args.out)
    _emit(index.stats())
    return EXIT_OK


def cmd_search(args) -> int:
    _require(args.index)
    config = _tokenizer(args)
    index = InvertedIndex.load(args.index)
    run = run_queries(index, _load_queries(args, config), args.k, OkapiParams(args.k1, args.b), config)
    write_run(run, args.out, tag=args.tag)
    _emit({"topics": len(run), "retrieved": sum(len(v) for v in run.values()),
           "okapi": {"k1": args.k1, "b": args.b}, "k": args.k})
    return EXIT_OK


def cmd_lm_train(args) -> int:
    _require(args.collection)
    config = _tokenizer(args)
    coll = load_collection(args.collection, args.format or guess_format(args.collection))
    vocab, stats = build_vocabulary(coll, config, args.v_max)
    model = train_ngram(coll, vocab, args.order, config)
    model.save(args.out)
    _emit({"order": args.order, "v_max": args.v_max, "vocabulary": len(vocab),
           "type_count": stats.type_count, "token_count": stats.token_count, "coverage": stats.coverage})
    return EXIT_OK


def cmd_lm_eval(args) -> int:
    _require(args.model, args.test, args.topics, args.collection)
    config = _tokenizer(args)
    model = NGramModel.load(args.model)
    out = {}
    if args.test:
        test = load_collection(args.test, args.format or guess_format(args.test))
    elif args.topics:
        if not args.dialect:
            raise UsageError("--topics needs --dialect")
        qs = query_texts(parse_topics(args.topics, args.dialect), args.dialect)
        test = Collection(Document(qid, text) for qid, text in qs)
    else:
        test = None
    if test is not None:
        out["perplexity"], out["oov_rate"] = perplexity(model, test, config)
    if args.collection:
        coll = load_collection(args.collection, args.format or guess_format(args.collection))
        out["coverage"] = coverage(model.vocab, coll, config)
    if not out:
        raise UsageError("nothing to evaluate: give --test, --topics or --collection")
    _emit(out)
    return EXIT_OK


def cmd_degrade(args) -> int:
    _require(args.model, args.topics)
    config = _tokenizer(args)
    model = NGramModel.load(args.model)
    qs = query_texts(parse_topics(args.topics, args.dialect), args.dialect)
    rows = []
    for seed in args.seeds:
        for qid, tokens in degrade_queries(qs, model, args.target_wer, seed, tuple(args.mix), config):
            rows.append((qid, seed, tokens))
    write_degraded(rows, args.out)
    _emit({"queries": len(qs), "seeds": args.seeds, "target_wer": args.target_wer})
    return EXIT_OK


def cmd_score_errors(args) -> int:
    _require(args.topics, args.degraded)
    config = _tokenizer(args)
    refs = {qid: tokenize(text, config)
            for qid, text in query_texts(parse_topics(args.topics, args.dialect), args.dialect)}
    by_seed: dict[int, list] = {}
    for qid, seed, text in read_degraded(args.degraded):
        if qid not in refs:
            raise ValueError(f"degraded query {qid} is not among the topics")
        by_seed.setdefault(seed, []).append((refs[qid], tokenize(text, config)))
    wer_all = ter_all = ErrorRates(0, 0, 0, 0)
    per_seed = {}
    for seed, pairs in sorted(by_seed.items()):
        w, t = error_totals([r for r, _ in pairs], [h for _, h in pairs], config)
        per_seed[str(seed)] = {"wer": w.rate if w.ref_length else None, "ter": t.rate if t.ref_length else None}
        wer_all, ter_all = wer_all + w, ter_all + t
    _emit({"wer": wer_all.rate if wer_all.ref_length else None,
           "ter": ter_all.rate if ter_all.ref_length else None, "per_seed": per_seed})
    return EXIT_OK


def cmd_evaluate(args) -> int:
    _require(args.run, args.qrels)
    report = evaluate_run(read_run(args.run), Qrels.load(args.qrels, args.rel_threshold), args.complete)
    if args.out_json:
        write_report_json(report, args.out_json)
    if args.out_csv:
        write_curve_csv(report.mean_curve, args.out_csv)
    _emit({"mean_ap": report.mean_ap, "topics": len(report.per_topic_ap),
           "mean_interpolated_precision": report.mean_curve})
    return EXIT_OK


def cmd_gen_synthetic(args) -> int:
    out = Path(args.out)
    domains = generate_two_domains(args.seed, n_docs=args.docs, n_topics=args.topics)
    specs = []
    for d in domains:
        paths = d.write(out)
        specs.append(DomainSpec(d.name, paths["collection"].name, paths["topics"].name,
                                paths["qrels"].name, d.dialect, "jsonl"))
    write_config(ExperimentConfig(specs, out_dir=Path("experiment")), out / "experiment.ini")
    _emit({"directory": str(out), "config": str(out / "experiment.ini"),
           "domains": {d.name: len(d.collection) for d in domains}})
    return EXIT_OK


def cmd_experiment(args) -> int:
    _require(args.config)
    cfg = load_config(args.config)
    if args.out:
        cfg.out_dir = Path(args.out)
    if args.v_max is not None:
        cfg.v_max = args.v_max
    if args.order is not None:
        cfg.order = args.order
    if args.k1 is not None:
        cfg.k1 = args.k1
    if args.b is not None:
        cfg.b = args.b
    if args.seeds is not None:
        cfg.seeds = args.seeds
    if args.target_wer is not None:
        cfg.target_wers = args.target_wer
    report = run_experiment(cfg, _tokenizer(args))
    print(format_table(report))
    print(f"report: {Path(cfg.out_dir) / 'report.json'}")
    return EXIT_OK


# --------------------------------------------------------------------------
# Parser
# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--stoplist", help="stopword file (one token per line, '#' comments)")
    common.add_argument("--no-lowercase", action="store_true", help="keep original case")

    p = _Parser(prog="sdtr", description="Speech-driven text retrieval workbench.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("index", parents=[common], help="build an inverted index")
    s.add_argument("--collection", required=True)
    s.add_argument("--format", choices=["jsonl", "trec_sgml"])
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_index)

    s = sub.add_parser("search", parents=[common], help="rank documents for topics or degraded queries")
    s.add_argument("--index", required=True)
    s.add_argument("--topics")
    s.add_argument("--dialect", choices=["ntcir", "irex"])
    s.add_argument("--queries", help="degraded-query TSV (query_id, seed, text)")
    s.add_argument("--seed", type=int, help="select one seed from --queries")
    s.add_argument("--k", type=int, default=1000)
    s.add_argument("--k1", type=float, default=1.2)
    s.add_argument("--b", type=float, default=0.75)
    s.add_argument("--tag", default="sdtr")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_search)

    s = sub.add_parser("lm-train", parents=[common], help="train an n-gram language model")
    s.add_argument("--collection", required=True)
    s.add_argument("--format", choices=["jsonl", "trec_sgml"])
    s.add_argument("--v-max", type=int, default=20000)
    s.add_argument("--order", type=int, default=3, choices=[1, 2, 3])
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_lm_train)

    s = sub.add_parser("lm-eval", parents=[common], help="perplexity, OOV rate and coverage")
    s.add_argument("--model", required=True)
    s.add_argument("--test", help="test collection for perplexity/OOV")
    s.add_argument("--topics", help="use topic queries as the test set")
    s.add_argument("--dialect", choices=["ntcir", "irex"])
    s.add_argument("--collection", help="collection for vocabulary coverage")
    s.add_argument("--format", choices=["jsonl", "trec_sgml"])
    s.set_defaults(func=cmd_lm_eval)

    s = sub.add_parser("degrade", parents=[common], help="simulate recognition errors on topic queries")
    s.add_argument("--model", required=True)
    s.add_argument("--topics", required=True)
    s.add_argument("--dialect", required=True, choices=["ntcir", "irex"])
    s.add_argument("--target-wer", type=float, default=0.2)
    s.add_argument("--seeds", "--seed", type=_seeds, default=[1], help="comma-separated seeds")
    s.add_argument("--mix", type=_floats, default=[0.7, 0.15, 0.15], help="sub,del,ins probabilities")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_degrade)

    s = sub.add_parser("score-errors", parents=[common], help="WER and TER of degraded queries")
    s.add_argument("--topics", required=True)
    s.add_argument("--dialect", required=True, choices=["ntcir", "irex"])
    s.add_argument("--degraded", required=True)
    s.set_defaults(func=cmd_score_errors)

    s = sub.add_parser("evaluate", help="average precision and recall-precision curve")
    s.add_argument("--run", required=True)
    s.add_argument("--qrels", required=True)
    s.add_argument("--rel-threshold", type=int, default=1)
    s.add_argument("-c", "--complete", action="store_true",
                   help="score judged topics absent from the run as AP 0")
    s.add_argument("--out-json")
    s.add_argument("--out-csv")
    s.set_defaults(func=cmd_evaluate)

    s = sub.add_parser("gen-synthetic", help="write a synthetic two-domain test collection")
    s.add_argument("--out", required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--docs", type=int, default=500)
    s.add_argument("--topics", type=int, default=20)
    s.set_defaults(func=cmd_gen_synthetic)

    s = sub.add_parser("experiment", parents=[common], help="run the cross-domain experiment")
    s.add_argument("--config", required=True)
    s.add_argument("--out")
    s.add_argument("--v-max", type=int)
    s.add_argument("--order", type=int, choices=[1, 2, 3])
    s.add_argument("--k1", type=float)
    s.add_argument("--b", type=float)
    s.add_argument("--seeds", type=_seeds)
    s.add_argument("--target-wer", type=_floats)
    s.set_defaults(func=cmd_experiment)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"sdtr: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ExperimentError as exc:
        print(f"sdtr: {exc}", file=sys.stderr)
        return EXIT_DATA if isinstance(exc.cause, (OSError, ValueError, KeyError)) else EXIT_INTERNAL
    except (OSError, ValueError, KeyError) as exc:
        print(f"sdtr: error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception as exc:  # pragma: no cover - last-resort guard
        log.exception("internal error")
        print(f"sdtr: internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
