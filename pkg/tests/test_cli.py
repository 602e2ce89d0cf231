import json
import subprocess
import sys
from collections import Counter

import pytest

from sdtr.cli import main
from sdtr.corpus import Document, extract_content_words, load_collection, tokenize, write_jsonl
from sdtr.experiment import load_config, write_config


def run_cli(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def as_json(out):
    return json.loads(out)


@pytest.fixture(scope="module")
def synth_dir(tmp_path_factory):
    d = tmp_path_factory.mktemp("syn")
    assert main(["gen-synthetic", "--out", str(d), "--seed", "4", "--docs", "120", "--topics", "6"]) == 0
    return d


def test_index_two_docs(tmp_path, capsys):
    docs = tmp_path / "docs.jsonl"
    docs.write_text('{"doc_id": "d1", "text": "apple banana"}\n{"doc_id": "d2", "text": "apple apple"}\n')
    code, out, _ = run_cli(capsys, "index", "--collection", docs, "--out", tmp_path / "idx.bin")
    assert code == 0 and (tmp_path / "idx.bin").exists()
    assert as_json(out) == {"doc_count": 2, "term_count": 2, "avg_doc_length": 2.0}


def test_index_missing_file(tmp_path, capsys):
    code, _, err = run_cli(capsys, "index", "--collection", tmp_path / "nope.jsonl", "--out", tmp_path / "i")
    assert code == 2 and "nope.jsonl" in err


def test_index_stats_match_counting_oracle(synth_dir, tmp_path, capsys):
    path = synth_dir / "sci.docs.jsonl"
    code, out, _ = run_cli(capsys, "index", "--collection", path, "--out", tmp_path / "i")
    stats = as_json(out)
    terms = [extract_content_words(tokenize(d.text)) for d in load_collection(path)]
    lengths = [len(t) for t in terms]
    types = Counter(t for doc in terms for t in doc)
    assert stats["doc_count"] == len(lengths) == 120
    assert stats["term_count"] == len(types)
    assert stats["avg_doc_length"] == pytest.approx(sum(lengths) / len(lengths), rel=1e-12)


def test_usage_errors(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["index"])
    assert exc.value.code == 1
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 1


def test_search_needs_queries(synth_dir, tmp_path, capsys):
    main(["index", "--collection", str(synth_dir / "sci.docs.jsonl"), "--out", str(tmp_path / "i")])
    code, _, err = run_cli(capsys, "search", "--index", tmp_path / "i", "--out", tmp_path / "r")
    assert code == 1 and "--queries" in err


def test_bad_data_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.jsonl"
    bad.write_text('{"doc_id": "d1", "text": "a"}\nnot json\n')
    code, _, err = run_cli(capsys, "index", "--collection", bad, "--out", tmp_path / "i")
    assert code == 2 and ":2:" in err


def test_lm_train_and_eval(synth_dir, tmp_path, capsys):
    code, out, _ = run_cli(capsys, "lm-train", "--collection", synth_dir / "sci.docs.jsonl",
                           "--v-max", "500", "--out", tmp_path / "sci.lm")
    assert code == 0 and as_json(out)["vocabulary"] == 500
    code, out, _ = run_cli(capsys, "lm-eval", "--model", tmp_path / "sci.lm",
                           "--topics", synth_dir / "sci.topics.sgml", "--dialect", "ntcir",
                           "--collection", synth_dir / "sci.docs.jsonl")
    res = as_json(out)
    assert code == 0 and res["perplexity"] > 1 and 0 < res["oov_rate"] < 1 and 0 < res["coverage"] < 1
    code, out, _ = run_cli(capsys, "lm-eval", "--model", tmp_path / "sci.lm",
                           "--test", synth_dir / "news.docs.jsonl")
    assert code == 0 and as_json(out)["oov_rate"] > res["oov_rate"]
    code, _, _ = run_cli(capsys, "lm-eval", "--model", tmp_path / "sci.lm")
    assert code == 1


def test_degrade_score_errors_deterministic(synth_dir, tmp_path, capsys):
    main(["lm-train", "--collection", str(synth_dir / "sci.docs.jsonl"), "--out", str(tmp_path / "m.lm")])
    capsys.readouterr()
    args = ["degrade", "--model", tmp_path / "m.lm", "--topics", synth_dir / "sci.topics.sgml",
            "--dialect", "ntcir", "--target-wer", "0.3", "--seeds", "1,2"]
    assert run_cli(capsys, *args, "--out", tmp_path / "a.tsv")[0] == 0
    assert run_cli(capsys, *args, "--out", tmp_path / "b.tsv")[0] == 0
    assert (tmp_path / "a.tsv").read_bytes() == (tmp_path / "b.tsv").read_bytes()
    code, out, _ = run_cli(capsys, "score-errors", "--topics", synth_dir / "sci.topics.sgml",
                           "--dialect", "ntcir", "--degraded", tmp_path / "a.tsv")
    res = as_json(out)
    assert code == 0 and set(res["per_seed"]) == {"1", "2"} and res["wer"] > 0
    code, _, _ = run_cli(capsys, "degrade", "--model", tmp_path / "m.lm", "--topics",
                         synth_dir / "sci.topics.sgml", "--dialect", "ntcir", "--mix", "0.5,0.5,0.5",
                         "--out", tmp_path / "c.tsv")
    assert code == 2


def test_evaluate_outputs(synth_dir, tmp_path, capsys):
    main(["index", "--collection", str(synth_dir / "news.docs.jsonl"), "--out", str(tmp_path / "i")])
    main(["search", "--index", str(tmp_path / "i"), "--topics", str(synth_dir / "news.topics.sgml"),
          "--dialect", "irex", "--out", str(tmp_path / "r.run")])
    capsys.readouterr()
    code, out, _ = run_cli(capsys, "evaluate", "--run", tmp_path / "r.run", "--qrels", synth_dir / "news.qrels",
                           "--out-json", tmp_path / "e.json", "--out-csv", tmp_path / "e.csv")
    res = as_json(out)
    assert code == 0 and res["topics"] == 6 and 0 < res["mean_ap"] <= 1
    assert json.loads((tmp_path / "e.json").read_text())["mean_ap"] == res["mean_ap"]
    assert (tmp_path / "e.csv").read_text().startswith("recall,precision\n")


def test_manual_chain_matches_experiment(synth_dir, tmp_path, capsys):
    cfg = load_config(synth_dir / "experiment.ini")
    cfg.out_dir = tmp_path / "exp"
    cfg.seeds = [3, 8]
    cfg.target_wers = [0.3]
    cfg.v_max = 800
    write_config(cfg, synth_dir / "chain.ini")
    code, out, _ = run_cli(capsys, "experiment", "--config", synth_dir / "chain.ini")
    assert code == 0 and "report:" in out
    report = json.loads((tmp_path / "exp" / "report.json").read_text())

    # target sci, channel LM from news: the cross-domain condition
    m = tmp_path / "news.lm"
    main(["lm-train", "--collection", str(synth_dir / "news.docs.jsonl"), "--v-max", "800", "--out", str(m)])
    main(["index", "--collection", str(synth_dir / "sci.docs.jsonl"), "--out", str(tmp_path / "sci.idx")])
    main(["degrade", "--model", str(m), "--topics", str(synth_dir / "sci.topics.sgml"), "--dialect", "ntcir",
          "--target-wer", "0.3", "--seeds", "3,8", "--out", str(tmp_path / "q.tsv")])
    capsys.readouterr()
    aps = []
    for seed in (3, 8):
        main(["search", "--index", str(tmp_path / "sci.idx"), "--queries", str(tmp_path / "q.tsv"),
              "--seed", str(seed), "--out", str(tmp_path / f"s{seed}.run")])
        capsys.readouterr()
        main(["evaluate", "--complete", "--run", str(tmp_path / f"s{seed}.run"),
              "--qrels", str(synth_dir / "sci.qrels")])
        aps.append(as_json(capsys.readouterr().out)["mean_ap"])
    cond = report["results"]["sci"]["lm"]["news"]["0.3"]
    assert aps == cond["ap_by_seed"]
    exp_tsv = tmp_path / "exp" / "degraded" / "sci__lm-news__wer-0.3__seed-3.tsv"
    manual = [l for l in (tmp_path / "q.tsv").read_text().splitlines() if l.split("\t")[1] == "3"]
    assert exp_tsv.read_text().splitlines() == manual


def test_zero_wer_conditions_identical(synth_dir, tmp_path, capsys):
    # both domain entries share one collection that also contains every query
    # word, so the zero-noise channel has nothing out of vocabulary to replace
    cfg = load_config(synth_dir / "experiment.ini")
    a = cfg.domains[0]
    docs = list(load_collection(a.collection))
    topics_text = (synth_dir / "sci.topics.sgml").read_text()
    write_jsonl(docs + [Document("all-query-words", topics_text)], tmp_path / "shared.jsonl")
    a = type(a)("sci", tmp_path / "shared.jsonl", a.topics, a.qrels, a.dialect, "jsonl")
    b = type(a)("twin", a.collection, a.topics, a.qrels, a.dialect, a.collection_format)
    cfg.domains = [a, b]
    cfg.target_wers = [0.0]
    cfg.seeds = [1, 2]
    cfg.out_dir = tmp_path / "exp0"
    write_config(cfg, synth_dir / "zero.ini")
    assert run_cli(capsys, "experiment", "--config", synth_dir / "zero.ini")[0] == 0
    res = json.loads((tmp_path / "exp0" / "report.json").read_text())["results"]
    for target in ("sci", "twin"):
        text = res[target]["text"]["ap"]
        assert res[target]["lm"]["sci"]["0"]["ap"] == text
        assert res[target]["lm"]["twin"]["0"]["ap"] == text


def test_experiment_bad_config(tmp_path, capsys):
    (tmp_path / "x.ini").write_text("[experiment]\nseeds =\n")
    code, _, err = run_cli(capsys, "experiment", "--config", tmp_path / "x.ini")
    assert code == 2 and err


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "sdtr.cli", "--version"], capture_output=True, text=True)
    assert proc.returncode == 0 and "sdtr" in proc.stdout
