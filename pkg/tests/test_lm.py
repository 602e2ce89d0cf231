import math
from fractions import Fraction

import numpy as np
import pytest

from sdtr.corpus import Collection, Document
from sdtr.lm import (BOS, EOS, UNK, NGramModel, Vocabulary, build_vocabulary, coverage, perplexity,
                     sequence_logprob, train_ngram)
from sdtr.synth import generate_two_domains
from conftest import make_collection


def test_vocabulary_selection_and_coverage():
    coll = make_collection(["a a a b b c"])
    vocab, stats = build_vocabulary(coll, v_max=2)
    assert vocab.words == ["a", "b"]
    assert stats.type_count == 3 and stats.token_count == 6
    assert stats.coverage == pytest.approx(5 / 6)


def test_vocabulary_ties_lexicographic():
    vocab, _ = build_vocabulary(make_collection(["zeta beta alpha beta zeta"]), v_max=2)
    assert vocab.words == ["beta", "zeta"]


def test_full_vocabulary_covers_everything():
    coll = make_collection(["one two three", "two three four"])
    vocab, stats = build_vocabulary(coll, v_max=100)
    assert stats.coverage == 1.0
    assert coverage(vocab, coll) == 1.0


def test_reserved_symbols_outside_v_max():
    vocab, _ = build_vocabulary(make_collection(["a b c"]), v_max=2)
    assert len(vocab) == 2
    assert vocab.size == 4  # two words plus <unk> and </s>
    assert {vocab.symbol(vocab.unk_id), vocab.symbol(vocab.eos_id), vocab.symbol(vocab.bos_id)} == {UNK, EOS, BOS}


def test_coverage_ratio():
    vocab = Vocabulary(list("abcdefghi"))
    coll = make_collection(["a b c d e f g h i zz"])
    assert coverage(vocab, coll) == pytest.approx(0.9)
    with pytest.raises(ValueError):
        coverage(vocab, make_collection([]))


def _zipf_collection(seed, n_tokens=120_000, n_types=60_000):
    rng = np.random.default_rng(seed)
    ranks = rng.zipf(1.3, size=n_tokens)
    ranks = ranks[ranks <= n_types]
    text = " ".join(f"w{r}" for r in ranks)
    return Collection([Document("z", text)])


def test_coverage_monotone_in_v_max():
    coll = _zipf_collection(0)
    covs = [build_vocabulary(coll, v_max=v)[1].coverage for v in (100, 1000, 5000, 20000)]
    assert covs == sorted(covs)
    assert covs[2] < covs[3]


# -- Witten-Bell on the toy corpus "a a a" ----------------------------------
#
# targets: a, a, a, </s>;  closed set {a, <unk>, </s>}, p0 = 1/3
# unigram:  c=4, T=2   -> p(a)=11/18, p(</s>)=5/18, p(<unk>)=1/9
# bigram:   ctx <s>: {a:1}            c=1, T=1
#           ctx a:   {a:2, </s>:1}    c=3, T=2
# trigram:  ctx (<s>,a): {a:1}        c=1, T=1
#           ctx (a,a):   {a:1, </s>:1} c=2, T=2

P1 = {"a": Fraction(11, 18), EOS: Fraction(5, 18), UNK: Fraction(1, 9)}
P2_A = {"a": (2 + 2 * P1["a"]) / 5, EOS: (1 + 2 * P1[EOS]) / 5, UNK: (0 + 2 * P1[UNK]) / 5}


@pytest.fixture
def toy():
    coll = make_collection(["a a a"])
    vocab, _ = build_vocabulary(coll)
    return coll, vocab


def test_toy_unigram_values(toy):
    coll, vocab = toy
    m = train_ngram(coll, vocab, 1)
    for w, p in P1.items():
        assert m.prob_of(w) == pytest.approx(float(p), abs=1e-15)
    assert m.prob_of(BOS) == 0.0


def test_toy_bigram_values(toy):
    coll, vocab = toy
    m = train_ngram(coll, vocab, 2)
    assert P2_A["a"] == Fraction(29, 45)
    assert m.prob_of("a", ["a"]) > 0.5
    for w, p in P2_A.items():
        assert m.prob_of(w, ["a"]) == pytest.approx(float(p), abs=1e-15)
    total = sum(m.prob_of(w, ["a"]) for w in ["a", UNK, EOS, BOS])
    assert total == pytest.approx(1.0, abs=1e-12)


def test_toy_sentence_logprob(toy):
    coll, vocab = toy
    m = train_ngram(coll, vocab, 3)
    p_a_bos = (1 + P1["a"]) / 2                   # bigram level, context <s>
    p_a_bos_a = (1 + P2_A["a"]) / 2               # trigram ctx (<s>, a)
    p_eos_aa = (1 + 2 * P2_A[EOS]) / 4            # trigram ctx (a, a)
    assert (p_a_bos, p_a_bos_a, p_eos_aa) == (Fraction(29, 36), Fraction(37, 45), Fraction(73, 180))
    expected = math.log2(p_a_bos) + math.log2(p_a_bos_a) + math.log2(p_eos_aa)
    lp, oov, n = sequence_logprob(m, ["a", "a"])
    assert lp == pytest.approx(expected, abs=1e-12)
    assert (oov, n) == (0, 3)


def test_logprob_boundaries(toy):
    coll, vocab = toy
    m = train_ngram(coll, vocab, 3)
    lp, oov, n = sequence_logprob(m, [])
    assert n == 1 and oov == 0
    assert lp == pytest.approx(math.log2(m.prob_of(EOS, [BOS])))
    _, oov, n = sequence_logprob(m, ["x", "y", "z", "q"])
    assert (oov, n) == (4, 5)


def test_uniform_corpus_unigram_equal():
    coll = make_collection(["k l m n o p"])
    vocab, _ = build_vocabulary(coll)
    m = train_ngram(coll, vocab, 1)
    probs = {m.prob_of(w) for w in vocab.words}
    assert len(probs) == 1


def test_uniform_unigram_perplexity_is_vocab_size():
    # every predictable symbol (5 words, <unk> via "zz", </s>) occurs exactly once
    coll = make_collection(["a b c d e zz"])
    vocab, _ = build_vocabulary(coll, v_max=5)
    m = train_ngram(coll, vocab, 1)
    assert vocab.size == 7
    pp, oov = perplexity(m, make_collection(["e d c b a", "c a. b"]))
    assert pp == pytest.approx(7.0, abs=1e-9)
    assert oov == 0.0


@pytest.mark.parametrize("order", [1, 2, 3])
def test_normalization_random_contexts(small_lm, order):
    coll_model = small_lm
    m = NGramModel(coll_model.vocab, order, coll_model.counts[:order])
    rng = np.random.default_rng(order)
    v = m.vocab
    seen = [c for k in range(order) for c in m.contexts(k)]
    for _ in range(100):
        if rng.random() < 0.7 and seen:
            ctx = list(seen[rng.integers(len(seen))])
        else:
            ctx = list(rng.integers(0, v.size + 1, size=order - 1))
        vec = m.distribution(ctx)
        assert vec.sum() == pytest.approx(1.0, abs=1e-6)
        assert np.all(vec > 0)
        # exhaustive scalar summation, independent of the vector path
        total = sum(m.prob(w, ctx) for w in range(v.size + 1))
        assert total == pytest.approx(1.0, abs=1e-6)


def test_backoff_consistency(small_domains):
    coll = small_domains[0].collection
    vocab, _ = build_vocabulary(coll)
    tri = train_ngram(coll, vocab, 3)
    bi = train_ngram(coll, vocab, 2)
    rng = np.random.default_rng(0)
    checked = 0
    while checked < 50:
        ctx = tuple(int(x) for x in rng.integers(0, len(vocab), 2))
        if ctx in tri.counts[2]:
            continue
        checked += 1
        np.testing.assert_array_equal(tri.distribution(ctx), bi.distribution(ctx[1:]))
        w = int(rng.integers(0, vocab.size))
        assert tri.prob(w, ctx) == bi.prob(w, ctx[1:])


def test_order_validation(toy):
    coll, vocab = toy
    for bad in (0, 4):
        with pytest.raises(ValueError):
            train_ngram(coll, vocab, bad)


def test_in_domain_perplexity_lower():
    train = make_collection(["the cat sat on the mat."])
    vocab, _ = build_vocabulary(train)
    m = train_ngram(train, vocab, 3)
    same, _ = perplexity(m, make_collection(["the cat sat on the mat."]))
    other, _ = perplexity(m, make_collection(["stocks fell in early trading"]))
    assert same < other


def test_perplexity_dominance_over_domain_pairs():
    for seed in range(10):
        a, b = generate_two_domains(seed=100 + seed, n_docs=60, n_topics=4)
        docs = list(a.collection)
        train = Collection(docs[:50])
        held = Collection(docs[50:])
        n_held = sum(held.token_counts())
        # equal-length text from the other domain
        b_tokens = " ".join(d.text for d in b.collection).split()[:n_held]
        other = Collection([Document("b", " ".join(b_tokens))])
        vocab, _ = build_vocabulary(train)
        m = train_ngram(train, vocab, 3)
        assert perplexity(m, held)[0] < perplexity(m, other)[0]


def test_perplexity_errors(toy):
    coll, vocab = toy
    m = train_ngram(coll, vocab, 2)
    with pytest.raises(ValueError):
        perplexity(m, make_collection([]))
    with pytest.raises(ValueError):
        perplexity(m, make_collection([""]))


def test_oov_rate_excludes_eos(toy):
    coll, vocab = toy
    m = train_ngram(coll, vocab, 2)
    _, oov = perplexity(m, make_collection(["a b", "a a c d"]))
    assert oov == pytest.approx(3 / 6)


def test_serialization_roundtrip_bit_exact(small_lm, tmp_path):
    text = small_lm.dumps()
    back = NGramModel.loads(text)
    assert back.dumps() == text
    assert back.vocab == small_lm.vocab
    small_lm.save(tmp_path / "m.lm")
    again = NGramModel.load(tmp_path / "m.lm")
    assert (tmp_path / "m.lm").read_bytes() == text.encode("utf-8")
    rng = np.random.default_rng(0)
    for _ in range(20):
        ctx = list(rng.integers(0, small_lm.vocab.size, 2))
        np.testing.assert_array_equal(again.distribution(ctx), small_lm.distribution(ctx))


def test_serialization_format_header(toy):
    coll, vocab = toy
    lines = train_ngram(coll, vocab, 2).dumps().splitlines()
    assert lines[0].split("\t")[:3] == ["#sdtr-ngram", "order=2", "v_max=20000"]
    assert lines[1] == "\\vocab\t1" and lines[2] == "a"
    assert "<s>\ta\t1" in lines
    assert lines[-1] == "\\end"
    with pytest.raises(ValueError):
        NGramModel.loads("garbage\n")
