import pytest

from sdtr.corpus import Collection, Document
from sdtr.lm import build_vocabulary, train_ngram
from sdtr.synth import generate_two_domains


def make_collection(texts):
    """Collection with ids d1, d2, ... for a list of texts."""
    return Collection(Document(f"d{i + 1}", t) for i, t in enumerate(texts))


@pytest.fixture(scope="session")
def small_domains():
    return generate_two_domains(seed=5, n_docs=200, n_topics=10)


@pytest.fixture(scope="session")
def small_lm(small_domains):
    coll = small_domains[0].collection
    vocab, _ = build_vocabulary(coll, v_max=20000)
    return train_ngram(coll, vocab, 3)
