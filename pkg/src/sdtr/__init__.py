"""Speech-driven text retrieval workbench.

Collection-adapted n-gram language models, Okapi BM25 ranking, a seeded
recognition-error channel, and TREC-style evaluation.
"""

from .asrsim import (Alignment, DegradationConfig, ErrorRates, align, degrade_query, term_error_rate,
                     word_error_rate)
from .corpus import Collection, Document, TokenizerConfig, extract_content_words, load_collection, tokenize
from .evaluation import (EvalReport, Qrels, Topic, average_precision, evaluate_run, parse_topics,
                         recall_precision_curve, select_query_field)
from .index import InvertedIndex, OkapiParams, ScoredDoc, build_index, okapi_score, search
from .lm import LmStats, NGramModel, Vocabulary, build_vocabulary, coverage, perplexity, sequence_logprob, train_ngram

__version__ = "0.1.0"

__all__ = [
    "Alignment", "Collection", "DegradationConfig", "Document", "ErrorRates", "EvalReport",
    "InvertedIndex", "LmStats", "NGramModel", "OkapiParams", "Qrels", "ScoredDoc", "TokenizerConfig",
    "Topic", "Vocabulary", "align", "average_precision", "build_index", "build_vocabulary", "coverage",
    "degrade_query", "evaluate_run", "extract_content_words", "load_collection", "okapi_score",
    "parse_topics", "perplexity", "recall_precision_curve", "search", "select_query_field",
    "sequence_logprob", "term_error_rate", "tokenize", "train_ngram", "word_error_rate",
]
