"""Slang interpretation engine.

Reranks context-generated candidate interpretations of a slang term by
how plausibly each meaning extends from the word's conventional senses,
and ships the evaluation harnesses used to measure it.
"""

__version__ = "0.1.0"

from .corpus import (
    Dataset,
    GlossEntry,
    SenseInventory,
    content_words,
    definitions_distinct,
    filter_entries,
    load_glosses,
    load_inventory,
    load_stopwords,
)
from .embeddings import EmbeddingTable, cosine_distance, euclidean_distance, load_table
from .contrastive import (
    EncoderParams,
    TrainConfig,
    Triplet,
    build_triplets,
    encode,
    train_encoder,
    triplet_loss,
)
from .semantic import PrototypeModel, prototype, prototype_similarity, select_kernel_width
from .reranker import Candidate, CandidateSet, RankedList, RerankConfig, neighborhood, rerank
from .eval_mrr import ChoiceItem, ChoiceOption, mrr, rank_groundtruth, sample_negatives
from .eval_translation import (
    aggregate_curve,
    best_of_topn,
    insert_paraphrase,
    sentence_bleu,
)

__all__ = [
    "Candidate",
    "CandidateSet",
    "ChoiceItem",
    "ChoiceOption",
    "Dataset",
    "EmbeddingTable",
    "EncoderParams",
    "GlossEntry",
    "PrototypeModel",
    "RankedList",
    "RerankConfig",
    "SenseInventory",
    "TrainConfig",
    "Triplet",
    "aggregate_curve",
    "best_of_topn",
    "build_triplets",
    "content_words",
    "cosine_distance",
    "definitions_distinct",
    "encode",
    "euclidean_distance",
    "filter_entries",
    "insert_paraphrase",
    "load_glosses",
    "load_inventory",
    "load_stopwords",
    "load_table",
    "mrr",
    "neighborhood",
    "prototype",
    "prototype_similarity",
    "rank_groundtruth",
    "rerank",
    "sample_negatives",
    "select_kernel_width",
    "sentence_bleu",
    "train_encoder",
    "triplet_loss",
]
