"""Prototype model of conventional word meaning and the kernelized
similarity used to judge how plausibly a candidate meaning extends from a
word's conventional senses."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .contrastive import EncoderParams, encode
from .corpus import SenseInventory
from .embeddings import EmbeddingTable, euclidean_distance
from .errors import ConfigError, DataError

DEFAULT_KERNEL_WIDTH = 0.1


@dataclass
class PrototypeModel:
    """Encoder plus the resources needed to score meanings against words."""

    encoder: EncoderParams
    sense_embeddings: EmbeddingTable
    inventory: SenseInventory
    kernel_width: float = DEFAULT_KERNEL_WIDTH
    _prototypes: dict[str, np.ndarray] = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if self.kernel_width <= 0:
            raise ConfigError(f"kernel width must be positive, got {self.kernel_width}")

    def with_kernel_width(self, width: float) -> "PrototypeModel":
        return PrototypeModel(self.encoder, self.sense_embeddings, self.inventory, width)


def prototype(model: PrototypeModel, word: str) -> np.ndarray:
    """Mean encoded embedding of the word's conventional senses (memoized)."""
    cached = model._prototypes.get(word)
    if cached is not None:
        return cached
    senses = model.inventory.senses(word)
    encoded = [encode(model.encoder, model.sense_embeddings.lookup(s.sense_id)) for s in senses]
    proto = np.mean(encoded, axis=0)
    model._prototypes[word] = proto
    return proto


def kernel_similarity(distance: float, width: float) -> float:
    """Negative exponential kernel exp(-distance / width), in (0, 1]."""
    if width <= 0:
        raise ConfigError(f"kernel width must be positive, got {width}")
    if distance < 0:
        raise DataError(f"distance must be nonnegative, got {distance}")
    return math.exp(-distance / width)


def prototype_similarity(model: PrototypeModel, vec: np.ndarray, word: str) -> float:
    """Kernel similarity between an encoded meaning and the word's prototype."""
    return kernel_similarity(euclidean_distance(vec, prototype(model, word)), model.kernel_width)


def select_kernel_width(
    encoder: EncoderParams,
    sentence_embeddings: EmbeddingTable,
    inventory: SenseInventory,
    dev_queries,
    grid=(DEFAULT_KERNEL_WIDTH,),
    *,
    word_vectors: EmbeddingTable | None = None,
    vocab=(),
    rerank_config=None,
) -> float:
    """Pick the grid width maximizing dev-set MRR of the reranker.

    ``dev_queries`` is a list of (CandidateSet, ChoiceItem) pairs. Without
    dev data the default width is returned. Ties prefer the smaller width.
    """
    from . import eval_mrr as _eval  # local import: evaluation depends on this module
    from . import reranker as _rerank

    grid = sorted(grid)
    if not grid:
        raise ConfigError("kernel width grid must be nonempty")
    if not dev_queries:
        return DEFAULT_KERNEL_WIDTH

    best_width, best_score = None, -1.0
    for width in grid:
        model = PrototypeModel(encoder, sentence_embeddings, inventory, width)
        ranks = []
        for candidate_set, item in dev_queries:
            ranked = _rerank.rerank(
                candidate_set,
                model,
                word_vectors=word_vectors,
                vocab=vocab,
                config=rerank_config,
            )
            top = ranked.entries[0].candidate
            ranks.append(_eval.rank_groundtruth(top.definition_embedding_id, item, sentence_embeddings))
        score = _eval.mrr(ranks)
        if score > best_score:
            best_width, best_score = width, score
    return best_width
