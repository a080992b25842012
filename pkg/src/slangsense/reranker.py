"""Semantic reranking of candidate interpretations.

Candidate scores come from the prototype kernel, optionally smoothed over
a small neighborhood of conventionally similar words (collaborative
filtering). Reranking never drops or duplicates candidates; exact score
ties keep the generator's order.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .embeddings import EmbeddingTable, cosine_distance, euclidean_distance
from .errors import ConfigError, DataError
from .contrastive import encode
from .semantic import PrototypeModel, kernel_similarity, prototype


@dataclass(frozen=True)
class Candidate:
    rank_in: int
    definition: str
    definition_embedding_id: str
    surface: str | None = None
    gen_score: float | None = None
    pos_match: bool | None = None


@dataclass(frozen=True)
class CandidateSet:
    query_id: str
    word: str
    context: str
    generator: str
    candidates: tuple[Candidate, ...]

    def __post_init__(self):
        if not self.candidates:
            raise DataError(f"candidate set {self.query_id!r} is empty")
        ranks = [c.rank_in for c in self.candidates]
        if ranks != list(range(len(ranks))):
            raise DataError(f"candidate set {self.query_id!r} ranks are not 0..n-1 in order")
        for c in self.candidates:
            if not c.definition.strip():
                raise DataError(f"candidate set {self.query_id!r} has an empty definition")
            if not c.definition_embedding_id:
                raise DataError(f"candidate set {self.query_id!r} has a candidate without an embedding id")


@dataclass
class RerankConfig:
    h_cf: float = 0.1
    neighborhood_size: int = 5
    use_cf: bool = True

    def validate(self) -> None:
        if self.h_cf <= 0:
            raise ConfigError(f"h_cf must be positive, got {self.h_cf}")
        if self.neighborhood_size < 1:
            raise ConfigError(f"neighborhood_size must be >= 1, got {self.neighborhood_size}")


@dataclass(frozen=True)
class RankedEntry:
    candidate: Candidate
    score: float


@dataclass(frozen=True)
class RankedList:
    query_id: str
    entries: tuple[RankedEntry, ...]

    def permutation(self) -> tuple[int, ...]:
        """Original generator ranks in reranked order."""
        return tuple(e.candidate.rank_in for e in self.entries)


def neighborhood(word: str, vocab, word_vectors: EmbeddingTable, size: int) -> list[str]:
    """The ``size`` closest vocabulary words to ``word`` by cosine distance,
    always including ``word`` itself; ties break lexicographically."""
    if size < 1:
        raise ConfigError(f"neighborhood size must be >= 1, got {size}")
    center = word_vectors.lookup(word)
    others = sorted(set(vocab) - {word})
    ranked = sorted(others, key=lambda w: (cosine_distance(center, word_vectors.lookup(w)), w))
    return [word] + ranked[: size - 1]


def word_similarity(word: str, other: str, word_vectors: EmbeddingTable, width: float) -> float:
    """Kernel similarity between two words' vectors, in (0, 1]."""
    return kernel_similarity(
        cosine_distance(word_vectors.lookup(word), word_vectors.lookup(other)), width
    )


def normalize_scores(values: np.ndarray) -> np.ndarray:
    values = np.asarray(values, dtype=np.float64)
    total = values.sum()
    if not np.isfinite(total) or total <= 0:
        raise DataError("scores do not normalize: non-positive or non-finite total")
    return values / total


def scores_from_distances(distances, width: float) -> np.ndarray:
    """Normalized kernel scores exp(-d/width) / sum, computed stably."""
    d = np.asarray(distances, dtype=np.float64)
    logits = -d / width
    logits -= logits.max()
    return normalize_scores(np.exp(logits))


def candidate_distances(candidate_set: CandidateSet, model: PrototypeModel, word: str) -> np.ndarray:
    proto = prototype(model, word)
    return np.array(
        [
            euclidean_distance(
                encode(model.encoder, model.sense_embeddings.lookup(c.definition_embedding_id)),
                proto,
            )
            for c in candidate_set.candidates
        ]
    )


def score_candidates(candidate_set: CandidateSet, model: PrototypeModel, word: str | None = None) -> np.ndarray:
    """Candidate scores proportional to prototype-kernel similarity, summing to 1."""
    target = candidate_set.word if word is None else word
    return scores_from_distances(candidate_distances(candidate_set, model, target), model.kernel_width)


def mix_neighbor_scores(per_neighbor: dict[str, np.ndarray], weights: dict[str, float]) -> np.ndarray:
    """Similarity-weighted mixture of per-neighbor score vectors, renormalized."""
    if set(per_neighbor) != set(weights):
        raise ConfigError("neighbor scores and weights must cover the same words")
    mixture = None
    for neighbor in sorted(per_neighbor):
        term = weights[neighbor] * np.asarray(per_neighbor[neighbor], dtype=np.float64)
        mixture = term if mixture is None else mixture + term
    return normalize_scores(mixture)


def score_candidates_cf(
    candidate_set: CandidateSet,
    model: PrototypeModel,
    word_vectors: EmbeddingTable,
    vocab,
    config: RerankConfig,
) -> np.ndarray:
    """Neighborhood-smoothed scores: mix each neighbor's score vector for the
    same candidates, weighted by word similarity to the query word."""
    config.validate()
    if not config.use_cf:
        return score_candidates(candidate_set, model)
    word = candidate_set.word
    neighbors = neighborhood(word, vocab, word_vectors, config.neighborhood_size)
    per_neighbor = {n: score_candidates(candidate_set, model, word=n) for n in neighbors}
    weights = {n: word_similarity(word, n, word_vectors, config.h_cf) for n in neighbors}
    return mix_neighbor_scores(per_neighbor, weights)


def rank_by_scores(candidate_set: CandidateSet, scores) -> RankedList:
    """Sort candidates by score descending; exact ties keep generator order."""
    scores = np.asarray(scores, dtype=np.float64)
    if scores.shape != (len(candidate_set.candidates),):
        raise ConfigError("one score per candidate required")
    order = sorted(range(len(scores)), key=lambda i: (-scores[i], candidate_set.candidates[i].rank_in))
    entries = tuple(RankedEntry(candidate_set.candidates[i], float(scores[i])) for i in order)
    return RankedList(query_id=candidate_set.query_id, entries=entries)


def rerank(
    candidate_set: CandidateSet,
    model: PrototypeModel,
    *,
    word_vectors: EmbeddingTable | None = None,
    vocab=(),
    config: RerankConfig | None = None,
) -> RankedList:
    """Score and sort one candidate set; the top entry is the interpretation."""
    config = config or RerankConfig()
    if config.use_cf and config.neighborhood_size > 1:
        if word_vectors is None:
            raise ConfigError("collaborative filtering requires word vectors")
        scores = score_candidates_cf(candidate_set, model, word_vectors, vocab, config)
    else:
        scores = score_candidates(candidate_set, model)
    return rank_by_scores(candidate_set, scores)


def _candidate_from_obj(obj: dict, path, lineno: int, position: int) -> Candidate:
    try:
        rank_in = obj["rank_in"]
        definition = obj["definition"]
        embedding_id = obj["definition_embedding_id"]
    except KeyError as exc:
        raise DataError(f"{path}:{lineno}: candidate missing key {exc}") from None
    if not isinstance(rank_in, int) or rank_in != position:
        raise DataError(f"{path}:{lineno}: candidate rank_in {rank_in!r} out of order")
    return Candidate(
        rank_in=rank_in,
        definition=str(definition),
        definition_embedding_id=str(embedding_id),
        surface=obj.get("surface"),
        gen_score=obj.get("gen_score"),
        pos_match=obj.get("pos_match"),
    )


def load_candidate_sets(path: str | Path) -> list[CandidateSet]:
    sets: list[CandidateSet] = []
    seen: set[str] = set()
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            try:
                obj = json.loads(stripped)
            except json.JSONDecodeError as exc:
                raise DataError(f"{path}:{lineno}: invalid JSON: {exc.msg}") from None
            try:
                candidates = tuple(
                    _candidate_from_obj(c, path, lineno, i) for i, c in enumerate(obj["candidates"])
                )
                cset = CandidateSet(
                    query_id=str(obj["query_id"]),
                    word=str(obj["word"]),
                    context=str(obj["context"]),
                    generator=str(obj.get("generator", "unknown")),
                    candidates=candidates,
                )
            except KeyError as exc:
                raise DataError(f"{path}:{lineno}: missing key {exc}") from None
            if cset.query_id in seen:
                raise DataError(f"{path}:{lineno}: duplicate query_id {cset.query_id!r}")
            seen.add(cset.query_id)
            sets.append(cset)
    return sets


def _candidate_to_obj(candidate: Candidate, score: float | None = None) -> dict:
    obj = {
        "rank_in": candidate.rank_in,
        "surface": candidate.surface,
        "definition": candidate.definition,
        "definition_embedding_id": candidate.definition_embedding_id,
        "gen_score": candidate.gen_score,
        "pos_match": candidate.pos_match,
    }
    if score is not None:
        obj["score"] = score
    return obj


def write_candidate_sets(sets: list[CandidateSet], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for cset in sets:
            obj = {
                "query_id": cset.query_id,
                "word": cset.word,
                "context": cset.context,
                "generator": cset.generator,
                "candidates": [_candidate_to_obj(c) for c in cset.candidates],
            }
            fh.write(json.dumps(obj, ensure_ascii=False) + "\n")


def write_ranked_lists(ranked: list[tuple[RankedList, CandidateSet]], path: str | Path) -> None:
    """RankedList JSONL mirroring the candidate schema with a score per entry."""
    with open(path, "w", encoding="utf-8") as fh:
        for ranked_list, cset in ranked:
            obj = {
                "query_id": ranked_list.query_id,
                "word": cset.word,
                "context": cset.context,
                "generator": cset.generator,
                "candidates": [
                    _candidate_to_obj(e.candidate, format_score(e.score)) for e in ranked_list.entries
                ],
            }
            fh.write(json.dumps(obj, ensure_ascii=False) + "\n")


def format_score(score: float) -> float:
    # Round-trippable float via repr; json emits shortest repr already.
    return float(score)


def load_ranked_lists(path: str | Path) -> list[tuple[RankedList, CandidateSet]]:
    out: list[tuple[RankedList, CandidateSet]] = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            obj = json.loads(stripped)
            entries = []
            for c in obj["candidates"]:
                if "score" not in c:
                    raise DataError(f"{path}:{lineno}: ranked candidate missing score")
                cand = Candidate(
                    rank_in=c["rank_in"],
                    definition=c["definition"],
                    definition_embedding_id=c["definition_embedding_id"],
                    surface=c.get("surface"),
                    gen_score=c.get("gen_score"),
                    pos_match=c.get("pos_match"),
                )
                entries.append(RankedEntry(cand, float(c["score"])))
            ranked_list = RankedList(query_id=obj["query_id"], entries=tuple(entries))
            in_order = tuple(sorted((e.candidate for e in entries), key=lambda c: c.rank_in))
            cset = CandidateSet(
                query_id=obj["query_id"],
                word=obj["word"],
                context=obj["context"],
                generator=obj.get("generator", "unknown"),
                candidates=in_order,
            )
            out.append((ranked_list, cset))
    return out
