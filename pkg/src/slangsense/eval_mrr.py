"""Multiple-choice evaluation: the groundtruth definition is ranked against
four sampled negatives by Euclidean distance between baseline sentence
embeddings of each option and the model-predicted definition."""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .corpus import GlossEntry, content_words, definitions_distinct
from .embeddings import EmbeddingTable, euclidean_distance
from .errors import ConfigError, DataError

N_NEGATIVES = 4
MODES = ("distinct", "random")


@dataclass(frozen=True)
class ChoiceOption:
    definition: str
    embedding_id: str


@dataclass(frozen=True)
class ChoiceItem:
    query_id: str
    groundtruth: ChoiceOption
    negatives: tuple[ChoiceOption, ...]
    mode: str
    seed: int

    def __post_init__(self):
        if len(self.negatives) != N_NEGATIVES:
            raise DataError(f"item {self.query_id!r} needs exactly {N_NEGATIVES} negatives")
        if self.mode not in MODES:
            raise DataError(f"unknown sampling mode {self.mode!r}")


def derive_seed(base_seed: int, query_id: str) -> int:
    """Stable per-query seed so sampling is independent of evaluation order."""
    digest = hashlib.sha256(f"{base_seed}:{query_id}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


def sample_negatives(
    query_id: str,
    groundtruth: ChoiceOption,
    pool: list[ChoiceOption],
    mode: str,
    seed: int,
    stopwords: frozenset[str],
) -> ChoiceItem:
    """Seeded uniform draw of four negatives from the training pool.

    In distinct mode, candidates overlapping the groundtruth in half or more
    of their content words are rejected and redrawn.
    """
    if mode not in MODES:
        raise ConfigError(f"mode must be one of {MODES}, got {mode!r}")
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(pool))
    negatives: list[ChoiceOption] = []
    for idx in order:
        option = pool[int(idx)]
        if option.embedding_id == groundtruth.embedding_id:
            continue
        if mode == "distinct" and not definitions_distinct(
            groundtruth.definition, option.definition, stopwords
        ):
            continue
        negatives.append(option)
        if len(negatives) == N_NEGATIVES:
            break
    if len(negatives) < N_NEGATIVES:
        raise DataError(
            f"negative pool exhausted for query {query_id!r} in {mode} mode "
            f"({len(negatives)} of {N_NEGATIVES} found)"
        )
    return ChoiceItem(query_id, groundtruth, tuple(negatives), mode, seed)


def rank_groundtruth(
    prediction_embedding_id: str, item: ChoiceItem, sentence_embeddings: EmbeddingTable
) -> int:
    """1-based rank of the groundtruth among the five options, by distance to
    the prediction; exact ties count against the groundtruth."""
    pred = sentence_embeddings.lookup(prediction_embedding_id)
    d_true = euclidean_distance(pred, sentence_embeddings.lookup(item.groundtruth.embedding_id))
    rank = 1
    for negative in item.negatives:
        d_neg = euclidean_distance(pred, sentence_embeddings.lookup(negative.embedding_id))
        if d_neg <= d_true:
            rank += 1
    return rank


def reciprocal_ranks(ranks) -> list[float]:
    return [1.0 / r for r in ranks]


def mrr(ranks) -> float:
    """Mean reciprocal rank."""
    ranks = list(ranks)
    if not ranks:
        raise ConfigError("cannot compute MRR of an empty rank list")
    return float(np.mean([1.0 / r for r in ranks]))


def random_baseline_mrr(trials: int, n_options: int = 5, seed: int = 0) -> float:
    """MRR of uniform-random ranking over ``n_options`` choices."""
    if trials < 1:
        raise ConfigError("trials must be >= 1")
    rng = np.random.default_rng(seed)
    ranks = rng.integers(1, n_options + 1, size=trials)
    return float(np.mean(1.0 / ranks))


def context_length(entry: GlossEntry, stopwords: frozenset[str]) -> int:
    """Number of content words in the usage sentence, excluding the slang."""
    counts = content_words(entry.example, stopwords)
    for token in content_words(entry.word, frozenset()):
        if counts[token] > 0:
            counts[token] -= 1
    return sum(counts.values())


def partition_by_context_length(
    entries, stopwords: frozenset[str]
) -> dict[int, list[GlossEntry]]:
    """Bucket entries by content-word context length; buckets partition the input."""
    buckets: dict[int, list[GlossEntry]] = {}
    for entry in entries:
        buckets.setdefault(context_length(entry, stopwords), []).append(entry)
    return dict(sorted(buckets.items()))


@dataclass
class EvalReport:
    mode: str
    seed: int
    rows: list[dict]  # query_id, rank, reciprocal_rank, context_bucket
    mrr: float
    partitions: dict[int, dict]

    @classmethod
    def from_rows(cls, mode: str, seed: int, rows: list[dict]) -> "EvalReport":
        if not rows:
            raise ConfigError("cannot build a report from zero queries")
        overall = mrr([row["rank"] for row in rows])
        partitions: dict[int, dict] = {}
        by_bucket: dict[int, list[int]] = {}
        for row in rows:
            by_bucket.setdefault(row["context_bucket"], []).append(row["rank"])
        for bucket in sorted(by_bucket):
            ranks = by_bucket[bucket]
            partitions[bucket] = {"count": len(ranks), "mrr": mrr(ranks)}
        return cls(mode=mode, seed=seed, rows=rows, mrr=overall, partitions=partitions)

    def summary(self) -> dict:
        return {
            "mode": self.mode,
            "seed": self.seed,
            "queries": len(self.rows),
            "mrr": self.mrr,
            "partitions": {str(k): v for k, v in self.partitions.items()},
        }


def write_report(report: EvalReport, json_path: str | Path, tsv_path: str | Path) -> None:
    with open(json_path, "w", encoding="utf-8") as fh:
        json.dump(report.summary(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    with open(tsv_path, "w", encoding="utf-8") as fh:
        fh.write("query_id\tmode\trank\treciprocal_rank\tcontext_bucket\n")
        for row in report.rows:
            fh.write(
                f"{row['query_id']}\t{report.mode}\t{row['rank']}\t"
                f"{format(row['reciprocal_rank'], '.17g')}\t{row['context_bucket']}\n"
            )
