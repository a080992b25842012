"""Slang-translation evaluation: paraphrase insertion, smoothed sentence
BLEU, ingestion of externally computed metric scores, and best-of-top-n
curves over ranked candidate interpretations.

BLEU here is the smoothed sentence-level variant: modified n-gram
precisions up to order 4 (orders capped at the hypothesis length, uniform
weights), a counter-based replacement of zero numerators, and the usual
brevity penalty. Scores are on a 0-100 scale.
"""
from __future__ import annotations

import json
import math
import re
from collections import Counter
from dataclasses import dataclass, replace
from pathlib import Path

from .errors import ConfigError, DataError

MAX_ORDER = 4
SMOOTHING_K = 5.0
CURVE_LENGTH = 20
METRICS = ("bleu", "bleurt", "comet")

_BLEU_TOKEN_RE = re.compile(r"[a-z0-9]+|[^\sa-z0-9]")


@dataclass(frozen=True)
class TranslationCandidate:
    paraphrase: str
    interpreted_source: str
    translation: str
    bleu: float | None = None
    bleurt: float | None = None
    comet: float | None = None


@dataclass(frozen=True)
class TranslationRecord:
    query_id: str
    source: str
    gold_translation: str
    candidates: tuple[TranslationCandidate, ...]

    def __post_init__(self):
        if not self.candidates:
            raise DataError(f"translation record {self.query_id!r} has no candidates")
        for cand in self.candidates:
            _check_single_span_edit(self.source, cand, self.query_id)


def _check_single_span_edit(source: str, cand: "TranslationCandidate", query_id: str) -> None:
    """The interpreted sentence must be the source with one span swapped for
    the paraphrase: interpreted = prefix + paraphrase + suffix where the
    source shares the same prefix and suffix."""
    edited = cand.interpreted_source
    start = 0
    while True:
        i = edited.find(cand.paraphrase, start)
        if i < 0:
            raise DataError(
                f"record {query_id!r}: interpreted_source is not the source with "
                f"one span replaced by {cand.paraphrase!r}"
            )
        prefix, suffix = edited[:i], edited[i + len(cand.paraphrase) :]
        if (
            len(prefix) + len(suffix) <= len(source)
            and source.startswith(prefix)
            and source.endswith(suffix)
        ):
            return
        start = i + 1


def insert_paraphrase(source: str, slang: str, paraphrase: str) -> str:
    """Replace the single whole-token occurrence of ``slang`` in ``source``."""
    if not slang.strip():
        raise ConfigError("slang term must be non-empty")
    pattern = re.compile(rf"(?<![A-Za-z0-9']){re.escape(slang)}(?![A-Za-z0-9'])")
    matches = list(pattern.finditer(source))
    if len(matches) != 1:
        raise DataError(
            f"expected exactly one occurrence of {slang!r} in {source!r}, found {len(matches)}"
        )
    start, end = matches[0].span()
    return source[:start] + paraphrase + source[end:]


def tokenize_for_bleu(text: str) -> list[str]:
    """Lowercase tokens with punctuation split off as separate tokens."""
    return _BLEU_TOKEN_RE.findall(text.lower())


def _ngram_counts(tokens: list[str], order: int) -> Counter:
    return Counter(tuple(tokens[i : i + order]) for i in range(len(tokens) - order + 1))


def sentence_bleu(hypothesis: list[str], reference: list[str]) -> float:
    """Smoothed sentence BLEU of a token list against one reference, 0-100.

    Zero-numerator orders get the replacement numerator
    ln(hyp_len) / (k * 2^counter) with the counter advancing per smoothed
    order; hypotheses of a single token cannot be smoothed. An empty
    hypothesis scores 0 by convention.
    """
    if not reference:
        raise ConfigError("reference must be nonempty")
    hyp_len = len(hypothesis)
    if hyp_len == 0:
        return 0.0

    orders = min(MAX_ORDER, hyp_len)
    counter = 1
    log_sum = 0.0
    for order in range(1, orders + 1):
        hyp_counts = _ngram_counts(hypothesis, order)
        ref_counts = _ngram_counts(reference, order)
        clipped = sum(min(c, ref_counts[g]) for g, c in hyp_counts.items())
        denominator = hyp_len - order + 1
        if clipped > 0:
            precision = clipped / denominator
        elif hyp_len > 1:
            precision = (math.log(hyp_len) / (SMOOTHING_K * 2.0 ** counter)) / denominator
            counter += 1
        else:
            return 0.0
        log_sum += math.log(precision) / orders

    ref_len = len(reference)
    brevity = 1.0 if hyp_len > ref_len else math.exp(1.0 - ref_len / hyp_len)
    return 100.0 * brevity * math.exp(log_sum)


def best_of_topn(scores, n: int) -> float:
    """Best score among the first ``n`` candidates in rank order."""
    scores = list(scores)
    if not 1 <= n <= len(scores):
        raise ConfigError(f"n must be in [1, {len(scores)}], got {n}")
    return max(scores[:n])


def curve_values(scores, length: int = CURVE_LENGTH) -> list[float]:
    """Best-of-top-n for n = 1..length; short lists repeat their final value."""
    scores = list(scores)
    if not scores:
        raise ConfigError("cannot build a curve from zero scores")
    values: list[float] = []
    best = -math.inf
    for i in range(length):
        if i < len(scores):
            best = max(best, scores[i])
        values.append(best)
    return values


@dataclass(frozen=True)
class ScoreCurve:
    metric: str
    values: tuple[float, ...]
    aggregate: float


def aggregate_curve(values, length: int = CURVE_LENGTH) -> float:
    """Mean of the best-of-top-n values over n = 1..length."""
    values = list(values)
    if not values:
        raise ConfigError("cannot aggregate an empty curve")
    if len(values) < length:
        values = values + [values[-1]] * (length - len(values))
    return sum(values[:length]) / length


def make_curve(metric: str, per_record_values: list[list[float]], length: int = CURVE_LENGTH) -> ScoreCurve:
    """Average the per-record best-of-top-n curves into one metric curve."""
    if not per_record_values:
        raise ConfigError("no records to build a curve from")
    padded = [curve_values(v, length) for v in per_record_values]
    mean_values = tuple(sum(col) / len(col) for col in zip(*padded))
    return ScoreCurve(metric=metric, values=mean_values, aggregate=aggregate_curve(mean_values, length))


def load_translation_records(path: str | Path) -> list[TranslationRecord]:
    records: list[TranslationRecord] = []
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
                    TranslationCandidate(
                        paraphrase=c["paraphrase"],
                        interpreted_source=c["interpreted_source"],
                        translation=c["translation"],
                        bleu=c.get("bleu"),
                        bleurt=c.get("bleurt"),
                        comet=c.get("comet"),
                    )
                    for c in obj["candidates"]
                )
                record = TranslationRecord(
                    query_id=str(obj["query_id"]),
                    source=obj["source"],
                    gold_translation=obj["gold_translation"],
                    candidates=candidates,
                )
            except KeyError as exc:
                raise DataError(f"{path}:{lineno}: missing key {exc}") from None
            if record.query_id in seen:
                raise DataError(f"{path}:{lineno}: duplicate query_id {record.query_id!r}")
            seen.add(record.query_id)
            records.append(record)
    return records


def write_translation_records(records: list[TranslationRecord], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for record in records:
            obj = {
                "query_id": record.query_id,
                "source": record.source,
                "gold_translation": record.gold_translation,
                "candidates": [
                    {
                        "paraphrase": c.paraphrase,
                        "interpreted_source": c.interpreted_source,
                        "translation": c.translation,
                        "bleu": c.bleu,
                        "bleurt": c.bleurt,
                        "comet": c.comet,
                    }
                    for c in record.candidates
                ],
            }
            fh.write(json.dumps(obj, ensure_ascii=False) + "\n")


def load_metric_scores(path: str | Path, metric: str) -> dict[tuple[str, int], float]:
    """Metric TSV rows ``query_id<TAB>rank<TAB>score``; duplicates are errors."""
    if metric not in METRICS:
        raise ConfigError(f"metric must be one of {METRICS}, got {metric!r}")
    scores: dict[tuple[str, int], float] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.rstrip("\n")
            if not stripped.strip() or stripped.startswith("#"):
                continue
            parts = stripped.split("\t")
            if len(parts) != 3:
                raise DataError(f"{path}:{lineno}: expected query_id<TAB>rank<TAB>score")
            try:
                key = (parts[0], int(parts[1]))
                value = float(parts[2])
            except ValueError:
                raise DataError(f"{path}:{lineno}: malformed rank or score") from None
            if not math.isfinite(value):
                raise DataError(f"{path}:{lineno}: non-finite score")
            if key in scores:
                raise DataError(f"{path}:{lineno}: duplicate score for {key}")
            scores[key] = value
    return scores


def write_metric_scores(scores: dict[tuple[str, int], float], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for query_id, rank in sorted(scores):
            fh.write(f"{query_id}\t{rank}\t{format(scores[(query_id, rank)], '.17g')}\n")


def attach_metric_scores(
    records: list[TranslationRecord], scores: dict[tuple[str, int], float], metric: str
) -> list[TranslationRecord]:
    """Attach ingested scores to candidates; any missing or unknown pair is an error."""
    if metric not in ("bleurt", "comet"):
        raise ConfigError(f"only neural metric scores are ingested, got {metric!r}")
    known = {record.query_id: len(record.candidates) for record in records}
    for query_id, rank in scores:
        if query_id not in known:
            raise DataError(f"score for unknown query {query_id!r}")
        if not 0 <= rank < known[query_id]:
            raise DataError(f"score for query {query_id!r} has out-of-range rank {rank}")
    out: list[TranslationRecord] = []
    for record in records:
        new_candidates = []
        for rank, cand in enumerate(record.candidates):
            key = (record.query_id, rank)
            if key not in scores:
                raise DataError(f"missing {metric} score for query {record.query_id!r} rank {rank}")
            new_candidates.append(replace(cand, **{metric: scores[key]}))
        out.append(replace(record, candidates=tuple(new_candidates)))
    return out


def compute_bleu_scores(record: TranslationRecord) -> list[float]:
    """Per-candidate smoothed BLEU of each translation against the gold reference."""
    reference = tokenize_for_bleu(record.gold_translation)
    return [sentence_bleu(tokenize_for_bleu(c.translation), reference) for c in record.candidates]
