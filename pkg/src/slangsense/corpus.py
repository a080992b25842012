"""Slang gloss corpora: loading, validation, preprocessing and splits.

A corpus couples three resources: gloss entries (one usage example per
entry), a conventional-sense inventory keyed by word form, and a stopword
list used for content-word checks. All containers are immutable after
construction; every operation returns new values.
"""
from __future__ import annotations

import json
import re
from collections import Counter
from dataclasses import dataclass, replace
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import ConfigError, DataError

SPLITS = ("train", "dev", "test")

_TOKEN_RE = re.compile(r"[A-Za-z0-9']+")
_CONTENT_RE = re.compile(r"[a-z0-9]+")


@dataclass(frozen=True)
class GlossEntry:
    """One slang definition paired with a single usage sentence."""

    entry_id: str
    definition_id: str
    word: str
    definition: str
    example: str
    pos: str | None
    split: str
    source: str


@dataclass(frozen=True)
class SenseDef:
    sense_id: str
    definition: str
    pos: str | None = None


class SenseInventory:
    """Conventional (standard-dictionary) senses per word form."""

    def __init__(self, senses_by_word: dict[str, list[SenseDef]]):
        seen: set[str] = set()
        for word, senses in senses_by_word.items():
            if not senses:
                raise DataError(f"inventory word {word!r} has no senses")
            for sense in senses:
                if sense.sense_id in seen:
                    raise DataError(f"duplicate sense_id {sense.sense_id!r}")
                seen.add(sense.sense_id)
        self._senses = {w: tuple(s) for w, s in senses_by_word.items()}
        self._sense_ids = frozenset(seen)

    @classmethod
    def empty(cls) -> "SenseInventory":
        return cls({})

    def __contains__(self, word: str) -> bool:
        return word in self._senses

    def __len__(self) -> int:
        return len(self._senses)

    @property
    def words(self) -> tuple[str, ...]:
        return tuple(sorted(self._senses))

    @property
    def sense_ids(self) -> frozenset[str]:
        return self._sense_ids

    def senses(self, word: str) -> tuple[SenseDef, ...]:
        try:
            return self._senses[word]
        except KeyError:
            raise DataError(f"word {word!r} has no conventional senses") from None


@dataclass(frozen=True)
class Dataset:
    entries: tuple[GlossEntry, ...]
    inventory: SenseInventory
    stopwords: frozenset[str]

    def split(self, name: str) -> tuple[GlossEntry, ...]:
        if name not in SPLITS:
            raise ConfigError(f"unknown split {name!r}")
        return tuple(e for e in self.entries if e.split == name)

    @property
    def vocabulary(self) -> tuple[str, ...]:
        return tuple(sorted({e.word for e in self.entries}))

    def check_split_disjointness(self) -> None:
        by_def: dict[str, str] = {}
        for e in self.entries:
            prev = by_def.setdefault(e.definition_id, e.split)
            if prev != e.split:
                raise DataError(
                    f"definition {e.definition_id!r} straddles splits {prev!r} and {e.split!r}"
                )


@dataclass(frozen=True)
class FilterReport:
    removed: dict[str, int]
    kept: int

    @property
    def total_removed(self) -> int:
        return sum(self.removed.values())


def tokenize(text: str) -> list[str]:
    """Case-preserving tokens: runs of letters, digits and apostrophes."""
    return _TOKEN_RE.findall(text)


def count_exact_occurrences(word: str, text: str) -> int:
    """Whole-token, case-sensitive occurrences of ``word`` in ``text``.

    Multi-token word forms are matched as contiguous token runs.
    """
    target = tokenize(word)
    if not target:
        raise DataError(f"word {word!r} has no tokens")
    toks = tokenize(text)
    span = len(target)
    return sum(1 for i in range(len(toks) - span + 1) if toks[i : i + span] == target)


def content_words(text: str, stopwords: frozenset[str] | set[str]) -> Counter:
    """Multiset of lowercase content tokens.

    Punctuation-separated tokens are kept only when purely alphabetic,
    between 2 and 15 characters, and not stopwords.
    """
    out: Counter = Counter()
    for tok in _CONTENT_RE.findall(text.lower()):
        if tok.isalpha() and 2 <= len(tok) <= 15 and tok not in stopwords:
            out[tok] += 1
    return out


def definitions_distinct(a: str, b: str, stopwords: frozenset[str] | set[str]) -> bool:
    """True when two definition sentences share under half their content words.

    Overlap is measured on unique content tokens against the smaller side.
    """
    set_a = set(content_words(a, stopwords))
    set_b = set(content_words(b, stopwords))
    overlap = len(set_a & set_b)
    return overlap / max(1, min(len(set_a), len(set_b))) < 0.5


def load_stopwords(path: str | Path | None = None) -> frozenset[str]:
    """Stopword list, one token per line; ``None`` loads the bundled list."""
    if path is None:
        text = resources.files("slangsense.resources").joinpath("stopwords_en.txt").read_text("utf-8")
    else:
        text = Path(path).read_text("utf-8")
    return frozenset(w.strip().lower() for w in text.splitlines() if w.strip())


def _iter_jsonl(path: str | Path):
    """Yield (line_number, object) pairs, skipping blank and ``#`` lines."""
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            try:
                obj = json.loads(stripped)
            except json.JSONDecodeError as exc:
                raise DataError(f"{path}:{lineno}: invalid JSON: {exc.msg}") from None
            if not isinstance(obj, dict):
                raise DataError(f"{path}:{lineno}: expected a JSON object")
            yield lineno, obj


def _required_str(obj: dict, key: str, path, lineno: int) -> str:
    value = obj.get(key)
    if not isinstance(value, str):
        raise DataError(f"{path}:{lineno}: missing or non-string {key!r}")
    return value


def _entry_from_record(obj: dict, path, lineno: int, source_label: str | None) -> GlossEntry:
    entry_id = _required_str(obj, "entry_id", path, lineno)
    definition_id = _required_str(obj, "definition_id", path, lineno)
    word = _required_str(obj, "word", path, lineno)
    definition = _required_str(obj, "definition", path, lineno)
    example = _required_str(obj, "example", path, lineno)
    split = _required_str(obj, "split", path, lineno)
    source = obj.get("source", source_label)
    pos = obj.get("pos")
    if split not in SPLITS:
        raise DataError(f"{path}:{lineno}: split must be one of {SPLITS}, got {split!r}")
    if not definition.strip():
        raise DataError(f"{path}:{lineno}: empty definition for entry {entry_id!r}")
    if not word.strip():
        raise DataError(f"{path}:{lineno}: empty word for entry {entry_id!r}")
    if not isinstance(source, str) or not source:
        raise DataError(f"{path}:{lineno}: no source for entry {entry_id!r}")
    if pos is not None and not isinstance(pos, str):
        raise DataError(f"{path}:{lineno}: pos must be a string or null")
    return GlossEntry(entry_id, definition_id, word, definition, example, pos, split, source)


def load_glosses(
    path: str | Path,
    source_label: str | None = None,
    *,
    inventory: SenseInventory | None = None,
    stopwords: frozenset[str] | None = None,
) -> Dataset:
    """Load a gloss JSONL file into a Dataset.

    Malformed lines raise :class:`DataError` with the offending line number.
    """
    entries: list[GlossEntry] = []
    seen_ids: set[str] = set()
    for lineno, obj in _iter_jsonl(path):
        entry = _entry_from_record(obj, path, lineno, source_label)
        if entry.entry_id in seen_ids:
            raise DataError(f"{path}:{lineno}: duplicate entry_id {entry.entry_id!r}")
        seen_ids.add(entry.entry_id)
        entries.append(entry)
    dataset = Dataset(
        entries=tuple(entries),
        inventory=inventory if inventory is not None else SenseInventory.empty(),
        stopwords=stopwords if stopwords is not None else frozenset(),
    )
    dataset.check_split_disjointness()
    return dataset


def write_glosses(dataset: Dataset, path: str | Path) -> None:
    """Write entries in the gloss JSONL format ``load_glosses`` reads."""
    with open(path, "w", encoding="utf-8") as fh:
        for e in dataset.entries:
            obj = {
                "entry_id": e.entry_id,
                "definition_id": e.definition_id,
                "word": e.word,
                "definition": e.definition,
                "example": e.example,
                "pos": e.pos,
                "split": e.split,
                "source": e.source,
            }
            fh.write(json.dumps(obj, ensure_ascii=False) + "\n")


def load_inventory(path: str | Path) -> SenseInventory:
    """Load a sense-inventory JSONL file (keys: word, sense_id, definition, pos)."""
    by_word: dict[str, list[SenseDef]] = {}
    for lineno, obj in _iter_jsonl(path):
        word = _required_str(obj, "word", path, lineno)
        sense_id = _required_str(obj, "sense_id", path, lineno)
        definition = _required_str(obj, "definition", path, lineno)
        pos = obj.get("pos")
        if pos is not None and not isinstance(pos, str):
            raise DataError(f"{path}:{lineno}: pos must be a string or null")
        by_word.setdefault(word, []).append(SenseDef(sense_id, definition, pos))
    return SenseInventory(by_word)


def expand_examples(records: list[dict], source_label: str | None = None) -> list[GlossEntry]:
    """Fan raw multi-example records out into one GlossEntry per example.

    Every produced sibling shares the record's definition_id and split, so
    examples of one definition can never straddle splits.
    """
    entries: list[GlossEntry] = []
    for i, rec in enumerate(records):
        examples = rec.get("examples")
        if not isinstance(examples, list) or not examples:
            raise DataError(f"record {i} ({rec.get('definition_id')!r}) has no examples")
        base = dict(rec)
        base.pop("examples")
        for j, example in enumerate(examples):
            obj = dict(base)
            obj["example"] = example
            obj.setdefault("entry_id", None)
            if obj["entry_id"] is None:
                obj["entry_id"] = f"{rec['definition_id']}#{j}"
            entries.append(_entry_from_record(obj, "<records>", i, source_label))
    return entries


def filter_entries(dataset: Dataset) -> tuple[Dataset, FilterReport]:
    """Keep entries whose word has conventional senses and occurs exactly once.

    Removal counts are reported per reason; filtering is idempotent.
    """
    kept: list[GlossEntry] = []
    removed: Counter = Counter()
    for entry in dataset.entries:
        if entry.word not in dataset.inventory:
            removed["no-conventional-sense"] += 1
            continue
        occurrences = count_exact_occurrences(entry.word, entry.example)
        if occurrences == 0:
            removed["no-mention"] += 1
        elif occurrences > 1:
            removed["multi-mention"] += 1
        else:
            kept.append(entry)
    filtered = replace(dataset, entries=tuple(kept))
    filtered.check_split_disjointness()
    return filtered, FilterReport(removed=dict(removed), kept=len(kept))


def assign_dev_split(dataset: Dataset, fraction: float = 0.05, seed: int = 0) -> Dataset:
    """Hold out a seeded fraction of training definition_ids as the dev split."""
    if not 0 <= fraction < 1:
        raise ConfigError(f"dev fraction must be in [0, 1), got {fraction}")
    train_defs = sorted({e.definition_id for e in dataset.entries if e.split == "train"})
    n_dev = int(round(len(train_defs) * fraction))
    if n_dev == 0:
        return dataset
    rng = np.random.default_rng(seed)
    dev_defs = set(rng.permutation(np.array(train_defs, dtype=object))[:n_dev])
    entries = tuple(
        replace(e, split="dev") if e.split == "train" and e.definition_id in dev_defs else e
        for e in dataset.entries
    )
    out = replace(dataset, entries=entries)
    out.check_split_disjointness()
    return out


def dataset_stats(dataset: Dataset) -> dict:
    """Corpus size summary: word forms, definition entries, context sentences."""
    test = dataset.split("test")
    return {
        "unique_word_forms": len({e.word for e in dataset.entries}),
        "definition_entries": len({e.definition_id for e in dataset.entries}),
        "context_sentences": len(dataset.entries),
        "test_definitions": len({e.definition_id for e in test}),
        "test_context_sentences": len(test),
    }
