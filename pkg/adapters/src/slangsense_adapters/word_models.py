"""Word-vector models behind the embed-words job.

``table:<path>`` serves vectors verbatim from a pretrained text table and
composes out-of-vocabulary forms from character n-grams, mirroring how
subword models back off; ``subword:<dim>[:<salt>]`` composes every form
from hashed character n-grams and needs no files.
"""
from __future__ import annotations

import hashlib
from pathlib import Path

import numpy as np

from .io import AdapterError

NGRAM_RANGE = (3, 6)


def _ngram_vector(gram: str, dim: int, salt: str) -> np.ndarray:
    digest = hashlib.sha256(f"{salt}\x00{gram}".encode("utf-8")).digest()
    seed = int.from_bytes(digest[:8], "big")
    return np.random.default_rng(seed).normal(size=dim)


def _char_ngrams(word: str) -> list[str]:
    wrapped = f"<{word}>"
    low, high = NGRAM_RANGE
    grams = [
        wrapped[i : i + n]
        for n in range(low, high + 1)
        for i in range(len(wrapped) - n + 1)
    ]
    return grams or [wrapped]


class SubwordHashModel:
    """Mean of hashed character n-gram vectors; nonzero for any nonempty form."""

    def __init__(self, dim: int = 300, salt: str = "words"):
        if dim < 1:
            raise AdapterError(f"word vector dim must be positive, got {dim}")
        self.dim = dim
        self.salt = salt

    def vector(self, word: str) -> np.ndarray:
        if not word:
            raise AdapterError("cannot embed an empty word form")
        total = np.zeros(self.dim)
        grams = _char_ngrams(word.lower())
        for gram in grams:
            total += _ngram_vector(gram, self.dim, self.salt)
        total /= len(grams)
        norm = float(np.linalg.norm(total))
        return total / norm if norm > 0 else total

    def nearest_neighbors(self, word: str, vocabulary, k: int) -> list[str]:
        """The model's own neighbor query, used as the oracle in tests."""
        center = self.vector(word)
        scored = []
        for other in vocabulary:
            if other == word:
                continue
            vec = self.vector(other)
            cosine = float(np.dot(center, vec) / (np.linalg.norm(center) * np.linalg.norm(vec)))
            scored.append((1.0 - cosine, other))
        scored.sort()
        return [w for _, w in scored[:k]]


class TableWordModel(SubwordHashModel):
    """Pretrained vectors served verbatim; unseen forms fall back to subwords.

    Accepts the plain text convention: an optional ``count dim`` first line,
    then ``word v1 ... vN`` rows separated by spaces or tabs.
    """

    def __init__(self, path: str | Path, salt: str = "words"):
        self.table: dict[str, np.ndarray] = {}
        dim = None
        with open(path, "r", encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                parts = line.rstrip("\n").replace("\t", " ").split()
                if not parts or line.startswith("#"):
                    continue
                if lineno == 1 and len(parts) == 2 and all(p.isdigit() for p in parts):
                    dim = int(parts[1])
                    continue
                word, values = parts[0], parts[1:]
                if dim is None:
                    dim = len(values)
                if len(values) != dim:
                    raise AdapterError(f"{path}:{lineno}: row for {word!r} has {len(values)} values, expected {dim}")
                try:
                    self.table[word] = np.array([float(v) for v in values])
                except ValueError:
                    raise AdapterError(f"{path}:{lineno}: non-numeric value for {word!r}") from None
        if dim is None:
            raise AdapterError(f"{path}: empty word vector table")
        super().__init__(dim=dim, salt=salt)

    def vector(self, word: str) -> np.ndarray:
        hit = self.table.get(word)
        if hit is not None:
            return hit
        return super().vector(word)


def word_model(model_id: str):
    parts = model_id.split(":", 2)
    if parts[0] == "subword":
        dim = int(parts[1]) if len(parts) > 1 and parts[1] else 300
        salt = parts[2] if len(parts) > 2 else "words"
        return SubwordHashModel(dim=dim, salt=salt)
    if parts[0] == "table":
        if len(parts) < 2:
            raise AdapterError("table model id must be table:<path>")
        return TableWordModel(parts[1])
    raise AdapterError(f"unknown word model id {model_id!r} (expected subword:<dim> or table:<path>)")
