"""Sentence encoders behind the embed-sentences job.

Model ids select the backend: ``hash:<dim>[:<salt>]`` is a deterministic
feature-hashing encoder that needs no downloaded weights (the default for
hermetic runs); ``st:<name>`` loads a sentence-transformers checkpoint when
that package and its weights are available.
"""
from __future__ import annotations

import hashlib
import re

import numpy as np

from .io import AdapterError

_TOKEN_RE = re.compile(r"[a-z0-9]+")


def _token_vector(token: str, dim: int, salt: str) -> np.ndarray:
    digest = hashlib.sha256(f"{salt}\x00{token}".encode("utf-8")).digest()
    seed = int.from_bytes(digest[:8], "big")
    return np.random.default_rng(seed).normal(size=dim)


class HashSentenceEncoder:
    """Bag-of-tokens mean of hashed token vectors, L2-normalized.

    A pure function of the text: identical inputs give identical vectors on
    every platform and run.
    """

    def __init__(self, dim: int = 768, salt: str = "sentences"):
        if dim < 1:
            raise AdapterError(f"embedding dim must be positive, got {dim}")
        self.dim = dim
        self.salt = salt
        self._cache: dict[str, np.ndarray] = {}

    def encode(self, text: str) -> np.ndarray:
        tokens = _TOKEN_RE.findall(text.lower())
        if not tokens:
            raise AdapterError(f"cannot embed text without tokens: {text!r}")
        total = np.zeros(self.dim)
        for token in tokens:
            vec = self._cache.get(token)
            if vec is None:
                vec = _token_vector(token, self.dim, self.salt)
                self._cache[token] = vec
            total += vec
        total /= len(tokens)
        norm = float(np.linalg.norm(total))
        return total / norm if norm > 0 else total


class TransformerSentenceEncoder:
    """sentence-transformers backend; requires the optional models extra."""

    def __init__(self, name: str):
        try:
            from sentence_transformers import SentenceTransformer
        except ImportError as exc:
            raise AdapterError(
                "sentence-transformers is not installed; use a hash:<dim> model id "
                "or install the [models] extra"
            ) from exc
        self._model = SentenceTransformer(name)
        self.dim = int(self._model.get_sentence_embedding_dimension())

    def encode(self, text: str) -> np.ndarray:
        return np.asarray(self._model.encode([text], show_progress_bar=False)[0], dtype=np.float64)


def sentence_encoder(model_id: str):
    parts = model_id.split(":")
    if parts[0] == "hash":
        dim = int(parts[1]) if len(parts) > 1 and parts[1] else 768
        salt = parts[2] if len(parts) > 2 else "sentences"
        return HashSentenceEncoder(dim=dim, salt=salt)
    if parts[0] == "st":
        return TransformerSentenceEncoder(":".join(parts[1:]))
    raise AdapterError(f"unknown sentence model id {model_id!r} (expected hash:<dim> or st:<name>)")
