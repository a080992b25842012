"""Context infill models behind the gen-candidates job.

The default backend scores every lexicon word by cosine similarity between
its word vector and the mean vector of the visible context tokens, then
normalizes to log-probabilities. It is a genuine context-only generator
(the blanked word contributes nothing) and fully deterministic.
``hf:<name>`` selects a masked-LM backend when transformers is installed.
"""
from __future__ import annotations

import math
import re

import numpy as np

from .io import AdapterError

BLANK = "____"
_TOKEN_RE = re.compile(r"[a-z0-9]+")


class CooccurrenceInfill:
    """Rank lexicon words by fit to the context's mean word vector."""

    def __init__(self, word_model, lexicon: list[str]):
        if not lexicon:
            raise AdapterError("infill lexicon is empty")
        self.word_model = word_model
        self.lexicon = sorted(set(lexicon))

    def infill(self, masked_context: str, top_n: int) -> list[tuple[str, float]]:
        if BLANK not in masked_context:
            raise AdapterError(f"masked context has no blank marker: {masked_context!r}")
        # the marker is non-alphanumeric, so tokenization drops the blank itself
        tokens = _TOKEN_RE.findall(masked_context.lower())
        if tokens:
            context = np.mean([self.word_model.vector(t) for t in tokens], axis=0)
            norm = float(np.linalg.norm(context))
        else:
            context, norm = None, 0.0

        scores = []
        for word in self.lexicon:
            if norm > 0:
                vec = self.word_model.vector(word)
                denom = float(np.linalg.norm(vec)) * norm
                fit = float(np.dot(vec, context)) / denom if denom > 0 else 0.0
            else:
                fit = 0.0
            scores.append((word, fit))
        # softmax over fit scores; ties resolve alphabetically via the sort key
        peak = max(fit for _, fit in scores)
        total = sum(math.exp(fit - peak) for _, fit in scores)
        ranked = sorted(
            ((word, (fit - peak) - math.log(total)) for word, fit in scores),
            key=lambda pair: (-pair[1], pair[0]),
        )
        return ranked[:top_n]


class MaskedLmInfill:
    """transformers fill-mask backend; requires the optional models extra."""

    def __init__(self, name: str):
        try:
            from transformers import pipeline
        except ImportError as exc:
            raise AdapterError(
                "transformers is not installed; use the cooccurrence model or "
                "install the [models] extra"
            ) from exc
        self._fill = pipeline("fill-mask", model=name)
        self._mask_token = self._fill.tokenizer.mask_token

    def infill(self, masked_context: str, top_n: int) -> list[tuple[str, float]]:
        text = masked_context.replace(BLANK, self._mask_token)
        results = self._fill(text, top_k=top_n)
        return [(r["token_str"].strip(), math.log(max(r["score"], 1e-30))) for r in results]


def infill_model(model_id: str, word_model=None, lexicon=None):
    parts = model_id.split(":", 1)
    if parts[0] == "cooccurrence":
        if word_model is None or lexicon is None:
            raise AdapterError("cooccurrence infill needs a word model and a lexicon")
        return CooccurrenceInfill(word_model, lexicon)
    if parts[0] == "hf":
        if len(parts) < 2:
            raise AdapterError("masked-LM model id must be hf:<name>")
        return MaskedLmInfill(parts[1])
    raise AdapterError(f"unknown infill model id {model_id!r} (expected cooccurrence or hf:<name>)")
