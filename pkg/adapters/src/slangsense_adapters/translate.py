"""Translation and learned-metric backends.

``identity`` copies the source sentence through, which keeps self-contained
fixture runs meaningful (gold-vs-gold scoring then sits at each metric's
maximum). ``marian:<name>`` loads a pretrained translation model when
transformers is available. The metric backends are deterministic
token-overlap scores mapped onto each metric's native scale.
"""
from __future__ import annotations

import re

from .io import AdapterError

_TOKEN_RE = re.compile(r"[a-z0-9]+|[^\sa-z0-9]")


def _tokens(text: str) -> list[str]:
    return _TOKEN_RE.findall(text.lower())


class IdentityTranslator:
    def translate(self, text: str) -> str:
        if not text.strip():
            raise AdapterError("cannot translate empty text")
        return text


class MarianTranslator:
    def __init__(self, name: str):
        try:
            from transformers import pipeline
        except ImportError as exc:
            raise AdapterError(
                "transformers is not installed; use the identity model or "
                "install the [models] extra"
            ) from exc
        self._pipe = pipeline("translation", model=name)

    def translate(self, text: str) -> str:
        return self._pipe(text)[0]["translation_text"]


def translator(model_id: str):
    parts = model_id.split(":", 1)
    if parts[0] == "identity":
        return IdentityTranslator()
    if parts[0] == "marian":
        if len(parts) < 2:
            raise AdapterError("translation model id must be marian:<name>")
        return MarianTranslator(parts[1])
    raise AdapterError(f"unknown translation model id {model_id!r}")


def _token_f1(hypothesis: str, reference: str) -> float:
    hyp, ref = _tokens(hypothesis), _tokens(reference)
    if not hyp or not ref:
        return 0.0
    from collections import Counter

    overlap = sum((Counter(hyp) & Counter(ref)).values())
    if overlap == 0:
        return 0.0
    precision = overlap / len(hyp)
    recall = overlap / len(ref)
    return 2 * precision * recall / (precision + recall)


class OverlapBleurt:
    """Token-F1 stand-in on the [0, 1] scale; 1.0 for identical sentences."""

    name = "overlap-bleurt"

    def score(self, hypothesis: str, reference: str) -> float:
        return _token_f1(hypothesis, reference)


class OverlapComet:
    """Token-F1 affinely mapped to the [-1, 1.3] scale; 1.3 for identical."""

    name = "overlap-comet"

    def score(self, hypothesis: str, reference: str) -> float:
        return -1.0 + 2.3 * _token_f1(hypothesis, reference)


def metric_model(metric: str, model_id: str):
    if model_id.startswith("overlap"):
        if metric == "bleurt":
            return OverlapBleurt()
        if metric == "comet":
            return OverlapComet()
        raise AdapterError(f"unknown metric {metric!r}")
    raise AdapterError(
        f"unknown {metric} model id {model_id!r}; the deterministic backend is 'overlap'"
    )
