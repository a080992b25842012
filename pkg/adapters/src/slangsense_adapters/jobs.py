"""The five batch jobs. Each consumes and emits the engine's file formats;
outputs are deterministic for fixed model ids and inputs."""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path

from . import io
from .infill import BLANK, infill_model
from .io import AdapterError
from .lexicon import lookup_definition
from .sentence_models import sentence_encoder
from .translate import metric_model, translator
from .word_models import word_model

TASKS = ("embed-sentences", "embed-words", "gen-candidates", "translate", "score-metrics")


def _require_file(path, label: str) -> str:
    if not path:
        raise AdapterError(f"{label} path is not set")
    if not Path(path).exists():
        raise AdapterError(f"{label} file not found: {path}")
    return str(path)


@dataclass
class AdapterJob:
    task: str
    inputs: dict[str, object] = field(default_factory=dict)
    model_ids: dict[str, str] = field(default_factory=dict)
    output: str = ""
    top_n: int = 50

    def run(self) -> dict:
        if self.task not in TASKS:
            raise AdapterError(f"unknown task {self.task!r}")
        runner = {
            "embed-sentences": run_embed_sentences,
            "embed-words": run_embed_words,
            "gen-candidates": run_gen_candidates,
            "translate": run_translate,
            "score-metrics": run_score_metrics,
        }[self.task]
        return runner(self)


def run_embed_sentences(job: AdapterJob) -> dict:
    """One row per definition_id and sense_id (plus any candidate definition
    ids from supplied candidate files); identical texts embed identically."""
    encoder = sentence_encoder(job.model_ids.get("sentences", "hash:768"))
    texts: dict[str, str] = {}

    def claim(identifier: str, text: str, origin: str):
        if not text.strip():
            raise AdapterError(f"{origin}: empty text for id {identifier!r}")
        previous = texts.get(identifier)
        if previous is not None and previous != text:
            raise AdapterError(f"{origin}: id {identifier!r} maps to two different texts")
        texts[identifier] = text

    for path in job.inputs.get("glosses", []):
        for entry in io.read_gloss_entries(_require_file(path, "gloss")):
            claim(entry["definition_id"], entry["definition"], path)
    inventory_path = job.inputs.get("inventory")
    if inventory_path:
        _require_file(inventory_path, "inventory")
        for senses in io.read_inventory(inventory_path).values():
            for sense in senses:
                claim(sense["sense_id"], sense["definition"], inventory_path)
    for path in job.inputs.get("candidates", []):
        for row in io.read_jsonl(_require_file(path, "candidates")):
            for cand in row.get("candidates", []):
                if "definition_embedding_id" not in cand or "definition" not in cand:
                    raise AdapterError(f"{path}: candidate row missing definition fields")
                claim(cand["definition_embedding_id"], cand["definition"], path)
    if not texts:
        raise AdapterError("no texts to embed")

    vectors = {identifier: encoder.encode(text).tolist() for identifier, text in texts.items()}
    io.atomic_write(job.output, io.embedding_tsv_text(vectors, encoder.dim, _model_id(job, "sentences", "hash:768")))
    return {"rows": len(vectors), "dim": encoder.dim, "output": job.output}


def run_embed_words(job: AdapterJob) -> dict:
    model = word_model(_model_id(job, "words", "subword:300"))
    vocab_path = job.inputs.get("vocab")
    if not vocab_path:
        raise AdapterError("embed-words needs a vocab file")
    _require_file(vocab_path, "vocab")
    words = []
    with open(vocab_path, "r", encoding="utf-8") as fh:
        for line in fh:
            stripped = line.strip()
            if stripped and not stripped.startswith("#"):
                words.append(stripped)
    if not words:
        raise AdapterError(f"{vocab_path}: empty vocabulary")
    vectors = {w: model.vector(w).tolist() for w in dict.fromkeys(words)}
    io.atomic_write(job.output, io.embedding_tsv_text(vectors, model.dim, _model_id(job, "words", "subword:300")))
    return {"rows": len(vectors), "dim": model.dim, "output": job.output}


def _mask_single_occurrence(example: str, word: str) -> str:
    pattern = re.compile(rf"(?<![A-Za-z0-9']){re.escape(word)}(?![A-Za-z0-9'])")
    matches = list(pattern.finditer(example))
    if len(matches) != 1:
        raise AdapterError(
            f"expected exactly one occurrence of {word!r} in {example!r}, found {len(matches)}"
        )
    start, end = matches[0].span()
    return example[:start] + BLANK + example[end:]


def run_gen_candidates(job: AdapterJob) -> dict:
    """Blank the slang span, keep the model's top alphanumeric infills, look
    up their dictionary definitions, and prefer POS-matching candidates."""
    gloss_paths = job.inputs.get("glosses", [])
    inventory_path = job.inputs.get("inventory")
    if not gloss_paths or not inventory_path:
        raise AdapterError("gen-candidates needs gloss and inventory files")
    for path in gloss_paths:
        _require_file(path, "gloss")
    inventory = io.read_inventory(_require_file(inventory_path, "inventory"))
    words_backend = word_model(_model_id(job, "words", "subword:300"))
    model_id = _model_id(job, "infill", "cooccurrence")
    model = infill_model(model_id, word_model=words_backend, lexicon=sorted(inventory))
    pos_check = bool(job.inputs.get("pos_check", True))

    rows = []
    for path in gloss_paths:
        for entry in io.read_gloss_entries(path):
            masked = _mask_single_occurrence(entry["example"], entry["word"])
            proposals = model.infill(masked, max(job.top_n * 2, job.top_n + 10))
            kept = [(w, lp) for w, lp in proposals if w.isalnum()][: job.top_n]
            if not kept:
                raise AdapterError(f"no candidates left after filtering for {entry['entry_id']!r}")
            expected_pos = entry.get("pos")
            candidates = []
            for surface, logprob in kept:
                definition, embedding_id, tags = lookup_definition(surface, inventory)
                pos_match = (expected_pos in tags) if expected_pos and tags else None
                candidates.append(
                    {
                        "surface": surface,
                        "definition": definition,
                        "definition_embedding_id": embedding_id,
                        "gen_score": logprob,
                        "pos_match": pos_match,
                    }
                )
            if pos_check:
                candidates.sort(key=lambda c: c["pos_match"] is not True)
            for rank, cand in enumerate(candidates):
                cand_with_rank = {"rank_in": rank}
                cand_with_rank.update(cand)
                candidates[rank] = cand_with_rank
            rows.append(
                {
                    "query_id": entry["entry_id"],
                    "word": entry["word"],
                    "context": entry["example"],
                    "generator": model_id,
                    "candidates": candidates,
                }
            )
    io.atomic_write(job.output, io.jsonl_text(rows, model_id))
    return {"queries": len(rows), "top_n": job.top_n, "output": job.output}


def _read_records(path) -> list[dict]:
    records = io.read_jsonl(path)
    for record in records:
        for key in ("query_id", "source", "gold_translation", "candidates"):
            if key not in record:
                raise AdapterError(f"{path}: translation record missing {key!r}")
    return records


def run_translate(job: AdapterJob) -> dict:
    """Fill every candidate's translation from its interpreted source."""
    records_path = job.inputs.get("records")
    if not records_path:
        raise AdapterError("translate needs a records file")
    _require_file(records_path, "records")
    model_id = _model_id(job, "mt", "identity")
    mt = translator(model_id)
    records = _read_records(records_path)
    for record in records:
        for cand in record["candidates"]:
            cand["translation"] = mt.translate(cand["interpreted_source"])
    io.atomic_write(job.output, io.jsonl_text(records, model_id))
    return {"records": len(records), "output": job.output}


def run_score_metrics(job: AdapterJob) -> dict:
    """Score every candidate translation against the gold reference, one TSV
    per metric, keyed by query_id and candidate rank."""
    records_path = job.inputs.get("records")
    if not records_path:
        raise AdapterError("score-metrics needs a records file")
    _require_file(records_path, "records")
    out_dir = Path(job.output)
    records = _read_records(records_path)
    written = {}
    for metric in ("bleurt", "comet"):
        model_id = _model_id(job, metric, "overlap")
        scorer = metric_model(metric, model_id)
        scores = {}
        for record in records:
            for rank, cand in enumerate(record["candidates"]):
                if not cand.get("translation"):
                    raise AdapterError(
                        f"record {record['query_id']!r} rank {rank} has no translation to score"
                    )
                scores[(record["query_id"], rank)] = scorer.score(
                    cand["translation"], record["gold_translation"]
                )
        path = out_dir / f"{metric}.tsv"
        io.atomic_write(path, io.metric_tsv_text(scores, f"{model_id} ({scorer.name})"))
        written[metric] = str(path)
    return {"records": len(records), "outputs": written}


def _model_id(job: AdapterJob, key: str, default: str) -> str:
    return job.model_ids.get(key) or default
