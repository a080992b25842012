"""File plumbing shared by the adapter jobs.

The formats written here are the engine's file contracts; the engine never
imports this package, and this package never imports the engine. Every
output is written atomically (temp file + rename) and carries a commented
provenance header that the engine's loaders skip.
"""
from __future__ import annotations

import json
import os
import tempfile
from pathlib import Path


class AdapterError(Exception):
    pass


def atomic_write(path: str | Path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def provenance_header(model_id: str, version: str = "1") -> str:
    return f"# model={model_id} version={version}\n"


def read_jsonl(path: str | Path) -> list[dict]:
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            try:
                obj = json.loads(stripped)
            except json.JSONDecodeError as exc:
                raise AdapterError(f"{path}:{lineno}: invalid JSON: {exc.msg}") from None
            if not isinstance(obj, dict):
                raise AdapterError(f"{path}:{lineno}: expected an object")
            rows.append(obj)
    return rows


def jsonl_text(rows: list[dict], model_id: str | None = None) -> str:
    lines = [provenance_header(model_id).rstrip("\n")] if model_id else []
    lines.extend(json.dumps(row, ensure_ascii=False) for row in rows)
    return "\n".join(lines) + "\n"


def embedding_tsv_text(vectors: dict[str, "list[float]"], dim: int, model_id: str) -> str:
    lines = [provenance_header(model_id).rstrip("\n"), f"dim\t{dim}"]
    for identifier in sorted(vectors):
        vec = vectors[identifier]
        if len(vec) != dim:
            raise AdapterError(f"vector for {identifier!r} has length {len(vec)}, expected {dim}")
        lines.append(identifier + "\t" + "\t".join(format(float(x), ".17g") for x in vec))
    return "\n".join(lines) + "\n"


def metric_tsv_text(scores: dict[tuple[str, int], float], model_id: str) -> str:
    lines = [provenance_header(model_id).rstrip("\n")]
    for query_id, rank in sorted(scores):
        lines.append(f"{query_id}\t{rank}\t{format(scores[(query_id, rank)], '.17g')}")
    return "\n".join(lines) + "\n"


def read_gloss_entries(path: str | Path) -> list[dict]:
    """Gloss JSONL rows; only the fields the adapters need are validated."""
    entries = []
    for row in read_jsonl(path):
        for key in ("entry_id", "definition_id", "word", "definition", "example"):
            if not isinstance(row.get(key), str):
                raise AdapterError(f"{path}: gloss row missing {key!r}")
        entries.append(row)
    return entries


def read_inventory(path: str | Path) -> dict[str, list[dict]]:
    """Sense inventory rows grouped by word, preserving file order."""
    senses: dict[str, list[dict]] = {}
    for row in read_jsonl(path):
        for key in ("word", "sense_id", "definition"):
            if not isinstance(row.get(key), str):
                raise AdapterError(f"{path}: inventory row missing {key!r}")
        senses.setdefault(row["word"], []).append(row)
    return senses
