"""Dense vector tables (sentence-definition embeddings and word vectors).

Tables are stored as plain TSV so fixtures and externally produced files
interoperate byte-exactly: a `dim<TAB>N` header line, then one
`id<TAB>v1<TAB>...<TAB>vN` row per identifier. Lines starting with ``#``
are treated as provenance comments and skipped.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataError

KINDS = ("sentence", "word")


@dataclass
class EmbeddingTable:
    dim: int
    vectors: dict[str, np.ndarray]
    kind: str

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DataError(f"embedding kind must be one of {KINDS}, got {self.kind!r}")

    def __contains__(self, identifier: str) -> bool:
        return identifier in self.vectors

    def __len__(self) -> int:
        return len(self.vectors)

    @property
    def ids(self) -> tuple[str, ...]:
        return tuple(sorted(self.vectors))

    def lookup(self, identifier: str) -> np.ndarray:
        """Vector for ``identifier``; absent ids are hard errors, never zeros."""
        try:
            return self.vectors[identifier]
        except KeyError:
            raise DataError(f"no {self.kind} embedding for id {identifier!r}") from None


def load_table(path: str | Path, expected_kind: str) -> EmbeddingTable:
    """Load an embedding TSV, aborting on any malformed row."""
    vectors: dict[str, np.ndarray] = {}
    dim: int | None = None
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.rstrip("\n")
            if not stripped.strip() or stripped.startswith("#"):
                continue
            parts = stripped.split("\t")
            if dim is None:
                if len(parts) != 2 or parts[0] != "dim":
                    raise DataError(f"{path}:{lineno}: expected header 'dim<TAB>N'")
                try:
                    dim = int(parts[1])
                except ValueError:
                    raise DataError(f"{path}:{lineno}: non-integer dimension {parts[1]!r}") from None
                if dim <= 0:
                    raise DataError(f"{path}:{lineno}: dimension must be positive")
                continue
            identifier = parts[0]
            if identifier in vectors:
                raise DataError(f"{path}:{lineno}: duplicate id {identifier!r}")
            if len(parts) - 1 != dim:
                raise DataError(
                    f"{path}:{lineno}: id {identifier!r} has {len(parts) - 1} values, expected {dim}"
                )
            try:
                vec = np.array([float(x) for x in parts[1:]], dtype=np.float64)
            except ValueError:
                raise DataError(f"{path}:{lineno}: id {identifier!r} has a non-numeric value") from None
            if not np.all(np.isfinite(vec)):
                raise DataError(f"{path}:{lineno}: id {identifier!r} has a non-finite value")
            vectors[identifier] = vec
    if dim is None:
        raise DataError(f"{path}: missing 'dim' header line")
    return EmbeddingTable(dim=dim, vectors=vectors, kind=expected_kind)


def write_table(table: EmbeddingTable, path: str | Path) -> None:
    """Write a table in the TSV format ``load_table`` reads; floats round-trip."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"dim\t{table.dim}\n")
        for identifier in table.ids:
            values = "\t".join(format(v, ".17g") for v in table.vectors[identifier])
            fh.write(f"{identifier}\t{values}\n")


def euclidean_distance(u: np.ndarray, v: np.ndarray) -> float:
    if len(u) != len(v):
        raise DataError(f"vector length mismatch: {len(u)} vs {len(v)}")
    return float(np.linalg.norm(np.asarray(u, dtype=np.float64) - np.asarray(v, dtype=np.float64)))


def cosine_distance(u: np.ndarray, v: np.ndarray) -> float:
    """1 minus cosine similarity, in [0, 2]; zero vectors are an error."""
    if len(u) != len(v):
        raise DataError(f"vector length mismatch: {len(u)} vs {len(v)}")
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    nu = float(np.linalg.norm(u))
    nv = float(np.linalg.norm(v))
    if nu == 0.0 or nv == 0.0:
        raise DataError("cosine distance undefined for a zero vector")
    cos = float(np.dot(u, v)) / (nu * nv)
    return 1.0 - max(-1.0, min(1.0, cos))
