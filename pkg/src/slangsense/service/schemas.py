"""Request and response models for the HTTP service."""
from __future__ import annotations

from pydantic import BaseModel, Field, model_validator


class CommandRequest(BaseModel):
    """One pipeline command run; exactly one of config_path / config."""

    config_path: str | None = None
    config: dict | None = None
    seed: int | None = None
    out: str | None = None
    no_cf: bool = False

    @model_validator(mode="after")
    def _exactly_one_config(self):
        if (self.config_path is None) == (self.config is None):
            raise ValueError("provide exactly one of config_path or config")
        return self


class CommandResponse(BaseModel):
    command: str
    report: dict


class CandidateModel(BaseModel):
    rank_in: int
    definition: str
    definition_embedding_id: str
    surface: str | None = None
    gen_score: float | None = None
    pos_match: bool | None = None


class CandidateSetModel(BaseModel):
    query_id: str
    word: str
    context: str
    generator: str = "client"
    candidates: list[CandidateModel] = Field(min_length=1)


class RankedEntryModel(BaseModel):
    score: float
    candidate: CandidateModel


class RankedListModel(BaseModel):
    query_id: str
    word: str
    entries: list[RankedEntryModel]


class EngineLoadRequest(BaseModel):
    """Resources to hold in memory for interactive interpretation."""

    name: str
    dataset: str
    inventory: str
    sentence_embeddings: str
    encoder: str
    word_vectors: str | None = None
    stopwords: str | None = None
    h_m: float = 0.1
    h_cf: float = 0.1
    neighborhood_size: int = 5
    use_cf: bool = True


class EngineInfo(BaseModel):
    name: str
    vocabulary_size: int
    sentence_embeddings: int
    h_m: float
    use_cf: bool


class InterpretRequest(BaseModel):
    query: CandidateSetModel
    use_cf: bool | None = None


class HealthResponse(BaseModel):
    status: str
    engines: list[str]


class ErrorDetail(BaseModel):
    kind: str
    message: str
