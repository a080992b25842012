"""FastAPI service wrapping the interpretation engine.

Two surfaces: batch pipeline commands (preprocess, train, rerank and the
two evaluation harnesses) that read and write files on the service host,
and in-memory engines that rerank candidate sets sent inline for
interactive use.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import contrastive, corpus, reranker, semantic
from ..config import apply_overrides, config_from_dict, load_config
from ..embeddings import EmbeddingTable, load_table
from ..errors import ConfigError, DataError, DivergenceError, EngineError
from ..pipeline import COMMANDS
from . import schemas

_ERROR_KINDS = {ConfigError: "config", DataError: "data", DivergenceError: "divergence"}
_ERROR_STATUS = {"config": 400, "data": 422, "divergence": 500}


def error_kind(exc: EngineError) -> str:
    for cls, kind in _ERROR_KINDS.items():
        if isinstance(exc, cls):
            return kind
    return "config"


@dataclass
class Engine:
    name: str
    dataset: corpus.Dataset
    model: semantic.PrototypeModel
    word_vectors: EmbeddingTable | None
    rerank_config: reranker.RerankConfig

    def info(self) -> schemas.EngineInfo:
        return schemas.EngineInfo(
            name=self.name,
            vocabulary_size=len(self.dataset.vocabulary),
            sentence_embeddings=len(self.model.sense_embeddings),
            h_m=self.model.kernel_width,
            use_cf=self.rerank_config.use_cf,
        )


def _load_engine(request: schemas.EngineLoadRequest) -> Engine:
    for label, path in (
        ("dataset", request.dataset),
        ("inventory", request.inventory),
        ("sentence_embeddings", request.sentence_embeddings),
        ("encoder", request.encoder),
    ):
        if not Path(path).exists():
            raise ConfigError(f"engine {label} file not found: {path}")
    stopwords = corpus.load_stopwords(request.stopwords)
    inventory = corpus.load_inventory(request.inventory)
    dataset = replace(corpus.load_glosses(request.dataset), inventory=inventory, stopwords=stopwords)
    table = load_table(request.sentence_embeddings, "sentence")
    params = contrastive.load_params(request.encoder)
    word_vectors = load_table(request.word_vectors, "word") if request.word_vectors else None
    rerank_config = reranker.RerankConfig(
        h_cf=request.h_cf, neighborhood_size=request.neighborhood_size, use_cf=request.use_cf
    )
    rerank_config.validate()
    if rerank_config.use_cf and rerank_config.neighborhood_size > 1 and word_vectors is None:
        raise ConfigError("collaborative filtering requires word_vectors")
    model = semantic.PrototypeModel(params, table, inventory, request.h_m)
    return Engine(request.name, dataset, model, word_vectors, rerank_config)


def _to_candidate_set(query: schemas.CandidateSetModel) -> reranker.CandidateSet:
    return reranker.CandidateSet(
        query_id=query.query_id,
        word=query.word,
        context=query.context,
        generator=query.generator,
        candidates=tuple(
            reranker.Candidate(
                rank_in=c.rank_in,
                definition=c.definition,
                definition_embedding_id=c.definition_embedding_id,
                surface=c.surface,
                gen_score=c.gen_score,
                pos_match=c.pos_match,
            )
            for c in query.candidates
        ),
    )


def create_app() -> FastAPI:
    app = FastAPI(title="slangsense", version="0.1.0")
    engines: dict[str, Engine] = {}

    @app.exception_handler(EngineError)
    async def engine_error_handler(_: Request, exc: EngineError):
        kind = error_kind(exc)
        detail = schemas.ErrorDetail(kind=kind, message=str(exc))
        return JSONResponse(status_code=_ERROR_STATUS[kind], content={"detail": detail.model_dump()})

    @app.get("/health", response_model=schemas.HealthResponse)
    def health():
        return schemas.HealthResponse(status="ok", engines=sorted(engines))

    def _run_command(name: str, request: schemas.CommandRequest) -> schemas.CommandResponse:
        if request.config_path is not None:
            config = load_config(request.config_path)
        else:
            config = config_from_dict(request.config, base_dir=".")
        config = apply_overrides(config, name, seed=request.seed, out=request.out, no_cf=request.no_cf)
        report = COMMANDS[name](config)
        return schemas.CommandResponse(command=name, report=report)

    @app.post("/commands/preprocess", response_model=schemas.CommandResponse)
    def run_preprocess(request: schemas.CommandRequest):
        return _run_command("preprocess", request)

    @app.post("/commands/train", response_model=schemas.CommandResponse)
    def run_train(request: schemas.CommandRequest):
        return _run_command("train", request)

    @app.post("/commands/rerank", response_model=schemas.CommandResponse)
    def run_rerank(request: schemas.CommandRequest):
        return _run_command("rerank", request)

    @app.post("/commands/eval-mrr", response_model=schemas.CommandResponse)
    def run_eval_mrr(request: schemas.CommandRequest):
        return _run_command("eval-mrr", request)

    @app.post("/commands/eval-mt", response_model=schemas.CommandResponse)
    def run_eval_mt(request: schemas.CommandRequest):
        return _run_command("eval-mt", request)

    @app.post("/engines", response_model=schemas.EngineInfo)
    def load_engine(request: schemas.EngineLoadRequest):
        engine = _load_engine(request)
        engines[engine.name] = engine
        return engine.info()

    @app.get("/engines", response_model=list[schemas.EngineInfo])
    def list_engines():
        return [engines[name].info() for name in sorted(engines)]

    @app.post("/engines/{name}/interpret", response_model=schemas.RankedListModel)
    def interpret(name: str, request: schemas.InterpretRequest):
        if name not in engines:
            raise ConfigError(f"no engine named {name!r} is loaded")
        engine = engines[name]
        rerank_config = engine.rerank_config
        if request.use_cf is not None:
            rerank_config = replace(rerank_config, use_cf=request.use_cf)
        candidate_set = _to_candidate_set(request.query)
        ranked = reranker.rerank(
            candidate_set,
            engine.model,
            word_vectors=engine.word_vectors,
            vocab=engine.dataset.vocabulary,
            config=rerank_config,
        )
        return schemas.RankedListModel(
            query_id=ranked.query_id,
            word=candidate_set.word,
            entries=[
                schemas.RankedEntryModel(
                    score=e.score,
                    candidate=schemas.CandidateModel(
                        rank_in=e.candidate.rank_in,
                        definition=e.candidate.definition,
                        definition_embedding_id=e.candidate.definition_embedding_id,
                        surface=e.candidate.surface,
                        gen_score=e.candidate.gen_score,
                        pos_match=e.candidate.pos_match,
                    ),
                )
                for e in ranked.entries
            ],
        )

    return app


app = create_app()
