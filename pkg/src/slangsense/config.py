"""Run configuration: one YAML file binds every pipeline command.

Paths support environment-variable references (``$VAR`` / ``${VAR}``) and
resolve relative to the config file so runs are reproducible from any
working directory.
"""
from __future__ import annotations

import os
from dataclasses import dataclass, field, replace
from pathlib import Path

import yaml

from .contrastive import TrainConfig
from .errors import ConfigError
from .reranker import RerankConfig
from .semantic import DEFAULT_KERNEL_WIDTH


@dataclass
class PathsConfig:
    glosses: list[str] = field(default_factory=list)
    inventory: str | None = None
    stopwords: str | None = None
    sentence_embeddings: str | None = None
    word_vectors: str | None = None
    candidates: str | None = None
    translations: str | None = None
    metric_scores: dict[str, str] = field(default_factory=dict)
    out_dir: str = "out"
    dataset: str | None = None  # defaults to <out_dir>/dataset.jsonl
    encoder: str | None = None  # defaults to <out_dir>/encoder.txt
    reranked: str | None = None  # defaults to <out_dir>/reranked.jsonl

    @property
    def dataset_path(self) -> str:
        return self.dataset or str(Path(self.out_dir) / "dataset.jsonl")

    @property
    def encoder_path(self) -> str:
        return self.encoder or str(Path(self.out_dir) / "encoder.txt")

    @property
    def reranked_path(self) -> str:
        return self.reranked or str(Path(self.out_dir) / "reranked.jsonl")

    def resolved(self, base: Path) -> "PathsConfig":
        def fix(p: str | None) -> str | None:
            if p is None:
                return None
            expanded = os.path.expanduser(os.path.expandvars(p))
            return str((base / expanded).resolve()) if not os.path.isabs(expanded) else expanded

        return PathsConfig(
            glosses=[fix(p) for p in self.glosses],
            inventory=fix(self.inventory),
            stopwords=fix(self.stopwords),
            sentence_embeddings=fix(self.sentence_embeddings),
            word_vectors=fix(self.word_vectors),
            candidates=fix(self.candidates),
            translations=fix(self.translations),
            metric_scores={k: fix(v) for k, v in self.metric_scores.items()},
            out_dir=fix(self.out_dir),
            dataset=fix(self.dataset),
            encoder=fix(self.encoder),
            reranked=fix(self.reranked),
        )


@dataclass
class EvalConfig:
    seeds: list[int] = field(default_factory=lambda: [0, 1, 2, 3, 4])
    modes: list[str] = field(default_factory=lambda: ["distinct", "random"])
    systems: list[str] = field(default_factory=lambda: ["baseline", "reranked"])
    curve_length: int = 20

    def validate(self) -> None:
        if not self.seeds:
            raise ConfigError("eval.seeds must be nonempty")
        for mode in self.modes:
            if mode not in ("distinct", "random"):
                raise ConfigError(f"unknown eval mode {mode!r}")
        for system in self.systems:
            if system not in ("baseline", "reranked"):
                raise ConfigError(f"unknown eval system {system!r}")
        if self.curve_length < 1:
            raise ConfigError("eval.curve_length must be >= 1")


@dataclass
class PreprocessConfig:
    dev_fraction: float = 0.05
    dev_seed: int = 0
    source_label: str = "corpus"


@dataclass
class RunConfig:
    paths: PathsConfig = field(default_factory=PathsConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    rerank: RerankConfig = field(default_factory=RerankConfig)
    kernel_width: float = DEFAULT_KERNEL_WIDTH  # config key: h_m
    kernel_width_grid: list[float] = field(default_factory=list)
    eval: EvalConfig = field(default_factory=EvalConfig)
    preprocess: PreprocessConfig = field(default_factory=PreprocessConfig)

    def validate_numeric(self) -> None:
        self.train.validate()
        self.rerank.validate()
        self.eval.validate()
        if self.kernel_width <= 0:
            raise ConfigError(f"h_m must be positive, got {self.kernel_width}")
        if any(w <= 0 for w in self.kernel_width_grid):
            raise ConfigError("h_m grid values must be positive")
        if not 0 <= self.preprocess.dev_fraction < 1:
            raise ConfigError("preprocess.dev_fraction must be in [0, 1)")


def _build_section(cls, obj: dict, name: str):
    if not isinstance(obj, dict):
        raise ConfigError(f"config section {name!r} must be a mapping")
    valid = {f for f in cls.__dataclass_fields__}
    unknown = set(obj) - valid
    if unknown:
        raise ConfigError(f"unknown keys in config section {name!r}: {sorted(unknown)}")
    return cls(**obj)


def config_from_dict(obj: dict, base_dir: str | Path = ".") -> RunConfig:
    if not isinstance(obj, dict):
        raise ConfigError("config root must be a mapping")
    known = {"paths", "train", "rerank", "semantic", "eval", "preprocess"}
    unknown = set(obj) - known
    if unknown:
        raise ConfigError(f"unknown top-level config keys: {sorted(unknown)}")

    paths_obj = dict(obj.get("paths", {}))
    glosses = paths_obj.get("glosses", [])
    if isinstance(glosses, str):
        paths_obj["glosses"] = [glosses]
    paths = _build_section(PathsConfig, paths_obj, "paths")

    semantic_obj = dict(obj.get("semantic", {}))
    unknown = set(semantic_obj) - {"h_m", "grid"}
    if unknown:
        raise ConfigError(f"unknown keys in config section 'semantic': {sorted(unknown)}")

    config = RunConfig(
        paths=paths.resolved(Path(base_dir)),
        train=_build_section(TrainConfig, obj.get("train", {}), "train"),
        rerank=_build_section(RerankConfig, obj.get("rerank", {}), "rerank"),
        kernel_width=semantic_obj.get("h_m", DEFAULT_KERNEL_WIDTH),
        kernel_width_grid=list(semantic_obj.get("grid") or []),
        eval=_build_section(EvalConfig, obj.get("eval", {}), "eval"),
        preprocess=_build_section(PreprocessConfig, obj.get("preprocess", {}), "preprocess"),
    )
    config.validate_numeric()
    return config


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        obj = yaml.safe_load(path.read_text("utf-8"))
    except yaml.YAMLError as exc:
        raise ConfigError(f"invalid YAML in {path}: {exc}") from None
    if obj is None:
        obj = {}
    return config_from_dict(obj, base_dir=path.parent)


def apply_overrides(
    config: RunConfig,
    command: str,
    *,
    seed: int | None = None,
    out: str | None = None,
    no_cf: bool = False,
) -> RunConfig:
    """CLI flag overrides: --seed, --out, --no-cf."""
    paths = config.paths
    if out is not None:
        paths = replace(paths, out_dir=str(Path(out).resolve()))
    train = config.train
    preprocess = config.preprocess
    eval_cfg = config.eval
    if seed is not None:
        if command == "preprocess":
            preprocess = replace(preprocess, dev_seed=seed)
        elif command == "train":
            train = replace(train, seed=seed)
        elif command == "eval-mrr":
            eval_cfg = replace(eval_cfg, seeds=[seed])
    rerank_cfg = replace(config.rerank, use_cf=False) if no_cf else config.rerank
    return replace(
        config, paths=paths, train=train, preprocess=preprocess, eval=eval_cfg, rerank=rerank_cfg
    )
