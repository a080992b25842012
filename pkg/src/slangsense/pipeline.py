"""Pipeline commands behind the service endpoints and the CLI.

Every command validates its full configuration before any side effect,
writes deterministic outputs (reruns with the same config and seeds are
byte-identical), and returns a JSON-serializable report.
"""
from __future__ import annotations

import json
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import contrastive, corpus, eval_mrr, eval_translation, reranker, semantic
from .config import RunConfig
from .embeddings import load_table
from .errors import ConfigError, DataError


def _require_files(pairs: list[tuple[str, str | None]]) -> None:
    missing = []
    for label, path in pairs:
        if path is None:
            missing.append(f"{label} (not configured)")
        elif not Path(path).exists():
            missing.append(f"{label} ({path})")
    if missing:
        raise ConfigError("missing inputs: " + "; ".join(missing))


def _write_json(obj: dict, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _load_dataset(config: RunConfig, path: str) -> corpus.Dataset:
    stopwords = corpus.load_stopwords(config.paths.stopwords)
    inventory = corpus.load_inventory(config.paths.inventory)
    dataset = corpus.load_glosses(path, config.preprocess.source_label)
    return replace(dataset, inventory=inventory, stopwords=stopwords)


def cmd_preprocess(config: RunConfig) -> dict:
    """Load, validate, filter and split the gloss corpus; write the result."""
    config.validate_numeric()
    _require_files(
        [("gloss file", p) for p in (config.paths.glosses or [None])]
        + [("inventory", config.paths.inventory)]
        + ([("stopwords", config.paths.stopwords)] if config.paths.stopwords else [])
    )
    Path(config.paths.out_dir).mkdir(parents=True, exist_ok=True)

    stopwords = corpus.load_stopwords(config.paths.stopwords)
    inventory = corpus.load_inventory(config.paths.inventory)
    entries: list[corpus.GlossEntry] = []
    seen: set[str] = set()
    for path in config.paths.glosses:
        part = corpus.load_glosses(path, config.preprocess.source_label)
        for entry in part.entries:
            if entry.entry_id in seen:
                raise DataError(f"duplicate entry_id {entry.entry_id!r} across gloss files")
            seen.add(entry.entry_id)
            entries.append(entry)
    dataset = corpus.Dataset(tuple(entries), inventory, stopwords)
    dataset.check_split_disjointness()

    filtered, report = corpus.filter_entries(dataset)
    if not filtered.split("dev") and config.preprocess.dev_fraction > 0:
        filtered = corpus.assign_dev_split(
            filtered, config.preprocess.dev_fraction, config.preprocess.dev_seed
        )
    corpus.write_glosses(filtered, config.paths.dataset_path)

    summary = {
        "input_entries": len(dataset.entries),
        "kept_entries": report.kept,
        "removed": report.removed,
        "dev_entries": len(filtered.split("dev")),
        "stats": corpus.dataset_stats(filtered),
        "dataset_path": config.paths.dataset_path,
    }
    _write_json(summary, Path(config.paths.out_dir) / "preprocess_report.json")
    return summary


def cmd_train(config: RunConfig) -> dict:
    """Train the contrastive sense encoder and write its parameters."""
    config.validate_numeric()
    _require_files(
        [
            ("dataset", config.paths.dataset_path),
            ("inventory", config.paths.inventory),
            ("sentence embeddings", config.paths.sentence_embeddings),
        ]
    )
    Path(config.paths.out_dir).mkdir(parents=True, exist_ok=True)

    dataset = _load_dataset(config, config.paths.dataset_path)
    table = load_table(config.paths.sentence_embeddings, "sentence")
    train_cfg = config.train

    def epoch_triplets(epoch: int) -> list[contrastive.Triplet]:
        seed = np.random.SeedSequence([train_cfg.seed, 2, epoch]).generate_state(1)[0]
        return contrastive.build_triplets(dataset, table, train_cfg, split="train", seed=int(seed))

    dev_seed = int(np.random.SeedSequence([train_cfg.seed, 3]).generate_state(1)[0])
    dev_triplets = (
        contrastive.build_triplets(dataset, table, train_cfg, split="dev", seed=dev_seed)
        if dataset.split("dev")
        else []
    )
    result = contrastive.train_encoder(
        epoch_triplets(0), table, train_cfg, dev_triplets=dev_triplets, resample=epoch_triplets
    )
    contrastive.save_params(result.params, config.paths.encoder_path)

    log = {
        "initial_train_loss": result.initial_train_loss,
        "initial_dev_loss": result.initial_dev_loss,
        "epochs": [
            {
                "epoch": i + 1,
                "train_loss": result.train_losses[i],
                "dev_loss": result.dev_losses[i] if result.dev_losses else None,
            }
            for i in range(len(result.train_losses))
        ],
        "encoder_path": config.paths.encoder_path,
        "seed": train_cfg.seed,
    }
    _write_json(log, Path(config.paths.out_dir) / "train_log.json")
    return log


def _candidate_sets_by_query(path: str) -> dict[str, reranker.CandidateSet]:
    return {cset.query_id: cset for cset in reranker.load_candidate_sets(path)}


def _select_width(config: RunConfig, dataset, table, params, word_vectors) -> tuple[float, bool]:
    """Grid-search the prototype kernel width on dev data when configured."""
    if not config.kernel_width_grid:
        return config.kernel_width, False
    dev_entries = dataset.split("dev")
    sets = _candidate_sets_by_query(config.paths.candidates)
    pool = _negative_pool(dataset)
    dev_queries = []
    mode = config.eval.modes[0]
    seed = config.eval.seeds[0]
    for entry in dev_entries:
        cset = sets.get(entry.entry_id)
        if cset is None:
            continue
        item = eval_mrr.sample_negatives(
            entry.entry_id,
            eval_mrr.ChoiceOption(entry.definition, entry.definition_id),
            pool,
            mode,
            eval_mrr.derive_seed(seed, entry.entry_id),
            dataset.stopwords,
        )
        dev_queries.append((cset, item))
    width = semantic.select_kernel_width(
        params,
        table,
        dataset.inventory,
        dev_queries,
        config.kernel_width_grid,
        word_vectors=word_vectors,
        vocab=dataset.vocabulary,
        rerank_config=config.rerank,
    )
    return width, True


def cmd_rerank(config: RunConfig) -> dict:
    """Rescore every candidate set with the semantic model and write the ranking."""
    config.validate_numeric()
    needs_word_vectors = config.rerank.use_cf and config.rerank.neighborhood_size > 1
    _require_files(
        [
            ("dataset", config.paths.dataset_path),
            ("inventory", config.paths.inventory),
            ("sentence embeddings", config.paths.sentence_embeddings),
            ("encoder parameters", config.paths.encoder_path),
            ("candidate sets", config.paths.candidates),
        ]
        + ([("word vectors", config.paths.word_vectors)] if needs_word_vectors else [])
    )
    Path(config.paths.out_dir).mkdir(parents=True, exist_ok=True)

    dataset = _load_dataset(config, config.paths.dataset_path)
    table = load_table(config.paths.sentence_embeddings, "sentence")
    params = contrastive.load_params(config.paths.encoder_path)
    word_vectors = (
        load_table(config.paths.word_vectors, "word") if needs_word_vectors else None
    )
    width, searched = _select_width(config, dataset, table, params, word_vectors)
    model = semantic.PrototypeModel(params, table, dataset.inventory, width)

    sets = reranker.load_candidate_sets(config.paths.candidates)
    ranked = [
        (
            reranker.rerank(
                cset,
                model,
                word_vectors=word_vectors,
                vocab=dataset.vocabulary,
                config=config.rerank,
            ),
            cset,
        )
        for cset in sets
    ]
    reranker.write_ranked_lists(ranked, config.paths.reranked_path)
    return {
        "queries": len(ranked),
        "h_m": width,
        "h_m_grid_searched": searched,
        "use_cf": config.rerank.use_cf,
        "neighborhood_size": config.rerank.neighborhood_size,
        "reranked_path": config.paths.reranked_path,
    }


def _negative_pool(dataset: corpus.Dataset) -> list[eval_mrr.ChoiceOption]:
    """Unique training definitions, keyed and ordered by definition_id."""
    seen: dict[str, eval_mrr.ChoiceOption] = {}
    for entry in dataset.split("train"):
        seen.setdefault(entry.definition_id, eval_mrr.ChoiceOption(entry.definition, entry.definition_id))
    return [seen[k] for k in sorted(seen)]


def cmd_eval_mrr(config: RunConfig) -> dict:
    """Multiple-choice evaluation of baseline and reranked interpretations."""
    config.validate_numeric()
    systems = list(config.eval.systems)
    required = [
        ("dataset", config.paths.dataset_path),
        ("sentence embeddings", config.paths.sentence_embeddings),
        ("inventory", config.paths.inventory),
    ]
    if "baseline" in systems:
        required.append(("candidate sets", config.paths.candidates))
    if "reranked" in systems:
        required.append(("reranked lists", config.paths.reranked_path))
    _require_files(required)
    out_dir = Path(config.paths.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    dataset = _load_dataset(config, config.paths.dataset_path)
    table = load_table(config.paths.sentence_embeddings, "sentence")
    pool = _negative_pool(dataset)
    test_entries = {e.entry_id: e for e in dataset.split("test")}

    predictions: dict[str, dict[str, str]] = {}
    if "baseline" in systems:
        sets = _candidate_sets_by_query(config.paths.candidates)
        predictions["baseline"] = {
            qid: cset.candidates[0].definition_embedding_id for qid, cset in sets.items()
        }
    if "reranked" in systems:
        ranked = reranker.load_ranked_lists(config.paths.reranked_path)
        predictions["reranked"] = {
            rl.query_id: rl.entries[0].candidate.definition_embedding_id for rl, _ in ranked
        }

    summary: dict = {"systems": {}}
    for system in systems:
        preds = predictions[system]
        evaluated = sorted(qid for qid in preds if qid in test_entries)
        if not evaluated:
            raise DataError(f"no test entries have {system} predictions")
        skipped = len(test_entries) - len(evaluated)
        per_mode: dict = {}
        for mode in config.eval.modes:
            per_seed = {}
            for seed in config.eval.seeds:
                rows = []
                for qid in evaluated:
                    entry = test_entries[qid]
                    item = eval_mrr.sample_negatives(
                        qid,
                        eval_mrr.ChoiceOption(entry.definition, entry.definition_id),
                        pool,
                        mode,
                        eval_mrr.derive_seed(seed, qid),
                        dataset.stopwords,
                    )
                    rank = eval_mrr.rank_groundtruth(preds[qid], item, table)
                    rows.append(
                        {
                            "query_id": qid,
                            "rank": rank,
                            "reciprocal_rank": 1.0 / rank,
                            "context_bucket": eval_mrr.context_length(entry, dataset.stopwords),
                        }
                    )
                report = eval_mrr.EvalReport.from_rows(mode, seed, rows)
                stem = f"eval_mrr_{system}_{mode}_{seed}"
                eval_mrr.write_report(report, out_dir / f"{stem}.json", out_dir / f"{stem}.tsv")
                per_seed[str(seed)] = report.mrr
            per_mode[mode] = {
                "per_seed": per_seed,
                "mean_mrr": float(np.mean(list(per_seed.values()))),
            }
        summary["systems"][system] = {
            "queries": len(evaluated),
            "skipped_without_predictions": skipped,
            "modes": per_mode,
        }
    _write_json(summary, out_dir / "eval_mrr_summary.json")
    return summary


def cmd_eval_mt(config: RunConfig) -> dict:
    """Best-of-top-n translation score curves for baseline and reranked orders."""
    config.validate_numeric()
    _require_files(
        [("translation records", config.paths.translations)]
        + [(f"{m} scores", p) for m, p in sorted(config.paths.metric_scores.items())]
    )
    out_dir = Path(config.paths.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    records = eval_translation.load_translation_records(config.paths.translations)
    for metric, path in sorted(config.paths.metric_scores.items()):
        scores = eval_translation.load_metric_scores(path, metric)
        records = eval_translation.attach_metric_scores(records, scores, metric)

    permutations: dict[str, tuple[int, ...]] | None = None
    if Path(config.paths.reranked_path).exists():
        ranked = reranker.load_ranked_lists(config.paths.reranked_path)
        permutations = {rl.query_id: rl.permutation() for rl, _ in ranked}
        for record in records:
            if record.query_id not in permutations:
                raise DataError(f"no reranked list for translation query {record.query_id!r}")
            perm = permutations[record.query_id]
            if sorted(perm) != list(range(len(record.candidates))):
                raise DataError(
                    f"reranked list for {record.query_id!r} is not a permutation of its candidates"
                )

    metrics = ["bleu"] + sorted(config.paths.metric_scores)
    length = config.eval.curve_length
    aggregates: dict = {}
    for metric in metrics:
        baseline_rows, ssi_rows = [], []
        for record in records:
            if metric == "bleu":
                values = eval_translation.compute_bleu_scores(record)
            else:
                values = [getattr(c, metric) for c in record.candidates]
            baseline_rows.append(values)
            if permutations is not None:
                ssi_rows.append([values[i] for i in permutations[record.query_id]])
        baseline_curve = eval_translation.make_curve(metric, baseline_rows, length)
        curves = {"baseline": baseline_curve}
        if permutations is not None:
            curves["ssi"] = eval_translation.make_curve(metric, ssi_rows, length)

        curve_path = out_dir / f"curve_{metric}.tsv"
        with open(curve_path, "w", encoding="utf-8") as fh:
            header = "n\tbaseline_best" + ("\tssi_best" if "ssi" in curves else "")
            fh.write(header + "\n")
            for n in range(length):
                row = f"{n + 1}\t{format(curves['baseline'].values[n], '.17g')}"
                if "ssi" in curves:
                    row += f"\t{format(curves['ssi'].values[n], '.17g')}"
                fh.write(row + "\n")
        aggregates[metric] = {
            name: {"aggregate": curve.aggregate, "curve_path": str(curve_path)}
            for name, curve in curves.items()
        }

    summary = {"records": len(records), "curve_length": length, "metrics": aggregates}
    _write_json(summary, out_dir / "eval_mt_aggregates.json")
    return summary


COMMANDS = {
    "preprocess": cmd_preprocess,
    "train": cmd_train,
    "rerank": cmd_rerank,
    "eval-mrr": cmd_eval_mrr,
    "eval-mt": cmd_eval_mt,
}
