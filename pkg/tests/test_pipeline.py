import json
from pathlib import Path

import numpy as np
import pytest
import yaml
from click.testing import CliRunner

from slangsense import cli, eval_translation, reranker
from slangsense.config import load_config
from slangsense.pipeline import cmd_eval_mrr, cmd_eval_mt, cmd_preprocess, cmd_rerank, cmd_train


def write_config(tmp_path, mini_paths, **overrides):
    out_dir = tmp_path / "out"
    config = {
        "paths": {
            "glosses": [mini_paths["glosses"]],
            "inventory": mini_paths["inventory"],
            "sentence_embeddings": mini_paths["sentence_embeddings"],
            "word_vectors": mini_paths["word_vectors"],
            "candidates": mini_paths["candidates"],
            "out_dir": str(out_dir),
        },
        "train": {"epochs": 3, "seed": 11, "batch_size": 16, "output_dim": 24},
        "rerank": {"h_cf": 0.1, "neighborhood_size": 3, "use_cf": True},
        "semantic": {"h_m": 1.0},
        "eval": {"seeds": [0, 1], "modes": ["distinct", "random"]},
        "preprocess": {"dev_fraction": 0.1, "dev_seed": 2},
    }
    for key, value in overrides.items():
        section, _, field = key.partition(".")
        if field:
            config.setdefault(section, {})[field] = value
        else:
            config[section] = value
    path = tmp_path / "config.yaml"
    path.write_text(yaml.safe_dump(config))
    return path


def make_translation_fixture(tmp_path, mini_paths, n_queries=5):
    """Translation records + neural metric TSVs keyed to mini-corpus queries."""
    sets = reranker.load_candidate_sets(mini_paths["candidates"])[:n_queries]
    rng = np.random.default_rng(101)
    records = []
    bleurt, comet = {}, {}
    for cset in sets:
        candidates = []
        for i, cand in enumerate(cset.candidates):
            paraphrase = f"option{i}"
            interpreted = eval_translation.insert_paraphrase(cset.context, cset.word, paraphrase)
            shared = "translated sentence with" if i % 2 else "translated text having"
            candidates.append(
                {
                    "paraphrase": paraphrase,
                    "interpreted_source": interpreted,
                    "translation": f"{shared} option {i}",
                    "bleu": None,
                    "bleurt": None,
                    "comet": None,
                }
            )
            bleurt[(cset.query_id, i)] = float(rng.uniform(0, 1))
            comet[(cset.query_id, i)] = float(rng.uniform(-1, 1.3))
        records.append(
            {
                "query_id": cset.query_id,
                "source": cset.context,
                "gold_translation": "translated sentence with the true meaning",
                "candidates": candidates,
            }
        )
    trans_path = tmp_path / "translations.jsonl"
    with open(trans_path, "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record) + "\n")
    bleurt_path = tmp_path / "bleurt.tsv"
    comet_path = tmp_path / "comet.tsv"
    eval_translation.write_metric_scores(bleurt, bleurt_path)
    eval_translation.write_metric_scores(comet, comet_path)
    return trans_path, bleurt_path, comet_path


@pytest.fixture()
def pipeline_env(tmp_path, mini_paths):
    trans, bleurt, comet = make_translation_fixture(tmp_path, mini_paths)
    config_path = write_config(
        tmp_path,
        mini_paths,
        **{
            "paths.translations": str(trans),
            "paths.metric_scores": {"bleurt": str(bleurt), "comet": str(comet)},
        },
    )
    return config_path, tmp_path / "out"


class TestPreprocess:
    def test_report_conservation(self, pipeline_env):
        config_path, out = pipeline_env
        report = cmd_preprocess(load_config(config_path))
        assert report["input_entries"] == report["kept_entries"] + sum(report["removed"].values())
        assert report["stats"]["context_sentences"] == report["kept_entries"]
        assert (out / "dataset.jsonl").exists()
        assert report["dev_entries"] > 0

    def test_rerun_on_outputs_is_identity(self, pipeline_env, tmp_path, mini_paths):
        config_path, out = pipeline_env
        first = cmd_preprocess(load_config(config_path))
        second_config = write_config(
            tmp_path, {**mini_paths, "glosses": str(out / "dataset.jsonl")},
        )
        report = cmd_preprocess(load_config(second_config))
        assert report["removed"] == {}
        assert report["kept_entries"] == first["kept_entries"]


class TestTrainCommand:
    def test_loss_log_and_determinism(self, pipeline_env):
        config_path, out = pipeline_env
        config = load_config(config_path)
        cmd_preprocess(config)
        log1 = cmd_train(config)
        assert log1["epochs"][-1]["train_loss"] < log1["initial_train_loss"]
        assert log1["epochs"][-1]["dev_loss"] is not None
        encoder_bytes = (out / "encoder.txt").read_bytes()
        log_bytes = (out / "train_log.json").read_bytes()
        log2 = cmd_train(config)
        assert (out / "encoder.txt").read_bytes() == encoder_bytes
        assert (out / "train_log.json").read_bytes() == log_bytes
        assert log1 == log2

    def test_missing_embeddings_fail_fast(self, tmp_path, mini_paths):
        config_path = write_config(
            tmp_path, {**mini_paths, "sentence_embeddings": str(tmp_path / "absent.tsv")}
        )
        config = load_config(config_path)
        cmd_preprocess(config)
        from slangsense.errors import ConfigError

        with pytest.raises(ConfigError, match="missing inputs"):
            cmd_train(config)
        assert not (tmp_path / "out" / "encoder.txt").exists()


class TestRerankCommand:
    def test_rerank_writes_permutations(self, pipeline_env):
        config_path, out = pipeline_env
        config = load_config(config_path)
        cmd_preprocess(config)
        cmd_train(config)
        report = cmd_rerank(config)
        assert report["queries"] == 16
        ranked = reranker.load_ranked_lists(out / "reranked.jsonl")
        assert len(ranked) == 16
        for ranked_list, cset in ranked:
            assert sorted(ranked_list.permutation()) == list(range(len(cset.candidates)))

    def test_grid_search_falls_back_without_dev_candidates(self, tmp_path, mini_paths):
        # dev entries exist but have no candidate sets, so the search has no
        # dev queries and the default width applies
        config_path = write_config(
            tmp_path, mini_paths, **{"semantic": {"h_m": 1.0, "grid": [0.5, 1.0, 2.0]}}
        )
        config = load_config(config_path)
        cmd_preprocess(config)
        cmd_train(config)
        report = cmd_rerank(config)
        assert report["h_m_grid_searched"] is True
        assert report["h_m"] == 0.1

    def test_no_cf_collapses_to_plain_scores(self, pipeline_env):
        config_path, out = pipeline_env
        config = load_config(config_path)
        cmd_preprocess(config)
        cmd_train(config)
        from dataclasses import replace

        report_cf = cmd_rerank(config)
        with_cf = (out / "reranked.jsonl").read_bytes()
        no_cf_config = replace(config, rerank=replace(config.rerank, use_cf=False))
        report_plain = cmd_rerank(no_cf_config)
        assert report_cf["use_cf"] and not report_plain["use_cf"]
        assert (out / "reranked.jsonl").read_bytes() != with_cf  # scores differ


class TestEvalMrrCommand:
    @pytest.fixture()
    def ran(self, pipeline_env):
        config_path, out = pipeline_env
        config = load_config(config_path)
        cmd_preprocess(config)
        cmd_train(config)
        cmd_rerank(config)
        return config, out

    def test_summary_and_determinism(self, ran):
        config, out = ran
        summary1 = cmd_eval_mrr(config)
        files = sorted(p.name for p in out.glob("eval_mrr_*"))
        contents = {name: (out / name).read_bytes() for name in files}
        summary2 = cmd_eval_mrr(config)
        assert summary1 == summary2
        for name in files:
            assert (out / name).read_bytes() == contents[name]
        for system in ("baseline", "reranked"):
            for mode in ("distinct", "random"):
                value = summary1["systems"][system]["modes"][mode]["mean_mrr"]
                assert 0.2 <= value <= 1.0

    def test_reranked_beats_baseline_on_planted_corpus(self, ran):
        config, _ = ran
        summary = cmd_eval_mrr(config)
        for mode in ("distinct", "random"):
            baseline = summary["systems"]["baseline"]["modes"][mode]["mean_mrr"]
            reranked = summary["systems"]["reranked"]["modes"][mode]["mean_mrr"]
            assert reranked > baseline


class TestEvalMtCommand:
    def test_curves_and_aggregates(self, pipeline_env):
        config_path, out = pipeline_env
        config = load_config(config_path)
        cmd_preprocess(config)
        cmd_train(config)
        cmd_rerank(config)
        summary = cmd_eval_mt(config)
        assert summary["records"] == 5
        assert set(summary["metrics"]) == {"bleu", "bleurt", "comet"}
        for metric in ("bleu", "bleurt", "comet"):
            curve_path = out / f"curve_{metric}.tsv"
            lines = curve_path.read_text().splitlines()
            assert lines[0] == "n\tbaseline_best\tssi_best"
            assert len(lines) == 21
            for column in (1, 2):
                values = [float(line.split("\t")[column]) for line in lines[1:]]
                assert all(b >= a - 1e-12 for a, b in zip(values, values[1:]))

    def test_aggregates_match_hand_computation(self, tmp_path):
        # three records, four candidates each, known scores, no reranked lists
        records = []
        scores = {
            "q0": [10.0, 50.0, 20.0, 30.0],
            "q1": [0.0, 0.0, 80.0, 0.0],
            "q2": [5.0, 5.0, 5.0, 5.0],
        }
        comet = {}
        for qid, values in scores.items():
            candidates = []
            for i, value in enumerate(values):
                candidates.append(
                    {
                        "paraphrase": f"p{i}",
                        "interpreted_source": f"source {qid} p{i} text",
                        "translation": "ignored",
                    }
                )
                comet[(qid, i)] = value
            records.append(
                {
                    "query_id": qid,
                    "source": f"source {qid} slang text",
                    "gold_translation": "reference text",
                    "candidates": candidates,
                }
            )
        trans = tmp_path / "t.jsonl"
        with open(trans, "w") as fh:
            for record in records:
                fh.write(json.dumps(record) + "\n")
        comet_path = tmp_path / "comet.tsv"
        eval_translation.write_metric_scores(comet, comet_path)
        config_path = tmp_path / "config.yaml"
        config_path.write_text(
            yaml.safe_dump(
                {
                    "paths": {
                        "translations": str(trans),
                        "metric_scores": {"comet": str(comet_path)},
                        "out_dir": str(tmp_path / "out"),
                    },
                    "eval": {"curve_length": 4},
                }
            )
        )
        summary = cmd_eval_mt(load_config(config_path))
        # per-record curves: q0: 10,50,50,50; q1: 0,0,80,80; q2: 5,5,5,5
        # mean curve: 5, 55/3, 45, 45 -> aggregate = mean of those
        expected_curve = [5.0, 55.0 / 3.0, 45.0, 45.0]
        assert summary["metrics"]["comet"]["baseline"]["aggregate"] == pytest.approx(
            sum(expected_curve) / 4
        )

    def test_flat_curves_for_constant_scores(self, tmp_path):
        records = [
            {
                "query_id": "q0",
                "source": "source slang here",
                "gold_translation": "reference",
                "candidates": [
                    {"paraphrase": f"p{i}", "interpreted_source": f"source p{i} here", "translation": "x"}
                    for i in range(3)
                ],
            }
        ]
        trans = tmp_path / "t.jsonl"
        with open(trans, "w") as fh:
            fh.write(json.dumps(records[0]) + "\n")
        comet_path = tmp_path / "comet.tsv"
        eval_translation.write_metric_scores({("q0", i): 7.5 for i in range(3)}, comet_path)
        config_path = tmp_path / "config.yaml"
        config_path.write_text(
            yaml.safe_dump(
                {
                    "paths": {
                        "translations": str(trans),
                        "metric_scores": {"comet": str(comet_path)},
                        "out_dir": str(tmp_path / "out"),
                    },
                    "eval": {"curve_length": 6},
                }
            )
        )
        summary = cmd_eval_mt(load_config(config_path))
        lines = (tmp_path / "out" / "curve_comet.tsv").read_text().splitlines()[1:]
        assert all(float(line.split("\t")[1]) == 7.5 for line in lines)
        assert summary["metrics"]["comet"]["baseline"]["aggregate"] == pytest.approx(7.5)


class TestCli:
    def run(self, *args):
        return CliRunner().invoke(cli.main, list(args), catch_exceptions=False)

    def test_full_pipeline_through_cli(self, pipeline_env):
        config_path, out = pipeline_env
        for command in ("preprocess", "train", "rerank", "eval-mrr", "eval-mt"):
            result = self.run(command, "--config", str(config_path))
            assert result.exit_code == 0, (command, result.output)
        assert (out / "eval_mrr_summary.json").exists()
        assert (out / "eval_mt_aggregates.json").exists()

    def test_train_rerun_byte_identical_via_cli(self, pipeline_env):
        config_path, out = pipeline_env
        assert self.run("preprocess", "--config", str(config_path)).exit_code == 0
        assert self.run("train", "--config", str(config_path)).exit_code == 0
        first = (out / "encoder.txt").read_bytes()
        assert self.run("train", "--config", str(config_path)).exit_code == 0
        assert (out / "encoder.txt").read_bytes() == first

    def test_missing_input_exits_1(self, tmp_path, mini_paths):
        config_path = write_config(
            tmp_path, {**mini_paths, "glosses": str(tmp_path / "nope.jsonl")}
        )
        result = self.run("preprocess", "--config", str(config_path))
        assert result.exit_code == 1

    def test_malformed_data_exits_2(self, tmp_path, mini_paths):
        bad = tmp_path / "bad.jsonl"
        bad.write_text('{"entry_id": "e"}\n')
        config_path = write_config(tmp_path, {**mini_paths, "glosses": str(bad)})
        result = self.run("preprocess", "--config", str(config_path))
        assert result.exit_code == 2

    def test_divergence_exits_3(self, pipeline_env, tmp_path, mini_paths):
        config_path, _ = pipeline_env
        assert self.run("preprocess", "--config", str(config_path)).exit_code == 0
        diverging = write_config(
            tmp_path,
            mini_paths,
            **{"train.learning_rate": 1e200, "train.epochs": 3, "train.batch_size": 8},
        )
        result = self.run("train", "--config", str(diverging))
        assert result.exit_code == 3

    def test_seed_override_changes_eval(self, pipeline_env):
        config_path, out = pipeline_env
        for command in ("preprocess", "train", "rerank"):
            assert self.run(command, "--config", str(config_path)).exit_code == 0
        assert self.run("eval-mrr", "--config", str(config_path), "--seed", "42").exit_code == 0
        summary = json.loads((out / "eval_mrr_summary.json").read_text())
        seeds = summary["systems"]["baseline"]["modes"]["distinct"]["per_seed"]
        assert set(seeds) == {"42"}

    def test_no_cf_flag(self, pipeline_env):
        config_path, out = pipeline_env
        for command in ("preprocess", "train"):
            assert self.run(command, "--config", str(config_path)).exit_code == 0
        result = self.run("rerank", "--config", str(config_path), "--no-cf")
        assert result.exit_code == 0
        assert '"use_cf": false' in result.output

    def test_unknown_config_key_exits_1(self, tmp_path, mini_paths):
        config_path = write_config(tmp_path, mini_paths, **{"train.nonsense_key": 1})
        result = self.run("train", "--config", str(config_path))
        assert result.exit_code == 1


class TestConfigPaths:
    def test_environment_variables_expand_in_paths(self, tmp_path, mini_paths, monkeypatch):
        monkeypatch.setenv("CORPUS_DIR", str(Path(mini_paths["glosses"]).parent))
        config_path = tmp_path / "config.yaml"
        config_path.write_text(
            yaml.safe_dump(
                {
                    "paths": {
                        "glosses": ["$CORPUS_DIR/glosses.jsonl"],
                        "inventory": "${CORPUS_DIR}/inventory.jsonl",
                        "out_dir": str(tmp_path / "out"),
                    }
                }
            )
        )
        report = cmd_preprocess(load_config(config_path))
        assert report["kept_entries"] == 50

    def test_relative_paths_resolve_against_config_file(self, tmp_path, mini_paths):
        import shutil

        workdir = tmp_path / "proj"
        workdir.mkdir()
        for key in ("glosses", "inventory"):
            shutil.copy(mini_paths[key], workdir / Path(mini_paths[key]).name)
        config_path = workdir / "config.yaml"
        config_path.write_text(
            yaml.safe_dump(
                {"paths": {"glosses": ["glosses.jsonl"], "inventory": "inventory.jsonl", "out_dir": "out"}}
            )
        )
        report = cmd_preprocess(load_config(config_path))
        assert report["kept_entries"] == 50
        assert (workdir / "out" / "dataset.jsonl").exists()


class TestPerfectPredictor:
    def test_mrr_is_one_when_predictions_match_groundtruth(self, pipeline_env, mini_paths):
        # candidate sets rewritten so the generator's top candidate IS the
        # groundtruth definition: the evaluation must come out at exactly 1.0
        config_path, out = pipeline_env
        config = load_config(config_path)
        cmd_preprocess(config)
        sets = reranker.load_candidate_sets(mini_paths["candidates"])
        perfect = []
        for cset in sets:
            gt_id = cset.query_id.split("#")[0]
            reordered = sorted(cset.candidates, key=lambda c: c.definition_embedding_id != gt_id)
            candidates = tuple(
                reranker.Candidate(
                    rank_in=i,
                    definition=c.definition,
                    definition_embedding_id=c.definition_embedding_id,
                    surface=c.surface,
                    gen_score=c.gen_score,
                    pos_match=c.pos_match,
                )
                for i, c in enumerate(reordered)
            )
            perfect.append(
                reranker.CandidateSet(
                    cset.query_id, cset.word, cset.context, cset.generator, candidates
                )
            )
        perfect_path = out / "perfect_candidates.jsonl"
        reranker.write_candidate_sets(perfect, perfect_path)
        from dataclasses import replace

        eval_config = replace(
            config,
            paths=replace(config.paths, candidates=str(perfect_path)),
            eval=replace(config.eval, systems=["baseline"], seeds=[0], modes=["distinct"]),
        )
        summary = cmd_eval_mrr(eval_config)
        assert summary["systems"]["baseline"]["modes"]["distinct"]["mean_mrr"] == 1.0
