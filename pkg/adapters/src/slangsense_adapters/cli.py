"""Command-line surface: one subcommand per batch task."""
from __future__ import annotations

import json

import click

from .io import AdapterError
from .jobs import AdapterJob


def _run(job: AdapterJob) -> None:
    try:
        report = job.run()
    except AdapterError as exc:
        click.echo(f"error: {exc}", err=True)
        raise SystemExit(1)
    click.echo(json.dumps(report, indent=2, sort_keys=True))


@click.group()
def main():
    """Producers for the interpretation engine's input files."""


@main.command(name="embed-sentences")
@click.option("--glosses", multiple=True, type=click.Path(exists=True), help="Gloss JSONL file(s).")
@click.option("--inventory", type=click.Path(exists=True), default=None, help="Sense inventory JSONL.")
@click.option("--candidates", multiple=True, type=click.Path(exists=True), help="Candidate JSONL file(s) whose definitions also need embeddings.")
@click.option("--model", default="hash:768", show_default=True, help="Sentence model id (hash:<dim> or st:<name>).")
@click.option("--out", required=True, type=click.Path(), help="Output embedding TSV.")
def embed_sentences(glosses, inventory, candidates, model, out):
    """Embed definition and sense texts into one sentence-embedding TSV."""
    _run(
        AdapterJob(
            task="embed-sentences",
            inputs={"glosses": list(glosses), "inventory": inventory, "candidates": list(candidates)},
            model_ids={"sentences": model},
            output=out,
        )
    )


@main.command(name="embed-words")
@click.option("--vocab", required=True, type=click.Path(exists=True), help="Vocabulary file, one word per line.")
@click.option("--model", default="subword:300", show_default=True, help="Word model id (subword:<dim> or table:<path>).")
@click.option("--out", required=True, type=click.Path(), help="Output word-vector TSV.")
def embed_words(vocab, model, out):
    """Emit one vector per surface form, composing unseen forms from subwords."""
    _run(
        AdapterJob(
            task="embed-words",
            inputs={"vocab": vocab},
            model_ids={"words": model},
            output=out,
        )
    )


@main.command(name="gen-candidates")
@click.option("--glosses", multiple=True, required=True, type=click.Path(exists=True))
@click.option("--inventory", required=True, type=click.Path(exists=True))
@click.option("--model", default="cooccurrence", show_default=True, help="Infill model id (cooccurrence or hf:<name>).")
@click.option("--word-model", default="subword:300", show_default=True)
@click.option("--top-n", default=50, show_default=True, type=int)
@click.option("--pos-check/--no-pos-check", default=True, show_default=True)
@click.option("--out", required=True, type=click.Path())
def gen_candidates(glosses, inventory, model, word_model, top_n, pos_check, out):
    """Blank each slang span and emit the top infilled candidate meanings."""
    _run(
        AdapterJob(
            task="gen-candidates",
            inputs={
                "glosses": list(glosses),
                "inventory": inventory,
                "pos_check": pos_check,
            },
            model_ids={"infill": model, "words": word_model},
            output=out,
            top_n=top_n,
        )
    )


@main.command()
@click.option("--records", required=True, type=click.Path(exists=True), help="Translation record JSONL.")
@click.option("--model", default="identity", show_default=True, help="Translation model id (identity or marian:<name>).")
@click.option("--out", required=True, type=click.Path())
def translate(records, model, out):
    """Fill candidate translations from their interpreted source sentences."""
    _run(
        AdapterJob(
            task="translate",
            inputs={"records": records},
            model_ids={"mt": model},
            output=out,
        )
    )


@main.command(name="score-metrics")
@click.option("--records", required=True, type=click.Path(exists=True), help="Translation record JSONL with translations filled.")
@click.option("--bleurt-model", default="overlap", show_default=True)
@click.option("--comet-model", default="overlap", show_default=True)
@click.option("--out-dir", required=True, type=click.Path())
def score_metrics(records, bleurt_model, comet_model, out_dir):
    """Write bleurt.tsv and comet.tsv scored against the gold translations."""
    _run(
        AdapterJob(
            task="score-metrics",
            inputs={"records": records},
            model_ids={"bleurt": bleurt_model, "comet": comet_model},
            output=out_dir,
        )
    )


if __name__ == "__main__":
    main()
