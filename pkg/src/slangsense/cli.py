"""Thin command-line client for the pipeline service.

Commands always go through the HTTP interface: against a remote server
when --server is given, otherwise against an in-process instance of the
app, so one-shot runs need no running daemon. Exit codes: 0 success,
1 validation failure, 2 data error, 3 numerical divergence.
"""
from __future__ import annotations

import asyncio
import json
from pathlib import Path

import click
import httpx

EXIT_CODES = {"config": 1, "data": 2, "divergence": 3}


def _post(server: str | None, path: str, payload: dict) -> tuple[int, dict]:
    if server:
        response = httpx.post(server.rstrip("/") + path, json=payload, timeout=None)
        return response.status_code, response.json()

    async def in_process():
        from .service import create_app

        transport = httpx.ASGITransport(app=create_app())
        async with httpx.AsyncClient(transport=transport, base_url="http://engine.internal") as client:
            response = await client.post(path, json=payload, timeout=None)
            return response.status_code, response.json()

    return asyncio.run(in_process())


def _run_command(command: str, config: str, seed: int | None, out: str | None, no_cf: bool, server: str | None) -> None:
    payload = {
        "config_path": str(Path(config).resolve()),
        "seed": seed,
        "out": str(Path(out).resolve()) if out else None,
        "no_cf": no_cf,
    }
    try:
        status, body = _post(server, f"/commands/{command}", payload)
    except httpx.HTTPError as exc:
        click.echo(f"error: cannot reach server: {exc}", err=True)
        raise SystemExit(1)
    if status == 200:
        click.echo(json.dumps(body["report"], indent=2, sort_keys=True))
        return
    detail = body.get("detail", {})
    if isinstance(detail, dict) and "kind" in detail:
        click.echo(f"error ({detail['kind']}): {detail['message']}", err=True)
        raise SystemExit(EXIT_CODES.get(detail["kind"], 1))
    click.echo(f"error: {json.dumps(body)}", err=True)
    raise SystemExit(1)


def _command_options(f):
    f = click.option("--config", required=True, type=click.Path(), help="Run configuration YAML.")(f)
    f = click.option("--seed", type=int, default=None, help="Override the command's seed.")(f)
    f = click.option("--out", type=click.Path(), default=None, help="Override the output directory.")(f)
    f = click.option("--server", default=None, help="Service URL; defaults to in-process execution.")(f)
    return f


@click.group()
def main():
    """Slang interpretation pipeline client."""


@main.command()
@_command_options
def preprocess(config, seed, out, server):
    """Validate, filter and split the gloss corpus."""
    _run_command("preprocess", config, seed, out, False, server)


@main.command()
@_command_options
def train(config, seed, out, server):
    """Train the contrastive sense encoder."""
    _run_command("train", config, seed, out, False, server)


@main.command()
@_command_options
@click.option("--no-cf", is_flag=True, default=False, help="Disable collaborative filtering.")
def rerank(config, seed, out, server, no_cf):
    """Rerank candidate interpretations with the semantic model."""
    _run_command("rerank", config, seed, out, no_cf, server)


@main.command(name="eval-mrr")
@_command_options
def eval_mrr(config, seed, out, server):
    """Multiple-choice evaluation (mean reciprocal rank)."""
    _run_command("eval-mrr", config, seed, out, False, server)


@main.command(name="eval-mt")
@_command_options
def eval_mt(config, seed, out, server):
    """Translation score curves over top-n interpretations."""
    _run_command("eval-mt", config, seed, out, False, server)


if __name__ == "__main__":
    main()
