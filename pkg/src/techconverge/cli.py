"""Command-line entry point: one subcommand per pipeline stage."""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from .config import ConfigError, PipelineConfig
from .extraction import EndpointError
from .pipeline import STAGE_ORDER, MissingDependencyError, StageError, run_all, run_stage

EXIT_CONFIG_ERROR = 2
EXIT_MISSING_DEPENDENCY = 3
EXIT_ENDPOINT_FAILURE = 4


def _load_config(config_path: str, seed: int | None, threads: int | None) -> PipelineConfig:
    config = PipelineConfig.from_file(config_path)
    if seed is not None:
        config.seed = seed
    if threads is not None:
        config.max_in_flight = threads
    return config


def _execute(stage: str | None, config_path: str, workdir: str, force: bool,
             seed: int | None, threads: int | None) -> None:
    try:
        config = _load_config(config_path, seed, threads)
    except ConfigError as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(EXIT_CONFIG_ERROR)
    try:
        if stage is None:
            entries = run_all(config, workdir, force)
        else:
            entries = [run_stage(stage, config, workdir, force)]
    except MissingDependencyError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_MISSING_DEPENDENCY)
    except EndpointError as exc:
        click.echo(f"extraction endpoint failure: {exc}", err=True)
        sys.exit(EXIT_ENDPOINT_FAILURE)
    except StageError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    for entry in entries:
        status = "cached" if entry.get("cache_hit") else f"{entry['wall_time']:.3f}s"
        click.echo(f"{entry['stage']}: {status}")


_GLOBAL_OPTIONS = [
    click.option("--config", "config_path", required=True, type=click.Path(exists=True),
                 help="Pipeline config file (YAML)."),
    click.option("--workdir", default="work", show_default=True,
                 help="Directory holding per-stage artifacts and the manifest."),
    click.option("--force", is_flag=True, help="Rerun even when inputs are unchanged."),
    click.option("--seed", type=int, default=None, help="Override the configured seed."),
    click.option("--threads", type=int, default=None,
                 help="Override the configured parallelism."),
]


def _with_global_options(command):
    for option in reversed(_GLOBAL_OPTIONS):
        command = option(command)
    return command


@click.group()
def main():
    """Document corpora -> temporal topic graph -> convergence analytics."""


@main.command()
@_with_global_options
def run(config_path, workdir, force, seed, threads):
    """Run every stage in order."""
    _execute(None, config_path, workdir, force, seed, threads)


def _make_stage_command(stage: str):
    @_with_global_options
    def command(config_path, workdir, force, seed, threads):
        _execute(stage, config_path, workdir, force, seed, threads)

    command.__name__ = stage
    doc = {
        "ingest": "Load and validate the corpus; select the query sub-corpus.",
        "preprocess": "Strip citations, fix hyphen breaks, expand abbreviations.",
        "extract": "Extract raw semantic triples (endpoint or offline fallback).",
        "normalize": "Canonicalize triples (lowercase, lemmatize, prune).",
        "filter": "Apply the frequency / informativeness / entropy filters.",
        "staple": "Extract key terms and compute the term similarity map.",
        "cluster": "Group key terms into named topic clusters.",
        "assign": "Assign filtered triples to topic clusters.",
        "graph": "Build the topic graph; communities, centrality, edge trends.",
        "trends": "Monthly series, seasonal decomposition, top risers.",
        "converge": "Jaccard time series and convergence ranking.",
        "export": "Write GEXF and DOT graph files.",
    }[stage]
    command.__doc__ = doc
    return main.command(name=stage)(command)


for _stage in STAGE_ORDER:
    _make_stage_command(_stage)


@main.command("show-abbreviations")
@click.option("--workdir", default="work", show_default=True)
def show_abbreviations(workdir):
    """Print the abbreviation maps detected during preprocessing."""
    path = Path(workdir) / "preprocess" / "abbreviations.json"
    if not path.exists():
        click.echo("error: run the preprocess stage first", err=True)
        sys.exit(EXIT_MISSING_DEPENDENCY)
    click.echo(path.read_text(encoding="utf-8").rstrip())


@main.command("make-demo")
@click.option("--outdir", default="demo", show_default=True,
              help="Directory for the synthetic corpus and a ready-made config.")
@click.option("--docs", default=200, show_default=True)
@click.option("--seed", default=0, show_default=True)
def make_demo(outdir, docs, seed):
    """Generate a synthetic corpus with a planted convergence plus a config."""
    from .synthetic import generate_book_corpus, generate_corpus, write_jsonl

    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    write_jsonl(generate_corpus(docs, seed), out / "corpus.jsonl")
    write_jsonl(generate_book_corpus(seed=seed + 1), out / "books.jsonl")
    config = PipelineConfig(
        main_corpus=str(out / "corpus.jsonl"),
        book_corpus=str(out / "books.jsonl"),
        per_page_min=0.5,
        trend_split=[2023, 1],
        analysis_from=[2022, 3],
        analysis_to=[2023, 10],
        seed=seed,
    )
    config.save(out / "config.yaml")
    click.echo(json.dumps({"corpus": str(out / "corpus.jsonl"), "config": str(out / "config.yaml")}))


if __name__ == "__main__":
    main()
