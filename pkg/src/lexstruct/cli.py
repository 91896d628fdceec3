"""Command-line entry point.

Subcommands: ingest, extract, graph (build|export|query|stats),
triples (refs|generate|batch), eval, pipeline, fixtures.
Exit codes: 0 ok, 1 stage failure, 2 configuration error.
"""

from __future__ import annotations

import fnmatch
import json
import logging
import sys
from collections import Counter
from pathlib import Path

import click

from .docmodel import MarkerConfig, read_element_stream
from .extractor import (
    extract_corpus,
    iter_corpus_documents,
    read_records_jsonl,
    write_records_csv,
    write_records_jsonl,
)
from .fixtures import make_fixtures
from .graph import (
    EdgeType,
    NodeLabel,
    build_from_articles,
    export_cypher,
    export_neutral,
    import_neutral,
)
from .numbering import UnparsableReference, parse_reference
from .pipeline import (
    ConfigError,
    load_config,
    read_refs_jsonl,
    read_triples_jsonl,
    run_pipeline,
)
from .rouge import build_report, score_article
from .triples import (
    ProviderSpec,
    build_provider,
    extract_references,
    generate_triples,
    load_ground_truth,
    load_template,
    run_batch,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_STAGE_FAILURE = 1
EXIT_CONFIG_ERROR = 2


@click.group()
@click.option("--quiet", is_flag=True, help="Only warnings and errors.")
def cli(quiet: bool) -> None:
    logging.basicConfig(
        level=logging.WARNING if quiet else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )


@cli.command()
@click.argument("root", type=click.Path(exists=True, file_okay=False))
@click.option("--rent-glob", default=None, help="Filename pattern marking rent documents.")
@click.option("--keywords", type=click.Path(exists=True, dir_okay=False), default=None)
def ingest(root: str, rent_glob: str | None, keywords: str | None) -> None:
    """Validate a corpus tree and summarize its element streams."""
    config = MarkerConfig.from_file(keywords) if keywords else None
    failures = 0
    for doc, domain, law_num in iter_corpus_documents(root):
        is_rent = bool(rent_glob and fnmatch.fnmatch(doc.name, rent_glob))
        counts: Counter = Counter()
        try:
            with doc.open("rb") as fh:
                for element in read_element_stream(fh, is_rent=is_rent, config=config):
                    counts[element.kind.name] += 1
        except ValueError as exc:
            failures += 1
            click.echo(f"{domain}/{law_num}/{doc.name}: ERROR {exc}")
            continue
        summary = ", ".join(f"{kind}={n}" for kind, n in sorted(counts.items()))
        click.echo(f"{domain}/{law_num}/{doc.name}: {summary}")
    if failures:
        sys.exit(EXIT_STAGE_FAILURE)


@cli.command()
@click.argument("root", type=click.Path(exists=True, file_okay=False))
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
@click.option("--report", "report_path", type=click.Path(dir_okay=False), default=None)
@click.option("--csv", "csv_path", type=click.Path(dir_okay=False), default=None)
@click.option("--rent-glob", default=None)
@click.option("--keywords", type=click.Path(exists=True, dir_okay=False), default=None)
def extract(root, out_path, report_path, csv_path, rent_glob, keywords) -> None:
    """Extract article records from a corpus into line-delimited JSON."""
    config = MarkerConfig.from_file(keywords) if keywords else None
    extraction = extract_corpus(root, rent_glob=rent_glob, config=config)
    with open(out_path, "w", encoding="utf-8") as fh:
        write_records_jsonl(extraction.records, extraction.ids, fh)
    if csv_path:
        with open(csv_path, "w", encoding="utf-8") as fh:
            write_records_csv(extraction.records, fh)
    if report_path:
        with open(report_path, "w", encoding="utf-8") as fh:
            extraction.report.to_csv(fh)
    for doc, message in extraction.report.errors:
        click.echo(f"error: {doc}: {message}", err=True)
    totals = extraction.report.totals()
    click.echo(f"{totals['articles']} records from {len(extraction.report.rows)} documents")
    if extraction.report.errors:
        sys.exit(EXIT_STAGE_FAILURE)


@cli.group()
def graph() -> None:
    """Build, query, and export the legal-entity graph."""


def _load_articles(path: str):
    with open(path, encoding="utf-8") as fh:
        return read_records_jsonl(fh)


def _load_graph(path: str):
    return import_neutral(Path(path).read_text(encoding="utf-8"), "graph-json")


@graph.command("build")
@click.option("--articles", "articles_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--refs", "refs_path", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
def graph_build(articles_path, refs_path, out_path) -> None:
    records, ids = _load_articles(articles_path)
    references = None
    if refs_path:
        refs_by_id = read_refs_jsonl(Path(refs_path))
        references = []
        for record_id in ids:
            parsed = []
            for entry in refs_by_id.get(record_id, []):
                if entry.get("raw"):
                    continue
                try:
                    parsed.append(parse_reference(entry["text"]))
                except UnparsableReference:
                    logger.warning("unparseable reference %r", entry["text"])
            references.append(parsed)
    g = build_from_articles(records, references)
    Path(out_path).write_text(export_neutral(g, "graph-json"), encoding="utf-8")
    stats = g.stats()
    click.echo(f"{stats.node_count} nodes, {stats.edge_count} edges")


@graph.command("export")
@click.option("--graph", "graph_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--format", "fmt", type=click.Choice(["cypher", "graph-json", "graphml"]), default="cypher")
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
def graph_export(graph_path, fmt, out_path) -> None:
    g = _load_graph(graph_path)
    if fmt == "cypher":
        with open(out_path, "w", encoding="utf-8") as fh:
            count = export_cypher(g, fh)
        click.echo(f"{count} statements")
    else:
        Path(out_path).write_text(export_neutral(g, fmt), encoding="utf-8")
        click.echo(out_path)


def _parse_enum_list(value: str | None, enum_cls):
    if not value:
        return None
    out = set()
    lookup = {member.name.lower(): member for member in enum_cls}
    lookup.update({member.value.lower(): member for member in enum_cls})
    for part in value.split(","):
        member = lookup.get(part.strip().lower())
        if member is None:
            raise click.BadParameter(f"unknown name {part.strip()!r}")
        out.add(member)
    return out


@graph.command("query")
@click.option("--graph", "graph_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--start", required=True, help="Node id or label:key selector, e.g. loi:98-03.")
@click.option("--depth", type=int, default=1)
@click.option("--labels", default=None, help="Comma-separated label filter.")
@click.option("--edges", default=None, help="Comma-separated edge-type filter.")
@click.option("--out", "out_path", type=click.Path(dir_okay=False), default=None)
def graph_query(graph_path, start, depth, labels, edges, out_path) -> None:
    g = _load_graph(graph_path)
    sub = g.neighborhood(
        start,
        depth,
        edge_filter=_parse_enum_list(edges, EdgeType),
        label_filter=_parse_enum_list(labels, NodeLabel),
    )
    document = export_neutral(sub, "graph-json")
    if out_path:
        Path(out_path).write_text(document, encoding="utf-8")
    else:
        click.echo(document, nl=False)
    stats = sub.stats()
    click.echo(f"{stats.node_count} nodes, {stats.edge_count} edges", err=True)


@graph.command("stats")
@click.option("--graph", "graph_path", required=True, type=click.Path(exists=True, dir_okay=False))
def graph_stats(graph_path) -> None:
    g = _load_graph(graph_path)
    click.echo(json.dumps(g.stats().as_dict(), indent=2))


def _provider_from_options(providers_path: str | None, name: str, records) -> object:
    if providers_path:
        data = json.loads(Path(providers_path).read_text(encoding="utf-8"))
        specs = [ProviderSpec.from_json_dict(d) for d in data.get("providers", [])]
    else:
        specs = []
    for spec in specs:
        if spec.name == name:
            return build_provider(spec, records=records)
    raise click.ClickException(f"provider {name!r} not found in providers file")


@cli.group()
def triples() -> None:
    """Reference pre-extraction and knowledge-triple generation."""


@triples.command("refs")
@click.option("--articles", "articles_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--provider", "provider_name", required=True)
@click.option("--providers-config", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
def triples_refs(articles_path, provider_name, providers_config, out_path) -> None:
    records, ids = _load_articles(articles_path)
    provider = _provider_from_options(providers_config, provider_name, list(zip(ids, records)))
    with open(out_path, "w", encoding="utf-8") as fh:
        for record_id, record in zip(ids, records):
            refs = extract_references(record, provider)
            fh.write(json.dumps(
                {"article_id": record_id,
                 "references": [{"text": r.text, "raw": r.raw} for r in refs]},
                ensure_ascii=False,
            ))
            fh.write("\n")
    click.echo(f"{len(ids)} articles")


@triples.command("generate")
@click.option("--articles", "articles_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--id", "article_id", required=True)
@click.option("--refs", "refs_path", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--template", "template_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--provider", "provider_name", required=True)
@click.option("--providers-config", type=click.Path(exists=True, dir_okay=False), required=True)
def triples_generate(articles_path, article_id, refs_path, template_path, provider_name, providers_config) -> None:
    """Generate triples for a single article and print them."""
    records, ids = _load_articles(articles_path)
    try:
        index = ids.index(article_id)
    except ValueError:
        raise click.ClickException(f"article id {article_id!r} not found")
    refs = []
    if refs_path:
        entries = read_refs_jsonl(Path(refs_path)).get(article_id, [])
        refs = [e["text"] for e in entries if not e.get("raw")]
    provider = _provider_from_options(providers_config, provider_name, list(zip(ids, records)))
    template = load_template(template_path)
    result, _raw = generate_triples(records[index], refs, template, provider)
    for triple in result:
        click.echo(triple.serialize())


@triples.command("batch")
@click.option("--articles", "articles_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--refs", "refs_path", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--template", "template_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--provider", "provider_name", required=True)
@click.option("--providers-config", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
@click.option("--concurrency", type=int, default=None)
def triples_batch(articles_path, refs_path, template_path, provider_name, providers_config, out_path, concurrency) -> None:
    records, ids = _load_articles(articles_path)
    refs_by_id = read_refs_jsonl(Path(refs_path)) if refs_path else {}
    provider = _provider_from_options(providers_config, provider_name, list(zip(ids, records)))
    template = load_template(template_path)
    batch_input = [
        (record_id, record,
         [e["text"] for e in refs_by_id.get(record_id, []) if not e.get("raw")])
        for record_id, record in zip(ids, records)
    ]
    result = run_batch(batch_input, template, provider, concurrency)
    with open(out_path, "w", encoding="utf-8") as fh:
        for item in result.items:
            fh.write(json.dumps(
                {
                    "article_id": item.article_id,
                    "model": provider_name,
                    "triples": [[t.subject, t.predicate, t.object] for t in item.triples],
                    "error": item.error,
                },
                ensure_ascii=False,
            ))
            fh.write("\n")
    click.echo(f"EID {result.eid} over {len(result.items)} articles, "
               f"{len(result.failures)} failed")
    if result.failures:
        sys.exit(EXIT_STAGE_FAILURE)


@cli.command("eval")
@click.option("--gen", "gen_paths", multiple=True, required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--ref", "ref_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
@click.option("--markdown", "md_path", type=click.Path(dir_okay=False), default=None)
@click.option("--timings", "timings_path", type=click.Path(exists=True, dir_okay=False), default=None)
def eval_cmd(gen_paths, ref_path, out_path, md_path, timings_path) -> None:
    """Score generated triples against a golden file."""
    ground_truth = load_ground_truth(ref_path)
    results = {}
    for gen_path in gen_paths:
        model = None
        generated = read_triples_jsonl(Path(gen_path))
        with open(gen_path, encoding="utf-8") as fh:
            for line in fh:
                if line.strip():
                    model = json.loads(line).get("model")
                    break
        model = model or Path(gen_path).stem
        results[model] = {
            article_id: score_article(generated.get(article_id, []), entry.triples)
            for article_id, entry in ground_truth.items()
        }
    timings = None
    if timings_path:
        raw = json.loads(Path(timings_path).read_text(encoding="utf-8"))
        timings = {k: v["eid_seconds"] for k, v in raw.items() if k in results}
    report = build_report(results, timings=timings)
    with open(out_path, "w", encoding="utf-8") as fh:
        report.to_csv(fh)
    if md_path:
        with open(md_path, "w", encoding="utf-8") as fh:
            report.to_markdown(fh)
    click.echo(out_path)


@cli.command("pipeline")
@click.option("--config", "config_path", required=True, type=click.Path(dir_okay=False))
@click.option("--force", is_flag=True, help="Rerun stages even when outputs are fresh.")
def pipeline_cmd(config_path, force) -> None:
    """Run the full pipeline from one config file."""
    try:
        config = load_config(config_path)
    except ConfigError as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(EXIT_CONFIG_ERROR)
    try:
        run = run_pipeline(config, force=force)
    except ConfigError as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(EXIT_CONFIG_ERROR)
    except Exception as exc:  # noqa: BLE001 - report stage failure via exit code
        click.echo(f"stage failure: {exc}", err=True)
        sys.exit(EXIT_STAGE_FAILURE)
    for stage in run.stages:
        click.echo(f"{stage.name}: {'skipped' if stage.skipped else 'run'}")


@cli.command()
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
@click.option("--seed", type=int, default=0)
def fixtures(out_dir, seed) -> None:
    """Generate the bundled synthetic corpus."""
    manifest = make_fixtures(out_dir, seed=seed)
    click.echo(
        f"{manifest.documents} documents, {manifest.records} records under {manifest.root}"
    )


def main() -> None:
    cli()


if __name__ == "__main__":
    main()
