"""End-to-end pipeline: ingest, extract, references, graph, triples, eval.

Driven by one declarative JSON config. Stages are resumable: a stage is
skipped when all of its outputs are newer than all of its inputs, unless
forced. Timing values (EID) go to a sidecar file so every other artifact is
byte-reproducible for a given config and seed.
"""

from __future__ import annotations

import json
import logging
import os
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

from .docmodel import MarkerConfig
from .extractor import (
    extract_corpus,
    iter_corpus_documents,
    read_records_jsonl,
    write_records_csv,
    write_records_jsonl,
)
from .graph import build_from_articles, export_cypher, export_neutral
from .numbering import UnparsableReference, parse_reference
from .rouge import build_report, score_article
from .triples import (
    KnowledgeTriple,
    ProviderSpec,
    build_provider,
    extract_references,
    format_eid,
    load_ground_truth,
    load_template,
    run_batch,
)

logger = logging.getLogger(__name__)


class ConfigError(Exception):
    """Pipeline configuration is invalid; nothing was run."""


_ENV_RE = re.compile(r"\$\{(\w+)\}")


def _interpolate(value, source: str):
    if isinstance(value, str):

        def repl(m: re.Match) -> str:
            name = m.group(1)
            if name not in os.environ:
                raise ConfigError(f"{source}: environment variable {name} is not set")
            return os.environ[name]

        return _ENV_RE.sub(repl, value)
    if isinstance(value, dict):
        return {k: _interpolate(v, source) for k, v in value.items()}
    if isinstance(value, list):
        return [_interpolate(v, source) for v in value]
    return value


@dataclass
class PipelineConfig:
    base_dir: Path
    corpus_root: Path
    output_dir: Path
    template: Path
    ground_truth: Path
    rent_glob: str | None
    keywords: Path | None
    seed: int
    concurrency: int | None
    reference_provider: str
    providers: list[ProviderSpec]
    raw: dict = field(default_factory=dict)


def load_config(path: str | Path) -> PipelineConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    data = _interpolate(data, str(path))
    base = path.parent

    def resolve(key: str, required: bool = True) -> Path | None:
        value = data.get(key)
        if value is None:
            if required:
                raise ConfigError(f"config key {key!r} is required")
            return None
        return (base / value).resolve() if not Path(value).is_absolute() else Path(value)

    corpus_root = resolve("corpus_root")
    output_dir = resolve("output_dir")
    template = resolve("template")
    ground_truth = resolve("ground_truth")
    keywords = resolve("keywords", required=False)
    for name, p in (("corpus_root", corpus_root), ("template", template), ("ground_truth", ground_truth)):
        if not p.exists():
            raise ConfigError(f"{name} does not exist: {p}")
    if keywords is not None and not keywords.exists():
        raise ConfigError(f"keywords file does not exist: {keywords}")
    provider_specs = [ProviderSpec.from_json_dict(d) for d in data.get("providers", [])]
    if not provider_specs:
        raise ConfigError("config must define at least one provider")
    seed = int(data.get("seed", 0))
    for spec in provider_specs:
        if spec.kind not in ("http", "mock"):
            raise ConfigError(f"unknown provider kind {spec.kind!r} for {spec.name}")
        if spec.kind == "mock":
            spec.options.setdefault("seed", seed)
            gt = spec.options.get("ground_truth")
            if gt:
                spec.options["ground_truth"] = str(
                    (base / gt) if not Path(gt).is_absolute() else Path(gt)
                )
    reference_provider = data.get("reference_provider", provider_specs[0].name)
    if reference_provider not in {s.name for s in provider_specs}:
        raise ConfigError(f"reference_provider {reference_provider!r} is not defined")
    return PipelineConfig(
        base_dir=base,
        corpus_root=corpus_root,
        output_dir=output_dir,
        template=template,
        ground_truth=ground_truth,
        rent_glob=data.get("rent_glob"),
        keywords=keywords,
        seed=seed,
        concurrency=data.get("concurrency"),
        reference_provider=reference_provider,
        providers=provider_specs,
        raw=data,
    )


@dataclass
class StageOutcome:
    name: str
    skipped: bool


@dataclass
class PipelineRun:
    stages: list[StageOutcome] = field(default_factory=list)
    artifacts: dict[str, Path] = field(default_factory=dict)

    def skipped(self, name: str) -> bool:
        return any(s.name == name and s.skipped for s in self.stages)


def _fresh(outputs: list[Path], inputs: list[Path]) -> bool:
    if not outputs or not all(p.exists() for p in outputs):
        return False
    input_times = [p.stat().st_mtime_ns for p in inputs if p.exists()]
    if not input_times:
        return True
    newest_input = max(input_times)
    return min(p.stat().st_mtime_ns for p in outputs) >= newest_input


def _run_stage(
    run: PipelineRun,
    name: str,
    inputs: list[Path],
    outputs: list[Path],
    action: Callable[[], None],
    force: bool,
) -> None:
    if not force and _fresh(outputs, inputs):
        logger.info("stage %s: up to date, skipping", name)
        run.stages.append(StageOutcome(name, skipped=True))
        return
    action()
    run.stages.append(StageOutcome(name, skipped=False))


def run_pipeline(config: PipelineConfig, *, force: bool = False) -> PipelineRun:
    """Run all stages, honoring freshness. Raises on stage failure; partial
    artifacts written so far are left in place."""
    out = config.output_dir
    out.mkdir(parents=True, exist_ok=True)
    marker_config = (
        MarkerConfig.from_file(config.keywords) if config.keywords else None
    )
    run = PipelineRun()

    articles_path = out / "articles.jsonl"
    articles_csv = out / "articles.csv"
    extract_report = out / "extract_report.csv"
    refs_path = out / "refs.jsonl"
    graph_json = out / "graph.json"
    graph_cypher = out / "graph.cypher"
    report_csv = out / "report.csv"
    report_md = out / "report.md"
    timings_path = out / "timings.json"
    run.artifacts = {
        "articles": articles_path,
        "refs": refs_path,
        "graph_json": graph_json,
        "graph_cypher": graph_cypher,
        "report_csv": report_csv,
        "report_md": report_md,
        "timings": timings_path,
    }

    corpus_files = [doc for doc, _, _ in iter_corpus_documents(config.corpus_root)]
    if not corpus_files:
        raise ConfigError(f"no documents under corpus root {config.corpus_root}")
    extract_inputs = corpus_files + ([config.keywords] if config.keywords else [])

    def do_extract() -> None:
        extraction = extract_corpus(
            config.corpus_root, rent_glob=config.rent_glob, config=marker_config
        )
        for doc, message in extraction.report.errors:
            logger.warning("extract: %s: %s", doc, message)
        with articles_path.open("w", encoding="utf-8") as fh:
            write_records_jsonl(extraction.records, extraction.ids, fh)
        with articles_csv.open("w", encoding="utf-8") as fh:
            write_records_csv(extraction.records, fh)
        with extract_report.open("w", encoding="utf-8") as fh:
            extraction.report.to_csv(fh)

    _run_stage(run, "extract", extract_inputs,
               [articles_path, articles_csv, extract_report], do_extract, force)

    def load_articles() -> tuple[list, list]:
        with articles_path.open(encoding="utf-8") as fh:
            return read_records_jsonl(fh)

    def do_refs() -> None:
        records, ids = load_articles()
        spec = next(s for s in config.providers if s.name == config.reference_provider)
        provider = build_provider(spec, records=list(zip(ids, records)))
        with refs_path.open("w", encoding="utf-8") as fh:
            for record_id, record in zip(ids, records):
                refs = extract_references(record, provider)
                fh.write(json.dumps(
                    {
                        "article_id": record_id,
                        "references": [{"text": r.text, "raw": r.raw} for r in refs],
                    },
                    ensure_ascii=False,
                ))
                fh.write("\n")

    _run_stage(run, "refs", [articles_path], [refs_path], do_refs, force)

    def do_graph() -> None:
        records, ids = load_articles()
        refs_by_id = read_refs_jsonl(refs_path)
        references = []
        for record_id in ids:
            parsed = []
            for entry in refs_by_id.get(record_id, []):
                if entry.get("raw"):
                    continue
                try:
                    parsed.append(parse_reference(entry["text"]))
                except UnparsableReference:
                    logger.warning("graph: unparseable reference %r", entry["text"])
            references.append(parsed)
        graph = build_from_articles(records, references)
        graph_json.write_text(export_neutral(graph, "graph-json"), encoding="utf-8")
        with graph_cypher.open("w", encoding="utf-8") as fh:
            export_cypher(graph, fh)

    _run_stage(run, "graph", [articles_path, refs_path], [graph_json, graph_cypher], do_graph, force)

    triples_paths = {
        spec.name: out / f"triples_{spec.name}.jsonl" for spec in config.providers
    }
    run.artifacts.update({f"triples_{k}": v for k, v in triples_paths.items()})
    template = load_template(config.template)
    timings: dict[str, float] = {}
    if timings_path.exists():
        try:
            timings = {
                k: v["eid_seconds"] for k, v in json.loads(timings_path.read_text()).items()
            }
        except (json.JSONDecodeError, KeyError, TypeError):
            timings = {}

    def make_triples_action(spec: ProviderSpec) -> Callable[[], None]:
        def do_triples() -> None:
            records, ids = load_articles()
            refs_by_id = read_refs_jsonl(refs_path)
            provider = build_provider(spec, records=list(zip(ids, records)))
            batch_input = [
                (
                    record_id,
                    record,
                    [e["text"] for e in refs_by_id.get(record_id, []) if not e.get("raw")],
                )
                for record_id, record in zip(ids, records)
            ]
            result = run_batch(batch_input, template, provider, config.concurrency)
            with triples_paths[spec.name].open("w", encoding="utf-8") as fh:
                for item in result.items:
                    fh.write(json.dumps(
                        {
                            "article_id": item.article_id,
                            "model": spec.name,
                            "triples": [
                                [t.subject, t.predicate, t.object] for t in item.triples
                            ],
                            "error": item.error,
                        },
                        ensure_ascii=False,
                    ))
                    fh.write("\n")
            timings[spec.name] = result.eid_seconds

        return do_triples

    for spec in config.providers:
        _run_stage(
            run,
            f"triples:{spec.name}",
            [articles_path, refs_path, config.template],
            [triples_paths[spec.name]],
            make_triples_action(spec),
            force,
        )

    # Timing sidecar: always rewritten, excluded from reproducibility checks.
    timings_path.write_text(
        json.dumps(
            {
                name: {"eid_seconds": secs, "eid": format_eid(secs)}
                for name, secs in sorted(timings.items())
            },
            indent=2,
        )
        + "\n",
        encoding="utf-8",
    )

    def do_eval() -> None:
        ground_truth = load_ground_truth(config.ground_truth)
        results = {}
        for spec in config.providers:
            generated = read_triples_jsonl(triples_paths[spec.name])
            results[spec.name] = {
                article_id: score_article(
                    generated.get(article_id, []), entry.triples
                )
                for article_id, entry in ground_truth.items()
            }
        params = {
            spec.name: spec.options["params_b"]
            for spec in config.providers
            if "params_b" in spec.options
        }
        report = build_report(results, timings=None, params=params or None)
        with report_csv.open("w", encoding="utf-8") as fh:
            report.to_csv(fh)
        with report_md.open("w", encoding="utf-8") as fh:
            report.to_markdown(fh)

    _run_stage(
        run,
        "eval",
        list(triples_paths.values()) + [config.ground_truth],
        [report_csv, report_md],
        do_eval,
        force,
    )
    return run


def read_refs_jsonl(path: Path) -> dict[str, list[dict]]:
    out: dict[str, list[dict]] = {}
    with path.open(encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            obj = json.loads(line)
            out[obj["article_id"]] = obj.get("references", [])
    return out


def read_triples_jsonl(path: Path) -> dict[str, list[KnowledgeTriple]]:
    out: dict[str, list[KnowledgeTriple]] = {}
    with path.open(encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            obj = json.loads(line)
            out[obj["article_id"]] = [KnowledgeTriple(*t) for t in obj.get("triples", [])]
    return out
