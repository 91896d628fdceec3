"""Knowledge-triple generation through prompted language models.

The pipeline pre-extracts citations for context, renders a few-shot prompt
with worked examples and a step-by-step directive, queries a provider, and
parses the answer into (subject, predicate, object) triples. Providers are
pluggable; a deterministic mock family (echo / corrupt / fixed / delay)
stands in for remote APIs during tests and desk runs.
"""

from __future__ import annotations

import json
import os
import random
import re
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from pathlib import Path
from typing import Iterable, Sequence

import httpx

from .extractor import ArticleRecord
from .numbering import UnparsableReference, format_reference, parse_reference


class ProviderError(Exception):
    """Transport, auth, or rate-limit failure after retry exhaustion."""


class EmptyExamples(ValueError):
    """A prompt template must carry at least one worked example."""


REFERS_TO = "refers to"
CORRESPONDS_TO = "corresponds to"


@dataclass(frozen=True)
class KnowledgeTriple:
    subject: str
    predicate: str
    object: str

    def serialize(self) -> str:
        return f"({self.subject}, {self.predicate}, {self.object})"


_BULLET_RE = re.compile(r"^(?:[-*•]\s+|\d+[.)]\s+)")


def _normalize_phrase(text: str) -> str:
    return " ".join(text.split())


def _normalize_object(text: str) -> str:
    text = _normalize_phrase(text)
    try:
        return format_reference(parse_reference(text))
    except UnparsableReference:
        return text


def _parse_triple_line(line: str) -> KnowledgeTriple | None:
    line = line.strip()
    while line and line[-1] in ".;:":
        line = line[:-1].rstrip()
    parts: list[str] | None = None
    if line.startswith("(") and line.endswith(")"):
        parts = line[1:-1].split(",", 2)
    elif "|" in line:
        parts = line.split("|", 2)
    elif "→" in line:
        parts = line.split("→", 2)
    elif "->" in line:
        parts = line.split("->", 2)
    if parts is None or len(parts) != 3:
        return None
    subject, predicate, obj = (p.strip() for p in parts)
    if not subject or not predicate or not obj:
        return None
    return KnowledgeTriple(
        subject=_normalize_phrase(subject).lower(),
        predicate=_normalize_phrase(predicate).lower(),
        object=_normalize_object(obj),
    )


def parse_triples(text: str) -> list[KnowledgeTriple]:
    """Scan text for triple lines. Total: unparseable lines are ignored.

    Accepts parenthesized, pipe-separated and arrow-separated layouts;
    canonical serialization is the parenthesized form. Duplicates are dropped,
    order preserved.
    """
    out: list[KnowledgeTriple] = []
    seen: set[KnowledgeTriple] = set()
    for raw_line in text.splitlines():
        line = _BULLET_RE.sub("", raw_line.strip())
        triple = _parse_triple_line(line)
        if triple is not None and triple not in seen:
            seen.add(triple)
            out.append(triple)
    return out


@dataclass
class PromptExample:
    """One worked example: article content, metadata, citations, and triples."""

    content: str
    metadata: dict = field(default_factory=dict)
    references: list[str] = field(default_factory=list)
    output: list[KnowledgeTriple] = field(default_factory=list)


@dataclass
class PromptTemplate:
    instruction: str
    step_directive: str = "Let's think step by step"
    examples: list[PromptExample] = field(default_factory=list)


def _render_example(example: PromptExample, include_output: bool) -> str:
    lines = [
        f"Content: {example.content}",
        "Metadata: " + json.dumps(example.metadata, ensure_ascii=False, sort_keys=True),
        "References:",
    ]
    lines.extend(f"- {ref}" for ref in example.references)
    lines.append("Output:")
    if include_output:
        lines.extend(t.serialize() for t in example.output)
    return "\n".join(lines)


def render_prompt(template: PromptTemplate, target: PromptExample) -> str:
    """Render the full prompt, ending with the target's open Output section."""
    if not template.examples:
        raise EmptyExamples("prompt template has no examples")
    directive = template.step_directive.strip()
    if directive and not directive.endswith("."):
        directive += "."
    blocks = [template.instruction.strip()]
    if directive:
        blocks.append(directive)
    blocks.extend(_render_example(ex, True) for ex in template.examples)
    blocks.append(_render_example(target, False))
    return "\n\n".join(blocks) + "\n"


# --- template file format ---------------------------------------------------
#
# Plain text with section headers at line start:
#   Instruction:   (block, until next header)
#   Directive:     (single line)
#   Example:       (starts a new example)
#     Content:     (block)
#     Metadata:    (one JSON object line)
#     References:  ("- " items, one per line)
#     Output:      (triple lines)

_TOP_HEADERS = ("Instruction:", "Directive:", "Example:")
_EXAMPLE_HEADERS = ("Content:", "Metadata:", "References:", "Output:")


def _is_header(line: str) -> str | None:
    for header in _TOP_HEADERS + _EXAMPLE_HEADERS:
        if line.startswith(header):
            return header
    return None


def load_template(path: str | Path) -> PromptTemplate:
    text = Path(path).read_text(encoding="utf-8")
    instruction_lines: list[str] = []
    directive = "Let's think step by step"
    examples: list[PromptExample] = []
    section: str | None = None
    current: dict | None = None
    block: list[str] = []

    def flush_block():
        nonlocal block
        if section == "Instruction:":
            instruction_lines.extend(block)
        elif current is not None and section == "Content:":
            current["content"] = "\n".join(block).strip()
        elif current is not None and section == "References:":
            current["references"] = [
                line[2:].strip() for line in block if line.startswith("- ")
            ]
        elif current is not None and section == "Output:":
            current["output"] = parse_triples("\n".join(block))
        block = []

    def flush_example():
        if current is not None:
            examples.append(
                PromptExample(
                    content=current.get("content", ""),
                    metadata=current.get("metadata", {}),
                    references=current.get("references", []),
                    output=current.get("output", []),
                )
            )

    for line in text.splitlines():
        header = _is_header(line)
        if header is None:
            block.append(line)
            continue
        flush_block()
        remainder = line[len(header):].strip()
        if header == "Directive:":
            directive = remainder or directive
            section = None
        elif header == "Example:":
            flush_example()
            current = {}
            section = None
        elif header == "Metadata:":
            if current is not None and remainder:
                current["metadata"] = json.loads(remainder)
            section = None
        else:
            section = header
            if remainder:
                block.append(remainder)
    flush_block()
    flush_example()
    return PromptTemplate(
        instruction="\n".join(instruction_lines).strip(),
        step_directive=directive,
        examples=examples,
    )


def save_template(template: PromptTemplate, path: str | Path) -> None:
    lines = ["Instruction:", template.instruction.strip(), ""]
    lines.append(f"Directive: {template.step_directive.strip()}")
    for example in template.examples:
        lines.append("")
        lines.append("Example:")
        lines.append(f"Content: {example.content}")
        lines.append(
            "Metadata: " + json.dumps(example.metadata, ensure_ascii=False, sort_keys=True)
        )
        lines.append("References:")
        lines.extend(f"- {ref}" for ref in example.references)
        lines.append("Output:")
        lines.extend(t.serialize() for t in example.output)
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def default_template() -> PromptTemplate:
    from importlib import resources

    with resources.as_file(
        resources.files("lexstruct").joinpath("templates/default_prompt.txt")
    ) as path:
        return load_template(path)


def example_from_record(
    record: ArticleRecord,
    references: Sequence[str],
    output: Sequence[KnowledgeTriple] = (),
) -> PromptExample:
    metadata = {
        "domain": record.domain,
        "law_num": record.law_num,
        "instrument": record.name,
        "number": record.number.raw,
        "signature_date": record.signature_date.isoformat(),
        "article": record.art_num.canonical() if record.art_num else "",
        "nature": record.nature.value,
    }
    return PromptExample(
        content=record.full_text,
        metadata=metadata,
        references=list(references),
        output=list(output),
    )


# --- providers ---------------------------------------------------------------


@dataclass
class ProviderLimits:
    max_concurrent: int = 4
    retries: int = 3
    backoff_s: float = 0.5


@dataclass
class ProviderSpec:
    """Provider identity and transport settings.

    ``auth_env`` names the environment variable holding the API key; the key
    itself is resolved at call time and never stored or serialized.
    """

    name: str
    kind: str = "http"
    endpoint: str = ""
    model: str = ""
    auth_env: str = ""
    limits: ProviderLimits = field(default_factory=ProviderLimits)
    options: dict = field(default_factory=dict)

    def to_json_dict(self) -> dict:
        return {
            "name": self.name,
            "kind": self.kind,
            "endpoint": self.endpoint,
            "model": self.model,
            "auth_env": self.auth_env,
            "limits": {
                "max_concurrent": self.limits.max_concurrent,
                "retries": self.limits.retries,
                "backoff_s": self.limits.backoff_s,
            },
            "options": {k: v for k, v in self.options.items()},
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "ProviderSpec":
        limits = d.get("limits", {})
        return cls(
            name=d["name"],
            kind=d.get("kind", "http"),
            endpoint=d.get("endpoint", ""),
            model=d.get("model", ""),
            auth_env=d.get("auth_env", ""),
            limits=ProviderLimits(
                max_concurrent=limits.get("max_concurrent", 4),
                retries=limits.get("retries", 3),
                backoff_s=limits.get("backoff_s", 0.5),
            ),
            options=d.get("options", {}),
        )


class Provider:
    """Anything with a spec and a ``complete(prompt) -> str`` method."""

    spec: ProviderSpec

    def complete(self, prompt: str) -> str:
        raise NotImplementedError


class HttpChatProvider(Provider):
    """Chat-completion provider speaking the common OpenAI-style payload."""

    def __init__(self, spec: ProviderSpec):
        self.spec = spec

    def complete(self, prompt: str) -> str:
        headers = {}
        if self.spec.auth_env:
            key = os.environ.get(self.spec.auth_env)
            if not key:
                raise ProviderError(
                    f"auth variable {self.spec.auth_env} is not set for "
                    f"provider {self.spec.name}"
                )
            headers["Authorization"] = f"Bearer {key}"
        payload = {
            "model": self.spec.model,
            "messages": [{"role": "user", "content": prompt}],
        }
        payload.update(self.spec.options.get("request", {}))
        last_error: Exception | None = None
        for attempt in range(self.spec.limits.retries):
            try:
                response = httpx.post(
                    self.spec.endpoint, json=payload, headers=headers, timeout=60.0
                )
                if response.status_code >= 500 or response.status_code == 429:
                    raise ProviderError(f"status {response.status_code}")
                response.raise_for_status()
                data = response.json()
                return data["choices"][0]["message"]["content"]
            except (httpx.HTTPError, ProviderError, KeyError, ValueError) as exc:
                last_error = exc
                if attempt + 1 < self.spec.limits.retries:
                    time.sleep(self.spec.limits.backoff_s * (2**attempt))
        raise ProviderError(
            f"provider {self.spec.name} failed after {self.spec.limits.retries} "
            f"attempts: {last_error}"
        )


@dataclass
class GroundTruthEntry:
    references: list[str] = field(default_factory=list)
    triples: list[KnowledgeTriple] = field(default_factory=list)


def load_ground_truth(path: str | Path) -> dict[str, GroundTruthEntry]:
    """Read a golden triples file; entries keyed by article id."""
    entries: dict[str, GroundTruthEntry] = {}
    with Path(path).open(encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            obj = json.loads(line)
            entries[obj["article_id"]] = GroundTruthEntry(
                references=list(obj.get("references", [])),
                triples=[KnowledgeTriple(*t) for t in obj.get("triples", [])],
            )
    return entries


REFERENCE_PROMPT_HEADER = (
    "List every legal reference cited by the article below, one per line."
)


def build_reference_prompt(record: ArticleRecord) -> str:
    metadata = example_from_record(record, []).metadata
    return (
        f"{REFERENCE_PROMPT_HEADER}\n\n"
        f"Content: {record.full_text}\n"
        "Metadata: " + json.dumps(metadata, ensure_ascii=False, sort_keys=True) + "\n"
        "References:\n"
    )


_CONTENT_SECTION_RE = re.compile(
    r"^Content: (?P<body>.*?)(?=^(?:Metadata|References|Output):)",
    re.MULTILINE | re.DOTALL,
)

_CORRUPT_TOKEN_RE = re.compile(r"\w+(?:-\w+)*")


def _corrupt_text(text: str, rate: float, rng: random.Random) -> str:
    # Word cores are replaced, punctuation stays, so corrupted triple lines
    # still parse as triples.
    def repl(m: re.Match) -> str:
        if rng.random() < rate:
            return f"zzq{rng.randrange(10_000)}"
        return m.group(0)

    return _CORRUPT_TOKEN_RE.sub(repl, text)


class MockProvider(Provider):
    """Deterministic stand-in for a remote model.

    Modes: ``echo`` answers with the ground-truth output for the prompt's
    target content; ``corrupt`` perturbs the echoed tokens at a given rate;
    ``fixed`` always returns one text; ``delay`` wraps another provider and
    sleeps first.
    """

    def __init__(
        self,
        mode: str,
        *,
        ground_truth: dict[str, GroundTruthEntry] | None = None,
        seed: int = 0,
        rate: float = 0.0,
        text: str = "",
        delay_ms: float = 0.0,
        inner: Provider | None = None,
        name: str | None = None,
    ):
        if mode not in ("echo", "corrupt", "fixed", "delay"):
            raise ValueError(f"unknown mock mode {mode!r}")
        if mode == "corrupt" and not 0.0 <= rate <= 1.0:
            raise ValueError("corruption rate must be within [0, 1]")
        if mode == "delay" and inner is None:
            raise ValueError("delay mode needs an inner provider")
        self.mode = mode
        self.seed = seed
        self.rate = rate
        self.text = text
        self.delay_ms = delay_ms
        self.inner = inner
        # Keyed by article content: the prompt is the only thing the mock
        # sees, and content is the part of it that identifies the target.
        self._by_content: dict[str, GroundTruthEntry] = {
            content.strip(): entry for content, entry in (ground_truth or {}).items()
        }
        self.spec = ProviderSpec(name=name or f"mock-{mode}", kind="mock")

    def register(self, content: str, entry: GroundTruthEntry) -> None:
        self._by_content[content.strip()] = entry

    def register_all(self, pairs: Iterable[tuple[str, GroundTruthEntry]]) -> None:
        for content, entry in pairs:
            self.register(content, entry)

    def _lookup(self, prompt: str) -> GroundTruthEntry | None:
        matches = _CONTENT_SECTION_RE.findall(prompt)
        if not matches:
            return None
        return self._by_content.get(matches[-1].strip())

    def complete(self, prompt: str) -> str:
        if self.mode == "delay":
            time.sleep(self.delay_ms / 1000.0)
            assert self.inner is not None
            return self.inner.complete(prompt)
        if self.mode == "fixed":
            return self.text
        entry = self._lookup(prompt)
        if entry is None:
            return ""
        if prompt.startswith(REFERENCE_PROMPT_HEADER):
            return "\n".join(f"- {ref}" for ref in entry.references)
        body = "\n".join(t.serialize() for t in entry.triples)
        if self.mode == "corrupt" and self.rate > 0:
            matches = _CONTENT_SECTION_RE.findall(prompt)
            rng = random.Random(f"{self.seed}:{matches[-1].strip()}")
            body = _corrupt_text(body, self.rate, rng)
        return "The cited provisions identify the relevant entities.\nOutput:\n" + body


def mock_provider(
    mode: str,
    *,
    ground_truth: dict[str, GroundTruthEntry] | None = None,
    seed: int = 0,
    rate: float = 0.0,
    text: str = "",
    delay_ms: float = 0.0,
    inner: Provider | None = None,
    name: str | None = None,
) -> MockProvider:
    return MockProvider(
        mode,
        ground_truth=ground_truth,
        seed=seed,
        rate=rate,
        text=text,
        delay_ms=delay_ms,
        inner=inner,
        name=name,
    )


def build_provider(
    spec: ProviderSpec,
    records: Sequence[tuple[str, ArticleRecord]] | None = None,
) -> Provider:
    """Instantiate a provider from its spec.

    Mock providers with a ``ground_truth`` option need ``records`` (article id
    paired with its record) so answers can be matched to prompt contents.
    """
    if spec.kind == "http":
        return HttpChatProvider(spec)
    if spec.kind == "mock":
        opts = spec.options
        provider = MockProvider(
            opts.get("mode", "echo"),
            seed=int(opts.get("seed", 0)),
            rate=float(opts.get("rate", 0.0)),
            text=opts.get("text", ""),
            delay_ms=float(opts.get("delay_ms", 0.0)),
            name=spec.name,
        )
        provider.spec = spec
        if opts.get("ground_truth") and records:
            ground_truth = load_ground_truth(opts["ground_truth"])
            for record_id, record in records:
                if record_id in ground_truth:
                    provider.register(record.full_text, ground_truth[record_id])
        return provider
    raise ValueError(f"unknown provider kind {spec.kind!r}")


# --- operations ---------------------------------------------------------------


@dataclass
class ExtractedReference:
    """One citation line from the reference pre-extraction pass.

    ``raw`` flags lines the grammar rejected; they are preserved verbatim.
    """

    text: str
    raw: bool = False


def extract_references(record: ArticleRecord, provider: Provider) -> list[ExtractedReference]:
    response = provider.complete(build_reference_prompt(record))
    out: list[ExtractedReference] = []
    for raw_line in response.splitlines():
        line = _BULLET_RE.sub("", raw_line.strip())
        if not line:
            continue
        try:
            out.append(ExtractedReference(format_reference(parse_reference(line))))
        except UnparsableReference:
            out.append(ExtractedReference(line, raw=True))
    return out


_OUTPUT_HEADER_RE = re.compile(r"^output\s*:\s*$", re.IGNORECASE | re.MULTILINE)


def generate_triples(
    record: ArticleRecord,
    references: Sequence[str],
    template: PromptTemplate,
    provider: Provider,
) -> tuple[list[KnowledgeTriple], str]:
    """Render the prompt for one article, query the provider, parse triples.

    Reasoning text before the final Output section is skipped. An answer with
    no parseable triple yields an empty list (plus the raw text), not an
    error.
    """
    target = example_from_record(record, references)
    prompt = render_prompt(template, target)
    raw = provider.complete(prompt)
    segment = raw
    matches = list(_OUTPUT_HEADER_RE.finditer(raw))
    if matches:
        segment = raw[matches[-1].end():]
    return parse_triples(segment), raw


@dataclass
class BatchItem:
    article_id: str
    triples: list[KnowledgeTriple]
    raw: str
    error: str | None
    seconds: float


@dataclass
class BatchResult:
    items: list[BatchItem]
    eid_seconds: float

    @property
    def eid(self) -> str:
        return format_eid(self.eid_seconds)

    @property
    def failures(self) -> list[BatchItem]:
        return [item for item in self.items if item.error is not None]


def format_eid(seconds: float) -> str:
    """Format a duration as XmYYs, e.g. 233 seconds -> ``3m53s``."""
    total = int(Decimal(repr(float(seconds))).quantize(Decimal("1"), rounding=ROUND_HALF_UP))
    return f"{total // 60}m{total % 60:02d}s"


def run_batch(
    articles: Sequence[tuple[str, ArticleRecord, Sequence[str]]],
    template: PromptTemplate,
    provider: Provider,
    concurrency: int | None = None,
) -> BatchResult:
    """Generate triples for a batch, honoring the provider concurrency limit.

    Results come back in input order; per-article failures are recorded
    without aborting the batch.
    """

    def one(article_id: str, record: ArticleRecord, refs: Sequence[str]) -> BatchItem:
        t0 = time.perf_counter()
        try:
            triples, raw = generate_triples(record, refs, template, provider)
            return BatchItem(article_id, triples, raw, None, time.perf_counter() - t0)
        except Exception as exc:  # noqa: BLE001 - isolate per-article failures
            return BatchItem(article_id, [], "", str(exc), time.perf_counter() - t0)

    limit = concurrency if concurrency is not None else provider.spec.limits.max_concurrent
    limit = max(1, limit)
    start = time.perf_counter()
    with ThreadPoolExecutor(max_workers=limit) as pool:
        futures = [pool.submit(one, *entry) for entry in articles]
        items = [f.result() for f in futures]
    return BatchResult(items=items, eid_seconds=time.perf_counter() - start)
