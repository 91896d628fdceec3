"""Single-pass extraction of articles and metadata from element streams.

The extractor folds once over a document's elements, tracking the active
subdivision path and the open article. Subdivision markers prune the path down
to their own level before entering it; article-start markers close the pending
article and seed the next one; in rent documents, locality/category markers
split the open article into one record per rent context. Whatever is still
buffered at end of stream is flushed into a final record.
"""

from __future__ import annotations

import csv
import fnmatch
import json
import logging
from dataclasses import dataclass, field
from datetime import date
from enum import Enum
from pathlib import Path
from typing import IO, Iterable, Iterator

from .docmodel import (
    ARTICLE_START_RE,
    DocumentDescriptor,
    DocumentElement,
    ElementKind,
    MarkerConfig,
    SubdivisionEntry,
    SubdivisionRank,
    _fold,
    default_config,
    parse_descriptor,
    parse_rent_marker,
    parse_subdivision_marker,
    read_element_stream,
)
from .numbering import (
    ArticleLabel,
    InstrumentNumber,
    Multiplicative,
    NotAnArticleLabel,
    Prefix,
    parse_article_label,
    parse_instrument_number,
)

logger = logging.getLogger(__name__)


class ExtractionError(Exception):
    """Base class for extraction failures."""


class BadArticleHeader(ExtractionError):
    """Element marked as an article start but its label is unparseable."""


class Nature(Enum):
    LEGISLATIVE = "legislative"
    REGULATORY = "regulatory"
    UNMARKED = "unmarked"


def nature_of(label: ArticleLabel | None) -> Nature:
    if label is None:
        return Nature.UNMARKED
    if label.prefix is Prefix.L:
        return Nature.LEGISLATIVE
    if label.prefix is Prefix.R:
        return Nature.REGULATORY
    return Nature.UNMARKED


@dataclass
class RentAttrs:
    locality: str = ""
    rent_category: str = ""
    housing_type: str | None = None
    rent_content: str = ""


@dataclass
class ArticleRecord:
    """One extracted article with its metadata."""

    domain: str
    law_num: str
    name: str
    number: InstrumentNumber
    signature_date: date
    art_num: ArticleLabel | None
    heading: str | None
    multiplicative: Multiplicative
    content: str
    subdivision: list[SubdivisionEntry]
    nature: Nature
    declaration: bool
    rent_attrs: RentAttrs | None = None

    @property
    def full_text(self) -> str:
        """Content plus rent rows; what a reader of this record would see."""
        if self.rent_attrs and self.rent_attrs.rent_content:
            return f"{self.content}\n{self.rent_attrs.rent_content}".strip()
        return self.content

    def to_json_dict(self) -> dict:
        return {
            "domain": self.domain,
            "law_num": self.law_num,
            "name": self.name,
            "number": self.number.raw,
            "signature_date": self.signature_date.isoformat(),
            "art_num": self.art_num.canonical() if self.art_num else None,
            "heading": self.heading,
            "multiplicative": (
                self.multiplicative.value
                if self.multiplicative is not Multiplicative.NONE
                else None
            ),
            "nature": self.nature.value,
            "declaration": self.declaration,
            "subdivision": [e.to_json_dict() for e in self.subdivision],
            "content": self.content,
            "rent_attrs": (
                {
                    "locality": self.rent_attrs.locality,
                    "rent_category": self.rent_attrs.rent_category,
                    "housing_type": self.rent_attrs.housing_type,
                    "rent_content": self.rent_attrs.rent_content,
                }
                if self.rent_attrs
                else None
            ),
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "ArticleRecord":
        art_num = parse_article_label(d["art_num"]) if d.get("art_num") else None
        rent = d.get("rent_attrs")
        return cls(
            domain=d["domain"],
            law_num=d["law_num"],
            name=d["name"],
            number=parse_instrument_number(d["number"]),
            signature_date=date.fromisoformat(d["signature_date"]),
            art_num=art_num,
            heading=d.get("heading"),
            multiplicative=(
                Multiplicative(d["multiplicative"])
                if d.get("multiplicative")
                else Multiplicative.NONE
            ),
            content=d["content"],
            subdivision=[SubdivisionEntry.from_json_dict(e) for e in d["subdivision"]],
            nature=Nature(d["nature"]),
            declaration=d["declaration"],
            rent_attrs=(
                RentAttrs(
                    locality=rent["locality"],
                    rent_category=rent["rent_category"],
                    housing_type=rent.get("housing_type"),
                    rent_content=rent["rent_content"],
                )
                if rent
                else None
            ),
        )


@dataclass
class ExtractionIssue:
    """Non-fatal finding reported alongside the records."""

    code: str  # "orphan_content" | "duplicate_article_number"
    message: str
    element_index: int | None = None


@dataclass
class ExtractionState:
    """Mutable fold state for one document pass."""

    descriptor: DocumentDescriptor
    config: MarkerConfig
    content: list[str] = field(default_factory=list)
    content_r: list[str] = field(default_factory=list)
    attribs: dict | None = None
    subdiv: list[SubdivisionEntry] = field(default_factory=list)
    in_r_subs: bool = False
    in_art: bool = False
    in_subdiv: bool = False
    begin_r: bool = False
    visits: int = 0
    records: list[ArticleRecord] = field(default_factory=list)
    issues: list[ExtractionIssue] = field(default_factory=list)
    seen_labels: set[tuple] = field(default_factory=set)
    first_orphan_index: int | None = None


def _join(parts: list[str]) -> str:
    return "\n".join(p for p in parts if p)


def _push_subdiv(path: list[SubdivisionEntry], entry: SubdivisionEntry) -> None:
    # Entering a rank evicts everything at the same depth or deeper.
    depth = entry.rank.depth
    path[:] = [e for e in path if e.rank.depth < depth]
    path.append(entry)


def _subdiv_label(path: list[SubdivisionEntry], rank: SubdivisionRank) -> str | None:
    for entry in reversed(path):
        if entry.rank is rank:
            return entry.label
    return None


def _build_record(state: ExtractionState, content: str, rent_content: str) -> ArticleRecord:
    a = state.attribs or {}
    if a.get("subdivision") is not None:
        subdivision = list(a["subdivision"])
    else:
        subdivision = list(state.subdiv)
    rent_attrs = None
    if rent_content:
        rent_attrs = RentAttrs(
            locality=_subdiv_label(subdivision, SubdivisionRank.LOCALITY) or "",
            rent_category=_subdiv_label(subdivision, SubdivisionRank.RENT_CATEGORY) or "",
            housing_type=_subdiv_label(subdivision, SubdivisionRank.HOUSING_TYPE),
            rent_content=rent_content,
        )
    d = state.descriptor
    return ArticleRecord(
        domain=d.domain,
        law_num=d.law_num,
        name=d.name,
        number=d.number,
        signature_date=d.signature_date,
        art_num=a.get("art_num"),
        heading=a.get("heading"),
        multiplicative=a.get("multiplicative", Multiplicative.NONE),
        content=content,
        subdivision=subdivision,
        nature=a.get("nature", Nature.UNMARKED),
        declaration=a.get("declaration", False),
        rent_attrs=rent_attrs,
    )


def _close_pending(state: ExtractionState) -> None:
    record = _build_record(state, _join(state.content), _join(state.content_r))
    state.records.append(record)
    state.content = []
    state.content_r = []
    state.begin_r = False


def _emit_rent_split(state: ExtractionState) -> None:
    record = _build_record(state, "", _join(state.content_r))
    state.records.append(record)
    state.content_r = []
    state.begin_r = False


def _handle_leading_text(state: ExtractionState) -> None:
    """Deal with buffered text that precedes any article start.

    Documents whose name carries "code" report it as orphan content; any
    other document absorbs it as a declarative record.
    """
    leading = state.content + state.content_r
    if not any(p.strip() for p in leading):
        state.content = []
        state.content_r = []
        return
    if "code" in state.descriptor.name.lower():
        state.issues.append(
            ExtractionIssue(
                code="orphan_content",
                message=f"text before any article start in {state.descriptor.doc_name}",
                element_index=state.first_orphan_index,
            )
        )
        state.content = []
        state.content_r = []
        return
    state.attribs = {
        "art_num": None,
        "heading": None,
        "multiplicative": Multiplicative.NONE,
        "nature": Nature.UNMARKED,
        "declaration": True,
        "subdivision": list(state.subdiv),
    }
    state.content = leading
    state.content_r = []
    _close_pending(state)
    state.attribs = None


_HEADING_TERMINATORS = ".!?"
_SEPARATOR_CHARS = " \t.:;—–-·"


def _split_heading(rest: str) -> tuple[str | None, str | None]:
    """Heading is whatever sits between the label and the first sentence
    terminator on the marker line; no terminator means no heading."""
    term = next((i for i, ch in enumerate(rest) if ch in _HEADING_TERMINATORS), None)
    if term is None:
        heading = None
        inline = rest.strip(_SEPARATOR_CHARS) or None
    else:
        heading = rest[:term].strip(_SEPARATOR_CHARS)
        if heading.startswith("(") and heading.endswith(")"):
            heading = heading[1:-1].strip()
        heading = heading or None
        inline = rest[term + 1 :].strip()
        inline = inline.lstrip(_SEPARATOR_CHARS).strip() or None
    return heading, inline


def parse_article_marker(text: str) -> tuple[ArticleLabel, str | None, str | None]:
    """Extract (label, heading, inline content) from an article-start line."""
    m = ARTICLE_START_RE.match(text)
    if not m:
        raise BadArticleHeader(f"not an article start: {text!r}")
    label_text = m.group("label")
    if label_text.lower() == "premier":
        label = ArticleLabel(number=1)
    else:
        try:
            label = parse_article_label(label_text)
        except NotAnArticleLabel as exc:
            raise BadArticleHeader(f"bad article label in {text!r}") from exc
    heading, inline = _split_heading(m.group("rest") or "")
    return label, heading, inline


def handle_subdivision(state: ExtractionState, element: DocumentElement) -> ExtractionState:
    entry = parse_subdivision_marker(element.text, state.config)
    _push_subdiv(state.subdiv, entry)
    state.in_r_subs = False
    state.in_subdiv = True
    return state


def handle_rent_subdivision(state: ExtractionState, element: DocumentElement) -> ExtractionState:
    """Process one element inside an active rent context.

    A rent marker first closes the buffered rent content as its own record,
    then switches the context; anything else is ordinary content.
    """
    if element.kind is ElementKind.RENT_SUBDIVISION:
        if state.begin_r:
            _emit_rent_split(state)
        entry = parse_rent_marker(element.text, state.config)
        _push_subdiv(state.subdiv, entry)
        state.in_r_subs = True
    else:
        _append_content(state, element)
    return state


def handle_article_start(state: ExtractionState, element: DocumentElement) -> ExtractionState:
    label, heading, inline = parse_article_marker(element.text)
    if state.in_art:
        _close_pending(state)
    else:
        _handle_leading_text(state)
    key = (label.prefix, label.number, label.multiplicative)
    if key in state.seen_labels:
        state.issues.append(
            ExtractionIssue(
                code="duplicate_article_number",
                message=f"article {label.canonical()} appears twice in "
                f"{state.descriptor.doc_name}",
                element_index=state.visits - 1,
            )
        )
    state.seen_labels.add(key)
    if state.descriptor.is_rent:
        state.subdiv.clear()
        snapshot = None  # rent records take the path live at emission time
    else:
        snapshot = list(state.subdiv)
    state.attribs = {
        "art_num": label,
        "heading": heading,
        "multiplicative": label.multiplicative,
        "nature": nature_of(label),
        "declaration": False,
        "subdivision": snapshot,
    }
    state.in_art = True
    state.in_subdiv = False
    state.content = [] if inline is None else [inline]
    return state


def _append_content(state: ExtractionState, element: DocumentElement) -> None:
    text = element.text.strip()
    if not text:
        return
    if state.in_r_subs:
        state.content_r.append(text)
        state.begin_r = True
    else:
        state.content.append(text)
        if not state.in_art and state.first_orphan_index is None:
            state.first_orphan_index = state.visits - 1


def extract_document_with_state(
    descriptor: DocumentDescriptor,
    elements: Iterable[DocumentElement],
    *,
    config: MarkerConfig | None = None,
) -> tuple[list[ArticleRecord], ExtractionState]:
    """Run the extraction fold, returning records plus the final state.

    The state exposes the element-visit counter and collected issues; most
    callers want :func:`extract_document` instead.
    """
    state = ExtractionState(descriptor=descriptor, config=config or default_config())
    for element in elements:
        state.visits += 1
        kind = element.kind
        if kind is ElementKind.EMPTY:
            continue
        if kind is ElementKind.SUBDIVISION:
            handle_subdivision(state, element)
        elif kind is ElementKind.ARTICLE_START:
            handle_article_start(state, element)
        elif state.in_art and state.in_subdiv and descriptor.is_rent:
            handle_rent_subdivision(state, element)
        else:
            _append_content(state, element)
    if state.in_art:
        _close_pending(state)
    else:
        _handle_leading_text(state)
    return state.records, state


def extract_document(
    descriptor: DocumentDescriptor,
    elements: Iterable[DocumentElement],
    *,
    config: MarkerConfig | None = None,
    issues: list[ExtractionIssue] | None = None,
) -> list[ArticleRecord]:
    """Extract all article records from one document, in stream order."""
    records, state = extract_document_with_state(descriptor, elements, config=config)
    if issues is not None:
        issues.extend(state.issues)
    else:
        for issue in state.issues:
            logger.warning("%s: %s", issue.code, issue.message)
    return records


@dataclass
class ReportRow:
    domain: str
    law_num: str
    doc_name: str
    articles: int
    laws: int
    decrees: int
    orders: int
    declarations: int


@dataclass
class ExtractionReport:
    rows: list[ReportRow] = field(default_factory=list)
    errors: list[tuple[str, str]] = field(default_factory=list)
    issues: list[tuple[str, ExtractionIssue]] = field(default_factory=list)

    def totals(self) -> dict:
        return {
            "articles": sum(r.articles for r in self.rows),
            "laws": sum(r.laws for r in self.rows),
            "decrees": sum(r.decrees for r in self.rows),
            "orders": sum(r.orders for r in self.rows),
            "declarations": sum(r.declarations for r in self.rows),
        }

    def to_csv(self, sink: IO[str]) -> None:
        writer = csv.writer(sink, lineterminator="\n")
        writer.writerow(
            ["domain", "law_num", "doc_name", "articles", "laws", "decrees", "orders", "declarations"]
        )
        for r in self.rows:
            writer.writerow(
                [r.domain, r.law_num, r.doc_name, r.articles, r.laws, r.decrees, r.orders, r.declarations]
            )


_NAME_KEYWORDS = (
    ("LOI", "laws"),
    ("DECRET", "decrees"),
    ("ARRETE", "orders"),
    ("DECLARATION", "declarations"),
)


def _instrument_column(name: str, records: list[ArticleRecord]) -> str | None:
    if any(r.declaration for r in records):
        return "declarations"
    folded = _fold(name)
    for keyword, column in _NAME_KEYWORDS:
        if folded.startswith(keyword):
            return column
    return None


@dataclass
class CorpusExtraction:
    records: list[ArticleRecord]
    ids: list[str]
    report: ExtractionReport


def iter_corpus_documents(root: str | Path) -> Iterator[tuple[Path, str, str]]:
    """Yield (file, domain, law_num) for every document under the root, sorted."""
    root = Path(root)
    if not root.is_dir():
        return
    for domain_dir in sorted(p for p in root.iterdir() if p.is_dir()):
        for law_dir in sorted(p for p in domain_dir.iterdir() if p.is_dir()):
            for doc in sorted(law_dir.glob("*.jsonl")):
                yield doc, domain_dir.name, law_dir.name


def extract_corpus(
    root: str | Path,
    *,
    rent_glob: str | None = None,
    config: MarkerConfig | None = None,
) -> CorpusExtraction:
    """Walk a corpus tree and extract every document.

    Per-document failures are collected in the report; the walk never aborts.
    Record ids are ``<domain>/<law_num>/<stem>#<ordinal>``.
    """
    config = config or default_config()
    out = CorpusExtraction(records=[], ids=[], report=ExtractionReport())
    for doc_path, domain, law_num in iter_corpus_documents(root):
        rel = f"{domain}/{law_num}/{doc_path.name}"
        is_rent = bool(rent_glob and fnmatch.fnmatch(doc_path.name, rent_glob))
        try:
            descriptor = parse_descriptor(
                f"{root}/{domain}/{law_num}/", doc_path.name, is_rent
            )
            with doc_path.open("rb") as fh:
                elements = read_element_stream(fh, is_rent=is_rent, config=config)
                doc_issues: list[ExtractionIssue] = []
                records = extract_document(
                    descriptor, elements, config=config, issues=doc_issues
                )
        except (ValueError, ExtractionError, OSError) as exc:
            out.report.errors.append((rel, f"{type(exc).__name__}: {exc}"))
            continue
        stem = doc_path.name.rsplit(".", 1)[0]
        for i, record in enumerate(records):
            out.records.append(record)
            out.ids.append(f"{domain}/{law_num}/{stem}#{i}")
        for issue in doc_issues:
            out.report.issues.append((rel, issue))
        column_counts = {"laws": 0, "decrees": 0, "orders": 0, "declarations": 0}
        column = _instrument_column(descriptor.name, records)
        if column:
            column_counts[column] = 1
        out.report.rows.append(
            ReportRow(
                domain=domain,
                law_num=law_num,
                doc_name=doc_path.name,
                articles=len(records),
                **column_counts,
            )
        )
    return out


def write_records_jsonl(records: list[ArticleRecord], ids: list[str], sink: IO[str]) -> None:
    for record_id, record in zip(ids, records):
        obj = {"id": record_id}
        obj.update(record.to_json_dict())
        sink.write(json.dumps(obj, ensure_ascii=False))
        sink.write("\n")


def read_records_jsonl(source: IO[str] | Iterable[str]) -> tuple[list[ArticleRecord], list[str]]:
    records: list[ArticleRecord] = []
    ids: list[str] = []
    for line in source:
        if not line.strip():
            continue
        obj = json.loads(line)
        ids.append(obj["id"])
        records.append(ArticleRecord.from_json_dict(obj))
    return records, ids


_CSV_COLUMNS = [
    "domain", "law_num", "name", "number", "signature_date", "art_num",
    "heading", "multiplicative", "nature", "declaration", "subdivision",
    "content", "locality", "rent_category", "housing_type", "rent_content",
]


def write_records_csv(records: list[ArticleRecord], sink: IO[str]) -> None:
    """CSV export with the subdivision path flattened to one column."""
    writer = csv.writer(sink, lineterminator="\n")
    writer.writerow(_CSV_COLUMNS)
    for r in records:
        path = " > ".join(f"{e.rank.value} {e.label}" for e in r.subdivision)
        rent = r.rent_attrs
        writer.writerow([
            r.domain, r.law_num, r.name, r.number.raw, r.signature_date.isoformat(),
            r.art_num.canonical() if r.art_num else "",
            r.heading or "",
            r.multiplicative.value,
            r.nature.value,
            "1" if r.declaration else "0",
            path,
            r.content,
            rent.locality if rent else "",
            rent.rent_category if rent else "",
            (rent.housing_type or "") if rent else "",
            rent.rent_content if rent else "",
        ])
