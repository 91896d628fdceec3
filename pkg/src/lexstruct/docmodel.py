"""Document interchange model for legal corpora.

A corpus is laid out as ``<root>/<domain>/<law_num>/<name>_<number>_<date>.jsonl``
where each file is a line-delimited stream of document elements. One record per
line: ``{"k": <kind-tag>, "t": <text>, "h": <level or null>}`` with kind tags
``sub`` (subdivision marker), ``rsub`` (rent-specific marker), ``art`` (article
start), ``p`` (paragraph), ``tr`` (table row), and ``""`` for unclassified
records, which are resolved by :func:`classify_element` on read.
"""

from __future__ import annotations

import json
import re
import unicodedata
from dataclasses import dataclass, field
from datetime import date
from enum import Enum
from pathlib import Path, PurePosixPath
from typing import IO, Iterable, Iterator

from .numbering import (
    InstrumentNumber,
    NotAnInstrumentNumber,
    parse_instrument_number,
)


class MalformedPath(ValueError):
    """Directory path does not follow the <root>/<domain>/<law_num>/ layout."""


class MalformedDocName(ValueError):
    """Document name does not follow <name>_<number>_<YYYY-MM-DD>.<ext>."""


class BadDate(ValueError):
    """Date segment of a document name is not ISO-8601."""


class MalformedRecord(ValueError):
    """An interchange line could not be decoded."""

    def __init__(self, message: str, line_no: int):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class EncodingError(ValueError):
    """Interchange stream is not valid UTF-8."""


class UnknownRank(ValueError):
    """Subdivision marker keyword is not in the configured table."""


class ElementKind(Enum):
    SUBDIVISION = "sub"
    RENT_SUBDIVISION = "rsub"
    ARTICLE_START = "art"
    PARAGRAPH = "p"
    TABLE_ROW = "tr"
    EMPTY = ""


_KIND_TAGS = {k.value for k in ElementKind}


@dataclass
class DocumentElement:
    """One unit of a legal document stream."""

    kind: ElementKind
    text: str
    level_hint: int | None = None


class SubdivisionRank(Enum):
    PART = "part"
    BOOK = "book"
    TITLE = "title"
    CHAPTER = "chapter"
    SECTION = "section"
    PARAGRAPH = "paragraph"
    LOCALITY = "locality"
    RENT_CATEGORY = "rent_category"
    HOUSING_TYPE = "housing_type"

    @property
    def depth(self) -> int:
        return _RANK_DEPTH[self]


_RANK_DEPTH = {rank: i for i, rank in enumerate(SubdivisionRank)}

RENT_RANKS = frozenset(
    {SubdivisionRank.LOCALITY, SubdivisionRank.RENT_CATEGORY, SubdivisionRank.HOUSING_TYPE}
)


@dataclass
class SubdivisionEntry:
    rank: SubdivisionRank
    label: str
    heading: str | None = None

    def to_json_dict(self) -> dict:
        return {"rank": self.rank.value, "label": self.label, "heading": self.heading}

    @classmethod
    def from_json_dict(cls, d: dict) -> "SubdivisionEntry":
        return cls(SubdivisionRank(d["rank"]), d["label"], d.get("heading"))


def is_valid_path(entries: list[SubdivisionEntry]) -> bool:
    """A path is valid when ranks get strictly deeper along it."""
    depths = [e.rank.depth for e in entries]
    return all(a < b for a, b in zip(depths, depths[1:]))


def _fold(text: str) -> str:
    # Accent-insensitive uppercase, character for character.
    out = []
    for ch in text:
        decomposed = unicodedata.normalize("NFD", ch)
        out.append(decomposed[0].upper())
    return "".join(out)


@dataclass
class MarkerConfig:
    """Keyword tables for subdivision and rent-specific markers.

    Keys are stored accent-folded and uppercased; the built-in default covers
    the usual French drafting vocabulary but a corpus may ship its own table.
    """

    subdivision_keywords: dict[str, SubdivisionRank] = field(default_factory=dict)
    rent_keywords: dict[str, SubdivisionRank] = field(default_factory=dict)

    @classmethod
    def default(cls) -> "MarkerConfig":
        return cls(
            subdivision_keywords={
                "PARTIE": SubdivisionRank.PART,
                "LIVRE": SubdivisionRank.BOOK,
                "TITRE": SubdivisionRank.TITLE,
                "CHAPITRE": SubdivisionRank.CHAPTER,
                "SECTION": SubdivisionRank.SECTION,
                "PARAGRAPHE": SubdivisionRank.PARAGRAPH,
            },
            rent_keywords={
                "LOCALITE": SubdivisionRank.LOCALITY,
                "CATEGORIE": SubdivisionRank.RENT_CATEGORY,
                "TYPE D'HABITAT": SubdivisionRank.HOUSING_TYPE,
            },
        )

    @classmethod
    def from_file(cls, path: str | Path) -> "MarkerConfig":
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        return cls(
            subdivision_keywords={
                _fold(k): SubdivisionRank(v)
                for k, v in data.get("subdivision", {}).items()
            },
            rent_keywords={
                _fold(k): SubdivisionRank(v) for k, v in data.get("rent", {}).items()
            },
        )


_DEFAULT_CONFIG: MarkerConfig | None = None


def default_config() -> MarkerConfig:
    global _DEFAULT_CONFIG
    if _DEFAULT_CONFIG is None:
        _DEFAULT_CONFIG = MarkerConfig.default()
    return _DEFAULT_CONFIG


_ROMAN_RE = re.compile(r"^[IVXLCDM]+$")
_NUMERIC_LABEL_RE = re.compile(r"^\d+(?:er|ere|ère|e|ème|eme)?$", re.IGNORECASE)
_WORD_LABEL_RE = re.compile(r"^(?:premier|premiere|première|unique)$", re.IGNORECASE)

_LABEL_TRAILING = " \t.:;,—–-"

ARTICLE_START_RE = re.compile(
    r"^\s*article\s+(?P<label>premier|(?:[LR]\.\s*)?\d+"
    r"(?:\s+(?:bis|ter|quater|quarter))?)(?P<rest>$|\W.*)",
    re.IGNORECASE | re.DOTALL,
)


def _is_label_token(token: str) -> bool:
    token = token.rstrip(_LABEL_TRAILING)
    if not token:
        return False
    return bool(
        _ROMAN_RE.match(token)
        or _NUMERIC_LABEL_RE.match(token)
        or _WORD_LABEL_RE.match(token)
    )


def _match_subdivision(text: str, config: MarkerConfig) -> bool:
    parts = text.split(maxsplit=2)
    if len(parts) < 2:
        return False
    return _fold(parts[0]) in config.subdivision_keywords and _is_label_token(parts[1])


def parse_subdivision_marker(text: str, config: MarkerConfig | None = None) -> SubdivisionEntry:
    """Split a marker line into (rank, label, heading).

    ``"TITRE II — DU DOMAINE NATIONAL"`` gives rank TITLE, label ``II`` and
    heading ``DU DOMAINE NATIONAL``.
    """
    config = config or default_config()
    parts = text.strip().split(maxsplit=2)
    if not parts:
        raise UnknownRank("empty subdivision marker")
    rank = config.subdivision_keywords.get(_fold(parts[0]))
    if rank is None:
        raise UnknownRank(f"unknown subdivision keyword: {parts[0]!r}")
    if len(parts) < 2:
        raise UnknownRank(f"subdivision marker without label: {text!r}")
    label = parts[1].rstrip(_LABEL_TRAILING)
    heading = None
    if len(parts) == 3:
        heading = parts[2].strip(_LABEL_TRAILING) or None
    return SubdivisionEntry(rank=rank, label=label, heading=heading)


def _match_rent_keyword(text: str, config: MarkerConfig) -> tuple[SubdivisionRank, str] | None:
    folded = _fold(text.strip())
    original = text.strip()
    for keyword in sorted(config.rent_keywords, key=len, reverse=True):
        if folded.startswith(keyword):
            remainder = original[len(keyword):]
            if remainder and remainder[0].isalnum():
                continue
            value = remainder.strip(_LABEL_TRAILING)
            if value:
                return config.rent_keywords[keyword], value
    return None


def parse_rent_marker(text: str, config: MarkerConfig | None = None) -> SubdivisionEntry:
    config = config or default_config()
    match = _match_rent_keyword(text, config)
    if match is None:
        raise UnknownRank(f"unknown rent marker: {text!r}")
    rank, value = match
    return SubdivisionEntry(rank=rank, label=value)


def classify_element(
    text: str,
    level_hint: int | None = None,
    is_rent: bool = False,
    config: MarkerConfig | None = None,
) -> ElementKind:
    """Classify a raw text line. Total and deterministic.

    Table rows cannot be recognized from bare text; they must arrive
    pre-tagged in the interchange stream.
    """
    config = config or default_config()
    if not text.strip():
        return ElementKind.EMPTY
    if _match_subdivision(text, config):
        return ElementKind.SUBDIVISION
    if ARTICLE_START_RE.match(text):
        return ElementKind.ARTICLE_START
    if is_rent and _match_rent_keyword(text, config) is not None:
        return ElementKind.RENT_SUBDIVISION
    return ElementKind.PARAGRAPH


@dataclass(frozen=True)
class DocumentDescriptor:
    """Identity and metadata of one corpus document."""

    dir_path: str
    doc_name: str
    is_rent: bool
    domain: str
    law_num: str
    name: str
    number: InstrumentNumber
    signature_date: date


def parse_descriptor(dir_path: str, doc_name: str, is_rent: bool = False) -> DocumentDescriptor:
    """Derive document metadata from its location and file name."""
    parts = [p for p in PurePosixPath(str(dir_path).replace("\\", "/")).parts if p != "/"]
    if len(parts) < 2:
        raise MalformedPath(f"need <root>/<domain>/<law_num>/: {dir_path!r}")
    domain, law_num = parts[-2], parts[-1]
    if "." not in doc_name:
        raise MalformedDocName(f"missing extension: {doc_name!r}")
    stem = doc_name.rsplit(".", 1)[0]
    pieces = stem.split("_")
    if len(pieces) < 3 or not pieces[0]:
        raise MalformedDocName(
            f"expected <name>_<number>_<YYYY-MM-DD>.<ext>: {doc_name!r}"
        )
    name = "_".join(pieces[:-2])
    try:
        number = parse_instrument_number(pieces[-2])
    except NotAnInstrumentNumber as exc:
        raise MalformedDocName(f"bad instrument number in {doc_name!r}") from exc
    try:
        signature_date = date.fromisoformat(pieces[-1])
    except ValueError as exc:
        raise BadDate(f"bad date in {doc_name!r}: {pieces[-1]!r}") from exc
    return DocumentDescriptor(
        dir_path=str(dir_path),
        doc_name=doc_name,
        is_rent=is_rent,
        domain=domain,
        law_num=law_num,
        name=name,
        number=number,
        signature_date=signature_date,
    )


def read_element_stream(
    source: IO[bytes] | IO[str] | Iterable[bytes | str],
    *,
    is_rent: bool = False,
    config: MarkerConfig | None = None,
) -> Iterator[DocumentElement]:
    """Yield elements from a line-delimited interchange stream, in order.

    Records tagged ``""`` are classified on the fly; explicit tags are
    trusted, except that all-whitespace text always yields an Empty element.
    Single-pass.
    """
    config = config or default_config()
    for line_no, line in enumerate(source, start=1):
        if isinstance(line, bytes):
            try:
                line = line.decode("utf-8")
            except UnicodeDecodeError as exc:
                raise EncodingError(f"line {line_no} is not UTF-8") from exc
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise MalformedRecord(f"invalid JSON: {exc}", line_no) from exc
        if not isinstance(obj, dict) or "k" not in obj or "t" not in obj:
            raise MalformedRecord("record needs keys 'k' and 't'", line_no)
        tag, text, hint = obj["k"], obj["t"], obj.get("h")
        if tag not in _KIND_TAGS:
            raise MalformedRecord(f"unknown kind tag {tag!r}", line_no)
        if not isinstance(text, str):
            raise MalformedRecord("'t' must be a string", line_no)
        if hint is not None and not isinstance(hint, int):
            raise MalformedRecord("'h' must be an integer or null", line_no)
        if tag == "":
            kind = classify_element(text, hint, is_rent, config)
        else:
            kind = ElementKind(tag)
            if not text.strip():
                kind = ElementKind.EMPTY
        if kind not in (ElementKind.SUBDIVISION, ElementKind.RENT_SUBDIVISION):
            hint = None
        yield DocumentElement(kind=kind, text=text, level_hint=hint)


def write_element_stream(
    elements: Iterable[DocumentElement],
    sink: IO[str],
    *,
    tagged: bool = True,
) -> int:
    """Write elements in the interchange format; returns the record count.

    With ``tagged=False`` every record except table rows is emitted with the
    unclassified tag, leaving classification to the reader.
    """
    count = 0
    for el in elements:
        tag = el.kind.value
        if not tagged and el.kind is not ElementKind.TABLE_ROW:
            tag = ""
        rec = {"k": tag, "t": el.text, "h": el.level_hint}
        sink.write(json.dumps(rec, ensure_ascii=False))
        sink.write("\n")
        count += 1
    return count


def elements_from_text(
    text: str,
    *,
    is_rent: bool = False,
    config: MarkerConfig | None = None,
) -> list[DocumentElement]:
    """Convert plain text to elements, one line at a time.

    Convenience converter for corpora that only exist as flat text; table
    rows cannot be recovered this way.
    """
    config = config or default_config()
    return [
        DocumentElement(kind=classify_element(line, None, is_rent, config), text=line)
        for line in text.splitlines()
    ]
