"""Grammar for legal identifiers.

Covers instrument numbers (year-sequence pairs such as ``2020-567``), article
labels with their L./R. prefixes and multiplicative adverbs (``L. 1``,
``5 bis``), and the canonical citation string used throughout the pipeline
(``articles 2, 5 ... 8 of law 64-46``). Runs of three or more consecutive
article numbers are compressed with an ellipsis; parsing expands them back.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum


class NotAnInstrumentNumber(ValueError):
    """String does not match the <year>-<sequence> instrument form."""


class NotAnArticleLabel(ValueError):
    """String does not match the article label grammar."""


class InvertedRange(ValueError):
    """Range endpoints given in decreasing order."""


class UnparsableReference(ValueError):
    """Reference string matches no production of the citation grammar."""

    def __init__(self, message: str, span: str | None = None):
        super().__init__(message if span is None else f"{message}: {span!r}")
        self.span = span


class Prefix(Enum):
    NONE = ""
    L = "L"
    R = "R"


class Multiplicative(Enum):
    NONE = ""
    BIS = "bis"
    TER = "ter"
    QUATER = "quater"


_MULT_ORDER = {m: i for i, m in enumerate(Multiplicative)}

_INSTRUMENT_RE = re.compile(r"^(\d{1,4})-(\d+)$")

# Prefixes require the dot ("L. 1", "L.1"); bare "L 2" or "L2" are rejected.
_LABEL_RE = re.compile(
    r"^(?:([LR])\.\s*)?(\d+)(?:\s+(bis|ter|quater|quarter))?$",
    re.IGNORECASE,
)


@dataclass(frozen=True)
class InstrumentNumber:
    """A year-sequence instrument identifier, e.g. decree 2020-567."""

    year: int
    seq: int
    raw: str

    def __str__(self) -> str:
        return self.raw


def parse_instrument_number(s: str) -> InstrumentNumber:
    m = _INSTRUMENT_RE.match(s.strip())
    if not m:
        raise NotAnInstrumentNumber(f"not an instrument number: {s!r}")
    seq = int(m.group(2))
    if seq <= 0:
        raise NotAnInstrumentNumber(f"sequence must be positive: {s!r}")
    return InstrumentNumber(year=int(m.group(1)), seq=seq, raw=m.group(0))


@dataclass(frozen=True)
class ArticleLabel:
    """An article designation: optional L./R. prefix, number, optional adverb."""

    number: int
    prefix: Prefix = Prefix.NONE
    multiplicative: Multiplicative = Multiplicative.NONE

    def canonical(self) -> str:
        parts = []
        if self.prefix is not Prefix.NONE:
            parts.append(f"{self.prefix.value}. ")
        parts.append(str(self.number))
        if self.multiplicative is not Multiplicative.NONE:
            parts.append(f" {self.multiplicative.value}")
        return "".join(parts)

    def sort_key(self) -> tuple[int, int]:
        return (self.number, _MULT_ORDER[self.multiplicative])

    def __str__(self) -> str:
        return self.canonical()


def parse_article_label(s: str) -> ArticleLabel:
    """Parse an article label, tolerating spacing variants like ``L.1``.

    The adverb spelling "quarter" is accepted as an alias and normalized to
    "quater".
    """
    text = " ".join(s.split())
    m = _LABEL_RE.match(text)
    if not m:
        raise NotAnArticleLabel(f"not an article label: {s!r}")
    number = int(m.group(2))
    if number <= 0:
        raise NotAnArticleLabel(f"article number must be positive: {s!r}")
    prefix = Prefix(m.group(1).upper()) if m.group(1) else Prefix.NONE
    adverb = (m.group(3) or "").lower()
    if adverb == "quarter":
        adverb = "quater"
    mult = Multiplicative(adverb) if adverb else Multiplicative.NONE
    return ArticleLabel(number=number, prefix=prefix, multiplicative=mult)


class RefTarget(Enum):
    ABSOLUTE = "absolute"
    CURRENT_LAW = "current_law"
    CURRENT_DECREE = "current_decree"
    PREVIOUS_ARTICLE = "previous_article"
    NAMED_ENTITY = "named_entity"


class InstrumentKind(Enum):
    LAW = "law"
    DECREE = "decree"


@dataclass(frozen=True)
class LegalReference:
    """A normalized citation.

    Absolute references carry one or more article labels and optionally the
    cited instrument; relative references point at the enclosing law/decree or
    the previous article; named entities are free phrases such as the title of
    a legal code.
    """

    target: RefTarget
    articles: frozenset[ArticleLabel] = frozenset()
    instrument: tuple[InstrumentKind, InstrumentNumber] | None = None
    entity_name: str | None = None

    def __post_init__(self):
        if self.target is RefTarget.ABSOLUTE:
            if not self.articles:
                raise ValueError("absolute reference needs at least one article")
            if len({a.prefix for a in self.articles}) > 1:
                raise ValueError("articles in one reference must share a prefix")
        elif self.articles:
            raise ValueError("only absolute references carry articles")
        if self.target is RefTarget.NAMED_ENTITY:
            if not self.entity_name:
                raise ValueError("named-entity reference needs a non-empty name")
        elif self.entity_name:
            raise ValueError("entity_name only valid for named-entity references")
        if self.target is not RefTarget.ABSOLUTE and self.instrument is not None:
            raise ValueError("instrument only valid for absolute references")

    def sorted_articles(self) -> list[ArticleLabel]:
        return sorted(self.articles, key=ArticleLabel.sort_key)


def expand_range(first: int, last: int) -> set[int]:
    """Expand an inclusive run of consecutive article numbers."""
    if first > last:
        raise InvertedRange(f"inverted range {first} ... {last}")
    return set(range(first, last + 1))


def _compress_runs(labels: list[ArticleLabel]) -> list[str]:
    # Maximal runs of >= 3 consecutive plain numbers become "first ... last";
    # adverb-bearing labels never join a run.
    items: list[str] = []
    i = 0
    while i < len(labels):
        j = i
        if labels[i].multiplicative is Multiplicative.NONE:
            while (
                j + 1 < len(labels)
                and labels[j + 1].multiplicative is Multiplicative.NONE
                and labels[j + 1].number == labels[j].number + 1
            ):
                j += 1
        if j - i + 1 >= 3:
            items.append(f"{labels[i].canonical()} ... {labels[j].canonical()}")
        else:
            items.extend(lab.canonical() for lab in labels[i : j + 1])
        i = j + 1
    return items


def format_reference(ref: LegalReference) -> str:
    """Render a reference in its canonical string form."""
    if ref.target is RefTarget.CURRENT_LAW:
        return "this law"
    if ref.target is RefTarget.CURRENT_DECREE:
        return "this decree"
    if ref.target is RefTarget.PREVIOUS_ARTICLE:
        return "the previous article"
    if ref.target is RefTarget.NAMED_ENTITY:
        return ref.entity_name or ""
    labels = ref.sorted_articles()
    keyword = "article" if len(labels) == 1 else "articles"
    text = f"{keyword} {', '.join(_compress_runs(labels))}"
    if ref.instrument is not None:
        kind, number = ref.instrument
        text += f" of {kind.value} {number.raw}"
    return text


_ARTICLE_KEYWORD_RE = re.compile(r"^articles?\s+", re.IGNORECASE)
_INSTRUMENT_TAIL_RE = re.compile(
    r"\s+of\s+(law|decree)\s+(\d{1,4}-\d+)$", re.IGNORECASE
)
_ELLIPSIS_SPLIT_RE = re.compile(r"\s*\.\.\.\s*")


def parse_reference(s: str) -> LegalReference:
    """Parse a canonical reference string.

    Tolerant to extra internal whitespace, capitalization of keywords, and the
    Unicode ellipsis. Strings that do not open with a grammar keyword are
    treated as named entities, verbatim.
    """
    text = " ".join(s.replace("…", "...").split())
    if not text:
        raise UnparsableReference("empty reference")
    low = text.lower()
    if low == "this law":
        return LegalReference(RefTarget.CURRENT_LAW)
    if low == "this decree":
        return LegalReference(RefTarget.CURRENT_DECREE)
    if low == "the previous article":
        return LegalReference(RefTarget.PREVIOUS_ARTICLE)
    kw = _ARTICLE_KEYWORD_RE.match(text)
    if kw is None:
        if low in ("article", "articles"):
            raise UnparsableReference("article keyword without labels", text)
        return LegalReference(RefTarget.NAMED_ENTITY, entity_name=text)
    return _parse_absolute(text[kw.end() :])


def _parse_absolute(body: str) -> LegalReference:
    instrument = None
    tail = _INSTRUMENT_TAIL_RE.search(body)
    if tail:
        kind = InstrumentKind(tail.group(1).lower())
        instrument = (kind, parse_instrument_number(tail.group(2)))
        body = body[: tail.start()]
    labels: set[ArticleLabel] = set()
    for item in body.split(","):
        item = item.strip()
        if not item:
            raise UnparsableReference("empty item in article list", body)
        if "..." in item:
            ends = _ELLIPSIS_SPLIT_RE.split(item)
            if len(ends) != 2 or not ends[0] or not ends[1]:
                raise UnparsableReference("malformed range", item)
            try:
                first = parse_article_label(ends[0])
                last = parse_article_label(ends[1])
            except NotAnArticleLabel as exc:
                raise UnparsableReference("bad range endpoint", item) from exc
            if (
                first.multiplicative is not Multiplicative.NONE
                or last.multiplicative is not Multiplicative.NONE
            ):
                raise UnparsableReference("range endpoints cannot carry adverbs", item)
            if first.prefix is not last.prefix:
                raise UnparsableReference("range endpoints disagree on prefix", item)
            try:
                numbers = expand_range(first.number, last.number)
            except InvertedRange as exc:
                raise UnparsableReference("inverted range", item) from exc
            labels.update(
                ArticleLabel(number=n, prefix=first.prefix) for n in numbers
            )
        else:
            try:
                labels.add(parse_article_label(item))
            except NotAnArticleLabel as exc:
                raise UnparsableReference("bad article label", item) from exc
    try:
        return LegalReference(
            RefTarget.ABSOLUTE, articles=frozenset(labels), instrument=instrument
        )
    except ValueError as exc:
        raise UnparsableReference(str(exc), body) from exc
