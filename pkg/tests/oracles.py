"""Independent reference implementations used to cross-check the package.

Deliberately written with different structure from the production code: the
extraction oracle runs two explicit passes (role annotation, then assembly),
the LCS oracle enumerates subsequences by bitmask, and the BFS oracle rescans
the full edge list at every level.
"""

from __future__ import annotations

import random
from functools import lru_cache

from lexstruct.docmodel import (
    DocumentDescriptor,
    DocumentElement,
    ElementKind,
    MarkerConfig,
    default_config,
    parse_rent_marker,
    parse_subdivision_marker,
)
from lexstruct.extractor import (
    ArticleRecord,
    Nature,
    RentAttrs,
    nature_of,
    parse_article_marker,
)
from lexstruct.docmodel import SubdivisionRank
from lexstruct.graph import PropertyGraph, REQUIRED_PROPS, SCHEMA, EdgeType, NodeLabel
from lexstruct.numbering import (
    ArticleLabel,
    InstrumentKind,
    LegalReference,
    Multiplicative,
    Prefix,
    RefTarget,
    parse_instrument_number,
)


# --- two-pass extraction oracle ---------------------------------------------


def _prune(path, entry):
    return [e for e in path if e.rank.depth < entry.rank.depth] + [entry]


def _rank_label(path, rank):
    for entry in reversed(path):
        if entry.rank is rank:
            return entry.label
    return None


def two_pass_extract(
    descriptor: DocumentDescriptor,
    elements: list[DocumentElement],
    config: MarkerConfig | None = None,
) -> list[ArticleRecord]:
    """Span-style reference extraction: annotate roles, then assemble."""
    config = config or default_config()
    is_rent = descriptor.is_rent

    # Pass 1: assign each element a role given the flag timeline.
    roles: list[str] = []
    in_art = in_subdiv = in_r_subs = False
    for el in elements:
        if el.kind is ElementKind.EMPTY:
            roles.append("skip")
        elif el.kind is ElementKind.SUBDIVISION:
            roles.append("sub")
            in_subdiv = True
            in_r_subs = False
        elif el.kind is ElementKind.ARTICLE_START:
            roles.append("art")
            in_art = True
            in_subdiv = False
        elif (
            el.kind is ElementKind.RENT_SUBDIVISION
            and in_art
            and in_subdiv
            and is_rent
        ):
            roles.append("rent_marker")
            in_r_subs = True
        else:
            roles.append("text_r" if in_r_subs else "text")

    # Pass 2: assemble records from the annotated stream.
    records: list[ArticleRecord] = []
    path: list = []
    content: list[str] = []
    content_r: list[str] = []
    attribs: dict | None = None

    def snapshot() -> list:
        if attribs is not None and attribs["subdivision"] is not None:
            return list(attribs["subdivision"])
        return list(path)

    def make_record(text: str, rent_text: str) -> ArticleRecord:
        subdivision = snapshot()
        rent_attrs = None
        if rent_text:
            rent_attrs = RentAttrs(
                locality=_rank_label(subdivision, SubdivisionRank.LOCALITY) or "",
                rent_category=_rank_label(subdivision, SubdivisionRank.RENT_CATEGORY) or "",
                housing_type=_rank_label(subdivision, SubdivisionRank.HOUSING_TYPE),
                rent_content=rent_text,
            )
        a = attribs or {}
        return ArticleRecord(
            domain=descriptor.domain,
            law_num=descriptor.law_num,
            name=descriptor.name,
            number=descriptor.number,
            signature_date=descriptor.signature_date,
            art_num=a.get("art_num"),
            heading=a.get("heading"),
            multiplicative=a.get("multiplicative", Multiplicative.NONE),
            content=text,
            subdivision=subdivision,
            nature=a.get("nature", Nature.UNMARKED),
            declaration=a.get("declaration", False),
            rent_attrs=rent_attrs,
        )

    def joined(parts: list[str]) -> str:
        return "\n".join(p for p in parts if p)

    def close() -> None:
        nonlocal content, content_r
        records.append(make_record(joined(content), joined(content_r)))
        content, content_r = [], []

    def leading() -> None:
        nonlocal content, content_r, attribs
        text = [p for p in content + content_r if p.strip()]
        content, content_r = [], []
        if not text:
            return
        if "code" in descriptor.name.lower():
            return  # dropped (reported as an issue by the real implementation)
        attribs = {
            "art_num": None,
            "heading": None,
            "multiplicative": Multiplicative.NONE,
            "nature": Nature.UNMARKED,
            "declaration": True,
            "subdivision": list(path),
        }
        records.append(make_record(joined(text), ""))
        attribs = None

    opened = False
    for el, role in zip(elements, roles):
        if role == "skip":
            continue
        if role == "sub":
            path = _prune(path, parse_subdivision_marker(el.text, config))
        elif role == "art":
            label, heading, inline = parse_article_marker(el.text)
            if opened:
                close()
            else:
                leading()
            if is_rent:
                path = []
                snap = None
            else:
                snap = list(path)
            attribs = {
                "art_num": label,
                "heading": heading,
                "multiplicative": label.multiplicative,
                "nature": nature_of(label),
                "declaration": False,
                "subdivision": snap,
            }
            content = [] if inline is None else [inline]
            content_r = []
            opened = True
        elif role == "rent_marker":
            if content_r:
                records.append(make_record("", joined(content_r)))
                content_r = []
            path = _prune(path, parse_rent_marker(el.text, config))
        else:
            text = el.text.strip()
            if not text:
                continue
            if role == "text_r":
                content_r.append(text)
            else:
                content.append(text)
    if opened:
        close()
    else:
        leading()
    return records


# --- randomized element streams ----------------------------------------------


_WORDS = (
    "les terres rurales sont administrees par le conseil conformement aux "
    "usages locaux et sous reserve des droits acquis la redevance est due"
).split()

_SUB_MARKERS = [
    ("PARTIE", "I"), ("LIVRE", "II"), ("TITRE", "I"), ("TITRE", "III"),
    ("CHAPITRE", "II"), ("CHAPITRE", "IV"), ("SECTION", "1"), ("SECTION", "3"),
    ("PARAGRAPHE", "2"),
]

_ART_LABELS = ["premier", "2", "3", "5 bis", "7", "L. 1", "L. 4", "R. 9", "12 ter"]

_RENT_MARKERS = ["Localité : Dakar", "Localité : Thies", "Catégorie A",
                 "Catégorie B", "Type d'habitat : villa"]


def _phrase(rng: random.Random) -> str:
    return " ".join(rng.choice(_WORDS) for _ in range(rng.randint(3, 8))) + "."


def random_descriptor(rng: random.Random, is_rent: bool = False) -> DocumentDescriptor:
    from lexstruct.docmodel import parse_descriptor

    name = rng.choice(["loi", "decret", "arrete"])
    number = f"{rng.randint(60, 99)}-{rng.randint(1, 99)}"
    return parse_descriptor(
        f"corpus/{rng.choice(['foncier', 'procedure'])}/{number}/",
        f"{name}_{number}_1990-01-0{rng.randint(1, 9)}.jsonl",
        is_rent,
    )


def random_stream(
    rng: random.Random,
    max_len: int = 120,
    *,
    start_with_article: bool = False,
    allow_markers_with_text: bool = True,
) -> list[DocumentElement]:
    """Random non-rent stream over sub/art/p/tr/empty kinds."""
    els: list[DocumentElement] = []
    if start_with_article:
        els.append(DocumentElement(ElementKind.ARTICLE_START,
                                   f"Article {rng.choice(_ART_LABELS)}. —"))
    target = rng.randint(1, max_len)
    while len(els) < target:
        roll = rng.random()
        if roll < 0.15:
            keyword, label = rng.choice(_SUB_MARKERS)
            heading = f" — {_phrase(rng)[:-1]}" if rng.random() < 0.3 else ""
            els.append(DocumentElement(ElementKind.SUBDIVISION, f"{keyword} {label}{heading}"))
        elif roll < 0.35:
            marker = f"Article {rng.choice(_ART_LABELS)}. —"
            if allow_markers_with_text and rng.random() < 0.3:
                marker += f" {_phrase(rng)}"
            els.append(DocumentElement(ElementKind.ARTICLE_START, marker))
        elif roll < 0.40:
            els.append(DocumentElement(ElementKind.EMPTY, "   "))
        elif roll < 0.50:
            els.append(DocumentElement(ElementKind.TABLE_ROW, f"{_phrase(rng)} | {rng.randint(1, 9)} 000"))
        else:
            els.append(DocumentElement(ElementKind.PARAGRAPH, _phrase(rng)))
    return els


def random_rent_stream(rng: random.Random, max_len: int = 120) -> list[DocumentElement]:
    """Rent stream where rent markers only appear in an active rent context."""
    els = [
        DocumentElement(ElementKind.ARTICLE_START, f"Article {rng.choice(_ART_LABELS)}. —"),
        DocumentElement(ElementKind.SUBDIVISION, "TITRE I"),
    ]
    in_context = True
    target = rng.randint(2, max_len)
    while len(els) < target:
        roll = rng.random()
        if roll < 0.20 and in_context:
            els.append(DocumentElement(ElementKind.RENT_SUBDIVISION, rng.choice(_RENT_MARKERS)))
        elif roll < 0.30:
            els.append(DocumentElement(ElementKind.ARTICLE_START,
                                       f"Article {rng.choice(_ART_LABELS)}. —"))
            in_context = False
        elif roll < 0.40:
            keyword, label = rng.choice(_SUB_MARKERS)
            els.append(DocumentElement(ElementKind.SUBDIVISION, f"{keyword} {label}"))
            in_context = True
        elif roll < 0.45:
            els.append(DocumentElement(ElementKind.EMPTY, ""))
        elif roll < 0.60:
            els.append(DocumentElement(ElementKind.TABLE_ROW, f"Villa | {rng.randint(10, 60)} 000"))
        else:
            els.append(DocumentElement(ElementKind.PARAGRAPH, _phrase(rng)))
    return els


# --- brute-force LCS -----------------------------------------------------------


@lru_cache(maxsize=None)
def _masks_by_popcount(n: int) -> tuple[int, ...]:
    return tuple(sorted(range(1 << n), key=lambda m: -bin(m).count("1")))


def brute_force_lcs(a: tuple, b: tuple) -> int:
    """Maximum length over all subsequences of ``a`` that embed in ``b``."""
    if len(a) > len(b):
        a, b = b, a
    for mask in _masks_by_popcount(len(a)):
        sub = [a[i] for i in range(len(a)) if mask >> i & 1]
        it = iter(b)
        if all(token in it for token in sub):
            return len(sub)
    return 0


# --- BFS oracle ----------------------------------------------------------------


def bfs_oracle(
    graph: PropertyGraph,
    start_id: str,
    depth: int,
    edge_filter: set[EdgeType] | None = None,
    label_filter: set[NodeLabel] | None = None,
) -> set[str]:
    """Reachable node ids by level-wise rescans of the whole edge list."""
    edges = [(e.type, e.src, e.dst) for e in graph.edges.values()]
    reached = {start_id}
    frontier = {start_id}
    for _ in range(depth):
        nxt = set()
        for edge_type, src, dst in edges:
            if edge_filter is not None and edge_type not in edge_filter:
                continue
            for a, b in ((src, dst), (dst, src)):
                if a in frontier and b not in reached:
                    if label_filter is not None and graph.nodes[b].label not in label_filter:
                        continue
                    nxt.add(b)
        reached |= nxt
        frontier = nxt
    return reached


# --- random graphs ---------------------------------------------------------------


def _props_for(label: NodeLabel, i: int) -> dict:
    props = {}
    for prop in REQUIRED_PROPS.get(label, ()):
        props[prop] = f"{prop}-{i}"
    return props


def random_graph(rng: random.Random, max_nodes: int = 500) -> PropertyGraph:
    graph = PropertyGraph()
    labels = list(NodeLabel)
    n = rng.randint(2, max_nodes)
    ids_by_label: dict[NodeLabel, list[str]] = {label: [] for label in labels}
    for i in range(n):
        label = rng.choice(labels)
        node_id = graph.add_node(label, _props_for(label, i))
        ids_by_label[label].append(node_id)
    edge_types = list(EdgeType)
    target_edges = rng.randint(0, min(3 * n, 1500))
    attempts = 0
    while len(graph.edges) < target_edges and attempts < target_edges * 4:
        attempts += 1
        edge_type = rng.choice(edge_types)
        pairs = [
            (s, d)
            for (s, d) in SCHEMA[edge_type]
            if ids_by_label[s] and ids_by_label[d]
        ]
        if not pairs:
            continue
        src_label, dst_label = rng.choice(pairs)
        graph.add_edge(
            edge_type,
            rng.choice(ids_by_label[src_label]),
            rng.choice(ids_by_label[dst_label]),
        )
    return graph


# --- random references -------------------------------------------------------------


_ENTITY_PHRASES = [
    "le Code du domaine de l'Etat",
    "le Code des obligations civiles",
    "la loi fonciere de 1964",
    "le registre des deliberations",
    "un acte uniforme relatif au bail",
]


def random_reference(rng: random.Random) -> LegalReference:
    roll = rng.random()
    if roll < 0.10:
        return LegalReference(RefTarget.CURRENT_LAW)
    if roll < 0.18:
        return LegalReference(RefTarget.CURRENT_DECREE)
    if roll < 0.26:
        return LegalReference(RefTarget.PREVIOUS_ARTICLE)
    if roll < 0.36:
        return LegalReference(
            RefTarget.NAMED_ENTITY, entity_name=rng.choice(_ENTITY_PHRASES)
        )
    prefix = rng.choice([Prefix.NONE, Prefix.NONE, Prefix.L, Prefix.R])
    count = rng.randint(1, 8)
    numbers: set[int] = set()
    cursor = rng.randint(1, 40)
    while len(numbers) < count:
        numbers.add(cursor)
        cursor += 1 if rng.random() < 0.6 else rng.randint(2, 9)
    labels = set()
    for number in numbers:
        mult = Multiplicative.NONE
        if rng.random() < 0.15:
            mult = rng.choice(
                [Multiplicative.BIS, Multiplicative.TER, Multiplicative.QUATER]
            )
        labels.add(ArticleLabel(number=number, prefix=prefix, multiplicative=mult))
    instrument = None
    if rng.random() < 0.6:
        kind = rng.choice([InstrumentKind.LAW, InstrumentKind.DECREE])
        raw = f"{rng.choice([64, 76, 98, 2019, 2020])}-{rng.randint(1, 999)}"
        instrument = (kind, parse_instrument_number(raw))
    return LegalReference(
        RefTarget.ABSOLUTE, articles=frozenset(labels), instrument=instrument
    )
