"""Typed property graph of legal entities.

Ten node labels and nine relationship types with a fixed endpoint schema;
every edge insertion is validated against it. Queries are depth-bounded
neighborhoods with optional label/type filters. Exporters produce Cypher
import scripts (French vocabulary) and a neutral JSON/GraphML form that
round-trips losslessly.
"""

from __future__ import annotations

import hashlib
import json
from collections import Counter, deque
from dataclasses import dataclass, field
from datetime import date
from enum import Enum
from typing import IO, Iterable, Sequence
from xml.etree import ElementTree as ET

from .extractor import ArticleRecord
from .docmodel import _fold
from .numbering import (
    InstrumentKind,
    LegalReference,
    RefTarget,
    format_reference,
)


class GraphError(Exception):
    """Base class for graph construction failures."""


class MissingRequiredProp(GraphError):
    def __init__(self, label: "NodeLabel", prop: str):
        super().__init__(f"{label.name} node requires prop {prop!r}")
        self.label = label
        self.prop = prop


class SchemaViolation(GraphError):
    """Edge endpoints not permitted for this relationship type."""

    def __init__(self, edge_type: "EdgeType", src_label: "NodeLabel", dst_label: "NodeLabel"):
        super().__init__(
            f"{edge_type.name}: {src_label.name} -> {dst_label.name} not in schema"
        )
        self.triple = (edge_type, src_label, dst_label)


class UnknownNode(GraphError):
    pass


class NoSuchNode(GraphError):
    pass


class SinkError(GraphError):
    pass


class NodeLabel(Enum):
    DOMAIN = "Domain"
    LAW = "Law"
    DECREE = "Decree"
    ARTICLE = "Article"
    OFFICIAL_JOURNAL = "OfficialJournal"
    MINISTERIAL_ORDER = "MinisterialOrder"
    DECLARATION = "Declaration"
    UNIFORM_ACT = "UniformAct"
    LEGAL_CODE = "LegalCode"
    PERSON = "Person"


class EdgeType(Enum):
    PUBLISH = "Publish"
    POSSESS = "Possess"
    IS_ASSOCIATED = "IsAssociated"
    MODIFY = "Modify"
    REPEAL = "Repeal"
    FRAME = "Frame"
    EXECUTE = "Execute"
    BASED_ON = "BasedOn"
    SIGNED = "Signed"


_L = NodeLabel
_E = EdgeType

SCHEMA: dict[EdgeType, frozenset[tuple[NodeLabel, NodeLabel]]] = {
    _E.PUBLISH: frozenset(
        (_L.OFFICIAL_JOURNAL, dst)
        for dst in (_L.LAW, _L.DECREE, _L.MINISTERIAL_ORDER)
    ),
    _E.POSSESS: frozenset(
        {
            (_L.DOMAIN, dst)
            for dst in (
                _L.LAW,
                _L.DECREE,
                _L.MINISTERIAL_ORDER,
                _L.DECLARATION,
                _L.UNIFORM_ACT,
                _L.LEGAL_CODE,
            )
        }
        | {
            (src, _L.ARTICLE)
            for src in (_L.LAW, _L.DECREE, _L.MINISTERIAL_ORDER, _L.DECLARATION)
        }
    ),
    _E.IS_ASSOCIATED: frozenset({(_L.LAW, _L.DECREE)}),
    _E.MODIFY: frozenset({(_L.LAW, _L.LAW), (_L.LAW, _L.ARTICLE)}),
    _E.REPEAL: frozenset({(_L.LAW, _L.LAW), (_L.LAW, _L.ARTICLE)}),
    _E.FRAME: frozenset({(_L.DECREE, _L.LAW)}),
    _E.EXECUTE: frozenset({(_L.DECREE, _L.LAW)}),
    _E.BASED_ON: frozenset((_L.ARTICLE, dst) for dst in NodeLabel),
    _E.SIGNED: frozenset(
        (src, _L.PERSON) for src in (_L.LAW, _L.DECREE, _L.MINISTERIAL_ORDER)
    ),
}

REQUIRED_PROPS: dict[NodeLabel, tuple[str, ...]] = {
    _L.PERSON: ("title", "name"),
    _L.LAW: ("object",),
    _L.DECREE: ("object",),
    _L.MINISTERIAL_ORDER: ("object",),
    _L.OFFICIAL_JOURNAL: ("signature_date",),
}

# Output vocabulary for graph-database scripts; ASCII-folded French.
FRENCH_NODE_LABELS: dict[NodeLabel, str] = {
    _L.DOMAIN: "Domaine",
    _L.LAW: "Loi",
    _L.DECREE: "Decret",
    _L.ARTICLE: "Article",
    _L.OFFICIAL_JOURNAL: "JournalOfficiel",
    _L.MINISTERIAL_ORDER: "ArreteMinisteriel",
    _L.DECLARATION: "Declaration",
    _L.UNIFORM_ACT: "ActeUniforme",
    _L.LEGAL_CODE: "CodeJuridique",
    _L.PERSON: "Personne",
}

FRENCH_EDGE_TYPES: dict[EdgeType, str] = {
    _E.PUBLISH: "PUBLIE",
    _E.POSSESS: "POSSEDE",
    _E.IS_ASSOCIATED: "EST_ASSOCIE",
    _E.MODIFY: "MODIFIE",
    _E.REPEAL: "ABROGE",
    _E.FRAME: "ENCADRE",
    _E.EXECUTE: "EXECUTE",
    _E.BASED_ON: "BASE_SUR",
    _E.SIGNED: "SIGNE",
}

_LABEL_BY_NAME = {label.name.lower(): label for label in NodeLabel}
_LABEL_BY_NAME.update({v.lower(): k for k, v in FRENCH_NODE_LABELS.items()})
_LABEL_BY_NAME.update({label.value.lower(): label for label in NodeLabel})


@dataclass
class GraphNode:
    id: str
    label: NodeLabel
    key: str
    props: dict


@dataclass
class GraphEdge:
    id: str
    type: EdgeType
    src: str
    dst: str
    props: dict


@dataclass
class GraphStats:
    node_count: int
    edge_count: int
    per_label: dict[str, int]
    per_type: dict[str, int]

    def as_dict(self) -> dict:
        return {
            "node_count": self.node_count,
            "edge_count": self.edge_count,
            "per_label": dict(self.per_label),
            "per_type": dict(self.per_type),
        }


def _coerce_props(props: dict | None) -> dict:
    out = {}
    for k, v in (props or {}).items():
        if v is None:
            continue
        if isinstance(v, date):
            v = v.isoformat()
        if not isinstance(v, (str, int, float, bool)):
            raise ValueError(f"prop {k!r} must be scalar, got {type(v).__name__}")
        out[k] = v
    return out


class PropertyGraph:
    """Labeled nodes and typed directed edges with bidirectional adjacency."""

    def __init__(self) -> None:
        self.nodes: dict[str, GraphNode] = {}
        self.edges: dict[str, GraphEdge] = {}
        self._out: dict[str, list[str]] = {}
        self._in: dict[str, list[str]] = {}
        self._by_key: dict[tuple[NodeLabel, str], str] = {}
        self._next_node = 0
        self._next_edge = 0

    def add_node(self, label: NodeLabel, props: dict | None = None, *, key: str | None = None) -> str:
        props = _coerce_props(props)
        for prop in REQUIRED_PROPS.get(label, ()):
            value = props.get(prop)
            if value is None or (isinstance(value, str) and not value.strip()):
                raise MissingRequiredProp(label, prop)
        node_id = f"n{self._next_node}"
        self._next_node += 1
        if key is None:
            key = node_id
        if (label, key) in self._by_key:
            raise ValueError(f"duplicate node key ({label.name}, {key!r})")
        node = GraphNode(id=node_id, label=label, key=key, props=props)
        self.nodes[node_id] = node
        self._by_key[(label, key)] = node_id
        self._out[node_id] = []
        self._in[node_id] = []
        return node_id

    def add_edge(self, edge_type: EdgeType, src: str, dst: str, props: dict | None = None) -> str:
        if src not in self.nodes:
            raise UnknownNode(f"unknown source node {src!r}")
        if dst not in self.nodes:
            raise UnknownNode(f"unknown destination node {dst!r}")
        src_label = self.nodes[src].label
        dst_label = self.nodes[dst].label
        if (src_label, dst_label) not in SCHEMA[edge_type]:
            raise SchemaViolation(edge_type, src_label, dst_label)
        edge_id = f"e{self._next_edge}"
        self._next_edge += 1
        edge = GraphEdge(id=edge_id, type=edge_type, src=src, dst=dst, props=_coerce_props(props))
        self.edges[edge_id] = edge
        self._out[src].append(edge_id)
        self._in[dst].append(edge_id)
        return edge_id

    def find_node(self, label: NodeLabel, key: str) -> GraphNode | None:
        node_id = self._by_key.get((label, key))
        return self.nodes[node_id] if node_id else None

    def resolve(self, selector: str) -> str:
        """Resolve a node id or a ``label:key`` selector (French or English)."""
        if selector in self.nodes:
            return selector
        if ":" in selector:
            label_part, key = selector.split(":", 1)
            label = _LABEL_BY_NAME.get(label_part.strip().lower())
            if label is not None:
                node = self.find_node(label, key.strip())
                if node is not None:
                    return node.id
        raise NoSuchNode(f"no node matches {selector!r}")

    def incident_edges(self, node_id: str) -> Iterable[GraphEdge]:
        for eid in self._out.get(node_id, []):
            yield self.edges[eid]
        for eid in self._in.get(node_id, []):
            edge = self.edges[eid]
            if edge.src != edge.dst:  # self-loop already yielded
                yield edge

    def neighborhood(
        self,
        start: str,
        depth: int,
        edge_filter: set[EdgeType] | None = None,
        label_filter: set[NodeLabel] | None = None,
    ) -> "PropertyGraph":
        """Induced subgraph within ``depth`` hops of start, both directions.

        The start node is always included even when its label is filtered out.
        """
        if depth < 0:
            raise ValueError("depth must be >= 0")
        start_id = self.resolve(start)
        visited = {start_id}
        frontier = [start_id]
        for _ in range(depth):
            nxt = []
            for node_id in frontier:
                for edge in self.incident_edges(node_id):
                    if edge_filter is not None and edge.type not in edge_filter:
                        continue
                    other = edge.dst if edge.src == node_id else edge.src
                    if other in visited:
                        continue
                    if label_filter is not None and self.nodes[other].label not in label_filter:
                        continue
                    visited.add(other)
                    nxt.append(other)
            frontier = nxt
        sub = PropertyGraph()
        for node_id in sorted(visited, key=lambda n: int(n[1:])):
            node = self.nodes[node_id]
            sub._insert_node(GraphNode(node.id, node.label, node.key, dict(node.props)))
        for edge_id in sorted(self.edges, key=lambda e: int(e[1:])):
            edge = self.edges[edge_id]
            if edge.src in visited and edge.dst in visited:
                if edge_filter is not None and edge.type not in edge_filter:
                    continue
                sub._insert_edge(GraphEdge(edge.id, edge.type, edge.src, edge.dst, dict(edge.props)))
        return sub

    def _insert_node(self, node: GraphNode) -> None:
        self.nodes[node.id] = node
        self._by_key[(node.label, node.key)] = node.id
        self._out.setdefault(node.id, [])
        self._in.setdefault(node.id, [])
        self._next_node = max(self._next_node, int(node.id[1:]) + 1)

    def _insert_edge(self, edge: GraphEdge) -> None:
        self.edges[edge.id] = edge
        self._out[edge.src].append(edge.id)
        self._in[edge.dst].append(edge.id)
        self._next_edge = max(self._next_edge, int(edge.id[1:]) + 1)

    def stats(self) -> GraphStats:
        per_label = Counter(n.label.name for n in self.nodes.values())
        per_type = Counter(e.type.name for e in self.edges.values())
        return GraphStats(
            node_count=len(self.nodes),
            edge_count=len(self.edges),
            per_label=dict(sorted(per_label.items())),
            per_type=dict(sorted(per_type.items())),
        )


def graphs_equal(a: PropertyGraph, b: PropertyGraph) -> bool:
    """Isomorphism under natural keys: same nodes and edges up to ids."""

    def node_set(g: PropertyGraph):
        return {
            (n.label, n.key, tuple(sorted(n.props.items())))
            for n in g.nodes.values()
        }

    def edge_multiset(g: PropertyGraph):
        return Counter(
            (
                e.type,
                (g.nodes[e.src].label, g.nodes[e.src].key),
                (g.nodes[e.dst].label, g.nodes[e.dst].key),
                tuple(sorted(e.props.items())),
            )
            for e in g.edges.values()
        )

    return node_set(a) == node_set(b) and edge_multiset(a) == edge_multiset(b)


# ---------------------------------------------------------------------------
# Construction from extracted articles


_INSTRUMENT_LABELS = (
    ("LOI", NodeLabel.LAW),
    ("DECRET", NodeLabel.DECREE),
    ("ARRETE", NodeLabel.MINISTERIAL_ORDER),
    ("DECLARATION", NodeLabel.DECLARATION),
)


def _instrument_label(record: ArticleRecord) -> NodeLabel:
    if record.declaration:
        return NodeLabel.DECLARATION
    folded = _fold(record.name)
    for keyword, label in _INSTRUMENT_LABELS:
        if folded.startswith(keyword):
            return label
    return NodeLabel.LAW


def _content_digest(content: str) -> str:
    return hashlib.sha256(content.encode("utf-8")).hexdigest()[:16]


class _Builder:
    def __init__(self) -> None:
        self.graph = PropertyGraph()
        self._edge_seen: set[tuple[EdgeType, str, str]] = set()

    def instrument(self, label: NodeLabel, key: str, name_hint: str = "") -> str:
        node = self.graph.find_node(label, key)
        if node is not None:
            return node.id
        props: dict = {"number": key}
        if label in (NodeLabel.LAW, NodeLabel.DECREE, NodeLabel.MINISTERIAL_ORDER):
            props["object"] = f"{name_hint or label.name.lower()} {key}"
        return self.graph.add_node(label, props, key=key)

    def article(self, owner_label: NodeLabel, owner_key: str, art_key: str, props: dict | None = None) -> str:
        key = f"{FRENCH_NODE_LABELS[owner_label]}:{owner_key}:{art_key}"
        node = self.graph.find_node(NodeLabel.ARTICLE, key)
        if node is not None:
            return node.id
        return self.graph.add_node(NodeLabel.ARTICLE, props or {"art_num": art_key}, key=key)

    def edge(self, edge_type: EdgeType, src: str, dst: str, props: dict | None = None) -> None:
        token = (edge_type, src, dst)
        if token in self._edge_seen:
            return
        self._edge_seen.add(token)
        self.graph.add_edge(edge_type, src, dst, props)

    def placeholder(self, label: NodeLabel, key: str, reference: str) -> str:
        node = self.graph.find_node(label, key)
        if node is not None:
            return node.id
        props: dict = {"unresolved": True, "reference": reference}
        if label in (NodeLabel.LAW, NodeLabel.DECREE, NodeLabel.MINISTERIAL_ORDER):
            props["object"] = "unresolved"
        return self.graph.add_node(label, props, key=key)


def build_from_articles(
    records: Sequence[ArticleRecord],
    references: Sequence[Sequence[LegalReference]] | None = None,
) -> PropertyGraph:
    """Build the entity graph from extracted records and their citations.

    One Article node per record (rent splits of the same article merge under
    their shared natural key), a Possess edge from the owning instrument, and
    a BasedOn edge for every resolved reference. Instruments and cited
    entities are created on first mention and deduplicated by natural key;
    unresolvable citations point at placeholder nodes flagged
    ``unresolved=true``.
    """
    builder = _Builder()
    owner_ids: list[str] = []
    owner_labels: list[NodeLabel] = []
    article_ids: list[str] = []

    for i, record in enumerate(records):
        label = _instrument_label(record)
        owner_id = builder.instrument(label, record.number.raw, record.name)
        if record.art_num is not None:
            art_key = record.art_num.canonical()
        else:
            art_key = f"declaration-{i}"
        props = {
            "art_num": record.art_num.canonical() if record.art_num else "",
            "heading": record.heading or "",
            "nature": record.nature.value,
            "content_digest": _content_digest(record.content),
        }
        article_id = builder.article(label, record.number.raw, art_key, props)
        builder.edge(EdgeType.POSSESS, owner_id, article_id)
        owner_ids.append(owner_id)
        owner_labels.append(label)
        article_ids.append(article_id)

    if references is None:
        return builder.graph

    for i, record in enumerate(records):
        refs = references[i] if i < len(references) else ()
        for ref in refs:
            for target in _resolve_reference(
                builder, ref, records, i, owner_ids, owner_labels, article_ids
            ):
                builder.edge(EdgeType.BASED_ON, article_ids[i], target)
    return builder.graph


def _doc_key(record: ArticleRecord) -> tuple:
    return (record.domain, record.law_num, record.name, record.number.raw)


def _resolve_reference(
    builder: _Builder,
    ref: LegalReference,
    records: Sequence[ArticleRecord],
    index: int,
    owner_ids: list[str],
    owner_labels: list[NodeLabel],
    article_ids: list[str],
) -> list[str]:
    canonical = format_reference(ref)
    record = records[index]
    if ref.target is RefTarget.ABSOLUTE:
        if ref.instrument is not None:
            kind, number = ref.instrument
            label = NodeLabel.LAW if kind is InstrumentKind.LAW else NodeLabel.DECREE
            owner_id = builder.instrument(label, number.raw, kind.value)
            owner_key = number.raw
        else:
            label = owner_labels[index]
            owner_key = record.number.raw
        return [
            builder.article(label, owner_key, art.canonical())
            for art in ref.sorted_articles()
        ]
    if ref.target is RefTarget.CURRENT_LAW:
        if owner_labels[index] is NodeLabel.LAW:
            return [owner_ids[index]]
        key = f"unresolved:{_doc_key(record)}:{canonical}"
        return [builder.placeholder(NodeLabel.LAW, key, canonical)]
    if ref.target is RefTarget.CURRENT_DECREE:
        if owner_labels[index] is NodeLabel.DECREE:
            return [owner_ids[index]]
        key = f"unresolved:{_doc_key(record)}:{canonical}"
        return [builder.placeholder(NodeLabel.DECREE, key, canonical)]
    if ref.target is RefTarget.PREVIOUS_ARTICLE:
        j = index - 1
        while j >= 0 and _doc_key(records[j]) == _doc_key(record):
            if article_ids[j] != article_ids[index]:
                return [article_ids[j]]
            j -= 1
        key = f"unresolved:{_doc_key(record)}:{canonical}:{index}"
        return [builder.placeholder(NodeLabel.ARTICLE, key, canonical)]
    # Named entity: a legal code or similar, keyed by its name.
    node = builder.graph.find_node(NodeLabel.LEGAL_CODE, ref.entity_name or "")
    if node is not None:
        return [node.id]
    return [
        builder.graph.add_node(
            NodeLabel.LEGAL_CODE,
            {"name": ref.entity_name},
            key=ref.entity_name or "",
        )
    ]


# ---------------------------------------------------------------------------
# Exports


def _cypher_escape(value: str) -> str:
    return value.replace("\\", "\\\\").replace("'", "\\'").replace("\n", "\\n")


def _cypher_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, float)):
        return repr(value)
    return f"'{_cypher_escape(str(value))}'"


def _cypher_props(key: str, props: dict) -> str:
    items = [("key", key)] + sorted(props.items())
    return "{" + ", ".join(f"{k}: {_cypher_value(v)}" for k, v in items) + "}"


def _node_sort_key(node: GraphNode) -> tuple[str, str]:
    return (FRENCH_NODE_LABELS[node.label], node.key)


def export_cypher(graph: PropertyGraph, sink: IO[str]) -> int:
    """Write a deterministic CREATE script; returns the statement count.

    Nodes come first, ordered by (label, key); then edges ordered by
    (type, source, destination). Labels and relationship types are written in
    French.
    """
    count = 0
    try:
        for node in sorted(graph.nodes.values(), key=_node_sort_key):
            label = FRENCH_NODE_LABELS[node.label]
            sink.write(f"CREATE (:{label} {_cypher_props(node.key, node.props)});\n")
            count += 1
        edges = sorted(
            graph.edges.values(),
            key=lambda e: (
                FRENCH_EDGE_TYPES[e.type],
                _node_sort_key(graph.nodes[e.src]),
                _node_sort_key(graph.nodes[e.dst]),
            ),
        )
        for edge in edges:
            src = graph.nodes[edge.src]
            dst = graph.nodes[edge.dst]
            rel = FRENCH_EDGE_TYPES[edge.type]
            props = ""
            if edge.props:
                items = ", ".join(
                    f"{k}: {_cypher_value(v)}" for k, v in sorted(edge.props.items())
                )
                props = f" {{{items}}}"
            sink.write(
                f"MATCH (a:{FRENCH_NODE_LABELS[src.label]} {{key: '{_cypher_escape(src.key)}'}}), "
                f"(b:{FRENCH_NODE_LABELS[dst.label]} {{key: '{_cypher_escape(dst.key)}'}}) "
                f"CREATE (a)-[:{rel}{props}]->(b);\n"
            )
            count += 1
    except OSError as exc:
        raise SinkError(str(exc)) from exc
    return count


def _neutral_payload(graph: PropertyGraph) -> dict:
    nodes = sorted(graph.nodes.values(), key=lambda n: (n.label.name, n.key))
    edge_items = []
    for edge in graph.edges.values():
        src = graph.nodes[edge.src]
        dst = graph.nodes[edge.dst]
        edge_items.append(
            {
                "type": edge.type.name,
                "src": [src.label.name, src.key],
                "dst": [dst.label.name, dst.key],
                "props": edge.props,
            }
        )
    edge_items.sort(key=lambda e: (e["type"], e["src"], e["dst"]))
    return {
        "nodes": [
            {"label": n.label.name, "key": n.key, "props": n.props} for n in nodes
        ],
        "edges": edge_items,
    }


FORMAT_GRAPH_JSON = "graph-json"
FORMAT_GRAPHML = "graphml"

_GRAPHML_NS = "http://graphml.graphdrawing.org/xmlns"


def export_neutral(graph: PropertyGraph, fmt: str = FORMAT_GRAPH_JSON) -> str:
    """Serialize to a neutral interchange document (JSON or GraphML)."""
    payload = _neutral_payload(graph)
    if fmt == FORMAT_GRAPH_JSON:
        return json.dumps(payload, ensure_ascii=False, sort_keys=True, indent=2) + "\n"
    if fmt == FORMAT_GRAPHML:
        return _to_graphml(payload)
    raise ValueError(f"unknown export format {fmt!r}")


def import_neutral(document: str, fmt: str = FORMAT_GRAPH_JSON) -> PropertyGraph:
    if fmt == FORMAT_GRAPH_JSON:
        payload = json.loads(document)
    elif fmt == FORMAT_GRAPHML:
        payload = _from_graphml(document)
    else:
        raise ValueError(f"unknown import format {fmt!r}")
    graph = PropertyGraph()
    by_key: dict[tuple[str, str], str] = {}
    for n in payload["nodes"]:
        node_id = graph.add_node(NodeLabel[n["label"]], n["props"], key=n["key"])
        by_key[(n["label"], n["key"])] = node_id
    for e in payload["edges"]:
        graph.add_edge(
            EdgeType[e["type"]],
            by_key[tuple(e["src"])],
            by_key[tuple(e["dst"])],
            e["props"],
        )
    return graph


def _to_graphml(payload: dict) -> str:
    root = ET.Element("graphml", xmlns=_GRAPHML_NS)
    for key_id, target in (("label", "node"), ("nkey", "node"), ("type", "edge"), ("props", "all")):
        ET.SubElement(
            root, "key", id=key_id, attrib={"for": target, "attr.name": key_id, "attr.type": "string"}
        )
    graph_el = ET.SubElement(root, "graph", edgedefault="directed")
    ids: dict[tuple[str, str], str] = {}
    for i, n in enumerate(payload["nodes"]):
        node_el = ET.SubElement(graph_el, "node", id=f"n{i}")
        ids[(n["label"], n["key"])] = f"n{i}"
        for key_id, value in (("label", n["label"]), ("nkey", n["key"])):
            data = ET.SubElement(node_el, "data", key=key_id)
            data.text = value
        data = ET.SubElement(node_el, "data", key="props")
        data.text = json.dumps(n["props"], ensure_ascii=False, sort_keys=True)
    for e in payload["edges"]:
        edge_el = ET.SubElement(
            graph_el, "edge", source=ids[tuple(e["src"])], target=ids[tuple(e["dst"])]
        )
        data = ET.SubElement(edge_el, "data", key="type")
        data.text = e["type"]
        data = ET.SubElement(edge_el, "data", key="props")
        data.text = json.dumps(e["props"], ensure_ascii=False, sort_keys=True)
    ET.indent(root)
    return ET.tostring(root, encoding="unicode") + "\n"


def _from_graphml(document: str) -> dict:
    root = ET.fromstring(document)
    ns = {"g": _GRAPHML_NS}
    nodes = []
    node_refs: dict[str, list[str]] = {}
    graph_el = root.find("g:graph", ns)
    if graph_el is None:
        raise ValueError("no <graph> element in document")
    for node_el in graph_el.findall("g:node", ns):
        data = {d.get("key"): d.text or "" for d in node_el.findall("g:data", ns)}
        entry = {
            "label": data["label"],
            "key": data["nkey"],
            "props": json.loads(data["props"] or "{}"),
        }
        node_refs[node_el.get("id", "")] = [entry["label"], entry["key"]]
        nodes.append(entry)
    edges = []
    for edge_el in graph_el.findall("g:edge", ns):
        data = {d.get("key"): d.text or "" for d in edge_el.findall("g:data", ns)}
        edges.append(
            {
                "type": data["type"],
                "src": node_refs[edge_el.get("source", "")],
                "dst": node_refs[edge_el.get("target", "")],
                "props": json.loads(data["props"] or "{}"),
            }
        )
    return {"nodes": nodes, "edges": edges}
