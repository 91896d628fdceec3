import io
import random

import pytest

from lexstruct.extractor import extract_corpus
from lexstruct.fixtures import make_fixtures
from lexstruct.graph import (
    EdgeType,
    MissingRequiredProp,
    NoSuchNode,
    NodeLabel,
    PropertyGraph,
    SCHEMA,
    SchemaViolation,
    UnknownNode,
    build_from_articles,
    export_cypher,
    export_neutral,
    graphs_equal,
    import_neutral,
)
from lexstruct.numbering import parse_reference
from oracles import bfs_oracle, random_graph


def _fixture_graph(tmp_path, seed=11):
    manifest = make_fixtures(tmp_path, seed=seed)
    extraction = extract_corpus(manifest.corpus_root, rent_glob="*rent*")
    import json

    refs_by_id = {}
    with manifest.ground_truth_path.open(encoding="utf-8") as fh:
        for line in fh:
            obj = json.loads(line)
            refs_by_id[obj["article_id"]] = obj["references"]
    references = [
        [parse_reference(text) for text in refs_by_id.get(record_id, [])]
        for record_id in extraction.ids
    ]
    return build_from_articles(extraction.records, references), extraction


class TestAddNode:
    def test_person_with_required_props(self):
        g = PropertyGraph()
        node_id = g.add_node(
            NodeLabel.PERSON, {"title": "President", "name": "Abdoulaye Wade"}
        )
        assert g.nodes[node_id].props["name"] == "Abdoulaye Wade"

    def test_law_needs_object(self):
        g = PropertyGraph()
        g.add_node(NodeLabel.LAW, {"object": "domaine national"})
        with pytest.raises(MissingRequiredProp) as err:
            g.add_node(NodeLabel.LAW, {"object": "  "})
        assert err.value.prop == "object"

    def test_person_missing_title(self):
        g = PropertyGraph()
        with pytest.raises(MissingRequiredProp) as err:
            g.add_node(NodeLabel.PERSON, {"name": "X"})
        assert err.value.prop == "title"

    def test_ids_stable_within_session(self):
        g = PropertyGraph()
        first = g.add_node(NodeLabel.DOMAIN, {"name": "foncier"})
        second = g.add_node(NodeLabel.ARTICLE, {})
        assert first != second
        assert g.nodes[first].label is NodeLabel.DOMAIN


class TestAddEdge:
    def _pair(self):
        g = PropertyGraph()
        journal = g.add_node(NodeLabel.OFFICIAL_JOURNAL, {"signature_date": "1964-07-01"})
        law = g.add_node(NodeLabel.LAW, {"object": "domaine national"})
        decree = g.add_node(NodeLabel.DECREE, {"object": "application"})
        return g, journal, law, decree

    def test_publish_with_pages(self):
        g, journal, law, _ = self._pair()
        edge_id = g.add_edge(EdgeType.PUBLISH, journal, law, {"pages": "112-118"})
        assert g.edges[edge_id].props["pages"] == "112-118"

    def test_frame_decree_to_law(self):
        g, _, law, decree = self._pair()
        g.add_edge(EdgeType.FRAME, decree, law)

    def test_frame_reversed_rejected(self):
        g, _, law, decree = self._pair()
        with pytest.raises(SchemaViolation) as err:
            g.add_edge(EdgeType.FRAME, law, decree)
        assert err.value.triple == (EdgeType.FRAME, NodeLabel.LAW, NodeLabel.DECREE)

    def test_unknown_node(self):
        g, _, law, _ = self._pair()
        with pytest.raises(UnknownNode):
            g.add_edge(EdgeType.MODIFY, law, "n999")


class TestSchemaFuzz:
    def test_exactly_the_allowed_rows_pass(self):
        allowed = 0
        for edge_type in EdgeType:
            for src_label in NodeLabel:
                for dst_label in NodeLabel:
                    g = PropertyGraph()
                    props = {
                        "title": "t", "name": "n", "object": "o",
                        "signature_date": "2000-01-01",
                    }
                    src = g.add_node(src_label, dict(props))
                    dst = g.add_node(dst_label, dict(props))
                    should_pass = (src_label, dst_label) in SCHEMA[edge_type]
                    if should_pass:
                        g.add_edge(edge_type, src, dst)
                        allowed += 1
                    else:
                        with pytest.raises(SchemaViolation) as err:
                            g.add_edge(edge_type, src, dst)
                        assert err.value.triple == (edge_type, src_label, dst_label)
        assert allowed == sum(len(pairs) for pairs in SCHEMA.values())


class TestBuildFromArticles:
    def test_counts_from_two_records_one_reference(self, tmp_path):
        manifest = make_fixtures(tmp_path, seed=5)
        extraction = extract_corpus(manifest.corpus_root, rent_glob="*rent*")
        law_records = [
            (i, r) for i, r in enumerate(extraction.records)
            if r.name == "loi" and r.number.raw == "64-46"
        ][:2]
        records = [r for _, r in law_records]
        references = [[], [parse_reference("article 3 of decree 2020-567")]]
        g = build_from_articles(records, references)
        stats = g.stats()
        assert stats.per_label == {"ARTICLE": 3, "DECREE": 1, "LAW": 1}
        assert stats.per_type == {"BASED_ON": 1, "POSSESS": 2}

    def test_empty(self):
        g = build_from_articles([])
        assert g.stats().node_count == 0

    def test_this_law_points_at_owner(self, tmp_path):
        manifest = make_fixtures(tmp_path, seed=5)
        extraction = extract_corpus(manifest.corpus_root, rent_glob="*rent*")
        law_records = [
            r for r in extraction.records
            if r.name == "loi" and r.number.raw == "64-46"
        ][:1]
        g = build_from_articles(law_records, [[parse_reference("this law")]])
        law = g.find_node(NodeLabel.LAW, "64-46")
        based_on = [e for e in g.edges.values() if e.type is EdgeType.BASED_ON]
        assert len(based_on) == 1
        assert based_on[0].dst == law.id

    def test_unresolved_reference_placeholder(self, tmp_path):
        manifest = make_fixtures(tmp_path, seed=5)
        extraction = extract_corpus(manifest.corpus_root, rent_glob="*rent*")
        rent = [r for r in extraction.records if r.name == "arrete-bareme-rent"][:1]
        g = build_from_articles(rent, [[parse_reference("this decree")]])
        placeholders = [n for n in g.nodes.values() if n.props.get("unresolved")]
        assert len(placeholders) == 1
        assert placeholders[0].label is NodeLabel.DECREE

    def test_previous_article_resolution(self, tmp_path):
        manifest = make_fixtures(tmp_path, seed=5)
        extraction = extract_corpus(manifest.corpus_root, rent_glob="*rent*")
        decree = [r for r in extraction.records if r.number.raw == "2020-567"][:3]
        refs = [[], [parse_reference("the previous article")], []]
        g = build_from_articles(decree, refs)
        based_on = [e for e in g.edges.values() if e.type is EdgeType.BASED_ON]
        assert len(based_on) == 1
        src = g.nodes[based_on[0].src]
        dst = g.nodes[based_on[0].dst]
        assert src.props["art_num"] == "2"
        assert dst.props["art_num"] == "1"

    def test_deterministic_and_idempotent(self, tmp_path):
        g1, extraction = _fixture_graph(tmp_path, seed=6)
        g2, _ = _fixture_graph(tmp_path / "again", seed=6)
        assert graphs_equal(g1, g2)
        doubled = build_from_articles(
            extraction.records + extraction.records, None
        )
        single = build_from_articles(extraction.records, None)
        assert doubled.stats().node_count == single.stats().node_count


class TestNeighborhood:
    def _demo_graph(self):
        g = PropertyGraph()
        law = g.add_node(NodeLabel.LAW, {"object": "loi 98-03"}, key="98-03")
        arts = [
            g.add_node(NodeLabel.ARTICLE, {"art_num": str(i)}, key=f"98-03:{i}")
            for i in range(1, 4)
        ]
        decree = g.add_node(NodeLabel.DECREE, {"object": "d"}, key="99-1")
        code = g.add_node(NodeLabel.LEGAL_CODE, {"name": "code"}, key="code")
        far = g.add_node(NodeLabel.ARTICLE, {"art_num": "9"}, key="far")
        for art in arts:
            g.add_edge(EdgeType.POSSESS, law, art)
        g.add_edge(EdgeType.FRAME, decree, law)
        g.add_edge(EdgeType.BASED_ON, arts[0], code)
        g.add_edge(EdgeType.BASED_ON, far, code)
        return g, law, arts, decree, code, far

    def test_depth_zero_is_start_only(self):
        g, law, *_ = self._demo_graph()
        sub = g.neighborhood(law, 0)
        assert set(sub.nodes) == {law}
        assert sub.edges == {}

    def test_three_hop_closure(self):
        g, law, arts, decree, code, far = self._demo_graph()
        sub = g.neighborhood("loi:98-03", 3)
        assert set(sub.nodes) == {law, *arts, decree, code, far}

    def test_label_filter_shrinks(self):
        g, law, arts, decree, code, far = self._demo_graph()
        sub = g.neighborhood(
            law, 3, label_filter={NodeLabel.LAW, NodeLabel.ARTICLE, NodeLabel.LEGAL_CODE}
        )
        assert decree not in sub.nodes
        assert far in sub.nodes  # reached through the code node

    def test_no_such_node(self):
        g, *_ = self._demo_graph()
        with pytest.raises(NoSuchNode):
            g.neighborhood("loi:00-00", 2)

    def test_matches_bfs_oracle(self):
        rng = random.Random(404)
        for _ in range(60):
            g = random_graph(rng, max_nodes=60)
            start = rng.choice(list(g.nodes))
            for depth in range(5):
                edge_filter = None
                label_filter = None
                if rng.random() < 0.5:
                    edge_filter = set(rng.sample(list(EdgeType), rng.randint(1, 4)))
                if rng.random() < 0.5:
                    label_filter = set(rng.sample(list(NodeLabel), rng.randint(3, 9)))
                sub = g.neighborhood(start, depth, edge_filter, label_filter)
                expected = bfs_oracle(g, start, depth, edge_filter, label_filter)
                assert set(sub.nodes) == expected

    def test_monotone_in_depth(self):
        rng = random.Random(405)
        for _ in range(20):
            g = random_graph(rng, max_nodes=80)
            start = rng.choice(list(g.nodes))
            previous: set = set()
            for depth in range(5):
                nodes = set(g.neighborhood(start, depth).nodes)
                assert previous <= nodes
                previous = nodes


class TestExports:
    def test_cypher_single_person(self):
        g = PropertyGraph()
        g.add_node(NodeLabel.PERSON, {"title": "President", "name": "Abdoulaye Wade"})
        sink = io.StringIO()
        count = export_cypher(g, sink)
        assert count == 1
        line = sink.getvalue().strip()
        assert line.startswith("CREATE (:Personne ")
        assert "title: 'President'" in line
        assert "name: 'Abdoulaye Wade'" in line

    def test_cypher_empty(self):
        sink = io.StringIO()
        assert export_cypher(PropertyGraph(), sink) == 0
        assert sink.getvalue() == ""

    def test_cypher_deterministic(self, tmp_path):
        g, _ = _fixture_graph(tmp_path, seed=8)
        a, b = io.StringIO(), io.StringIO()
        export_cypher(g, a)
        export_cypher(g, b)
        assert a.getvalue() == b.getvalue()
        assert a.getvalue().count("\n") == len(g.nodes) + len(g.edges)

    def test_cypher_escaping(self):
        g = PropertyGraph()
        g.add_node(NodeLabel.LAW, {"object": "l'Etat \\ 'quoted'"})
        sink = io.StringIO()
        export_cypher(g, sink)
        assert "l\\'Etat \\\\ \\'quoted\\'" in sink.getvalue()

    @pytest.mark.parametrize("fmt", ["graph-json", "graphml"])
    def test_neutral_round_trip(self, fmt, tmp_path):
        g, _ = _fixture_graph(tmp_path, seed=9)
        document = export_neutral(g, fmt)
        back = import_neutral(document, fmt)
        assert graphs_equal(g, back)

    @pytest.mark.parametrize("fmt", ["graph-json", "graphml"])
    def test_neutral_round_trip_empty(self, fmt):
        g = PropertyGraph()
        assert graphs_equal(g, import_neutral(export_neutral(g, fmt), fmt))

    def test_unknown_format(self):
        with pytest.raises(ValueError):
            export_neutral(PropertyGraph(), "dot")
        with pytest.raises(ValueError):
            import_neutral("{}", "dot")


class TestStats:
    def test_empty(self):
        stats = PropertyGraph().stats()
        assert stats.node_count == 0
        assert stats.edge_count == 0
        assert stats.per_label == {}
        assert stats.per_type == {}

    def test_increments(self):
        g = PropertyGraph()
        before = g.stats().node_count
        g.add_node(NodeLabel.DOMAIN, {"name": "foncier"})
        assert g.stats().node_count == before + 1

    def test_recount_matches_export(self, tmp_path):
        import json
        from collections import Counter

        g, _ = _fixture_graph(tmp_path, seed=10)
        payload = json.loads(export_neutral(g, "graph-json"))
        stats = g.stats()
        assert stats.node_count == len(payload["nodes"])
        assert stats.edge_count == len(payload["edges"])
        assert stats.per_label == dict(
            sorted(Counter(n["label"] for n in payload["nodes"]).items())
        )
        assert stats.per_type == dict(
            sorted(Counter(e["type"] for e in payload["edges"]).items())
        )
