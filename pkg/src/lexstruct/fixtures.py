"""Deterministic synthetic corpus for desk-scale runs and tests.

Generates a small tree of interchange documents exercising every extractor
branch: the three subdivision hierarchies, a rent document with locality and
category markers plus a cross-tabulated price table, bis/ter articles, L. and
R. prefixes, a declaration document, and cross-references including ellipsis
ranges, "this law" and "the previous article". The same seed always produces
byte-identical files.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .docmodel import DocumentElement, ElementKind, classify_element, write_element_stream
from .extractor import ArticleRecord, CorpusExtraction, extract_corpus
from .numbering import (
    ArticleLabel,
    InstrumentKind,
    LegalReference,
    Multiplicative,
    Prefix,
    RefTarget,
    format_reference,
    parse_instrument_number,
)
from .triples import CORRESPONDS_TO, REFERS_TO, KnowledgeTriple

RENT_GLOB = "*rent*"

_OPENERS = [
    "Les terres", "Les immeubles", "Les baux", "Les redevances", "Les occupations",
    "Les servitudes", "Les concessions", "Les parcelles", "Les permis", "Les autorisations",
]
_QUALIFIERS = [
    "du domaine national", "du domaine public", "a usage d'habitation",
    "non immatriculees", "de l'Etat", "des collectivites locales",
    "a caractere precaire", "du perimetre urbain",
]
_VERBS = [
    "sont administres", "sont geres", "sont attribues", "sont soumis",
    "sont constates", "sont enregistres", "sont reglementes", "sont revises",
]
_TAILS = [
    "par l'autorite administrative.", "dans les conditions fixees par decret.",
    "selon les modalites prevues au present texte.", "par les commissions competentes.",
    "apres avis du conseil rural.", "sous reserve des droits des tiers.",
    "au nom de l'Etat.", "conformement aux usages locaux.",
]
_ENTITIES = [
    "le domaine national", "le regime foncier", "les baux a usage d'habitation",
    "l'occupation du domaine public", "les servitudes d'utilite publique",
    "le bareme des loyers", "la redevance d'occupation", "l'immatriculation des terres",
]


class _Prose:
    """Deterministic sentence source; every article gets a unique marker line."""

    def __init__(self, rng: random.Random):
        self.rng = rng
        self.counter = 0

    def sentence(self) -> str:
        return " ".join(
            (
                self.rng.choice(_OPENERS),
                self.rng.choice(_QUALIFIERS),
                self.rng.choice(_VERBS),
                self.rng.choice(_TAILS),
            )
        )

    def body(self, sentences: int = 2) -> str:
        self.counter += 1
        lines = [self.sentence() for _ in range(max(1, sentences))]
        lines.append(f"Le releve domanial porte le numero {self.counter}.")
        return " ".join(lines)


def _el(kind: ElementKind, text: str) -> DocumentElement:
    return DocumentElement(kind=kind, text=text)


def _sub(text: str) -> DocumentElement:
    return _el(ElementKind.SUBDIVISION, text)


def _art(text: str) -> DocumentElement:
    return _el(ElementKind.ARTICLE_START, text)


def _p(text: str) -> DocumentElement:
    return _el(ElementKind.PARAGRAPH, text)


def _rsub(text: str) -> DocumentElement:
    return _el(ElementKind.RENT_SUBDIVISION, text)


def _tr(text: str) -> DocumentElement:
    return _el(ElementKind.TABLE_ROW, text)


def _ref_absolute(numbers, kind=None, instrument=None, prefix=Prefix.NONE, mult=None) -> str:
    labels = set()
    for n in numbers:
        labels.add(ArticleLabel(number=n, prefix=prefix))
    if mult:
        number, adverb = mult
        labels.add(ArticleLabel(number=number, prefix=prefix, multiplicative=adverb))
    inst = None
    if kind is not None:
        inst = (kind, parse_instrument_number(instrument))
    return format_reference(
        LegalReference(RefTarget.ABSOLUTE, articles=frozenset(labels), instrument=inst)
    )


_THIS_LAW = format_reference(LegalReference(RefTarget.CURRENT_LAW))
_THIS_DECREE = format_reference(LegalReference(RefTarget.CURRENT_DECREE))
_PREVIOUS = format_reference(LegalReference(RefTarget.PREVIOUS_ARTICLE))


def _doc_law_a(prose: _Prose) -> list[DocumentElement]:
    els = [
        _sub("PARTIE I"),
        _sub("LIVRE I — Du regime des terres"),
        _sub("TITRE I — Dispositions generales"),
        _sub("CHAPITRE I"),
        _art("Article premier. — " + prose.body(2)),
        _p(prose.sentence()),
        _art("Article 2. — " + prose.body(1)),
        _p("Ces regles s'appliquent conformement aux articles vises ci-dessus."),
        _art("Article 3. — " + prose.body(2)),
        _sub("CHAPITRE II"),
        _art("Article 4 (Affectation). — " + prose.body(1)),
        _p(prose.sentence()),
        _art("Article 5. — " + prose.body(2)),
        _sub("TITRE II — Du domaine national"),
        _sub("CHAPITRE III"),
        _art("Article 6. — " + prose.body(1)),
        _art("Article 7. — " + prose.body(2)),
        _art("Article 8 (Abrogation). — " + prose.body(1)),
    ]
    return els


def _doc_decree_b(prose: _Prose) -> list[DocumentElement]:
    return [
        _sub("TITRE I"),
        _sub("CHAPITRE I — Des procedures"),
        _sub("SECTION 1"),
        _art("Article premier. — " + prose.body(2)),
        _art("Article 2. — " + prose.body(1)),
        _p(prose.sentence()),
        _sub("SECTION 2"),
        _art("Article 3. — " + prose.body(1)),
        _art("Article 4. — " + prose.body(2)),
        _sub("CHAPITRE II"),
        _art("Article 5. — " + prose.body(1)),
        _art("Article 6. — " + prose.body(1)),
    ]


def _doc_decree_c(prose: _Prose) -> list[DocumentElement]:
    return [
        _sub("CHAPITRE I"),
        _sub("PARAGRAPHE 1"),
        _art("Article R. 1. — " + prose.body(1)),
        _art("Article R. 2. — " + prose.body(2)),
        _sub("PARAGRAPHE 2"),
        _art("Article R. 3. — " + prose.body(1)),
        _sub("CHAPITRE II"),
        _art("Article R. 4. — " + prose.body(1)),
        _p(prose.sentence()),
    ]


def _doc_law_d(prose: _Prose) -> list[DocumentElement]:
    return [
        _sub("TITRE I"),
        _art("Article L. 1. — " + prose.body(2)),
        _art("Article L. 2. — " + prose.body(1)),
        _art("Article L. 2 bis. — " + prose.body(1)),
        _art("Article L. 2 ter. — " + prose.body(1)),
        _sub("TITRE II"),
        _art("Article L. 3. — " + prose.body(1)),
        _p(prose.sentence()),
        _art("Article L. 4. — " + prose.body(1)),
    ]


def _doc_rent_e(prose: _Prose) -> list[DocumentElement]:
    return [
        _art("Article premier. — " + prose.body(1)),
        _p("Les prix maxima de location sont fixes comme suit :"),
        _art("Article 2. — " + prose.body(1)),
        _p("Le bareme figure dans les tableaux ci-apres."),
        _sub("TITRE I — Bareme des localites"),
        _rsub("Localité : Dakar"),
        _rsub("Catégorie A"),
        _tr("Villa | 45 000 francs"),
        _tr("Appartement | 30 000 francs"),
        _rsub("Catégorie B"),
        _tr("Villa | 30 000 francs"),
        _rsub("Localité : Thies"),
        _rsub("Catégorie A"),
        _tr("Villa | 25 000 francs"),
    ]


def _doc_declaration_f(prose: _Prose) -> list[DocumentElement]:
    return [
        _p("La presente declaration porte sur l'usage des terres communautaires."),
        _p(prose.sentence()),
        _p(prose.sentence()),
    ]


_DOCS = (
    ("foncier", "64-46", "loi_64-46_1964-06-17.jsonl", False, _doc_law_a),
    ("foncier", "64-46", "decret_2020-567_2020-03-15.jsonl", False, _doc_decree_b),
    ("foncier", "76-66", "decret_76-66_1976-01-26.jsonl", False, _doc_decree_c),
    ("foncier", "1981-13", "arrete-bareme-rent_1981-13_1981-02-07.jsonl", True, _doc_rent_e),
    ("procedure", "2019-04", "declaration_2019-04_2019-03-01.jsonl", False, _doc_declaration_f),
    ("procedure", "65-61", "loi_65-61_1965-07-21.jsonl", False, _doc_law_d),
)

# Reference plan, applied to the closing record of each (document, article).
_REF_PLANS: dict[tuple[str, str], list[str]] = {
    ("loi_64-46", "2"): [_ref_absolute([3, 4, 5], InstrumentKind.LAW, "64-46")],
    ("loi_64-46", "3"): [_THIS_LAW],
    ("loi_64-46", "4"): [_ref_absolute([3], InstrumentKind.DECREE, "2020-567")],
    ("loi_64-46", "6"): [_ref_absolute([2, 7], InstrumentKind.LAW, "64-46")],
    ("loi_64-46", "8"): ["le Code du domaine de l'Etat"],
    ("decret_2020-567", "1"): [_ref_absolute([2, 3, 4, 5, 6], InstrumentKind.DECREE, "2020-567")],
    ("decret_2020-567", "2"): [_PREVIOUS],
    ("decret_2020-567", "3"): [_THIS_DECREE],
    ("decret_2020-567", "5"): [_ref_absolute([8], InstrumentKind.LAW, "64-46")],
    ("decret_76-66", "R. 2"): [_ref_absolute([1], prefix=Prefix.R)],
    ("decret_76-66", "R. 3"): [
        _ref_absolute([1, 2, 3], InstrumentKind.DECREE, "76-66", prefix=Prefix.R)
    ],
    ("decret_76-66", "R. 4"): [_PREVIOUS],
    ("loi_65-61", "L. 2"): [_ref_absolute([1, 2], InstrumentKind.LAW, "65-61", prefix=Prefix.L)],
    ("loi_65-61", "L. 2 bis"): [
        _ref_absolute([], InstrumentKind.LAW, "65-61", prefix=Prefix.L,
                      mult=(2, Multiplicative.TER))
    ],
    ("loi_65-61", "L. 2 ter"): [_PREVIOUS],
    ("loi_65-61", "L. 3"): [
        _ref_absolute([1, 2, 3], InstrumentKind.LAW, "65-61", prefix=Prefix.L)
    ],
    ("loi_65-61", "L. 4"): [_THIS_LAW],
    ("arrete-bareme-rent_1981-13", "1"): [_THIS_DECREE],
    ("arrete-bareme-rent_1981-13", "2"): ["le bareme des loyers"],
}


@dataclass
class FixtureManifest:
    root: Path
    corpus_root: Path
    config_path: Path
    template_path: Path
    ground_truth_path: Path
    documents: int
    records: int
    article_ids: list[str]


def _doc_stem(record: ArticleRecord) -> str:
    return f"{record.name}_{record.number.raw}"


def _closing_indices(extraction: CorpusExtraction) -> set[int]:
    """Index of the last record per (document, article label)."""
    last: dict[tuple, int] = {}
    for i, record in enumerate(extraction.records):
        label = record.art_num.canonical() if record.art_num else ""
        last[(_doc_stem(record), label)] = i
    return set(last.values())


def build_ground_truth(extraction: CorpusExtraction, seed: int) -> list[dict]:
    rng = random.Random(f"{seed}:ground-truth")
    closing = _closing_indices(extraction)
    rows = []
    for i, (record_id, record) in enumerate(zip(extraction.ids, extraction.records)):
        label = record.art_num.canonical() if record.art_num else ""
        refs: list[str] = []
        if i in closing:
            refs = list(_REF_PLANS.get((_doc_stem(record), label), []))
        triples = [KnowledgeTriple("the current article", REFERS_TO, ref) for ref in refs]
        triples.append(
            KnowledgeTriple("the current article", CORRESPONDS_TO, rng.choice(_ENTITIES))
        )
        rows.append(
            {
                "article_id": record_id,
                "references": refs,
                "triples": [[t.subject, t.predicate, t.object] for t in triples],
            }
        )
    return rows


def make_fixtures(out_dir: str | Path, seed: int = 0) -> FixtureManifest:
    """Write the synthetic corpus, golden triples, template, and a ready
    pipeline config under ``out_dir``."""
    root = Path(out_dir)
    corpus_root = root / "corpus"
    rng = random.Random(seed)
    prose = _Prose(rng)
    for domain, law_num, fname, is_rent, builder in _DOCS:
        elements = builder(prose)
        for el in elements:
            if el.kind is ElementKind.TABLE_ROW:
                continue
            got = classify_element(el.text, None, is_rent)
            if got is not el.kind:
                raise AssertionError(
                    f"fixture line would misclassify as {got}: {el.text!r}"
                )
        doc_dir = corpus_root / domain / law_num
        doc_dir.mkdir(parents=True, exist_ok=True)
        with (doc_dir / fname).open("w", encoding="utf-8") as fh:
            write_element_stream(elements, fh, tagged=False)

    extraction = extract_corpus(corpus_root, rent_glob=RENT_GLOB)
    if extraction.report.errors:
        raise AssertionError(f"fixture corpus failed to extract: {extraction.report.errors}")
    texts = [r.full_text for r in extraction.records]
    if len(set(texts)) != len(texts):
        raise AssertionError("fixture records must have distinct contents")

    ground_truth_path = root / "golden_triples.jsonl"
    with ground_truth_path.open("w", encoding="utf-8") as fh:
        for row in build_ground_truth(extraction, seed):
            fh.write(json.dumps(row, ensure_ascii=False))
            fh.write("\n")

    template_path = root / "template.txt"
    template_path.write_text(
        resources.files("lexstruct")
        .joinpath("templates/default_prompt.txt")
        .read_text(encoding="utf-8"),
        encoding="utf-8",
    )

    config_path = root / "config.json"
    config = {
        "corpus_root": "corpus",
        "output_dir": "out",
        "rent_glob": RENT_GLOB,
        "template": "template.txt",
        "ground_truth": "golden_triples.jsonl",
        "seed": seed,
        "concurrency": 4,
        "reference_provider": "echo",
        "providers": [
            {
                "name": "echo",
                "kind": "mock",
                "options": {"mode": "echo", "ground_truth": "golden_triples.jsonl"},
            }
        ],
    }
    config_path.write_text(
        json.dumps(config, ensure_ascii=False, indent=2) + "\n", encoding="utf-8"
    )
    return FixtureManifest(
        root=root,
        corpus_root=corpus_root,
        config_path=config_path,
        template_path=template_path,
        ground_truth_path=ground_truth_path,
        documents=len(_DOCS),
        records=len(extraction.records),
        article_ids=list(extraction.ids),
    )
