"""lexstruct: structure French-style legal corpora.

Article extraction from element streams, a legal-identifier grammar, a typed
entity graph with Cypher export, an LLM-backed knowledge-triple pipeline with
deterministic mocks, and ROUGE-based evaluation.
"""

from .docmodel import (
    DocumentDescriptor,
    DocumentElement,
    ElementKind,
    MarkerConfig,
    SubdivisionEntry,
    SubdivisionRank,
    classify_element,
    parse_descriptor,
    read_element_stream,
    write_element_stream,
)
from .extractor import (
    ArticleRecord,
    ExtractionState,
    Nature,
    extract_corpus,
    extract_document,
)
from .graph import (
    EdgeType,
    NodeLabel,
    PropertyGraph,
    build_from_articles,
    export_cypher,
    export_neutral,
    import_neutral,
)
from .numbering import (
    ArticleLabel,
    InstrumentNumber,
    LegalReference,
    Multiplicative,
    Prefix,
    RefTarget,
    expand_range,
    format_reference,
    parse_article_label,
    parse_instrument_number,
    parse_reference,
)
from .rouge import RougeScore, rouge_l, rouge_lsum, rouge_n, score_article, tokenize
from .triples import (
    KnowledgeTriple,
    PromptExample,
    PromptTemplate,
    ProviderSpec,
    generate_triples,
    mock_provider,
    parse_triples,
    render_prompt,
    run_batch,
)

__version__ = "0.1.0"
