"""Characters, BIEOS tags, entity spans, and the column corpus format."""

from clinical_ner.corpus.clauses import DEFAULT_CLAUSE_DELIMITERS, split_clauses
from clinical_ner.corpus.io import (
    CorpusFormatError,
    column_safe_text,
    format_corpus,
    parse_corpus,
    read_corpus_file,
    read_text_lines,
    write_corpus_file,
)
from clinical_ner.corpus.models import (
    ENTITY_TYPES,
    NUM_TAGS,
    OUTSIDE,
    TAGS,
    EntitySpan,
    EntityType,
    LabeledSentence,
    Position,
    Tag,
    Vocabulary,
)
from clinical_ner.corpus.tags import (
    SpanError,
    TagSequenceError,
    is_valid_sequence,
    lenient_tags_to_spans,
    spans_to_tags,
    tags_to_spans,
)
from clinical_ner.corpus.vocab import build_vocab

__all__ = [
    "CorpusFormatError",
    "DEFAULT_CLAUSE_DELIMITERS",
    "ENTITY_TYPES",
    "EntitySpan",
    "EntityType",
    "LabeledSentence",
    "NUM_TAGS",
    "OUTSIDE",
    "Position",
    "SpanError",
    "TAGS",
    "Tag",
    "TagSequenceError",
    "Vocabulary",
    "build_vocab",
    "column_safe_text",
    "format_corpus",
    "is_valid_sequence",
    "lenient_tags_to_spans",
    "parse_corpus",
    "read_corpus_file",
    "read_text_lines",
    "spans_to_tags",
    "split_clauses",
    "tags_to_spans",
    "write_corpus_file",
]
