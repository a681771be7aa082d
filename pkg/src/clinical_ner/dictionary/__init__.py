"""Entity dictionary storage, loading, and bi-directional maximum matching."""

from clinical_ner.dictionary.io import (
    DictionaryFormatError,
    fingerprint,
    format_dictionary,
    load_dictionary,
    read_dictionary_file,
    write_dictionary_file,
)
from clinical_ner.dictionary.matching import (
    backward_max_match,
    bdmm_segment,
    dictionary_spans,
    forward_max_match,
    lookup_exact,
)
from clinical_ner.dictionary.models import Dictionary, Segment, SegmentList

__all__ = [
    "Dictionary",
    "DictionaryFormatError",
    "Segment",
    "SegmentList",
    "backward_max_match",
    "bdmm_segment",
    "dictionary_spans",
    "fingerprint",
    "format_dictionary",
    "forward_max_match",
    "load_dictionary",
    "lookup_exact",
    "read_dictionary_file",
    "write_dictionary_file",
]
