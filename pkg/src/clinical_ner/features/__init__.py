"""Per-character dictionary feature vectors under the five representation schemes."""

from clinical_ner.features.encode import FeatureSchemeError, encode, extract_features
from clinical_ner.features.extract import ngram_features, pdet_labels, piet_labels
from clinical_ner.features.models import (
    NGRAM_TEMPLATES,
    NGRAM_WIDTH,
    PDET_LABELS,
    PDET_SIZE,
    PIET_LABELS,
    PIET_SIZE,
    FeatureScheme,
    PdetLabel,
    PietLabel,
)

__all__ = [
    "FeatureScheme",
    "FeatureSchemeError",
    "NGRAM_TEMPLATES",
    "NGRAM_WIDTH",
    "PDET_LABELS",
    "PDET_SIZE",
    "PIET_LABELS",
    "PIET_SIZE",
    "PdetLabel",
    "PietLabel",
    "encode",
    "extract_features",
    "ngram_features",
    "pdet_labels",
    "piet_labels",
]
