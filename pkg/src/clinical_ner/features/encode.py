from __future__ import annotations

from typing import Sequence, Union

import numpy as np

from clinical_ner.dictionary.models import Dictionary
from clinical_ner.features.extract import ngram_features, pdet_labels, piet_labels
from clinical_ner.features.models import (
    NGRAM_WIDTH,
    FeatureScheme,
    PdetLabel,
    PietLabel,
)

FeatureInput = Union[np.ndarray, Sequence[PietLabel], Sequence[PdetLabel]]


class FeatureSchemeError(ValueError):
    pass


def encode(features: FeatureInput, scheme: FeatureScheme) -> np.ndarray:
    """
    Turn extractor output into model input.

    Returns a float64 (n, width) matrix for the n-gram and one-hot schemes and an
    int64 (n,) index vector for the embedding schemes.
    """
    if scheme is FeatureScheme.NGRAM:
        if not isinstance(features, np.ndarray) or features.ndim != 2 or features.shape[1] != NGRAM_WIDTH:
            raise FeatureSchemeError(f"Scheme {scheme.value} expects an (n, {NGRAM_WIDTH}) bit matrix")
        return features.astype(np.float64)

    expected = PietLabel if scheme.family == "piet" else PdetLabel
    if isinstance(features, np.ndarray) or not all(isinstance(label, expected) for label in features):
        raise FeatureSchemeError(f"Scheme {scheme.value} expects a sequence of {expected.__name__}")

    indices = np.fromiter((label.index for label in features), dtype=np.int64, count=len(features))
    if scheme.is_embedding:
        return indices
    one_hot = np.zeros((len(indices), scheme.label_count), dtype=np.float64)
    one_hot[np.arange(len(indices)), indices] = 1.0
    return one_hot


def extract_features(chars: Sequence[str], dictionary: Dictionary, scheme: FeatureScheme) -> np.ndarray:
    if scheme is FeatureScheme.NGRAM:
        return encode(ngram_features(chars, dictionary), scheme)
    if scheme.family == "piet":
        return encode(piet_labels(chars, dictionary), scheme)
    return encode(pdet_labels(chars, dictionary), scheme)
