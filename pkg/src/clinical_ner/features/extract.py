from __future__ import annotations

from typing import Sequence

import numpy as np

from clinical_ner.corpus.models import ENTITY_TYPES, Position
from clinical_ner.dictionary.matching import bdmm_segment, lookup_exact
from clinical_ner.dictionary.models import Dictionary
from clinical_ner.features.models import (
    NGRAM_TEMPLATES,
    NGRAM_WIDTH,
    PdetLabel,
    PietLabel,
    ngram_bit_index,
)


def ngram_features(chars: Sequence[str], dictionary: Dictionary) -> np.ndarray:
    """
    Binary (n, 40) matrix of dictionary hits for the eight n-gram windows around each character.

    A window that does not lie fully inside the sentence contributes zeros.
    """
    text = "".join(chars)
    n = len(text)
    bits = np.zeros((n, NGRAM_WIDTH), dtype=np.uint8)
    for idx in range(n):
        for template, (offset, length) in enumerate(NGRAM_TEMPLATES):
            start = idx + offset
            end = start + length
            if start < 0 or end > n or length > dictionary.max_len:
                continue
            for etype in lookup_exact(text[start:end], dictionary):
                bits[idx, ngram_bit_index(template, etype)] = 1
    return bits


def piet_labels(chars: Sequence[str], dictionary: Dictionary) -> list[PietLabel]:
    labels: list[PietLabel] = []
    for segment in bdmm_segment("".join(chars), dictionary):
        labels.extend([PietLabel(segment.etype)] * len(segment.text))
    return labels


def pdet_labels(chars: Sequence[str], dictionary: Dictionary) -> list[PdetLabel]:
    labels: list[PdetLabel] = []
    for segment in bdmm_segment("".join(chars), dictionary):
        size = len(segment.text)
        if segment.etype is None:
            labels.extend([PdetLabel()] * size)
        elif size == 1:
            labels.append(PdetLabel(Position.SINGLE, segment.etype))
        else:
            labels.append(PdetLabel(Position.BEGIN, segment.etype))
            labels.extend([PdetLabel(Position.INSIDE, segment.etype)] * (size - 2))
            labels.append(PdetLabel(Position.END, segment.etype))
    return labels


def describe_ngram_bits(row: np.ndarray) -> str:
    """Readable listing of the set bits of one 40-dim row, e.g. `2R:b 3L:d`."""
    names: list[str] = []
    for template, (offset, length) in enumerate(NGRAM_TEMPLATES):
        side = "L" if offset < 0 else "R"
        for etype in ENTITY_TYPES:
            if row[ngram_bit_index(template, etype)]:
                names.append(f"{length}{side}:{etype.letter}")
    return " ".join(names) if names else "-"
