from __future__ import annotations

from typing import Iterable

import numpy as np

from clinical_ner.corpus.models import EntityType, LabeledSentence
from clinical_ner.corpus.tags import tags_to_spans
from clinical_ner.dictionary.models import Dictionary


def subsample(dictionary: Dictionary, fraction: float, rng: np.random.Generator) -> Dictionary:
    """Keep a random round(fraction * |surfaces|) of the surfaces, all their types included."""
    if not 0.0 < fraction <= 1.0:
        raise ValueError(f"Dictionary fraction must be in (0, 1]: {fraction}")
    surfaces = list(dictionary.entries)
    if fraction == 1.0:
        return dictionary
    keep = int(round(fraction * len(surfaces)))
    chosen = sorted(rng.choice(len(surfaces), size=keep, replace=False).tolist())
    return Dictionary.from_pairs(
        (surfaces[idx], etype) for idx in chosen for etype in dictionary.entries[surfaces[idx]]
    )


def dictionary_from_corpus(sentences: Iterable[LabeledSentence]) -> Dictionary:
    """Collect every gold entity surface with its type(s), in corpus order."""
    pairs: list[tuple[str, EntityType]] = []
    for sentence in sentences:
        if sentence.tags is None:
            continue
        for span in tags_to_spans(sentence.tags):
            pairs.append(("".join(sentence.chars[span.start : span.end + 1]), span.etype))
    return Dictionary.from_pairs(pairs)
