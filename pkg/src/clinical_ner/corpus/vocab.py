from __future__ import annotations

from typing import Iterable

from clinical_ner.corpus.models import LabeledSentence, Vocabulary


def build_vocab(sentences: Iterable[LabeledSentence]) -> Vocabulary:
    """Index characters in first-occurrence order, starting after PAD and UNK."""
    return Vocabulary.from_chars(char for sentence in sentences for char in sentence.chars)
