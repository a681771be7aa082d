from __future__ import annotations

from clinical_ner.corpus.models import LabeledSentence

DEFAULT_CLAUSE_DELIMITERS = "，、；。！？"


def split_clauses(sentence: LabeledSentence, delimiters: str = DEFAULT_CLAUSE_DELIMITERS) -> list[LabeledSentence]:
    """
    Split after each delimiter character; the delimiter stays with the preceding clause.

    A delimiter carrying an entity tag is not a split point, so entity spans are never severed.
    """
    boundaries: list[int] = []
    last = len(sentence.chars) - 1
    for idx, char in enumerate(sentence.chars):
        if idx == last or char not in delimiters:
            continue
        if sentence.tags is not None and not sentence.tags[idx].is_outside:
            continue
        boundaries.append(idx + 1)

    if not boundaries:
        return [sentence]

    clauses: list[LabeledSentence] = []
    start = 0
    for end in boundaries + [len(sentence.chars)]:
        tags = None if sentence.tags is None else sentence.tags[start:end]
        clauses.append(LabeledSentence(sentence.chars[start:end], tags))
        start = end
    return clauses
