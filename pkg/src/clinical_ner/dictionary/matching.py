from __future__ import annotations

from clinical_ner.corpus.models import EntitySpan, EntityType
from clinical_ner.dictionary.models import Dictionary, Segment, SegmentList


def _match(piece: str, dictionary: Dictionary) -> EntityType | None:
    types = dictionary.types_of(piece)
    # BDMM is single-type: a multi-type surface contributes its first listed type.
    return types[0] if types else None


def forward_max_match(text: str, dictionary: Dictionary) -> SegmentList:
    """Greedy longest-prefix matching from left to right."""
    segments: list[Segment] = []
    idx = 0
    n = len(text)
    while idx < n:
        window = min(dictionary.max_len, n - idx)
        for size in range(window, 0, -1):
            piece = text[idx : idx + size]
            etype = _match(piece, dictionary)
            if etype is not None:
                segments.append(Segment(piece, etype, idx))
                idx += size
                break
        else:
            segments.append(Segment(text[idx], None, idx))
            idx += 1
    return SegmentList(tuple(segments))


def backward_max_match(text: str, dictionary: Dictionary) -> SegmentList:
    """Greedy longest-suffix matching from right to left, reported left to right."""
    segments: list[Segment] = []
    end = len(text)
    while end > 0:
        window = min(dictionary.max_len, end)
        for size in range(window, 0, -1):
            piece = text[end - size : end]
            etype = _match(piece, dictionary)
            if etype is not None:
                segments.append(Segment(piece, etype, end - size))
                end -= size
                break
        else:
            segments.append(Segment(text[end - 1], None, end - 1))
            end -= 1
    segments.reverse()
    return SegmentList(tuple(segments))


def bdmm_segment(text: str, dictionary: Dictionary) -> SegmentList:
    """Run both directions and keep the one with fewer segments; ties go to the backward result."""
    forward = forward_max_match(text, dictionary)
    backward = backward_max_match(text, dictionary)
    if len(forward) < len(backward):
        return forward
    return backward


def lookup_exact(text: str, dictionary: Dictionary) -> frozenset[EntityType]:
    return frozenset(dictionary.types_of(text))


def dictionary_spans(text: str, dictionary: Dictionary) -> list[EntitySpan]:
    """Use BDMM alone as a recognizer: every typed segment is an entity."""
    return [
        EntitySpan(segment.start, segment.end, segment.etype)
        for segment in bdmm_segment(text, dictionary)
        if segment.etype is not None
    ]
