from __future__ import annotations

from typing import Optional, Sequence

from clinical_ner.corpus.models import OUTSIDE, EntitySpan, EntityType, Position, Tag


class TagSequenceError(ValueError):
    def __init__(self, index: int, message: str) -> None:
        super().__init__(f"Invalid BIEOS sequence at index {index}: {message}")
        self.index = index


class SpanError(ValueError):
    pass


def tags_to_spans(tags: Sequence[Tag]) -> list[EntitySpan]:
    """Decode a strictly valid BIEOS sequence into left-to-right entity spans."""
    spans: list[EntitySpan] = []
    open_start: Optional[int] = None
    open_type: Optional[EntityType] = None

    for idx, tag in enumerate(tags):
        position = tag.position
        if open_start is None:
            if position is None:
                continue
            assert tag.etype is not None
            if position is Position.SINGLE:
                spans.append(EntitySpan(idx, idx, tag.etype))
            elif position is Position.BEGIN:
                open_start, open_type = idx, tag.etype
            else:
                previous = "sentence start" if idx == 0 else str(tags[idx - 1])
                raise TagSequenceError(idx, f"{tag} cannot follow {previous}")
            continue

        if position in (Position.INSIDE, Position.END) and tag.etype is open_type:
            if position is Position.END:
                assert open_type is not None
                spans.append(EntitySpan(open_start, idx, open_type))
                open_start, open_type = None, None
            continue
        raise TagSequenceError(idx, f"{tag} cannot follow {tags[idx - 1]}")

    if open_start is not None:
        raise TagSequenceError(open_start, "entity is never closed")
    return spans


def is_valid_sequence(tags: Sequence[Tag]) -> bool:
    try:
        tags_to_spans(tags)
    except TagSequenceError:
        return False
    return True


def lenient_tags_to_spans(tags: Sequence[Tag]) -> list[EntitySpan]:
    """
    Decode any tag sequence into non-overlapping spans.

    Agrees with tags_to_spans on valid input. An unclosed B/I run ends at its last
    character, a stray I opens a new run and a stray E becomes a single-character span.
    """
    spans: list[EntitySpan] = []
    run_start: Optional[int] = None
    run_type: Optional[EntityType] = None
    run_last = -1

    def close_run() -> None:
        nonlocal run_start, run_type
        if run_start is not None and run_type is not None:
            spans.append(EntitySpan(run_start, run_last, run_type))
        run_start, run_type = None, None

    for idx, tag in enumerate(tags):
        position, etype = tag.position, tag.etype
        if position is None or etype is None:
            close_run()
            continue
        continues_run = run_start is not None and etype is run_type
        if position is Position.SINGLE:
            close_run()
            spans.append(EntitySpan(idx, idx, etype))
        elif position is Position.BEGIN:
            close_run()
            run_start, run_type, run_last = idx, etype, idx
        elif position is Position.INSIDE:
            if not continues_run:
                close_run()
                run_start, run_type = idx, etype
            run_last = idx
        else:
            if continues_run:
                run_last = idx
                close_run()
            else:
                close_run()
                spans.append(EntitySpan(idx, idx, etype))
    close_run()
    return spans


def spans_to_tags(spans: Sequence[EntitySpan], n: int) -> list[Tag]:
    ordered = sorted(spans, key=lambda span: (span.start, span.end))
    tags = [OUTSIDE] * n
    previous_end = -1
    for span in ordered:
        if span.end >= n:
            raise SpanError(f"Span exceeds sentence length: start={span.start} end={span.end} n={n}")
        if span.start <= previous_end:
            raise SpanError(f"Overlapping spans at index {span.start}")
        previous_end = span.end
        if span.start == span.end:
            tags[span.start] = Tag(Position.SINGLE, span.etype)
            continue
        tags[span.start] = Tag(Position.BEGIN, span.etype)
        for idx in range(span.start + 1, span.end):
            tags[idx] = Tag(Position.INSIDE, span.etype)
        tags[span.end] = Tag(Position.END, span.etype)
    return tags
