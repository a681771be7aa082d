from __future__ import annotations

import logging
from pathlib import Path
from typing import Iterable, Optional, Sequence

from clinical_ner.corpus.models import LabeledSentence, Tag
from clinical_ner.corpus.tags import TagSequenceError, tags_to_spans
from clinical_ner.utils import atomic_write_text

logger = logging.getLogger(__name__)

# Characters the column format cannot hold in the character column; each is stored as one space.
_COLUMN_UNSAFE = str.maketrans({"\t": " ", "\r": " ", "\n": " "})


def column_safe_text(text: str) -> str:
    """Replace TAB, CR and LF with a space. Length and offsets are unchanged."""
    return text.translate(_COLUMN_UNSAFE)


class CorpusFormatError(ValueError):
    def __init__(self, line_number: int, message: str) -> None:
        super().__init__(f"Corpus line {line_number}: {message}")
        self.line_number = line_number


class _SentenceBuilder:
    def __init__(self) -> None:
        self.chars: list[str] = []
        self.tags: list[Optional[Tag]] = []
        self.first_line = 0

    def add(self, line_number: int, char: str, tag: Optional[Tag]) -> None:
        if not self.chars:
            self.first_line = line_number
        elif (tag is None) != (self.tags[-1] is None):
            raise CorpusFormatError(line_number, "tag column present on some lines of the sentence but not others")
        self.chars.append(char)
        self.tags.append(tag)

    def build(self) -> LabeledSentence:
        if self.tags[0] is None:
            return LabeledSentence(tuple(self.chars))
        tags = tuple(tag for tag in self.tags if tag is not None)
        try:
            tags_to_spans(tags)
        except TagSequenceError as e:
            raise CorpusFormatError(self.first_line + e.index, str(e)) from e
        return LabeledSentence(tuple(self.chars), tags)


def parse_corpus(stream: Iterable[str]) -> list[LabeledSentence]:
    """
    Parse the column corpus format: one `<char>TAB<tag>` per line, blank line between sentences.

    The tag column is optional, but a file is either tagged or untagged throughout.
    """
    sentences: list[LabeledSentence] = []
    builder = _SentenceBuilder()
    file_tagged: Optional[bool] = None

    for line_number, raw_line in enumerate(stream, start=1):
        line = raw_line.rstrip("\r\n")
        if line == "":
            if builder.chars:
                sentences.append(builder.build())
                builder = _SentenceBuilder()
            continue

        columns = line.split("\t")
        if len(columns) > 2:
            raise CorpusFormatError(line_number, f"expected 1 or 2 tab-separated columns, got {len(columns)}")
        char = columns[0]
        if len(char) != 1:
            raise CorpusFormatError(line_number, f"character column must hold exactly one character: {char!r}")

        tag: Optional[Tag] = None
        if len(columns) == 2:
            try:
                tag = Tag.parse(columns[1])
            except ValueError as e:
                raise CorpusFormatError(line_number, str(e)) from e

        if file_tagged is None:
            file_tagged = tag is not None
        elif file_tagged != (tag is not None) and not builder.chars:
            raise CorpusFormatError(line_number, "tag column must be present on every sentence or on none")
        builder.add(line_number, char, tag)

    if builder.chars:
        sentences.append(builder.build())
    return sentences


def format_corpus(sentences: Sequence[LabeledSentence]) -> str:
    blocks: list[str] = []
    for sentence in sentences:
        if sentence.tags is None:
            lines = [column_safe_text(char) for char in sentence.chars]
        else:
            lines = [f"{column_safe_text(char)}\t{tag}" for char, tag in zip(sentence.chars, sentence.tags)]
        blocks.append("\n".join(lines) + "\n")
    return "\n".join(blocks)


def read_corpus_file(path: str | Path) -> list[LabeledSentence]:
    with open(path, "r", encoding="utf-8") as f:
        sentences = parse_corpus(f)
    logger.info(
        "Loaded corpus. path=%s sentences=%s tagged=%s",
        path,
        len(sentences),
        bool(sentences) and sentences[0].is_tagged,
    )
    return sentences


def write_corpus_file(path: str | Path, sentences: Sequence[LabeledSentence]) -> None:
    atomic_write_text(Path(path), format_corpus(sentences))
    logger.info("Wrote corpus. path=%s sentences=%s", path, len(sentences))


def read_text_lines(path: str | Path) -> list[LabeledSentence]:
    """Plain text input: one sentence per non-empty line, untagged, TABs read as spaces."""
    with open(path, "r", encoding="utf-8") as f:
        return [LabeledSentence.from_text(column_safe_text(line.rstrip("\r\n"))) for line in f if line.strip()]
