from __future__ import annotations

import logging
from pathlib import Path
from typing import Iterable

from clinical_ner.corpus.models import EntityType
from clinical_ner.dictionary.models import Dictionary
from clinical_ner.utils import atomic_write_text, hash_text

logger = logging.getLogger(__name__)


class DictionaryFormatError(ValueError):
    def __init__(self, line_number: int, message: str) -> None:
        super().__init__(f"Dictionary line {line_number}: {message}")
        self.line_number = line_number


def load_dictionary(stream: Iterable[str]) -> Dictionary:
    """Parse `<surface>TAB<type-letter>` lines; `#` lines are comments."""
    pairs: list[tuple[str, EntityType]] = []
    seen: set[tuple[str, EntityType]] = set()

    for line_number, raw_line in enumerate(stream, start=1):
        line = raw_line.rstrip("\r\n")
        if not line.strip() or line.startswith("#"):
            continue
        columns = line.split("\t")
        if len(columns) != 2:
            raise DictionaryFormatError(line_number, f"expected 2 tab-separated columns, got {len(columns)}")
        surface, letter = columns[0], columns[1].strip()
        if not surface:
            raise DictionaryFormatError(line_number, "empty surface string")
        try:
            etype = EntityType(letter)
        except ValueError:
            raise DictionaryFormatError(line_number, f"unknown entity type letter: {letter!r}") from None

        if (surface, etype) in seen:
            logger.warning(
                "Duplicate dictionary entry ignored. line=%s surface=%s type=%s",
                line_number,
                surface,
                letter,
            )
            continue
        seen.add((surface, etype))
        pairs.append((surface, etype))

    return Dictionary.from_pairs(pairs)


def read_dictionary_file(path: str | Path) -> Dictionary:
    with open(path, "r", encoding="utf-8") as f:
        dictionary = load_dictionary(f)
    logger.info("Loaded dictionary. path=%s surfaces=%s max_len=%s", path, len(dictionary), dictionary.max_len)
    return dictionary


def format_dictionary(dictionary: Dictionary) -> str:
    return "".join(f"{surface}\t{etype.letter}\n" for surface, etype in dictionary.pairs())


def write_dictionary_file(path: str | Path, dictionary: Dictionary) -> None:
    atomic_write_text(Path(path), format_dictionary(dictionary))


def fingerprint(dictionary: Dictionary) -> str:
    """Order-independent content hash of the dictionary."""
    canonical = "\n".join(
        f"{surface}\t{''.join(etype.letter for etype in types)}"
        for surface, types in sorted(dictionary.entries.items())
    )
    return hash_text(canonical)
