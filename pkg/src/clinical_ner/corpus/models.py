from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np


class EntityType(Enum):
    DISEASE = "d"
    SYMPTOM = "s"
    TREATMENT = "t"
    EXAM = "e"
    BODY = "b"

    @property
    def code(self) -> int:
        return _TYPE_CODES[self]

    @property
    def letter(self) -> str:
        return self.value

    @classmethod
    def from_code(cls, code: int) -> EntityType:
        return ENTITY_TYPES[code]


ENTITY_TYPES: tuple[EntityType, ...] = tuple(EntityType)
_TYPE_CODES: Mapping[EntityType, int] = {etype: idx for idx, etype in enumerate(ENTITY_TYPES)}


class Position(Enum):
    BEGIN = "B"
    INSIDE = "I"
    END = "E"
    SINGLE = "S"

    @property
    def code(self) -> int:
        return _POSITION_CODES[self]


POSITIONS: tuple[Position, ...] = tuple(Position)
_POSITION_CODES: Mapping[Position, int] = {pos: idx for idx, pos in enumerate(POSITIONS)}


def positional_code(position: Optional[Position], etype: Optional[EntityType]) -> int:
    """Shared 21-code layout: 0 is "no entity", then type-major B, I, E, S blocks."""
    if position is None:
        return 0
    assert etype is not None
    return 1 + len(POSITIONS) * etype.code + position.code


def split_positional_code(code: int) -> tuple[Optional[Position], Optional[EntityType]]:
    if not 0 <= code < NUM_TAGS:
        raise ValueError(f"Tag code out of range: {code}")
    if code == 0:
        return None, None
    etype_code, position_code = divmod(code - 1, len(POSITIONS))
    return POSITIONS[position_code], ENTITY_TYPES[etype_code]


NUM_TAGS = len(POSITIONS) * len(ENTITY_TYPES) + 1


@dataclass(frozen=True, slots=True)
class Tag:
    """A BIEOS tag; both fields absent means Outside."""

    position: Optional[Position] = None
    etype: Optional[EntityType] = None

    def __post_init__(self) -> None:
        if (self.position is None) != (self.etype is None):
            raise ValueError("Tag position and entity type must be both present or both absent")

    @property
    def is_outside(self) -> bool:
        return self.position is None

    @property
    def code(self) -> int:
        return positional_code(self.position, self.etype)

    @classmethod
    def from_code(cls, code: int) -> Tag:
        position, etype = split_positional_code(code)
        return cls(position, etype)

    @classmethod
    def parse(cls, text: str) -> Tag:
        if text == "O":
            return OUTSIDE
        head, sep, tail = text.partition("-")
        if not sep:
            raise ValueError(f"Unknown tag: {text!r}")
        try:
            return cls(Position(head), EntityType(tail))
        except ValueError:
            raise ValueError(f"Unknown tag: {text!r}") from None

    def __str__(self) -> str:
        if self.position is None:
            return "O"
        assert self.etype is not None
        return f"{self.position.value}-{self.etype.value}"


OUTSIDE = Tag()
TAGS: tuple[Tag, ...] = tuple(Tag.from_code(code) for code in range(NUM_TAGS))


@dataclass(frozen=True, slots=True)
class EntitySpan:
    """Inclusive character range [start, end] with its entity type."""

    start: int
    end: int
    etype: EntityType

    def __post_init__(self) -> None:
        if self.start < 0 or self.end < self.start:
            raise ValueError(f"Invalid span bounds: start={self.start} end={self.end}")

    @property
    def length(self) -> int:
        return self.end - self.start + 1

    def shifted(self, offset: int) -> EntitySpan:
        return EntitySpan(self.start + offset, self.end + offset, self.etype)


@dataclass(frozen=True, slots=True)
class LabeledSentence:
    chars: tuple[str, ...]
    tags: Optional[tuple[Tag, ...]] = None

    def __post_init__(self) -> None:
        if self.tags is not None and len(self.tags) != len(self.chars):
            raise ValueError(
                f"Tag count does not match character count: chars={len(self.chars)} tags={len(self.tags)}"
            )

    @classmethod
    def from_text(cls, text: str, tags: Optional[Sequence[Tag]] = None) -> LabeledSentence:
        return cls(tuple(text), None if tags is None else tuple(tags))

    @property
    def text(self) -> str:
        return "".join(self.chars)

    @property
    def is_tagged(self) -> bool:
        return self.tags is not None

    def __len__(self) -> int:
        return len(self.chars)


PAD_INDEX = 0
UNK_INDEX = 1
PAD_TOKEN = "<PAD>"
UNK_TOKEN = "<UNK>"


@dataclass(frozen=True, slots=True)
class Vocabulary:
    """Character index with PAD at 0 and UNK at 1; real characters start at 2."""

    tokens: tuple[str, ...]
    index: Mapping[str, int] = field(compare=False, repr=False)

    @classmethod
    def from_chars(cls, chars: Iterable[str]) -> Vocabulary:
        tokens = [PAD_TOKEN, UNK_TOKEN]
        index: dict[str, int] = {}
        for char in chars:
            if char in index:
                continue
            index[char] = len(tokens)
            tokens.append(char)
        return cls(tokens=tuple(tokens), index=index)

    @property
    def size(self) -> int:
        return len(self.tokens)

    def __len__(self) -> int:
        return len(self.tokens)

    def __contains__(self, char: object) -> bool:
        return char in self.index

    def lookup(self, char: str) -> int:
        return self.index.get(char, UNK_INDEX)

    def encode(self, chars: Sequence[str]) -> np.ndarray:
        return np.fromiter((self.lookup(c) for c in chars), dtype=np.int64, count=len(chars))

    def real_tokens(self) -> tuple[str, ...]:
        return self.tokens[2:]
