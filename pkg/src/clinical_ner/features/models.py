from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Literal, Optional

from clinical_ner.corpus.models import (
    ENTITY_TYPES,
    NUM_TAGS,
    EntityType,
    Position,
    positional_code,
    split_positional_code,
)

FeatureFamily = Literal["ngram", "piet", "pdet"]


class FeatureScheme(Enum):
    NGRAM = "ngram"
    PIET_ONEHOT = "piet-onehot"
    PIET_EMBED = "piet-embed"
    PDET_ONEHOT = "pdet-onehot"
    PDET_EMBED = "pdet-embed"

    @property
    def family(self) -> FeatureFamily:
        if self is FeatureScheme.NGRAM:
            return "ngram"
        if self in (FeatureScheme.PIET_ONEHOT, FeatureScheme.PIET_EMBED):
            return "piet"
        return "pdet"

    @property
    def is_embedding(self) -> bool:
        return self in (FeatureScheme.PIET_EMBED, FeatureScheme.PDET_EMBED)

    @property
    def label_count(self) -> int:
        """Rows of the label inventory (one-hot width or embedding table height)."""
        if self.family == "ngram":
            return NGRAM_WIDTH
        if self.family == "piet":
            return PIET_SIZE
        return PDET_SIZE

    def width(self, d_d: int) -> int:
        """Per-character feature width entering the encoder."""
        return d_d if self.is_embedding else self.label_count


# (offset of the window start relative to i, window length), in template order:
# 2-gram left, 2-gram right, 3-gram left, 3-gram right, ..., 5-gram right.
NGRAM_TEMPLATES: tuple[tuple[int, int], ...] = tuple(
    (offset, n) for n in range(2, 6) for offset in (-(n - 1), 0)
)
NGRAM_WIDTH = len(NGRAM_TEMPLATES) * len(ENTITY_TYPES)
NGRAM_RADIUS = max(n for _, n in NGRAM_TEMPLATES) - 1


def ngram_bit_index(template: int, etype: EntityType) -> int:
    return template * len(ENTITY_TYPES) + etype.code


PIET_SIZE = len(ENTITY_TYPES) + 1
PDET_SIZE = NUM_TAGS


@dataclass(frozen=True, slots=True)
class PietLabel:
    etype: Optional[EntityType] = None

    @property
    def index(self) -> int:
        return 0 if self.etype is None else 1 + self.etype.code

    @classmethod
    def from_index(cls, index: int) -> PietLabel:
        if not 0 <= index < PIET_SIZE:
            raise ValueError(f"PIET label index out of range: {index}")
        return cls(None if index == 0 else ENTITY_TYPES[index - 1])

    def __str__(self) -> str:
        return "None" if self.etype is None else self.etype.letter


@dataclass(frozen=True, slots=True)
class PdetLabel:
    position: Optional[Position] = None
    etype: Optional[EntityType] = None

    def __post_init__(self) -> None:
        if (self.position is None) != (self.etype is None):
            raise ValueError("PDET position and entity type must be both present or both absent")

    @property
    def index(self) -> int:
        return positional_code(self.position, self.etype)

    @classmethod
    def from_index(cls, index: int) -> PdetLabel:
        position, etype = split_positional_code(index)
        return cls(position, etype)

    def without_position(self) -> PietLabel:
        return PietLabel(self.etype)

    def __str__(self) -> str:
        if self.position is None:
            return "None"
        assert self.etype is not None
        return f"{self.position.value}-{self.etype.letter}"


PIET_LABELS: tuple[PietLabel, ...] = tuple(PietLabel.from_index(i) for i in range(PIET_SIZE))
PDET_LABELS: tuple[PdetLabel, ...] = tuple(PdetLabel.from_index(i) for i in range(PDET_SIZE))
