from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Optional

from clinical_ner.corpus.models import EntityType


@dataclass(frozen=True, slots=True)
class Dictionary:
    """Surface string -> entity types in file order."""

    entries: Mapping[str, tuple[EntityType, ...]] = field(default_factory=dict)
    max_len: int = 0

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[str, EntityType]]) -> Dictionary:
        entries: dict[str, list[EntityType]] = {}
        for surface, etype in pairs:
            if not surface:
                raise ValueError("Dictionary surface must not be empty")
            types = entries.setdefault(surface, [])
            if etype not in types:
                types.append(etype)
        return cls(
            entries={surface: tuple(types) for surface, types in entries.items()},
            max_len=max((len(surface) for surface in entries), default=0),
        )

    def types_of(self, surface: str) -> tuple[EntityType, ...]:
        return self.entries.get(surface, ())

    def pairs(self) -> Iterator[tuple[str, EntityType]]:
        for surface, types in self.entries.items():
            for etype in types:
                yield surface, etype

    def __contains__(self, surface: object) -> bool:
        return surface in self.entries

    def __len__(self) -> int:
        return len(self.entries)


@dataclass(frozen=True, slots=True)
class Segment:
    text: str
    etype: Optional[EntityType]
    start: int

    @property
    def end(self) -> int:
        """Inclusive end offset."""
        return self.start + len(self.text) - 1


@dataclass(frozen=True, slots=True)
class SegmentList:
    segments: tuple[Segment, ...] = ()

    @property
    def entity_count(self) -> int:
        return sum(1 for segment in self.segments if segment.etype is not None)

    def __len__(self) -> int:
        return len(self.segments)

    def __iter__(self) -> Iterator[Segment]:
        return iter(self.segments)

    def __getitem__(self, idx: int) -> Segment:
        return self.segments[idx]
