from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from clinical_ner.corpus.models import ENTITY_TYPES, EntityType, LabeledSentence
from clinical_ner.corpus.tags import tags_to_spans

TYPE_NAMES: Mapping[EntityType, str] = {
    EntityType.DISEASE: "disease",
    EntityType.SYMPTOM: "symptom",
    EntityType.TREATMENT: "treatment",
    EntityType.EXAM: "exam",
    EntityType.BODY: "body",
}


@dataclass(frozen=True, slots=True)
class CorpusStatistics:
    sentences: int
    characters: int
    entity_counts: Mapping[EntityType, int]

    @property
    def total_entities(self) -> int:
        return sum(self.entity_counts.values())


def corpus_statistics(sentences: Sequence[LabeledSentence]) -> CorpusStatistics:
    counts = {etype: 0 for etype in ENTITY_TYPES}
    for sentence in sentences:
        if sentence.tags is None:
            continue
        for span in tags_to_spans(sentence.tags):
            counts[span.etype] += 1
    return CorpusStatistics(
        sentences=len(sentences),
        characters=sum(len(s) for s in sentences),
        entity_counts=counts,
    )


def format_statistics(stats: CorpusStatistics) -> str:
    lines = [f"{'type':<10} {'entities':>9}"]
    for etype in ENTITY_TYPES:
        lines.append(f"{TYPE_NAMES[etype]:<10} {stats.entity_counts[etype]:>9}")
    lines.append(f"{'sum':<10} {stats.total_entities:>9}")
    lines.append(f"sentences={stats.sentences} characters={stats.characters}")
    return "\n".join(lines)


def train_dev_split(
    sentences: Sequence[LabeledSentence],
    fraction: float,
    rng: np.random.Generator,
) -> tuple[list[LabeledSentence], list[LabeledSentence]]:
    """Hold out round(fraction * n) sentences (at least one when fraction > 0); both parts keep file order."""
    if not 0.0 <= fraction < 1.0:
        raise ValueError(f"Dev fraction must be in [0, 1): {fraction}")
    n = len(sentences)
    n_dev = int(round(fraction * n))
    if fraction > 0 and n_dev == 0 and n > 1:
        n_dev = 1
    n_dev = min(n_dev, n - 1) if n > 0 else 0
    if n_dev <= 0:
        return list(sentences), []
    dev_indices = set(rng.permutation(n)[:n_dev].tolist())
    train = [s for idx, s in enumerate(sentences) if idx not in dev_indices]
    dev = [s for idx, s in enumerate(sentences) if idx in dev_indices]
    return train, dev
