from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Mapping, Sequence

from clinical_ner.corpus.models import ENTITY_TYPES, EntitySpan, EntityType


@dataclass(frozen=True, slots=True)
class TypeCounts:
    true_positive: int = 0
    predicted: int = 0
    gold: int = 0

    @property
    def precision(self) -> float:
        return self.true_positive / self.predicted if self.predicted else 0.0

    @property
    def recall(self) -> float:
        return self.true_positive / self.gold if self.gold else 0.0

    @property
    def f1(self) -> float:
        p, r = self.precision, self.recall
        return 2 * p * r / (p + r) if p + r > 0 else 0.0

    def __add__(self, other: TypeCounts) -> TypeCounts:
        return TypeCounts(
            self.true_positive + other.true_positive,
            self.predicted + other.predicted,
            self.gold + other.gold,
        )


@dataclass(frozen=True, slots=True)
class EvalReport:
    """Exact-match span counts per entity type; the overall row pools every type."""

    per_type: Mapping[EntityType, TypeCounts]

    @property
    def overall(self) -> TypeCounts:
        total = TypeCounts()
        for etype in ENTITY_TYPES:
            total = total + self.per_type.get(etype, TypeCounts())
        return total

    @property
    def precision(self) -> float:
        return self.overall.precision

    @property
    def recall(self) -> float:
        return self.overall.recall

    @property
    def f1(self) -> float:
        return self.overall.f1

    def counts(self, etype: EntityType) -> TypeCounts:
        return self.per_type.get(etype, TypeCounts())


def micro_prf(
    gold: Sequence[Sequence[EntitySpan]], pred: Sequence[Sequence[EntitySpan]]
) -> EvalReport:
    """
    Micro-averaged span evaluation over aligned sentences.

    A prediction is correct only when start, end and type all match a gold span.
    """
    if len(gold) != len(pred):
        raise ValueError(f"Sentence count mismatch: gold={len(gold)} pred={len(pred)}")

    tp: Counter[EntityType] = Counter()
    n_pred: Counter[EntityType] = Counter()
    n_gold: Counter[EntityType] = Counter()
    for gold_spans, pred_spans in zip(gold, pred):
        gold_set = set(gold_spans)
        for span in gold_set:
            n_gold[span.etype] += 1
        for span in set(pred_spans):
            n_pred[span.etype] += 1
            if span in gold_set:
                tp[span.etype] += 1

    per_type = {etype: TypeCounts(tp[etype], n_pred[etype], n_gold[etype]) for etype in ENTITY_TYPES}
    return EvalReport(per_type=per_type)
