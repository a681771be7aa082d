"""Deterministic synthetic clinical corpus: entity lexicons placed into carrier clauses."""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

import numpy as np

from clinical_ner.corpus.models import EntitySpan, EntityType, LabeledSentence
from clinical_ner.corpus.tags import spans_to_tags
from clinical_ner.dictionary.models import Dictionary

LEXICON: Mapping[EntityType, tuple[str, ...]] = {
    EntityType.DISEASE: ("肺炎", "胃炎", "肝炎", "肠炎", "肾炎", "鼻炎", "心肌炎", "胆囊炎"),
    EntityType.SYMPTOM: ("头痛", "发热", "咳嗽", "腹痛", "恶心", "乏力", "胸闷", "头晕"),
    EntityType.TREATMENT: ("手术", "输液", "化疗", "放疗", "针灸", "理疗", "吸氧", "透析"),
    EntityType.EXAM: ("血常规", "尿常规", "心电图", "胸片", "彩超", "核磁", "胃镜", "肠镜"),
    EntityType.BODY: ("头部", "腹部", "胸部", "肝", "肾", "心脏", "双肺", "颈部"),
}

CLAUSE_TEMPLATES: tuple[str, ...] = (
    "患者自述{s}，",
    "伴有{s}，",
    "诊断为{d}，",
    "既往有{d}病史，",
    "行{t}治疗，",
    "予{t}后好转，",
    "查{e}示{b}未见异常，",
    "{b}无压痛，",
    "{e}提示{d}，",
)

_SLOT = re.compile(r"\{([dsteb])\}")

# Fraction of each lexicon reserved for test-time out-of-vocabulary entities.
UNSEEN_FRACTION = 0.5


@dataclass(frozen=True, slots=True)
class SyntheticCorpus:
    train: tuple[LabeledSentence, ...]
    test: tuple[LabeledSentence, ...]
    dictionary: Dictionary


def _split_pools(
    lexicon: Mapping[EntityType, Sequence[str]]
) -> tuple[dict[EntityType, tuple[str, ...]], dict[EntityType, tuple[str, ...]]]:
    seen: dict[EntityType, tuple[str, ...]] = {}
    unseen: dict[EntityType, tuple[str, ...]] = {}
    for etype, surfaces in lexicon.items():
        n_unseen = int(round(UNSEEN_FRACTION * len(surfaces)))
        cut = len(surfaces) - n_unseen
        seen[etype] = tuple(surfaces[:cut])
        unseen[etype] = tuple(surfaces[cut:])
    return seen, unseen


def _render_clause(
    template: str,
    pick: Callable[[EntityType], str],
) -> tuple[str, list[EntitySpan]]:
    text = ""
    spans: list[EntitySpan] = []
    cursor = 0
    for match in _SLOT.finditer(template):
        text += template[cursor : match.start()]
        etype = EntityType(match.group(1))
        surface = pick(etype)
        spans.append(EntitySpan(len(text), len(text) + len(surface) - 1, etype))
        text += surface
        cursor = match.end()
    text += template[cursor:]
    return text, spans


def _sentence(
    rng: np.random.Generator,
    seen: Mapping[EntityType, Sequence[str]],
    unseen: Mapping[EntityType, Sequence[str]],
    oov_rate: float,
) -> LabeledSentence:
    def pick(etype: EntityType) -> str:
        pool = seen[etype]
        if oov_rate > 0 and unseen[etype] and rng.random() < oov_rate:
            pool = unseen[etype]
        return pool[int(rng.integers(len(pool)))]

    n_clauses = int(rng.integers(2, 4))
    text = ""
    spans: list[EntitySpan] = []
    for _ in range(n_clauses):
        clause, clause_spans = _render_clause(CLAUSE_TEMPLATES[int(rng.integers(len(CLAUSE_TEMPLATES)))], pick)
        spans.extend(span.shifted(len(text)) for span in clause_spans)
        text += clause
    text = text[:-1] + "。"
    return LabeledSentence.from_text(text, spans_to_tags(spans, len(text)))


def generate_synthetic(n_train: int, n_test: int, oov_rate: float = 0.0, seed: int = 0) -> SyntheticCorpus:
    """
    Build a tagged train/test pair and a dictionary holding every lexicon entry.

    Training sentences only use the seen half of each lexicon; each test entity is
    drawn from the unseen half with probability `oov_rate`.
    """
    if n_train < 0 or n_test < 0:
        raise ValueError("Sentence counts must be non-negative")
    if not 0.0 <= oov_rate <= 1.0:
        raise ValueError(f"OOV rate must be in [0, 1]: {oov_rate}")
    train_rng, test_rng = (np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(2))
    seen, unseen = _split_pools(LEXICON)
    train = tuple(_sentence(train_rng, seen, unseen, 0.0) for _ in range(n_train))
    test = tuple(_sentence(test_rng, seen, unseen, oov_rate) for _ in range(n_test))
    dictionary = Dictionary.from_pairs((surface, etype) for etype, surfaces in LEXICON.items() for surface in surfaces)
    return SyntheticCorpus(train=train, test=test, dictionary=dictionary)
