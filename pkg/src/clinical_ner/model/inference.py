from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional, Sequence

from clinical_ner.corpus.clauses import DEFAULT_CLAUSE_DELIMITERS, split_clauses
from clinical_ner.corpus.models import EntitySpan, LabeledSentence, Tag
from clinical_ner.corpus.tags import is_valid_sequence, lenient_tags_to_spans, spans_to_tags
from clinical_ner.crf.core import bieos_transition_mask, viterbi_decode
from clinical_ner.dictionary.io import fingerprint
from clinical_ner.dictionary.models import Dictionary
from clinical_ner.features.encode import extract_features
from clinical_ner.model.tagger import TaggerModel, emissions
from clinical_ner.nn.autodiff import Tape
from clinical_ner.nn.dropout import Mode

logger = logging.getLogger(__name__)


@dataclass(frozen=True, slots=True)
class TaggedSentence:
    chars: tuple[str, ...]
    tags: tuple[Tag, ...]
    spans: tuple[EntitySpan, ...]

    def to_labeled(self) -> LabeledSentence:
        """Corpus-ready sentence whose tags are rebuilt from the spans, so they always re-parse."""
        return LabeledSentence(self.chars, tuple(spans_to_tags(self.spans, len(self.chars))))


@dataclass(frozen=True, slots=True)
class DecodeOptions:
    split_clauses: bool = True
    clause_delimiters: str = DEFAULT_CLAUSE_DELIMITERS
    mask_invalid_transitions: bool = False


def check_dictionary(model: TaggerModel, dictionary: Optional[Dictionary]) -> bool:
    """Warn when the inference dictionary differs from the one the model was trained with."""
    if model.config.scheme is None:
        return True
    if dictionary is None:
        raise ValueError(f"Architecture {model.arch.value} needs a dictionary at inference time")
    if not model.dictionary_fingerprint:
        return True
    current = fingerprint(dictionary)
    if current != model.dictionary_fingerprint:
        logger.warning(
            "Dictionary differs from the one used in training. trained=%s current=%s",
            model.dictionary_fingerprint[:12],
            current[:12],
        )
        return False
    return True


def _tag_clause(
    model: TaggerModel,
    chars: Sequence[str],
    dictionary: Optional[Dictionary],
    options: DecodeOptions,
) -> tuple[list[Tag], list[EntitySpan]]:
    features = None
    if model.config.scheme is not None:
        assert dictionary is not None
        features = extract_features(chars, dictionary, model.config.scheme)
    scores = emissions(Tape(enabled=False), model, model.vocab.encode(chars), features, Mode.EVAL).value
    allowed = bieos_transition_mask() if options.mask_invalid_transitions else None
    path = viterbi_decode(scores, model.transitions.value, allowed)
    tags = [Tag.from_code(code) for code in path.tags]
    if not is_valid_sequence(tags):
        logger.debug("Decoded tags are not valid BIEOS; extracting spans leniently. text=%s", "".join(chars))
    return tags, lenient_tags_to_spans(tags)


def _tag_one(
    model: TaggerModel,
    chars: Sequence[str],
    dictionary: Optional[Dictionary],
    options: DecodeOptions,
) -> TaggedSentence:
    sentence = LabeledSentence(tuple(chars))
    if not sentence.chars:
        return TaggedSentence((), (), ())
    clauses = split_clauses(sentence, options.clause_delimiters) if options.split_clauses else [sentence]
    tags: list[Tag] = []
    spans: list[EntitySpan] = []
    offset = 0
    for clause in clauses:
        clause_tags, clause_spans = _tag_clause(model, clause.chars, dictionary, options)
        tags.extend(clause_tags)
        spans.extend(span.shifted(offset) for span in clause_spans)
        offset += len(clause)
    return TaggedSentence(sentence.chars, tuple(tags), tuple(spans))


def tag(
    model: TaggerModel,
    chars: Sequence[str],
    dictionary: Optional[Dictionary] = None,
    options: DecodeOptions = DecodeOptions(),
) -> TaggedSentence:
    """
    Decode one sentence: eval-mode forward pass and Viterbi per clause.

    Unknown characters map to UNK and an empty sentence yields empty output.
    """
    check_dictionary(model, dictionary)
    return _tag_one(model, chars, dictionary, options)


def tag_sentences(
    model: TaggerModel,
    sentences: Sequence[LabeledSentence],
    dictionary: Optional[Dictionary] = None,
    options: DecodeOptions = DecodeOptions(),
    check: bool = True,
) -> list[TaggedSentence]:
    if check:
        check_dictionary(model, dictionary)
    return [_tag_one(model, sentence.chars, dictionary, options) for sentence in sentences]
