from __future__ import annotations

import json
import logging
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from clinical_ner.config.models import CorpusSettings, TrainingSettings
from clinical_ner.corpus.clauses import split_clauses
from clinical_ner.corpus.models import LabeledSentence
from clinical_ner.corpus.stats import train_dev_split
from clinical_ner.corpus.tags import tags_to_spans
from clinical_ner.corpus.vocab import build_vocab
from clinical_ner.dictionary.io import fingerprint
from clinical_ner.dictionary.models import Dictionary
from clinical_ner.evaluation.metrics import EvalReport, micro_prf
from clinical_ner.features.encode import extract_features
from clinical_ner.model.config import ModelConfig
from clinical_ner.model.embeddings import PretrainedEmbeddings
from clinical_ner.model.inference import DecodeOptions, tag_sentences
from clinical_ner.model.tagger import TaggerModel, build_model, seed_streams, sentence_loss
from clinical_ner.nn.adam import AdamState, adam_update, clip_grad_norm
from clinical_ner.nn.autodiff import Tape, collect_grads, restore, snapshot, zero_grads
from clinical_ner.nn.dropout import Mode
from clinical_ner.utils import atomic_write_text

logger = logging.getLogger(__name__)


@dataclass(frozen=True, slots=True)
class EpochMetrics:
    epoch: int
    loss: float
    dev: Optional[EvalReport] = None

    def to_record(self) -> dict[str, float | int]:
        record: dict[str, float | int] = {"epoch": self.epoch, "loss": self.loss}
        if self.dev is not None:
            record["dev_precision"] = self.dev.precision
            record["dev_recall"] = self.dev.recall
            record["dev_f1"] = self.dev.f1
        return record


@dataclass(frozen=True, slots=True)
class TrainingResult:
    model: TaggerModel
    history: tuple[EpochMetrics, ...]
    best_epoch: int

    @property
    def losses(self) -> list[float]:
        return [metrics.loss for metrics in self.history]


@dataclass(frozen=True, slots=True)
class _Example:
    char_ids: np.ndarray
    features: Optional[np.ndarray]
    gold: tuple[int, ...]


def _clauses(sentences: Sequence[LabeledSentence], settings: CorpusSettings) -> list[LabeledSentence]:
    if not settings.split_clauses:
        return list(sentences)
    return [clause for sentence in sentences for clause in split_clauses(sentence, settings.clause_delimiters)]


def _examples(
    clauses: Sequence[LabeledSentence], model: TaggerModel, dictionary: Optional[Dictionary]
) -> list[_Example]:
    scheme = model.config.scheme
    examples: list[_Example] = []
    for clause in clauses:
        assert clause.tags is not None
        features = None
        if scheme is not None:
            assert dictionary is not None
            features = extract_features(clause.chars, dictionary, scheme)
        examples.append(
            _Example(
                char_ids=model.vocab.encode(clause.chars),
                features=features,
                gold=tuple(tag.code for tag in clause.tags),
            )
        )
    return examples


def evaluate_model(
    model: TaggerModel,
    sentences: Sequence[LabeledSentence],
    dictionary: Optional[Dictionary],
    options: DecodeOptions = DecodeOptions(),
) -> EvalReport:
    """Tag the sentences and score the predicted spans against their gold tags."""
    predicted = tag_sentences(model, sentences, dictionary, options, check=False)
    gold = [tags_to_spans(sentence.tags or ()) for sentence in sentences]
    return micro_prf(gold, [list(p.spans) for p in predicted])


def _write_metrics_log(path: str, history: Sequence[EpochMetrics]) -> None:
    lines = [json.dumps(metrics.to_record(), sort_keys=True) for metrics in history]
    atomic_write_text(Path(path), "\n".join(lines) + "\n")


def train(
    corpus: Sequence[LabeledSentence],
    dictionary: Optional[Dictionary],
    config: ModelConfig,
    training: TrainingSettings = TrainingSettings(),
    corpus_settings: CorpusSettings = CorpusSettings(),
    pretrained: Optional[PretrainedEmbeddings] = None,
) -> TrainingResult:
    """
    Fit a tagger with per-sentence gradients summed over each batch and one Adam step per batch.

    A dev split enables per-epoch dev F1, best-epoch restoration and, with patience > 0,
    early stopping. Pretrained embedding files overwrite the freshly initialized rows
    of the tokens they cover before the first epoch.
    """
    if not corpus:
        raise ValueError("Training corpus is empty")
    if not all(sentence.is_tagged for sentence in corpus):
        raise ValueError("Training corpus must be tagged")
    if config.scheme is not None and dictionary is None:
        raise ValueError(f"Architecture {config.arch.value} needs a dictionary")

    init_rng, shuffle_rng, dropout_rng, split_rng = seed_streams(config.seed)
    train_sentences, dev_sentences = train_dev_split(corpus, training.dev_split, split_rng)
    train_clauses = _clauses(train_sentences, corpus_settings)

    model = build_model(config, build_vocab(train_clauses), init_rng)
    if pretrained is not None:
        pretrained.apply(model)
    model.dictionary_fingerprint = fingerprint(dictionary if dictionary is not None else Dictionary())

    started = time.monotonic()
    examples = _examples(train_clauses, model, dictionary)
    logger.info(
        "Training data prepared. sentences=%s clauses=%s dev_sentences=%s vocab=%s elapsed_ms=%s",
        len(train_sentences),
        len(examples),
        len(dev_sentences),
        model.vocab.size,
        int((time.monotonic() - started) * 1000),
    )

    params = model.parameters()
    adam = AdamState(
        lr=config.learning_rate,
        beta1=training.adam_beta1,
        beta2=training.adam_beta2,
        epsilon=training.adam_epsilon,
    )
    decode_options = DecodeOptions(
        split_clauses=corpus_settings.split_clauses,
        clause_delimiters=corpus_settings.clause_delimiters,
    )

    history: list[EpochMetrics] = []
    best_f1 = -1.0
    best_epoch = 0
    best_values: Optional[dict[str, np.ndarray]] = None
    stale_epochs = 0

    for epoch in range(1, config.epochs + 1):
        started = time.monotonic()
        order = shuffle_rng.permutation(len(examples))
        epoch_loss = 0.0
        for batch_start in range(0, len(order), config.batch_size):
            zero_grads(params.values())
            for idx in order[batch_start : batch_start + config.batch_size]:
                example = examples[idx]
                tape = Tape()
                loss = sentence_loss(
                    tape, model, example.char_ids, example.features, example.gold, Mode.TRAIN, dropout_rng
                )
                tape.backward(loss)
                epoch_loss += float(loss.value)
            grads = collect_grads(params.values())
            clip_grad_norm(grads, config.clip)
            adam_update(params, grads, adam)
        zero_grads(params.values())

        dev_report = evaluate_model(model, dev_sentences, dictionary, decode_options) if dev_sentences else None
        metrics = EpochMetrics(epoch=epoch, loss=epoch_loss, dev=dev_report)
        history.append(metrics)
        logger.info(
            "Epoch completed. epoch=%s loss=%.4f dev_f1=%s elapsed_ms=%s",
            epoch,
            epoch_loss,
            f"{dev_report.f1:.4f}" if dev_report is not None else None,
            int((time.monotonic() - started) * 1000),
        )
        if training.metrics_log:
            _write_metrics_log(training.metrics_log, history)

        if dev_report is None:
            best_epoch = epoch
            continue
        if dev_report.f1 > best_f1:
            best_f1, best_epoch, stale_epochs = dev_report.f1, epoch, 0
            best_values = snapshot(params)
            continue
        stale_epochs += 1
        if training.patience and stale_epochs >= training.patience:
            logger.info("Early stopping. epoch=%s best_epoch=%s best_dev_f1=%.4f", epoch, best_epoch, best_f1)
            break

    if best_values is not None and best_epoch != history[-1].epoch:
        restore(params, best_values)
        logger.info("Restored best epoch parameters. best_epoch=%s best_dev_f1=%.4f", best_epoch, best_f1)
    return TrainingResult(model=model, history=tuple(history), best_epoch=best_epoch)
