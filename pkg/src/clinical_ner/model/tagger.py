from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Iterator, Optional, Sequence

import numpy as np

from clinical_ner.corpus.models import NUM_TAGS, Vocabulary
from clinical_ner.crf.core import new_transition_matrix
from clinical_ner.crf.layer import crf_loss
from clinical_ner.model.config import ArchKind, ModelConfig
from clinical_ner.nn import ops
from clinical_ner.nn.autodiff import Parameter, ShapeError, Tape, Variable, compute_gradients
from clinical_ner.nn.dropout import Mode
from clinical_ner.nn.embedding import init_embedding
from clinical_ner.nn.lstm import LstmParams, init_lstm_params

logger = logging.getLogger(__name__)


@dataclass(frozen=True, slots=True)
class BiLstm:
    forward: LstmParams
    backward: LstmParams

    @property
    def d_in(self) -> int:
        return self.forward.d_in

    @property
    def output_width(self) -> int:
        return self.forward.d_h + self.backward.d_h

    def parameters(self) -> Iterator[Parameter]:
        yield from self.forward.parameters()
        yield from self.backward.parameters()


def init_bilstm(prefix: str, d_in: int, d_h: int, rng: np.random.Generator) -> BiLstm:
    return BiLstm(
        forward=init_lstm_params(f"{prefix}.forward", d_in, d_h, rng),
        backward=init_lstm_params(f"{prefix}.backward", d_in, d_h, rng),
    )


@dataclass(slots=True)
class TaggerModel:
    """
    Character embeddings, one Bi-LSTM (baseline, model1) or two parallel ones (model2),
    an affine scoring layer and CRF transitions.

    Model2 keeps its encoders as (character stream, feature stream).
    """

    config: ModelConfig
    vocab: Vocabulary
    char_embedding: Parameter
    encoders: tuple[BiLstm, ...]
    projection_weight: Parameter
    projection_bias: Parameter
    transitions: Parameter
    feature_embedding: Optional[Parameter] = None
    dictionary_fingerprint: str = ""
    _params: dict[str, Parameter] = field(default_factory=dict, repr=False)

    def __post_init__(self) -> None:
        ordered: list[Parameter] = [self.char_embedding]
        if self.feature_embedding is not None:
            ordered.append(self.feature_embedding)
        for encoder in self.encoders:
            ordered.extend(encoder.parameters())
        ordered.extend([self.projection_weight, self.projection_bias, self.transitions])
        self._params = {param.name: param for param in ordered}

    @property
    def arch(self) -> ArchKind:
        return self.config.arch

    def parameters(self) -> dict[str, Parameter]:
        """Every trainable tensor keyed by its stable name, in serialization order."""
        return self._params

    def encoder_input_widths(self) -> tuple[int, ...]:
        return tuple(encoder.d_in for encoder in self.encoders)

    @property
    def crf_input_width(self) -> int:
        return sum(encoder.output_width for encoder in self.encoders)


def seed_streams(seed: int) -> tuple[np.random.Generator, ...]:
    """Independent generators for (initialization, shuffling, dropout, dev split)."""
    return tuple(np.random.default_rng(child) for child in np.random.SeedSequence(seed).spawn(4))


def build_model(config: ModelConfig, vocab: Vocabulary, rng: Optional[np.random.Generator] = None) -> TaggerModel:
    if rng is None:
        rng = seed_streams(config.seed)[0]

    char_embedding = init_embedding("char_embedding", vocab.size, config.d_e, rng)
    feature_embedding: Optional[Parameter] = None
    if config.scheme is not None and config.scheme.is_embedding:
        feature_embedding = init_embedding("feature_embedding", config.scheme.label_count, config.d_d, rng)

    if config.arch is ArchKind.MODEL_II:
        encoders: tuple[BiLstm, ...] = (
            init_bilstm("char_encoder", config.d_e, config.d_hx, rng),
            init_bilstm("feature_encoder", config.feature_width, config.d_hd, rng),
        )
    else:
        encoders = (init_bilstm("encoder", config.d_e + config.feature_width, config.d_h, rng),)

    width = sum(encoder.output_width for encoder in encoders)
    if width != config.crf_input_width:
        raise ValueError(f"Encoder output width {width} does not match configured CRF input width {config.crf_input_width}")
    bound = np.sqrt(6.0 / (width + NUM_TAGS))
    projection_weight = Parameter("projection.W", rng.uniform(-bound, bound, size=(NUM_TAGS, width)))
    projection_bias = Parameter("projection.b", np.zeros(NUM_TAGS))
    transitions = Parameter("transitions", new_transition_matrix(NUM_TAGS))

    model = TaggerModel(
        config=config,
        vocab=vocab,
        char_embedding=char_embedding,
        encoders=encoders,
        projection_weight=projection_weight,
        projection_bias=projection_bias,
        transitions=transitions,
        feature_embedding=feature_embedding,
    )
    logger.debug(
        "Built model. arch=%s scheme=%s vocab=%s encoder_inputs=%s crf_input=%s",
        config.arch.value,
        config.scheme.value if config.scheme else None,
        vocab.size,
        model.encoder_input_widths(),
        model.crf_input_width,
    )
    return model


def _feature_stream(tape: Tape, model: TaggerModel, features: np.ndarray, length: int) -> Variable:
    scheme = model.config.scheme
    assert scheme is not None
    if scheme.is_embedding:
        assert model.feature_embedding is not None
        if features.shape != (length,):
            raise ShapeError(f"Feature indices have shape {features.shape}, expected ({length},)")
        return ops.embedding(tape, model.feature_embedding, features)
    expected = (length, scheme.label_count)
    if features.shape != expected:
        raise ShapeError(f"Feature matrix has shape {features.shape}, expected {expected}")
    return ops.constant(features)


def emissions(
    tape: Tape,
    model: TaggerModel,
    char_ids: np.ndarray,
    features: Optional[np.ndarray],
    mode: Mode,
    rng: Optional[np.random.Generator] = None,
) -> Variable:
    """(T x 21) emission scores for one clause under the model's architecture."""
    config = model.config
    chars = ops.embedding(tape, model.char_embedding, char_ids)

    if config.arch is ArchKind.BASELINE:
        encoder = model.encoders[0]
        hidden = ops.bilstm(tape, encoder.forward, encoder.backward, chars)
    else:
        if features is None:
            raise ValueError(f"Architecture {config.arch.value} needs dictionary features")
        feats = _feature_stream(tape, model, np.asarray(features), len(char_ids))
        if config.arch is ArchKind.MODEL_I:
            encoder = model.encoders[0]
            merged = ops.concat(tape, [chars, feats])
            hidden = ops.bilstm(tape, encoder.forward, encoder.backward, merged)
        else:
            char_encoder, feature_encoder = model.encoders
            hidden = ops.concat(
                tape,
                [
                    ops.bilstm(tape, char_encoder.forward, char_encoder.backward, chars),
                    ops.bilstm(tape, feature_encoder.forward, feature_encoder.backward, feats),
                ],
            )

    hidden = ops.dropout(tape, hidden, config.dropout, mode, rng)
    return ops.affine(tape, hidden, model.projection_weight, model.projection_bias)


def _emission_scores(
    model: TaggerModel,
    chars: Sequence[str],
    features: Optional[np.ndarray],
    mode: Mode,
    rng: Optional[np.random.Generator],
) -> np.ndarray:
    tape = Tape(enabled=False)
    return emissions(tape, model, model.vocab.encode(chars), features, mode, rng).value


def forward_baseline(
    model: TaggerModel, chars: Sequence[str], mode: Mode = Mode.EVAL, rng: Optional[np.random.Generator] = None
) -> np.ndarray:
    if model.arch is not ArchKind.BASELINE:
        raise ValueError(f"forward_baseline called on a {model.arch.value} model")
    return _emission_scores(model, chars, None, mode, rng)


def forward_model_i(
    model: TaggerModel,
    chars: Sequence[str],
    features: np.ndarray,
    mode: Mode = Mode.EVAL,
    rng: Optional[np.random.Generator] = None,
) -> np.ndarray:
    """Concatenate character and feature vectors per position, then one Bi-LSTM."""
    if model.arch is not ArchKind.MODEL_I:
        raise ValueError(f"forward_model_i called on a {model.arch.value} model")
    return _emission_scores(model, chars, features, mode, rng)


def forward_model_ii(
    model: TaggerModel,
    chars: Sequence[str],
    features: np.ndarray,
    mode: Mode = Mode.EVAL,
    rng: Optional[np.random.Generator] = None,
) -> np.ndarray:
    """Independent Bi-LSTMs over the character and feature streams, hidden states concatenated."""
    if model.arch is not ArchKind.MODEL_II:
        raise ValueError(f"forward_model_ii called on a {model.arch.value} model")
    return _emission_scores(model, chars, features, mode, rng)


def sentence_loss(
    tape: Tape,
    model: TaggerModel,
    char_ids: np.ndarray,
    features: Optional[np.ndarray],
    gold: Sequence[int],
    mode: Mode,
    rng: Optional[np.random.Generator] = None,
) -> Variable:
    scores = emissions(tape, model, char_ids, features, mode, rng)
    return crf_loss(tape, scores, model.transitions, gold)


def loss_and_gradients(
    model: TaggerModel,
    char_ids: np.ndarray,
    features: Optional[np.ndarray],
    gold: Sequence[int],
    mode: Mode = Mode.EVAL,
    rng: Optional[np.random.Generator] = None,
) -> tuple[float, dict[str, np.ndarray]]:
    """CRF loss of one clause and its gradient wrt every parameter; existing gradients are discarded."""
    params = model.parameters()
    for param in params.values():
        param.zero_grad()
    tape = Tape()
    loss = sentence_loss(tape, model, char_ids, features, gold, mode, rng)
    grads = compute_gradients(tape, loss, params.values())
    for param in params.values():
        param.zero_grad()
    return float(loss.value), grads
