from clinical_ner.nn.adam import AdamState, adam_update, clip_grad_norm
from clinical_ner.nn.autodiff import Parameter, ShapeError, Tape, Variable, compute_gradients
from clinical_ner.nn.dropout import Mode, dropout_forward
from clinical_ner.nn.embedding import EmbeddingIndexError, embed_lookup, init_embedding
from clinical_ner.nn.lstm import LstmParams, LstmState, bilstm_forward, init_lstm_params, lstm_step

__all__ = [
    "AdamState",
    "EmbeddingIndexError",
    "LstmParams",
    "LstmState",
    "Mode",
    "Parameter",
    "ShapeError",
    "Tape",
    "Variable",
    "adam_update",
    "bilstm_forward",
    "clip_grad_norm",
    "compute_gradients",
    "dropout_forward",
    "embed_lookup",
    "init_embedding",
    "init_lstm_params",
    "lstm_step",
]
