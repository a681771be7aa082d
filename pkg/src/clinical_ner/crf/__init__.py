from clinical_ner.crf.core import (
    CrfMarginals,
    TagPath,
    bieos_transition_mask,
    crf_marginals,
    crf_nll,
    crf_nll_and_grad,
    forward_logZ,
    new_transition_matrix,
    sequence_score,
    viterbi_decode,
)
from clinical_ner.crf.layer import crf_loss

__all__ = [
    "CrfMarginals",
    "TagPath",
    "bieos_transition_mask",
    "crf_loss",
    "crf_marginals",
    "crf_nll",
    "crf_nll_and_grad",
    "forward_logZ",
    "new_transition_matrix",
    "sequence_score",
    "viterbi_decode",
]
