from __future__ import annotations

from typing import Sequence

from clinical_ner.crf.core import crf_nll_and_grad
from clinical_ner.nn.autodiff import Parameter, Tape, Variable


def crf_loss(tape: Tape, emissions: Variable, transitions: Parameter, gold: Sequence[int]) -> Variable:
    """Tape op for the CRF negative log-likelihood of one sentence."""
    loss, d_em, d_transitions = crf_nll_and_grad(emissions.value, transitions.value, gold)
    out = Variable(loss)

    def backward() -> None:
        if out.grad is None:
            return
        scale = float(out.grad)
        emissions.accumulate(scale * d_em)
        transitions.accumulate(scale * d_transitions)

    tape.record(backward)
    return out
