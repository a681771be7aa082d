"""Differentiable ops: each computes its value eagerly and records a backward closure on the tape."""

from __future__ import annotations

from typing import Optional, Sequence

import numpy as np

from clinical_ner.nn.autodiff import Parameter, ShapeError, Tape, Variable
from clinical_ner.nn.dropout import Mode, dropout_mask
from clinical_ner.nn.embedding import embed_lookup
from clinical_ner.nn.lstm import LstmParams, lstm_sequence_backward, lstm_sequence_forward


def constant(value: np.ndarray) -> Variable:
    return Variable(value)


def embedding(tape: Tape, table: Parameter, indices: np.ndarray) -> Variable:
    indices = np.asarray(indices, dtype=np.int64)
    out = Variable(embed_lookup(table.value, indices))

    def backward() -> None:
        if out.grad is None:
            return
        d_table = np.zeros_like(table.value)
        np.add.at(d_table, indices, out.grad)
        table.accumulate(d_table)

    tape.record(backward)
    return out


def concat(tape: Tape, parts: Sequence[Variable]) -> Variable:
    """Concatenate (T x d_k) variables along the feature axis."""
    rows = {part.value.shape[0] for part in parts}
    if len(rows) != 1:
        raise ShapeError(f"Cannot concatenate sequences of different lengths: {sorted(rows)}")
    widths = [part.value.shape[1] for part in parts]
    out = Variable(np.concatenate([part.value for part in parts], axis=1))

    def backward() -> None:
        if out.grad is None:
            return
        offset = 0
        for part, width in zip(parts, widths):
            part.accumulate(out.grad[:, offset : offset + width])
            offset += width

    tape.record(backward)
    return out


def affine(tape: Tape, x: Variable, weight: Parameter, bias: Parameter) -> Variable:
    """x @ W.T + b for x of shape (T x d_in) and W of shape (d_out x d_in)."""
    if x.value.ndim != 2 or x.value.shape[1] != weight.value.shape[1]:
        raise ShapeError(f"Affine input has shape {x.value.shape}, weight has shape {weight.value.shape}")
    out = Variable(x.value @ weight.value.T + bias.value)

    def backward() -> None:
        if out.grad is None:
            return
        weight.accumulate(out.grad.T @ x.value)
        bias.accumulate(out.grad.sum(axis=0))
        x.accumulate(out.grad @ weight.value)

    tape.record(backward)
    return out


def dropout(
    tape: Tape, x: Variable, rate: float, mode: Mode, rng: Optional[np.random.Generator] = None
) -> Variable:
    if mode is Mode.EVAL or rate == 0.0:
        return x
    if rng is None:
        raise ValueError("Training-mode dropout needs a random generator")
    mask = dropout_mask(x.value.shape, rate, rng)
    out = Variable(x.value * mask)

    def backward() -> None:
        if out.grad is None:
            return
        x.accumulate(out.grad * mask)

    tape.record(backward)
    return out


def lstm(tape: Tape, params: LstmParams, x: Variable, reverse: bool = False) -> Variable:
    """Run one LSTM direction over the rows of x; a reversed run still returns outputs in input order."""
    xs = x.value[::-1] if reverse else x.value
    hs, cache = lstm_sequence_forward(params, np.ascontiguousarray(xs))
    out = Variable(hs[::-1].copy() if reverse else hs)

    def backward() -> None:
        if out.grad is None:
            return
        d_hs = out.grad[::-1] if reverse else out.grad
        d_xs, grads = lstm_sequence_backward(params, cache, d_hs)
        x.accumulate(d_xs[::-1] if reverse else d_xs)
        for key, grad in grads.items():
            getattr(params, key).accumulate(grad)

    tape.record(backward)
    return out


def bilstm(tape: Tape, forward: LstmParams, backward: LstmParams, x: Variable) -> Variable:
    return concat(tape, [lstm(tape, forward, x), lstm(tape, backward, x, reverse=True)])
