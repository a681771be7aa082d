from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

import numpy as np
from scipy.special import expit

from clinical_ner.nn.autodiff import Parameter, ShapeError, check_shape

GATES = ("i", "f", "c", "o")


@dataclass(frozen=True, slots=True)
class LstmParams:
    """Per-gate LSTM weights: W_* (d_h x d_in), U_* (d_h x d_h), b_* (d_h)."""

    W_i: Parameter
    W_f: Parameter
    W_c: Parameter
    W_o: Parameter
    U_i: Parameter
    U_f: Parameter
    U_c: Parameter
    U_o: Parameter
    b_i: Parameter
    b_f: Parameter
    b_c: Parameter
    b_o: Parameter

    def __post_init__(self) -> None:
        d_h, d_in = self.W_i.shape
        for gate in GATES:
            check_shape(f"W_{gate}", self.W(gate).value, (d_h, d_in))
            check_shape(f"U_{gate}", self.U(gate).value, (d_h, d_h))
            check_shape(f"b_{gate}", self.b(gate).value, (d_h,))

    @property
    def d_h(self) -> int:
        return self.W_i.shape[0]

    @property
    def d_in(self) -> int:
        return self.W_i.shape[1]

    def W(self, gate: str) -> Parameter:
        return getattr(self, f"W_{gate}")

    def U(self, gate: str) -> Parameter:
        return getattr(self, f"U_{gate}")

    def b(self, gate: str) -> Parameter:
        return getattr(self, f"b_{gate}")

    def parameters(self) -> Iterator[Parameter]:
        for kind in ("W", "U", "b"):
            for gate in GATES:
                yield getattr(self, f"{kind}_{gate}")


def init_lstm_params(prefix: str, d_in: int, d_h: int, rng: np.random.Generator) -> LstmParams:
    """Uniform +-sqrt(6 / (d_in + d_h)) weights, forget-gate bias 1, other biases 0."""
    bound = np.sqrt(6.0 / (d_in + d_h))
    tensors: dict[str, Parameter] = {}
    for gate in GATES:
        tensors[f"W_{gate}"] = Parameter(f"{prefix}.W_{gate}", rng.uniform(-bound, bound, size=(d_h, d_in)))
    for gate in GATES:
        tensors[f"U_{gate}"] = Parameter(f"{prefix}.U_{gate}", rng.uniform(-bound, bound, size=(d_h, d_h)))
    for gate in GATES:
        bias = np.ones(d_h) if gate == "f" else np.zeros(d_h)
        tensors[f"b_{gate}"] = Parameter(f"{prefix}.b_{gate}", bias)
    return LstmParams(**tensors)


@dataclass(frozen=True, slots=True)
class LstmState:
    h: np.ndarray
    c: np.ndarray

    @classmethod
    def zeros(cls, d_h: int) -> LstmState:
        return cls(np.zeros(d_h), np.zeros(d_h))


def lstm_step(p: LstmParams, x: np.ndarray, prev: LstmState) -> LstmState:
    x = np.asarray(x, dtype=np.float64)
    check_shape("x", x, (p.d_in,))
    check_shape("h", prev.h, (p.d_h,))
    check_shape("c", prev.c, (p.d_h,))

    def pre(gate: str) -> np.ndarray:
        return p.W(gate).value @ x + p.U(gate).value @ prev.h + p.b(gate).value

    i = expit(pre("i"))
    f = expit(pre("f"))
    c_tilde = np.tanh(pre("c"))
    c = f * prev.c + i * c_tilde
    o = expit(pre("o"))
    h = o * np.tanh(c)
    return LstmState(h=h, c=c)


@dataclass(slots=True)
class _SequenceCache:
    xs: np.ndarray
    h_prev: np.ndarray
    c_prev: np.ndarray
    gates: dict[str, np.ndarray]
    tanh_c: np.ndarray


def lstm_sequence_forward(p: LstmParams, xs: np.ndarray) -> tuple[np.ndarray, _SequenceCache]:
    """Run the cell over the rows of xs (T x d_in) from zero state; returns (T x d_h) outputs."""
    if xs.ndim != 2 or xs.shape[1] != p.d_in:
        raise ShapeError(f"LSTM input has shape {xs.shape}, expected (T, {p.d_in})")
    steps = xs.shape[0]
    d_h = p.d_h
    projected = {gate: xs @ p.W(gate).value.T + p.b(gate).value for gate in GATES}
    gates = {gate: np.zeros((steps, d_h)) for gate in GATES}
    hs = np.zeros((steps, d_h))
    cs = np.zeros((steps, d_h))
    h_prev = np.zeros((steps, d_h))
    c_prev = np.zeros((steps, d_h))

    h = np.zeros(d_h)
    c = np.zeros(d_h)
    for t in range(steps):
        h_prev[t] = h
        c_prev[t] = c
        i = expit(projected["i"][t] + p.U_i.value @ h)
        f = expit(projected["f"][t] + p.U_f.value @ h)
        g = np.tanh(projected["c"][t] + p.U_c.value @ h)
        o = expit(projected["o"][t] + p.U_o.value @ h)
        c = f * c + i * g
        h = o * np.tanh(c)
        gates["i"][t], gates["f"][t], gates["c"][t], gates["o"][t] = i, f, g, o
        hs[t] = h
        cs[t] = c
    return hs, _SequenceCache(xs=xs, h_prev=h_prev, c_prev=c_prev, gates=gates, tanh_c=np.tanh(cs))


def lstm_sequence_backward(
    p: LstmParams, cache: _SequenceCache, d_hs: np.ndarray
) -> tuple[np.ndarray, dict[str, np.ndarray]]:
    """Backpropagation through time; returns (d_xs, gradients keyed W_i ... b_o)."""
    steps, d_h = d_hs.shape
    i, f, g, o = (cache.gates[gate] for gate in GATES)
    d_pre = {gate: np.zeros((steps, d_h)) for gate in GATES}
    dh_next = np.zeros(d_h)
    dc_next = np.zeros(d_h)

    for t in reversed(range(steps)):
        dh = d_hs[t] + dh_next
        do = dh * cache.tanh_c[t]
        dc = dh * o[t] * (1.0 - cache.tanh_c[t] ** 2) + dc_next
        d_pre["i"][t] = dc * g[t] * i[t] * (1.0 - i[t])
        d_pre["f"][t] = dc * cache.c_prev[t] * f[t] * (1.0 - f[t])
        d_pre["c"][t] = dc * i[t] * (1.0 - g[t] ** 2)
        d_pre["o"][t] = do * o[t] * (1.0 - o[t])
        dc_next = dc * f[t]
        dh_next = sum(p.U(gate).value.T @ d_pre[gate][t] for gate in GATES)

    grads: dict[str, np.ndarray] = {}
    d_xs = np.zeros_like(cache.xs)
    for gate in GATES:
        grads[f"W_{gate}"] = d_pre[gate].T @ cache.xs
        grads[f"U_{gate}"] = d_pre[gate].T @ cache.h_prev
        grads[f"b_{gate}"] = d_pre[gate].sum(axis=0)
        d_xs += d_pre[gate] @ p.W(gate).value
    return d_xs, grads


def bilstm_forward(fwd: LstmParams, bwd: LstmParams, inputs: np.ndarray) -> np.ndarray:
    """Concatenate the left-to-right and right-to-left hidden states at every position."""
    if fwd.d_h != bwd.d_h or fwd.d_in != bwd.d_in:
        raise ShapeError("Bi-LSTM directions must share d_h and d_in")
    inputs = np.asarray(inputs, dtype=np.float64).reshape(-1, fwd.d_in)
    forward_hs, _ = lstm_sequence_forward(fwd, inputs)
    backward_hs, _ = lstm_sequence_forward(bwd, inputs[::-1])
    return np.concatenate([forward_hs, backward_hs[::-1]], axis=1)
