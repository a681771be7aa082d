from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Optional

import numpy as np

from clinical_ner.nn.autodiff import Parameter


@dataclass(slots=True)
class AdamState:
    """First and second moment estimates per parameter name, plus the step counter."""

    lr: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    t: int = 0
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)


def adam_update(
    params: Mapping[str, Parameter], grads: Mapping[str, np.ndarray], state: AdamState
) -> None:
    """One bias-corrected Adam step applied in place to every parameter with a gradient."""
    state.t += 1
    correction1 = 1.0 - state.beta1**state.t
    correction2 = 1.0 - state.beta2**state.t
    for name, grad in grads.items():
        param = params[name]
        if name not in state.m:
            state.m[name] = np.zeros_like(param.value)
            state.v[name] = np.zeros_like(param.value)
        m = state.m[name]
        v = state.v[name]
        m *= state.beta1
        m += (1.0 - state.beta1) * grad
        v *= state.beta2
        v += (1.0 - state.beta2) * grad * grad
        m_hat = m / correction1
        v_hat = v / correction2
        param.value -= state.lr * m_hat / (np.sqrt(v_hat) + state.epsilon)


def global_norm(grads: Mapping[str, np.ndarray]) -> float:
    return float(np.sqrt(sum(float(np.sum(g * g)) for g in grads.values())))


def clip_grad_norm(grads: dict[str, np.ndarray], max_norm: Optional[float]) -> float:
    """Rescale all gradients in place when their global L2 norm exceeds max_norm; returns the pre-clip norm."""
    norm = global_norm(grads)
    if max_norm is not None and norm > max_norm > 0:
        scale = max_norm / norm
        for g in grads.values():
            g *= scale
    return norm
