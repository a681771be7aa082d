from __future__ import annotations

from typing import Callable, Iterable, Mapping, Optional

import numpy as np


class ShapeError(ValueError):
    pass


def check_shape(name: str, array: np.ndarray, expected: tuple[int, ...]) -> None:
    if array.shape != expected:
        raise ShapeError(f"{name} has shape {array.shape}, expected {expected}")


class Variable:
    """A float64 value with an adjoint that is allocated on first accumulation."""

    __slots__ = ("value", "grad")

    def __init__(self, value: np.ndarray | float) -> None:
        self.value = np.asarray(value, dtype=np.float64)
        self.grad: Optional[np.ndarray] = None

    @property
    def shape(self) -> tuple[int, ...]:
        return self.value.shape

    def accumulate(self, grad: np.ndarray) -> None:
        if self.grad is None:
            self.grad = np.zeros_like(self.value)
        self.grad += grad


class Parameter(Variable):
    __slots__ = ("name",)

    def __init__(self, name: str, value: np.ndarray) -> None:
        super().__init__(value)
        self.name = name

    def zero_grad(self) -> None:
        self.grad = None

    def __repr__(self) -> str:
        return f"Parameter(name={self.name!r}, shape={self.value.shape})"


class Tape:
    """
    Records one backward closure per op in execution order.

    A disabled tape records nothing, so a forward pass run under it is detached and
    leaves every gradient at zero.
    """

    def __init__(self, enabled: bool = True) -> None:
        self.enabled = enabled
        self._backward_fns: list[Callable[[], None]] = []

    def record(self, backward_fn: Callable[[], None]) -> None:
        if self.enabled:
            self._backward_fns.append(backward_fn)

    def __len__(self) -> int:
        return len(self._backward_fns)

    def backward(self, loss: Variable) -> None:
        if loss.value.size != 1:
            raise ShapeError(f"Backward needs a scalar loss, got shape {loss.value.shape}")
        loss.accumulate(np.ones_like(loss.value))
        for backward_fn in reversed(self._backward_fns):
            backward_fn()
        self._backward_fns.clear()


def compute_gradients(tape: Tape, loss: Variable, params: Iterable[Parameter]) -> dict[str, np.ndarray]:
    """Run reverse mode from the loss; parameters the loss does not reach get zero gradients."""
    params = list(params)
    tape.backward(loss)
    return {p.name: p.grad.copy() if p.grad is not None else np.zeros_like(p.value) for p in params}


def zero_grads(params: Iterable[Parameter]) -> None:
    for param in params:
        param.zero_grad()


def collect_grads(params: Iterable[Parameter]) -> dict[str, np.ndarray]:
    return {p.name: p.grad if p.grad is not None else np.zeros_like(p.value) for p in params}


def snapshot(params: Mapping[str, Parameter]) -> dict[str, np.ndarray]:
    return {name: param.value.copy() for name, param in params.items()}


def restore(params: Mapping[str, Parameter], values: Mapping[str, np.ndarray]) -> None:
    for name, value in values.items():
        params[name].value[...] = value
