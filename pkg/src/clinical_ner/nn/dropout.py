from __future__ import annotations

from enum import Enum
from typing import Optional

import numpy as np


class Mode(str, Enum):
    TRAIN = "train"
    EVAL = "eval"


def dropout_mask(shape: tuple[int, ...], rate: float, rng: np.random.Generator) -> np.ndarray:
    """Inverted-dropout mask: kept entries are scaled by 1 / (1 - rate)."""
    if not 0.0 <= rate < 1.0:
        raise ValueError(f"Dropout rate must be in [0, 1): {rate}")
    if rate == 0.0:
        return np.ones(shape)
    keep = rng.random(shape) >= rate
    return keep / (1.0 - rate)


def dropout_forward(
    x: np.ndarray, rate: float, mode: Mode, rng: Optional[np.random.Generator] = None
) -> np.ndarray:
    if mode is Mode.EVAL or rate == 0.0:
        return np.asarray(x, dtype=np.float64)
    if rng is None:
        raise ValueError("Training-mode dropout needs a random generator")
    return x * dropout_mask(x.shape, rate, rng)
