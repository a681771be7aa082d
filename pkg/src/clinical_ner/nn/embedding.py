from __future__ import annotations

import numpy as np

from clinical_ner.nn.autodiff import Parameter


class EmbeddingIndexError(ValueError):
    pass


def init_embedding(name: str, rows: int, dim: int, rng: np.random.Generator) -> Parameter:
    """Uniform +-sqrt(3 / dim) rows, so each entry has unit-scale variance 1 / dim."""
    bound = np.sqrt(3.0 / dim)
    return Parameter(name, rng.uniform(-bound, bound, size=(rows, dim)))


def embed_lookup(table: np.ndarray, indices: np.ndarray) -> np.ndarray:
    """Gather rows of the table; an index outside [0, rows) is an error, never clipped."""
    indices = np.asarray(indices, dtype=np.int64)
    if indices.size and (indices.min() < 0 or indices.max() >= table.shape[0]):
        bad = indices[(indices < 0) | (indices >= table.shape[0])][0]
        raise EmbeddingIndexError(f"Embedding index {int(bad)} out of range for table with {table.shape[0]} rows")
    return table[indices]
