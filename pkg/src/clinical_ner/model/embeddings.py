from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable, Optional

import numpy as np

from clinical_ner.features.models import PDET_LABELS, PIET_LABELS
from clinical_ner.model.tagger import TaggerModel

logger = logging.getLogger(__name__)


class EmbeddingFileError(ValueError):
    def __init__(self, line_number: int, message: str) -> None:
        super().__init__(f"Embedding file line {line_number}: {message}")
        self.line_number = line_number


class EmbeddingTarget(str, Enum):
    CHAR = "char"
    FEATURE = "feature"


@dataclass(frozen=True, slots=True)
class EmbeddingLoadReport:
    target: EmbeddingTarget
    loaded: int
    total: int

    @property
    def coverage(self) -> float:
        return self.loaded / self.total if self.total else 0.0


def _row_index(model: TaggerModel, target: EmbeddingTarget) -> dict[str, int]:
    """Token -> table row for the rows a file may overwrite."""
    if target is EmbeddingTarget.CHAR:
        return {token: model.vocab.lookup(token) for token in model.vocab.real_tokens()}
    scheme = model.config.scheme
    if scheme is None or not scheme.is_embedding:
        raise ValueError("Model has no feature embedding table")
    labels = PIET_LABELS if scheme.family == "piet" else PDET_LABELS
    return {str(label): label.index for label in labels}


def load_pretrained_embeddings(
    model: TaggerModel,
    stream: Iterable[str],
    target: EmbeddingTarget = EmbeddingTarget.CHAR,
) -> EmbeddingLoadReport:
    """
    Overwrite table rows from a text embedding file: a `<count> <dim>` header, then
    `<token> <f1> ... <fdim>` per line. Tokens outside the table are skipped and rows
    the file does not list keep their current values.
    """
    table = model.char_embedding if target is EmbeddingTarget.CHAR else model.feature_embedding
    rows = _row_index(model, target)
    assert table is not None
    dim = table.value.shape[1]

    lines = iter(stream)
    header = next(lines, None)
    if header is None or not header.strip():
        logger.info("Embedding file is empty. target=%s", target.value)
        return EmbeddingLoadReport(target=target, loaded=0, total=len(rows))

    header_fields = header.split()
    if len(header_fields) != 2 or not all(f.isdigit() for f in header_fields):
        raise EmbeddingFileError(1, f"expected '<count> <dim>' header, got {header.strip()!r}")
    declared_dim = int(header_fields[1])
    if declared_dim != dim:
        raise EmbeddingFileError(1, f"dimension {declared_dim} does not match table width {dim}")

    updates: dict[int, np.ndarray] = {}
    for line_number, line in enumerate(lines, start=2):
        if not line.strip():
            continue
        fields = line.split()
        if len(fields) != dim + 1:
            raise EmbeddingFileError(line_number, f"expected a token and {dim} values, got {len(fields)} fields")
        try:
            vector = np.array([float(v) for v in fields[1:]], dtype=np.float64)
        except ValueError as e:
            raise EmbeddingFileError(line_number, str(e)) from e
        row = rows.get(fields[0])
        if row is None:
            continue
        updates[row] = vector

    for row, vector in updates.items():
        table.value[row] = vector
    report = EmbeddingLoadReport(target=target, loaded=len(updates), total=len(rows))
    logger.info(
        "Loaded pretrained embeddings. target=%s rows=%s coverage=%.4f",
        target.value,
        report.loaded,
        report.coverage,
    )
    return report


@dataclass(frozen=True, slots=True)
class PretrainedEmbeddings:
    char_path: Optional[Path] = None
    feature_path: Optional[Path] = None

    def apply(self, model: TaggerModel) -> list[EmbeddingLoadReport]:
        reports: list[EmbeddingLoadReport] = []
        for path, target in ((self.char_path, EmbeddingTarget.CHAR), (self.feature_path, EmbeddingTarget.FEATURE)):
            if path is None:
                continue
            with open(path, "r", encoding="utf-8") as f:
                reports.append(load_pretrained_embeddings(model, f, target))
        return reports
