"""
Versioned plain-text model files.

Layout, one record per line:

    clinical-ner-model 1
    meta {"config": {...}, "dictionary_fingerprint": "..."}
    vocab ["字", ...]
    tensor <name> <dim> [<dim>]
    <row of space-separated floats>
    ...
    end

Floats are written with repr, which round-trips float64 exactly.
"""

from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Iterator

import numpy as np
from pydantic import ValidationError

from clinical_ner.corpus.models import Vocabulary
from clinical_ner.model.config import ModelConfig
from clinical_ner.model.tagger import TaggerModel, build_model
from clinical_ner.utils import atomic_write_text

logger = logging.getLogger(__name__)

MAGIC = "clinical-ner-model"
FORMAT_VERSION = 1


class ModelFileError(ValueError):
    pass


def _format_row(values: np.ndarray) -> str:
    return " ".join(repr(float(v)) for v in values)


def format_model(model: TaggerModel) -> str:
    meta = {
        "config": model.config.model_dump(mode="json"),
        "dictionary_fingerprint": model.dictionary_fingerprint,
    }
    lines = [
        f"{MAGIC} {FORMAT_VERSION}",
        "meta " + json.dumps(meta, sort_keys=True, ensure_ascii=False),
        "vocab " + json.dumps(list(model.vocab.real_tokens()), ensure_ascii=False),
    ]
    for name, param in model.parameters().items():
        value = param.value
        lines.append(f"tensor {name} " + " ".join(str(d) for d in value.shape))
        if value.ndim == 1:
            lines.append(_format_row(value))
        else:
            lines.extend(_format_row(row) for row in value)
    lines.append("end")
    return "\n".join(lines) + "\n"


def save_model(model: TaggerModel, path: str | Path) -> None:
    atomic_write_text(Path(path), format_model(model))
    logger.info("Saved model. path=%s tensors=%s", path, len(model.parameters()))


def _parse_row(line: str, width: int, line_number: int) -> np.ndarray:
    fields = line.split()
    if len(fields) != width:
        raise ModelFileError(f"Line {line_number}: expected {width} values, got {len(fields)}")
    try:
        return np.array([float(v) for v in fields], dtype=np.float64)
    except ValueError as e:
        raise ModelFileError(f"Line {line_number}: {e}") from e


def _tagged(lines: Iterator[tuple[int, str]], keyword: str) -> tuple[int, str]:
    try:
        line_number, line = next(lines)
    except StopIteration:
        raise ModelFileError(f"Truncated model file: expected '{keyword}'") from None
    head, _, rest = line.partition(" ")
    if head != keyword:
        raise ModelFileError(f"Line {line_number}: expected '{keyword}', got {head!r}")
    return line_number, rest


def parse_model(text: str) -> TaggerModel:
    lines = iter(enumerate(text.split("\n"), start=1))

    _, version = _tagged(lines, MAGIC)
    if version.strip() != str(FORMAT_VERSION):
        raise ModelFileError(f"Unsupported model file version {version.strip()!r}, expected {FORMAT_VERSION}")

    line_number, meta_text = _tagged(lines, "meta")
    try:
        meta = json.loads(meta_text)
        config = ModelConfig.model_validate(meta["config"])
        dictionary_fingerprint = str(meta.get("dictionary_fingerprint", ""))
    except (json.JSONDecodeError, KeyError, TypeError, ValidationError) as e:
        raise ModelFileError(f"Line {line_number}: invalid model metadata: {e}") from e

    line_number, vocab_text = _tagged(lines, "vocab")
    try:
        tokens = json.loads(vocab_text)
    except json.JSONDecodeError as e:
        raise ModelFileError(f"Line {line_number}: invalid vocabulary: {e}") from e
    if not isinstance(tokens, list) or len(set(tokens)) != len(tokens):
        raise ModelFileError(f"Line {line_number}: vocabulary must be a list of distinct tokens")
    vocab = Vocabulary.from_chars(tokens)

    # Shapes implied by the declared config; random init is overwritten below.
    model = build_model(config, vocab, np.random.default_rng(0))
    params = model.parameters()
    loaded: set[str] = set()

    while True:
        try:
            line_number, line = next(lines)
        except StopIteration:
            raise ModelFileError("Truncated model file: missing 'end'") from None
        if line == "end":
            break
        head, _, rest = line.partition(" ")
        if head != "tensor":
            raise ModelFileError(f"Line {line_number}: expected 'tensor' or 'end', got {head!r}")
        fields = rest.split()
        if not fields:
            raise ModelFileError(f"Line {line_number}: tensor record without a name")
        name = fields[0]
        if name not in params:
            raise ModelFileError(f"Line {line_number}: unknown tensor {name!r} for a {config.arch.value} model")
        if name in loaded:
            raise ModelFileError(f"Line {line_number}: tensor {name!r} appears twice")
        try:
            shape = tuple(int(d) for d in fields[1:])
        except ValueError as e:
            raise ModelFileError(f"Line {line_number}: invalid tensor dimensions") from e
        expected = params[name].value.shape
        if shape != expected:
            raise ModelFileError(
                f"Line {line_number}: tensor {name!r} declares shape {shape}, config implies {expected}"
            )

        if len(shape) == 1:
            row_number, row = next(lines, (line_number + 1, ""))
            values = _parse_row(row, shape[0], row_number)
        else:
            values = np.empty(shape)
            for r in range(shape[0]):
                row_number, row = next(lines, (line_number + r + 1, ""))
                values[r] = _parse_row(row, shape[1], row_number)
        params[name].value[...] = values
        loaded.add(name)

    missing = [name for name in params if name not in loaded]
    if missing:
        raise ModelFileError(f"Model file is missing tensors: {', '.join(missing)}")
    model.dictionary_fingerprint = dictionary_fingerprint
    return model


def load_model(path: str | Path) -> TaggerModel:
    with open(path, "r", encoding="utf-8") as f:
        model = parse_model(f.read())
    logger.info(
        "Loaded model. path=%s arch=%s scheme=%s vocab=%s",
        path,
        model.config.arch.value,
        model.config.scheme.value if model.config.scheme else None,
        model.vocab.size,
    )
    return model
