"""Tagger architectures, training, inference and model files."""

from __future__ import annotations

from typing import TYPE_CHECKING

from clinical_ner.model.config import ArchKind, ModelConfig

if TYPE_CHECKING:
    from clinical_ner.model.inference import TaggedSentence, tag, tag_sentences
    from clinical_ner.model.serialization import ModelFileError, load_model, save_model
    from clinical_ner.model.tagger import TaggerModel, build_model
    from clinical_ner.model.training import TrainingResult, train

__all__ = [
    "ArchKind",
    "ModelConfig",
    "ModelFileError",
    "TaggedSentence",
    "TaggerModel",
    "TrainingResult",
    "build_model",
    "load_model",
    "save_model",
    "tag",
    "tag_sentences",
    "train",
]

_LAZY = {
    "TaggedSentence": "clinical_ner.model.inference",
    "tag": "clinical_ner.model.inference",
    "tag_sentences": "clinical_ner.model.inference",
    "ModelFileError": "clinical_ner.model.serialization",
    "load_model": "clinical_ner.model.serialization",
    "save_model": "clinical_ner.model.serialization",
    "TaggerModel": "clinical_ner.model.tagger",
    "build_model": "clinical_ner.model.tagger",
    "TrainingResult": "clinical_ner.model.training",
    "train": "clinical_ner.model.training",
}


def __getattr__(name: str):
    # Deferred so that clinical_ner.config can import ModelConfig without pulling in training.
    module_name = _LAZY.get(name)
    if module_name is None:
        raise AttributeError(name)
    import importlib

    return getattr(importlib.import_module(module_name), name)
