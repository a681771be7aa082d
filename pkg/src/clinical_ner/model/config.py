from __future__ import annotations

from enum import Enum
from typing import Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

from clinical_ner.features.models import FeatureScheme


class ArchKind(str, Enum):
    BASELINE = "baseline"
    MODEL_I = "model1"
    MODEL_II = "model2"


class ModelConfig(BaseModel):
    """
    Architecture and optimization hyperparameters.

    Defaults follow the published configuration: 128-dim character and feature
    embeddings, 256 hidden units (two parallel 128-unit encoders for model2),
    dropout 0.2 and batches of 128 sentences.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    arch: ArchKind = ArchKind.MODEL_I
    scheme: Optional[FeatureScheme] = FeatureScheme.PDET_EMBED

    d_e: int = Field(default=128, ge=1)
    d_d: int = Field(default=128, ge=1)
    d_h: int = Field(default=256, ge=1)
    d_hx: int = Field(default=128, ge=1)
    d_hd: int = Field(default=128, ge=1)

    dropout: float = Field(default=0.2, ge=0.0, lt=1.0)
    batch_size: int = Field(default=128, ge=1)
    epochs: int = Field(default=20, ge=1)
    seed: int = Field(default=42, ge=0)
    learning_rate: float = Field(default=0.001, gt=0.0)
    # Global gradient-norm threshold; None disables clipping.
    clip: Optional[float] = Field(default=None, gt=0.0)

    @model_validator(mode="after")
    def _check_scheme(self) -> ModelConfig:
        if self.arch is ArchKind.BASELINE and self.scheme is not None:
            raise ValueError("The baseline architecture takes no feature scheme")
        if self.arch is not ArchKind.BASELINE and self.scheme is None:
            raise ValueError(f"Architecture {self.arch.value} requires a feature scheme")
        return self

    @property
    def uses_features(self) -> bool:
        return self.scheme is not None

    @property
    def feature_width(self) -> int:
        return 0 if self.scheme is None else self.scheme.width(self.d_d)

    @property
    def crf_input_width(self) -> int:
        if self.arch is ArchKind.MODEL_II:
            return 2 * self.d_hx + 2 * self.d_hd
        return 2 * self.d_h
