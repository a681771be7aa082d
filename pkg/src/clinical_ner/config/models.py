from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from pydantic import BaseModel, ConfigDict, Field

from clinical_ner.model.config import ModelConfig


class FileRotationSettings(BaseModel):
    """
    Date-based rotation settings (daily).

    This maps cleanly to Python's standard library TimedRotatingFileHandler behavior.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    backup_count: int = 7


class FileLoggingSettings(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    path: str = ""
    rotation: FileRotationSettings = FileRotationSettings()


class LoggingSettings(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    level: str = "INFO"
    file: FileLoggingSettings = FileLoggingSettings()


class CorpusSettings(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    # Clause punctuation; a clause keeps its closing delimiter.
    clause_delimiters: str = Field(default="，、；。！？", min_length=1)
    # Applied identically at train and tag time.
    split_clauses: bool = True


class TrainingSettings(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    dev_split: float = Field(default=0.0, ge=0.0, lt=1.0)
    # Epochs without dev F1 improvement before stopping; 0 disables early stopping.
    patience: int = Field(default=0, ge=0)

    adam_beta1: float = Field(default=0.9, ge=0.0, lt=1.0)
    adam_beta2: float = Field(default=0.999, ge=0.0, lt=1.0)
    adam_epsilon: float = Field(default=1e-8, gt=0.0)

    metrics_log: str = ""


class DecodingSettings(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    mask_invalid_transitions: bool = False


class SweepSettings(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    concurrency: int = Field(default=1, ge=1)


class AppConfig(BaseModel):
    """Effective runtime configuration after applying all precedence rules."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    logging: LoggingSettings = LoggingSettings()
    corpus: CorpusSettings = CorpusSettings()
    model: ModelConfig = ModelConfig()
    training: TrainingSettings = TrainingSettings()
    decoding: DecodingSettings = DecodingSettings()
    sweep: SweepSettings = SweepSettings()


@dataclass(frozen=True, slots=True)
class ConfigLoadRequest:
    """
    Optional inputs for a configuration loader.

    Implementations may use these to control where configuration is read from.
    """

    yaml_path: str = "data/config/config.yaml"
    env_prefix: str = "APP__"
    dotenv_path: Optional[str] = "data/.env"
