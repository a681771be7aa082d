"""Configuration contracts, schema models, and loader implementations."""

from clinical_ner.config.loader import YamlConfigLoader

__all__ = ["YamlConfigLoader"]
