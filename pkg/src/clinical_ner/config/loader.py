"""
Build one validated AppConfig from config.yaml, an optional .env file and APP__ variables.

Later sources win: YAML, then .env (never overwriting the process environment), then
the environment itself. Command-line flags are applied on top by the CLI.
"""

from __future__ import annotations

import logging
import os
import shutil
from pathlib import Path
from typing import Any, MutableMapping, Sequence

from clinical_ner.config.models import AppConfig, ConfigLoadRequest

logger = logging.getLogger(__name__)

EXAMPLE_CONFIG_PATH = Path("config.example.yaml")
NULL_LITERALS = frozenset({"null", "none", "~"})


def _read_yaml_config(path: Path) -> dict[str, Any]:
    """Parsed YAML sections; {} when neither the file nor the example exists, or the file is empty."""
    try:
        import yaml  # type: ignore[import-not-found]
    except ModuleNotFoundError as e:  # pragma: no cover
        raise ModuleNotFoundError("PyYAML is needed to read config.yaml. Install 'PyYAML'.") from e

    if not path.exists():
        _seed_from_example(path)
    if not path.exists():
        return {}

    sections = yaml.safe_load(path.read_text(encoding="utf-8"))
    if sections is None:
        return {}
    if not isinstance(sections, dict):
        raise ValueError(f"{path} must hold a mapping of config sections, found {type(sections).__name__}")
    return sections


def _seed_from_example(target: Path) -> None:
    if not EXAMPLE_CONFIG_PATH.exists():
        return
    target.parent.mkdir(parents=True, exist_ok=True)
    shutil.copyfile(EXAMPLE_CONFIG_PATH, target)
    logger.info("Created config from example. path=%s", target)


def _load_dotenv(dotenv_path: Path) -> None:
    try:
        from dotenv import load_dotenv  # type: ignore[import-not-found]
    except ModuleNotFoundError as e:  # pragma: no cover
        raise ModuleNotFoundError("python-dotenv is needed to read .env files. Install 'python-dotenv'.") from e

    if dotenv_path.exists():
        load_dotenv(dotenv_path=dotenv_path, override=False)


def _override_path(name: str, prefix: str) -> Sequence[str]:
    """APP__MODEL__EPOCHS -> ("model", "epochs")."""
    segments = [part.lower() for part in name[len(prefix) :].split("__") if part]
    if not segments:
        raise ValueError(f"Environment override {name} names no config key")
    return segments


def _section_for(config: MutableMapping[str, Any], path: Sequence[str]) -> MutableMapping[str, Any]:
    """The mapping that holds the last key of path, created on the way down where missing."""
    section = config
    for key in path[:-1]:
        child = section.get(key)
        if child is None:
            child = section[key] = {}
        if not isinstance(child, dict):
            raise ValueError(f"Environment override {'.'.join(path)} runs through non-mapping key {key}")
        section = child
    return section


def _env_value(raw: str) -> Any:
    # Optional fields such as model.scheme and model.clip are cleared with "null".
    return None if raw.strip().lower() in NULL_LITERALS else raw


def _apply_env_overrides(config: MutableMapping[str, Any], env_prefix: str) -> None:
    """Write every prefixed variable into config as a string; pydantic coerces it on validation."""
    for name, value in os.environ.items():
        if not name.startswith(env_prefix):
            continue
        path = _override_path(name, env_prefix)
        _section_for(config, path)[path[-1]] = _env_value(value)
        logger.debug("Applied environment override. key=%s", ".".join(path))


class YamlConfigLoader:
    async def load(self, request: ConfigLoadRequest = ConfigLoadRequest()) -> AppConfig:
        config = _read_yaml_config(Path(request.yaml_path))
        if request.dotenv_path is not None:
            _load_dotenv(Path(request.dotenv_path))
        _apply_env_overrides(config, request.env_prefix)
        return AppConfig.model_validate(config)
