"""Engine config file handling with flag > file > default precedence."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Mapping

from .decoder import CalibrationMode
from .expansion import ExpansionConfig
from .prompts import PromptConfig

__all__ = ["ConfigError", "load_config_file", "make_expansion_config", "make_prompt_config"]

_EXPANSION_KEYS = {
    "iterations", "permutations", "growth_k", "beam", "target_size",
    "ranking_weight", "rerank_pool", "mu", "calibration_mode",
    "max_class_name_tokens", "normalize_by_suffix", "regenerate_class_name",
    "rng_seed",
}
_PROMPT_KEYS = {
    "demonstrations", "blank_text", "delimiter_text", "demo_separator",
    "allow_classless_fallback",
}
_PROMPT_ALIASES = {"delimiter": "delimiter_text"}


class ConfigError(ValueError):
    pass


def load_config_file(path: str | Path | None) -> dict:
    if path is None:
        return {}
    p = Path(path)
    try:
        payload = json.loads(p.read_text(encoding="utf-8"))
    except OSError as e:
        raise ConfigError(f"cannot read config {p}: {e}") from e
    except json.JSONDecodeError as e:
        raise ConfigError(f"{p}: invalid JSON at line {e.lineno}: {e.msg}") from e
    if not isinstance(payload, dict):
        raise ConfigError(f"{p}: config root must be an object")
    return payload


def make_expansion_config(
    file_cfg: Mapping[str, Any] | None = None,
    overrides: Mapping[str, Any] | None = None,
) -> ExpansionConfig:
    """Merge the config file's "expansion" section with CLI overrides."""
    values: dict[str, Any] = {}
    section = (file_cfg or {}).get("expansion", {})
    if not isinstance(section, Mapping):
        raise ConfigError('"expansion" section must be an object')
    for src in (section, overrides or {}):
        for key, val in src.items():
            if val is None:
                continue
            if key not in _EXPANSION_KEYS:
                raise ConfigError(f"unknown expansion option {key!r}")
            values[key] = val
    if "calibration_mode" in values and not isinstance(
        values["calibration_mode"], CalibrationMode
    ):
        try:
            values["calibration_mode"] = CalibrationMode(values["calibration_mode"])
        except ValueError:
            raise ConfigError(
                f"calibration_mode must be one of "
                f"{[m.value for m in CalibrationMode]}, got {values['calibration_mode']!r}"
            ) from None
    try:
        return ExpansionConfig(**values)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"invalid expansion config: {e}") from e


def make_prompt_config(file_cfg: Mapping[str, Any] | None = None) -> PromptConfig:
    """Build the prompt config from the config file's "prompts" section."""
    section = (file_cfg or {}).get("prompts", {})
    if not isinstance(section, Mapping):
        raise ConfigError('"prompts" section must be an object')
    values: dict[str, Any] = {}
    for key, val in section.items():
        key = _PROMPT_ALIASES.get(key, key)
        if key not in _PROMPT_KEYS:
            raise ConfigError(f"unknown prompts option {key!r}")
        values[key] = val
    if "demonstrations" in values:
        try:
            values["demonstrations"] = tuple(
                (tuple(str(e) for e in ents), str(name))
                for ents, name in values["demonstrations"]
            )
        except (TypeError, ValueError) as e:
            raise ConfigError(
                'demonstrations must be a list of [[entity, ...], "class name"] pairs'
            ) from e
    try:
        return PromptConfig(**values)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"invalid prompts config: {e}") from e
