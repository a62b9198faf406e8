"""Run configuration loading.

Supports:
- Config file (TOML with [model], [train] and [generator] sections)
- Command-line overrides (``key=value`` or ``section.key=value``)
- Environment variable EDAG_SEED as the seed fallback
"""

from __future__ import annotations

import difflib
import os
import sys
from pathlib import Path
from typing import Any

from pydantic import BaseModel, ValidationError

from doc2edag.exceptions import ConfigError
from doc2edag.models.corpus import GeneratorConfig
from doc2edag.models.run import ModelConfig, RunConfig, TrainConfig

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib


SEED_ENV = "EDAG_SEED"

SECTIONS: dict[str, type[BaseModel]] = {
    "model": ModelConfig,
    "train": TrainConfig,
    "generator": GeneratorConfig,
}


def _suggest(word: str, options: list[str]) -> str | None:
    matches = difflib.get_close_matches(word, options, n=1, cutoff=0.5)
    return matches[0] if matches else None


def _unknown(kind: str, name: str, options: list[str]) -> ConfigError:
    suggestion = _suggest(name, options)
    hint = f"; did you mean '{suggestion}'?" if suggestion else ""
    return ConfigError(f"unknown {kind} '{name}'{hint}", key=name, suggestion=suggestion)


def parse_value(raw: str) -> Any:
    """Read an override value as a TOML scalar, falling back to a plain string."""
    try:
        return tomllib.loads(f"v = {raw}")["v"]
    except tomllib.TOMLDecodeError:
        return raw


def parse_override(item: str) -> tuple[str, Any]:
    key, sep, raw = item.partition("=")
    if not sep or not key.strip():
        raise ConfigError(f"override '{item}' is not of the form key=value", key=item)
    return key.strip(), parse_value(raw.strip())


def read_config_file(path: Path) -> dict[str, dict[str, Any]]:
    """Read and key-check a config document."""
    try:
        with open(path, "rb") as f:
            data = tomllib.load(f)
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from e
    except tomllib.TOMLDecodeError as e:
        raise ConfigError(f"config {path} is not valid TOML: {e}") from e

    for section, values in data.items():
        if section not in SECTIONS:
            raise _unknown("section", section, list(SECTIONS))
        if not isinstance(values, dict):
            raise ConfigError(f"[{section}] must be a table", key=section)
        fields = list(SECTIONS[section].model_fields)
        for key in values:
            if key not in fields:
                raise _unknown("key", f"{key}", fields)
    return data


def _apply_override(layers: dict[str, dict[str, Any]], key: str, value: Any) -> None:
    if "." in key:
        section, _, name = key.partition(".")
        if section not in SECTIONS:
            raise _unknown("section", section, list(SECTIONS))
        if name not in SECTIONS[section].model_fields:
            raise _unknown("key", name, list(SECTIONS[section].model_fields))
        layers[section][name] = value
        return
    owners = [s for s, model in SECTIONS.items() if key in model.model_fields]
    if not owners:
        every = sorted({f for model in SECTIONS.values() for f in model.model_fields})
        raise _unknown("key", key, every)
    for section in owners:
        layers[section][key] = value


def load_config(
    path: Path | None = None,
    overrides: list[str] | None = None,
) -> RunConfig:
    """Resolve a run configuration.

    Precedence: overrides > file > EDAG_SEED > defaults. A bare override key
    applies to every section that defines it (``seed`` sets both the
    training and generator seeds).

    Raises:
        ConfigError: Unreadable file, unknown key or section, or a value
            that fails validation.
    """
    layers: dict[str, dict[str, Any]] = {name: {} for name in SECTIONS}

    env_seed = os.getenv(SEED_ENV)
    if env_seed:
        try:
            seed = int(env_seed)
        except ValueError:
            raise ConfigError(f"{SEED_ENV} must be an integer, got {env_seed!r}", key=SEED_ENV) from None
        layers["train"]["seed"] = seed
        layers["generator"]["seed"] = seed

    if path is not None:
        for section, values in read_config_file(path).items():
            layers[section].update(values)

    for item in overrides or []:
        key, value = parse_override(item)
        _apply_override(layers, key, value)

    try:
        return RunConfig(
            model=ModelConfig(**layers["model"]),
            train=TrainConfig(**layers["train"]),
            generator=GeneratorConfig(**layers["generator"]),
        )
    except ValidationError as e:
        first = e.errors()[0]
        loc = ".".join(str(part) for part in first["loc"]) or None
        raise ConfigError(f"invalid configuration: {first['msg']} ({loc})", key=loc) from e


def config_to_dict(config: RunConfig) -> dict[str, Any]:
    """TOML-ready view of a resolved configuration (None values dropped)."""
    return config.model_dump(mode="json", exclude_none=True)


def save_config(config: RunConfig, path: Path) -> None:
    """Write a resolved configuration as TOML."""
    import tomli_w

    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as f:
        tomli_w.dump(config_to_dict(config), f)


def config_to_toml(config: RunConfig) -> str:
    import tomli_w

    return tomli_w.dumps(config_to_dict(config))
