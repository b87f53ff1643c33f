"""Service configuration: holonsim.toml plus HOLONSIM_* environment overrides."""

from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import tomli


class ConfigError(Exception):
    pass


@dataclass
class Config:
    port: int = 8000
    ticks_per_second: float = 2.0
    reasoner_backend: str = "mock"  # mock | remote
    remote_url: Optional[str] = None
    remote_budget: float = 5.0  # seconds per remote reasoner call
    approval_timeout: Optional[int] = None  # overrides scenario limit when set


# env var name -> (config field, caster)
_ENV_FIELDS = {
    "HOLONSIM_PORT": ("port", int),
    "HOLONSIM_TICKS_PER_SECOND": ("ticks_per_second", float),
    "HOLONSIM_REASONER_BACKEND": ("reasoner_backend", str),
    "HOLONSIM_REMOTE_URL": ("remote_url", str),
    "HOLONSIM_REMOTE_BUDGET": ("remote_budget", float),
    "HOLONSIM_APPROVAL_TIMEOUT": ("approval_timeout", int),
}

_FILE_FIELDS = {field: caster for field, caster in _ENV_FIELDS.values()}


def _flatten(doc: dict, prefix: str = ""):
    """Yield (joined_key, leaf) pairs; nested tables map onto field names."""
    for key, value in doc.items():
        joined = f"{prefix}_{key}" if prefix else key
        if isinstance(value, dict):
            yield from _flatten(value, joined)
        else:
            yield joined, value


def load_config(path: Optional[str | Path] = None, env: Optional[dict] = None) -> Config:
    """Read holonsim.toml (if present) and apply environment overrides on top."""
    env = os.environ if env is None else env
    config = Config()
    candidates = [Path(path)] if path else [Path("holonsim.toml")]
    for candidate in candidates:
        if not candidate.exists():
            if path:
                raise ConfigError(f"config file not found: {candidate}")
            continue
        try:
            doc = tomli.loads(candidate.read_text())
        except tomli.TOMLDecodeError as exc:
            raise ConfigError(f"{candidate}: {exc}") from exc
        for key, value in _flatten(doc):
            if key not in _FILE_FIELDS:
                raise ConfigError(f"{candidate}: unknown key {key!r}")
            try:
                setattr(config, key, _FILE_FIELDS[key](value))
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"{candidate}: bad value for {key!r}: {exc}") from exc
    for var, (field_name, caster) in _ENV_FIELDS.items():
        raw = env.get(var)
        if raw is None or raw == "":
            continue
        try:
            setattr(config, field_name, caster(raw))
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"{var}: bad value {raw!r}: {exc}") from exc
    if config.reasoner_backend not in ("mock", "remote"):
        raise ConfigError(f"unknown reasoner backend {config.reasoner_backend!r}")
    if config.reasoner_backend == "remote" and not config.remote_url:
        raise ConfigError("reasoner backend 'remote' needs remote_url")
    if config.ticks_per_second <= 0:
        raise ConfigError("ticks_per_second must be positive")
    return config
