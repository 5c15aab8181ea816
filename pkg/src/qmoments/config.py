"""Key = value configuration with environment and flag overrides.

Precedence: command-line flags > config file > QML_CACHE_DIR environment
variable (cache location only) > built-in defaults.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, replace
from pathlib import Path

_DEFAULT_CACHE = Path.home() / ".cache" / "qmoments"

_KEYS = ("sieve_limit", "workers", "precision_digits", "cache_dir")


@dataclass(frozen=True)
class Config:
    sieve_limit: int = 1_000_000
    workers: int = max(1, min(4, os.cpu_count() or 1))
    precision_digits: int = 40
    cache_dir: Path = _DEFAULT_CACHE


def load_config(path: str | os.PathLike | None = None) -> Config:
    """Parse a `key = value` file (missing path gives defaults), then
    apply QML_CACHE_DIR if set."""
    cfg = Config()
    if path is not None:
        raw = {}
        for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected 'key = value', got {line!r}")
            key, _, value = line.partition("=")
            key = key.strip()
            if key not in _KEYS:
                raise ValueError(f"{path}:{lineno}: unknown key {key!r}")
            raw[key] = value.strip()
        if "sieve_limit" in raw:
            cfg = replace(cfg, sieve_limit=int(raw["sieve_limit"]))
        if "workers" in raw:
            cfg = replace(cfg, workers=int(raw["workers"]))
        if "precision_digits" in raw:
            cfg = replace(cfg, precision_digits=int(raw["precision_digits"]))
        if "cache_dir" in raw:
            cfg = replace(cfg, cache_dir=Path(raw["cache_dir"]))
    env_cache = os.environ.get("QML_CACHE_DIR")
    if env_cache:
        cfg = replace(cfg, cache_dir=Path(env_cache))
    return cfg
