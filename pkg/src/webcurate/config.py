"""Pipeline configuration: versioned key=value file, strict key checking,
CLI overrides, and per-stage content hashes for checkpoint invalidation."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any, Optional

from .errors import ConfigError

CONFIG_VERSION = 1


@dataclass
class PipelineConfig:
    config_version: int = CONFIG_VERSION

    # stage toggles
    length_filter_enabled: bool = True
    cleanse_enabled: bool = True
    render_enabled: bool = True
    score_enabled: bool = True
    safety_enabled: bool = True
    dedup_enabled: bool = True
    partition_enabled: bool = True
    stats_enabled: bool = True

    # purification
    html_range: tuple[int, int] = (640, 10240)
    css_range: tuple[int, int] = (640, 20480)
    purify_viewport: tuple[int, int] = (1280, 10000)

    # rendering
    viewport_width: int = 1280
    viewport_height: int = 720
    render_backend: str = "static"
    render_pool: int = 1
    timeout_ms: int = 15000
    max_height: int = 40000

    # scoring
    scorer_url: str = ""
    score_threshold: float = 2.0

    # safety
    nsfw_url: str = ""
    nsfw_threshold: float = 0.04
    bad_word_cap: int = 20
    badword_lists: tuple[str, ...] = ()

    # curation
    per_split: int = 256
    seed: int = 17
    embedding_url: str = "local:"
    embedding_threshold: float = 0.96

    # tokenizer assets ("bundled" or a directory holding vocab.json+merges.txt)
    bpe_dir: str = "bundled"

    # annotation store (human consensus overrides model scores when present)
    annotation_store: str = ""

    def stage_params(self) -> dict[str, dict[str, Any]]:
        """Parameters relevant to each stage, for checkpoint hashing."""
        return {
            "length_filter": {
                "enabled": self.length_filter_enabled,
                "html_range": list(self.html_range),
                "css_range": list(self.css_range),
            },
            "cleanse": {
                "enabled": self.cleanse_enabled,
                "viewport": list(self.purify_viewport),
            },
            "render": {
                "enabled": self.render_enabled,
                "viewport_width": self.viewport_width,
                "viewport_height": self.viewport_height,
                "backend": self.render_backend,
                "max_height": self.max_height,
            },
            "score": {
                "enabled": self.score_enabled,
                "url": self.scorer_url,
                "threshold": self.score_threshold,
                "store": self.annotation_store,
            },
            "safety": {
                "enabled": self.safety_enabled,
                "nsfw_url": self.nsfw_url,
                "nsfw_threshold": self.nsfw_threshold,
                "bad_word_cap": self.bad_word_cap,
                "lists": list(self.badword_lists),
            },
            "dedup": {
                "enabled": self.dedup_enabled,
                "embedding_url": self.embedding_url,
                "threshold": self.embedding_threshold,
            },
            "partition": {
                "enabled": self.partition_enabled,
                "per_split": self.per_split,
                "seed": self.seed,
            },
            "stats": {"enabled": self.stats_enabled, "bpe": self.bpe_dir},
        }

    def stage_hashes(self) -> dict[str, str]:
        """Chained content hashes: a parameter change invalidates that stage
        and everything downstream, nothing upstream."""
        hashes: dict[str, str] = {}
        upstream = f"v{self.config_version}"
        for stage, params in self.stage_params().items():
            blob = json.dumps({"stage": stage, "params": params, "upstream": upstream}, sort_keys=True)
            digest = hashlib.sha256(blob.encode()).hexdigest()[:16]
            hashes[stage] = digest
            upstream = digest
        return hashes


_FIELD_TYPES = {f.name: f.type for f in fields(PipelineConfig)}


def _parse_value(key: str, raw: str) -> Any:
    raw = raw.strip()
    if key in ("html_range", "css_range", "purify_viewport"):
        sep = ":" if ":" in raw else "x"
        lo, _, hi = raw.partition(sep)
        return (int(lo), int(hi))
    if key == "badword_lists":
        return tuple(p.strip() for p in raw.split(",") if p.strip())
    declared = _FIELD_TYPES.get(key, "str")
    if declared == "bool" or key.endswith("_enabled"):
        if raw.lower() in ("true", "1", "yes", "on"):
            return True
        if raw.lower() in ("false", "0", "no", "off"):
            return False
        raise ConfigError(f"{key}: expected boolean, got {raw!r}")
    if declared == "int":
        return int(raw)
    if declared == "float":
        return float(raw)
    return raw


def load_config(path: Optional[str | Path] = None, overrides: Optional[dict[str, Any]] = None) -> PipelineConfig:
    """Key = value file (# comments), unknown keys rejected, overrides win."""
    values: dict[str, Any] = {}
    if path is not None:
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        for line_no, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{line_no}: expected key = value")
            key, _, raw = line.partition("=")
            key = key.strip().replace(".", "_").replace("-", "_")
            if key not in _FIELD_TYPES:
                raise ConfigError(f"{path}:{line_no}: unknown key {key!r}")
            values[key] = _parse_value(key, raw)
    version = values.get("config_version", CONFIG_VERSION)
    if version != CONFIG_VERSION:
        raise ConfigError(f"unsupported config_version {version}, wanted {CONFIG_VERSION}")
    for key, value in (overrides or {}).items():
        if value is None:
            continue
        if key not in _FIELD_TYPES:
            raise ConfigError(f"unknown config key {key!r}")
        values[key] = _parse_value(key, value) if isinstance(value, str) else value
    try:
        return PipelineConfig(**values)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
