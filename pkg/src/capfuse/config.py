"""Run configuration: JSON file, environment overrides, content hash."""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass, field
from typing import Mapping

from .errors import ConfigError
from .fuser import DEFAULT_PROMPT_TEMPLATE, DEFAULT_STRIP_PREFIXES

ENV_PREFIX = "CAPFUSE_"


@dataclass
class PathsConfig:
    corpus: str = ""
    candidates: str = ""
    out_dir: str = "out"
    votes_log: str = ""


@dataclass
class ScorerSection:
    backend: str = "file"
    path: str = ""
    url: str = ""
    timeout: float = 30.0
    max_concurrency: int = 4


@dataclass
class FusionSection:
    client: str = "mock"
    url: str = ""
    timeout: float = 60.0
    temperature: float = 0.0
    max_tokens: int = 64
    retries: int = 3
    backoff_base: float = 0.5
    template: str = DEFAULT_PROMPT_TEMPLATE
    strip_prefixes: list[str] = field(
        default_factory=lambda: list(DEFAULT_STRIP_PREFIXES)
    )
    skip_on_collapse: bool = False
    rules: str = ""


@dataclass
class MetricsSection:
    variant: str = "cider-d"
    fused_model_id: str = "fusion"


@dataclass
class SeedsSection:
    split: int | None = None
    study: int | None = None


@dataclass
class RunConfig:
    paths: PathsConfig = field(default_factory=PathsConfig)
    scorer: ScorerSection = field(default_factory=ScorerSection)
    fusion: FusionSection = field(default_factory=FusionSection)
    metrics: MetricsSection = field(default_factory=MetricsSection)
    seeds: SeedsSection = field(default_factory=SeedsSection)
    workers: int = 4
    deterministic: bool = False

    def to_dict(self) -> dict:
        return {
            "paths": {
                "corpus": self.paths.corpus,
                "candidates": self.paths.candidates,
                "out_dir": self.paths.out_dir,
                "votes_log": self.paths.votes_log,
            },
            "scorer": {
                "backend": self.scorer.backend,
                "path": self.scorer.path,
                "url": self.scorer.url,
                "timeout": self.scorer.timeout,
                "max_concurrency": self.scorer.max_concurrency,
            },
            "fusion": {
                "client": self.fusion.client,
                "url": self.fusion.url,
                "timeout": self.fusion.timeout,
                "temperature": self.fusion.temperature,
                "max_tokens": self.fusion.max_tokens,
                "retries": self.fusion.retries,
                "backoff_base": self.fusion.backoff_base,
                "template": self.fusion.template,
                "strip_prefixes": list(self.fusion.strip_prefixes),
                "skip_on_collapse": self.fusion.skip_on_collapse,
                "rules": self.fusion.rules,
            },
            "metrics": {
                "variant": self.metrics.variant,
                "fused_model_id": self.metrics.fused_model_id,
            },
            "seeds": {"split": self.seeds.split, "study": self.seeds.study},
            "workers": self.workers,
            "deterministic": self.deterministic,
        }


_SECTIONS = {
    "paths": PathsConfig,
    "scorer": ScorerSection,
    "fusion": FusionSection,
    "metrics": MetricsSection,
    "seeds": SeedsSection,
}


def _parse_env_value(raw: str):
    try:
        return json.loads(raw)
    except json.JSONDecodeError:
        return raw


def apply_env_overrides(data: dict, env: Mapping[str, str]) -> dict:
    """Overlay CAPFUSE_* variables onto a raw config dict.

    ``CAPFUSE_WORKERS=8`` sets a top-level key; ``CAPFUSE_SCORER__PATH=x``
    sets a section key (double underscore separates section and key).
    Values parse as JSON when possible, else stay strings.
    """
    out = {key: (dict(value) if isinstance(value, dict) else value)
           for key, value in data.items()}
    for name in sorted(env):
        if not name.startswith(ENV_PREFIX):
            continue
        spec = name[len(ENV_PREFIX):].lower()
        value = _parse_env_value(env[name])
        if "__" in spec:
            section, key = spec.split("__", 1)
            out.setdefault(section, {})
            if not isinstance(out[section], dict):
                raise ConfigError(f"cannot override non-section {section!r}")
            out[section][key] = value
        else:
            out[spec] = value
    return out


def _build_section(name: str, cls, data: dict):
    section = cls()
    for key, value in data.items():
        if not hasattr(section, key):
            raise ConfigError(f"unknown key {key!r} in section {name!r}")
        if key == "strip_prefixes":
            if not isinstance(value, list):
                raise ConfigError("strip_prefixes must be a list")
            value = [str(v) for v in value]
        setattr(section, key, value)
    return section


def from_dict(data: dict) -> RunConfig:
    cfg = RunConfig()
    for key, value in data.items():
        if key in _SECTIONS:
            if not isinstance(value, dict):
                raise ConfigError(f"section {key!r} must be an object")
            setattr(cfg, key, _build_section(key, _SECTIONS[key], value))
        elif key == "workers":
            cfg.workers = int(value)
        elif key == "deterministic":
            cfg.deterministic = bool(value)
        else:
            raise ConfigError(f"unknown config key {key!r}")
    return cfg


def validate(cfg: RunConfig, check_paths: bool = True) -> None:
    """Reject inconsistent configurations.

    Raises:
        ConfigError: on unknown backend/client names, missing endpoints,
            nonpositive worker counts, deterministic mode without explicit
            seeds, or missing input files.
    """
    if cfg.scorer.backend not in ("file", "remote"):
        raise ConfigError(f"unknown scorer backend {cfg.scorer.backend!r}")
    if cfg.scorer.backend == "remote" and not cfg.scorer.url:
        raise ConfigError("remote scorer needs scorer.url")
    if cfg.fusion.client not in ("mock", "http"):
        raise ConfigError(f"unknown fusion client {cfg.fusion.client!r}")
    if cfg.fusion.client == "http" and not cfg.fusion.url:
        raise ConfigError("http fusion client needs fusion.url")
    if cfg.workers < 1:
        raise ConfigError("workers must be at least 1")
    if cfg.metrics.variant not in ("cider-d", "cider"):
        raise ConfigError(f"unknown metrics variant {cfg.metrics.variant!r}")
    if cfg.deterministic:
        if cfg.fusion.client == "http":
            raise ConfigError("deterministic mode cannot use the http fusion client")
        if cfg.scorer.backend == "remote":
            raise ConfigError("deterministic mode cannot use the remote scorer")
        if cfg.seeds.split is None or cfg.seeds.study is None:
            raise ConfigError("deterministic mode needs explicit seeds")
    if check_paths:
        required = []
        if cfg.paths.corpus:
            required.append(("paths.corpus", cfg.paths.corpus))
        if cfg.paths.candidates:
            required.append(("paths.candidates", cfg.paths.candidates))
        if cfg.scorer.backend == "file" and cfg.scorer.path:
            required.append(("scorer.path", cfg.scorer.path))
        if cfg.fusion.rules:
            required.append(("fusion.rules", cfg.fusion.rules))
        for label, path in required:
            if not os.path.exists(path):
                raise ConfigError(f"{label}: no such file {path!r}")


def load_config(
    path: str,
    env: Mapping[str, str] | None = None,
    check_paths: bool = True,
) -> RunConfig:
    """Load, overlay environment variables, validate."""
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config root must be an object")
    data = apply_env_overrides(data, os.environ if env is None else env)
    cfg = from_dict(data)
    validate(cfg, check_paths=check_paths)
    return cfg


def config_hash(cfg: RunConfig) -> str:
    """sha256 over the canonical JSON form; any field change changes it."""
    canonical = json.dumps(
        cfg.to_dict(), ensure_ascii=False, sort_keys=True, separators=(",", ":")
    )
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()
