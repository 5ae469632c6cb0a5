"""Run settings: defaults, overridden by the manifest, a config file, the environment and flags."""

from __future__ import annotations

import os
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Mapping

import yaml

from edit_lens.corpus import InputError
from edit_lens.metrics import MTER_DENOMINATORS, KrsConfig
from edit_lens.profiler import DEFAULT_BIN_EDGES
from edit_lens.stats import DEFAULT_SEED
from edit_lens.ter import TerConfig

SEED_ENV = "EDIT_LENS_SEED"


@dataclass(frozen=True)
class BleuConfig:
    max_n: int = 4
    epsilon: float = 1e-9
    lowercase: bool = False


@dataclass(frozen=True)
class StatsConfig:
    seed: int = DEFAULT_SEED
    bootstrap_iterations: int = 1000
    ar_iterations: int = 10000


@dataclass(frozen=True)
class TtrConfig:
    lowercase: bool = True
    skip_punct: bool = True


@dataclass(frozen=True)
class Settings:
    ter: TerConfig = field(default_factory=TerConfig)
    krs: KrsConfig = field(default_factory=KrsConfig)
    bleu: BleuConfig = field(default_factory=BleuConfig)
    stats: StatsConfig = field(default_factory=StatsConfig)
    ttr: TtrConfig = field(default_factory=TtrConfig)
    mter_denominator: str = "mean"
    bins: tuple[int, ...] = DEFAULT_BIN_EDGES

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


_SECTIONS = {"ter": TerConfig, "krs": KrsConfig, "bleu": BleuConfig, "stats": StatsConfig, "ttr": TtrConfig}


def _update(obj, values: Mapping[str, Any], where: str):
    names = {f.name for f in fields(obj)}
    unknown = set(values) - names
    if unknown:
        raise InputError(f"unknown {where} setting(s): {', '.join(sorted(unknown))}")
    values = {k: tuple(v) if isinstance(v, list) else v for k, v in values.items()}
    try:
        return replace(obj, **values)
    except (TypeError, ValueError) as exc:
        raise InputError(f"bad {where} setting: {exc}") from None


def apply_overrides(settings: Settings, overrides: Mapping[str, Any], where: str = "config") -> Settings:
    changes: dict[str, Any] = {}
    for key, value in overrides.items():
        if key in _SECTIONS:
            if not isinstance(value, Mapping):
                raise InputError(f"{where}: section {key!r} must be a mapping")
            changes[key] = _update(getattr(settings, key), value, f"{where} {key}")
        elif key == "mter_denominator":
            if value not in MTER_DENOMINATORS:
                raise InputError(f"{where}: mter_denominator must be one of {', '.join(MTER_DENOMINATORS)}")
            changes[key] = value
        elif key == "bins":
            changes[key] = tuple(int(v) for v in value)
        else:
            raise InputError(f"{where}: unknown setting {key!r}")
    return replace(settings, **changes)


def load_config_file(path: str | Path) -> Mapping[str, Any]:
    path = Path(path)
    try:
        data = yaml.safe_load(path.read_text(encoding="utf-8")) or {}
    except FileNotFoundError:
        raise InputError("config file not found", path) from None
    except yaml.YAMLError as exc:
        raise InputError(f"invalid config: {exc}", path) from None
    if not isinstance(data, Mapping):
        raise InputError("config must be a mapping", path)
    return data


def resolve_settings(
    manifest_config: Mapping[str, Any] | None = None,
    config_file: str | Path | None = None,
    lowercase: bool | None = None,
    seed: int | None = None,
    env: Mapping[str, str] | None = None,
) -> Settings:
    """Defaults < manifest ``config`` < config file < ``EDIT_LENS_SEED`` < command-line flags."""
    settings = Settings()
    if manifest_config:
        settings = apply_overrides(settings, manifest_config, "manifest config")
    if config_file is not None:
        settings = apply_overrides(settings, load_config_file(config_file), str(config_file))
    env = os.environ if env is None else env
    if env.get(SEED_ENV):
        try:
            settings = replace(settings, stats=replace(settings.stats, seed=int(env[SEED_ENV])))
        except ValueError:
            raise InputError(f"{SEED_ENV} must be an integer, got {env[SEED_ENV]!r}") from None
    if seed is not None:
        settings = replace(settings, stats=replace(settings.stats, seed=seed))
    if lowercase:
        settings = replace(
            settings, ter=replace(settings.ter, lowercase=True), bleu=replace(settings.bleu, lowercase=True)
        )
    return settings
