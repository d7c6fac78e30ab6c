"""Strict YAML run configuration.

Every key maps onto a dataclass field; unknown keys and wrongly typed values
are rejected with the dotted path of the offending entry.
"""
from __future__ import annotations

import dataclasses
import os
import types
import typing
from dataclasses import dataclass
from pathlib import Path

import yaml

from .harness import ScenarioConfig

ENV_OUT = "NOISEPUF_OUT"
DEFAULT_OUT = "noisepuf_out"


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class OutputConfig:
    out_dir: str | None = None     # falls back to $NOISEPUF_OUT, then ./noisepuf_out
    verbosity: int = 1


@dataclass(frozen=True)
class BenchConfig:
    n_frames: int = 500


@dataclass(frozen=True)
class ChecksConfig:
    """Acceptance gates applied to reports; a failing gate makes the exit status 1."""

    uniqueness_min: float = 45.0
    uniqueness_max: float = 55.0
    reliability_min: float = 95.0
    auc_min: float = 0.93
    f1_min: float = 0.90
    baseline_gain_min: float = 0.05
    p90_latency_max_us: float = 800.0
    impersonation_reject_min: float = 0.99
    genuine_accept_min: float = 0.99


@dataclass(frozen=True)
class RunConfig:
    scenario: ScenarioConfig = ScenarioConfig()
    output: OutputConfig = OutputConfig()
    bench: BenchConfig = BenchConfig()
    checks: ChecksConfig = ChecksConfig()

    def out_root(self) -> Path:
        return Path(self.output.out_dir or os.environ.get(ENV_OUT) or DEFAULT_OUT)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def _check_scalar(tp, value, where: str):
    origin = typing.get_origin(tp)
    if origin in (typing.Union, types.UnionType):
        args = typing.get_args(tp)
        if value is None and type(None) in args:
            return None
        for a in args:
            if a is type(None):
                continue
            try:
                return _check_scalar(a, value, where)
            except ConfigError:
                pass
        raise ConfigError(f"{where}: invalid value {value!r}")
    if tp is bool:
        if not isinstance(value, bool):
            raise ConfigError(f"{where}: expected true/false, got {value!r}")
        return value
    if tp is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{where}: expected an integer, got {value!r}")
        return value
    if tp is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{where}: expected a number, got {value!r}")
        return float(value)
    if tp is str:
        if not isinstance(value, str):
            raise ConfigError(f"{where}: expected a string, got {value!r}")
        return value
    raise ConfigError(f"{where}: unsupported field type {tp!r}")


def from_mapping(cls, data, where: str = ""):
    """Build dataclass ``cls`` from nested mappings, rejecting unknown keys."""
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError(f"{where or '<root>'}: expected a mapping, got {type(data).__name__}")
    hints = typing.get_type_hints(cls)
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - names)
    if unknown:
        path = ", ".join(f"{where}.{k}" if where else str(k) for k in unknown)
        raise ConfigError(f"unknown config key(s): {path}")
    kwargs = {}
    for name, value in data.items():
        tp = hints[name]
        key = f"{where}.{name}" if where else name
        if dataclasses.is_dataclass(tp):
            kwargs[name] = from_mapping(tp, value, key)
        else:
            kwargs[name] = _check_scalar(tp, value, key)
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"{where or '<root>'}: {e}") from e


def load_config(path: str | Path | None) -> RunConfig:
    if path is None:
        return RunConfig()
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as e:
        raise ConfigError(f"cannot read config {p}: {e}") from e
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as e:
        raise ConfigError(f"{p}: not valid YAML: {e}") from e
    return from_mapping(RunConfig, data)


def config_keys(cls=RunConfig, prefix: str = "") -> list[tuple[str, object]]:
    """Flattened ``(dotted key, default)`` pairs."""
    out = []
    hints = typing.get_type_hints(cls)
    for f in dataclasses.fields(cls):
        key = f"{prefix}{f.name}"
        if dataclasses.is_dataclass(hints[f.name]):
            out.extend(config_keys(hints[f.name], key + "."))
        else:
            out.append((key, f.default))
    return out


def dump_config(cfg: RunConfig) -> str:
    return yaml.safe_dump(cfg.to_dict(), sort_keys=False)
