"""JSON scenario files and dotted-path overrides."""

from __future__ import annotations

import copy
import dataclasses
import json
from pathlib import Path
from typing import Any, Iterable

from .engine import ConfigError, ScenarioConfig, ScheduleEntry

CONFIG_FIELDS = {f.name for f in dataclasses.fields(ScenarioConfig)}
_REQUIRED = {"N", "w", "k_fb", "Ts", "M", "schedule", "x0"}


class ConfigFileError(Exception):
    """The config file cannot be read as JSON."""


class ConfigNotFoundError(ConfigFileError, FileNotFoundError):
    pass


class ConfigSyntaxError(ConfigFileError):
    pass


class OverrideError(ValueError):
    pass


def config_to_dict(cfg: ScenarioConfig) -> dict[str, Any]:
    d = dataclasses.asdict(cfg)
    d["schedule"] = [{"sigma": e.sigma, "u_L": e.u_L} for e in cfg.schedule]
    d["x0"] = list(cfg.x0)
    return d


def config_from_dict(data: dict[str, Any], check_gain: bool = True) -> ScenarioConfig:
    if not isinstance(data, dict):
        raise ConfigError("<root>", "expected a JSON object")
    unknown = set(data) - CONFIG_FIELDS
    if unknown:
        raise ConfigError(sorted(unknown)[0], f"unknown field; known fields are {sorted(CONFIG_FIELDS)}")
    missing = _REQUIRED - set(data)
    if missing:
        raise ConfigError(sorted(missing)[0], "required field is missing")
    schedule = []
    if not isinstance(data["schedule"], list):
        raise ConfigError("schedule", "must be a list of {sigma, u_L} objects")
    for i, e in enumerate(data["schedule"]):
        if not isinstance(e, dict) or set(e) != {"sigma", "u_L"}:
            raise ConfigError(f"schedule[{i}]", "must be an object with exactly the keys sigma and u_L")
        if not isinstance(e["sigma"], int) or isinstance(e["sigma"], bool):
            raise ConfigError(f"schedule[{i}].sigma", f"must be an integer, got {e['sigma']!r}")
        schedule.append(ScheduleEntry(e["sigma"], float(e["u_L"])))
    kwargs = dict(data)
    kwargs["schedule"] = tuple(schedule)
    for key in ("w", "k_fb", "Ts"):
        if not isinstance(kwargs[key], (int, float)) or isinstance(kwargs[key], bool):
            raise ConfigError(key, f"must be a number, got {kwargs[key]!r}")
        kwargs[key] = float(kwargs[key])
    if not isinstance(kwargs.get("x0"), list):
        raise ConfigError("x0", "must be a list of numbers")
    kwargs.setdefault("params", {})
    return ScenarioConfig(**kwargs).validate(check_gain=check_gain)


def _coerce(text: str) -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def apply_overrides(data: dict[str, Any], overrides: Iterable[str], allowed: set[str] | None = None) -> dict[str, Any]:
    """Return a copy of ``data`` with each ``a.b.0.c=value`` assignment applied.

    Values are read as JSON when possible, otherwise kept as strings.  Only
    keys already present (or listed in ``allowed`` at the top level) may be set.
    """
    out = copy.deepcopy(data)
    allowed = set(out) | (allowed or set())
    for item in overrides:
        key, sep, raw = item.partition("=")
        if not sep or not key:
            raise OverrideError(f"override {item!r} is not of the form key=value")
        parts = key.split(".")
        if parts[0] not in allowed:
            raise OverrideError(f"unknown override key {key!r}")
        node: Any = out
        for part in parts[:-1]:
            node = _descend(node, part, key)
        last = parts[-1]
        if isinstance(node, list):
            idx = _index(node, last, key)
            node[idx] = _coerce(raw)
        elif isinstance(node, dict):
            if len(parts) > 1 and last not in node:
                raise OverrideError(f"unknown override key {key!r}")
            node[last] = _coerce(raw)
        else:
            raise OverrideError(f"cannot descend into {key!r}")
    return out


def _index(node: list, part: str, key: str) -> int:
    try:
        idx = int(part)
        node[idx]
    except (ValueError, IndexError):
        raise OverrideError(f"bad list index {part!r} in override key {key!r}") from None
    return idx


def _descend(node: Any, part: str, key: str) -> Any:
    if isinstance(node, list):
        return node[_index(node, part, key)]
    if isinstance(node, dict) and part in node:
        return node[part]
    raise OverrideError(f"unknown override key {key!r}")


def load_config_dict(path: str | Path) -> dict[str, Any]:
    path = Path(path)
    if not path.is_file():
        raise ConfigNotFoundError(f"config file not found: {path}")
    try:
        return json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigSyntaxError(f"malformed JSON in {path}: {exc}") from exc


def parse_config(path: str | Path, overrides: Iterable[str] = ()) -> ScenarioConfig:
    data = load_config_dict(path)
    if overrides:
        data = apply_overrides(data, overrides, allowed=CONFIG_FIELDS)
    return config_from_dict(data)


def dump_config(cfg: ScenarioConfig) -> str:
    return json.dumps(config_to_dict(cfg), indent=2)
