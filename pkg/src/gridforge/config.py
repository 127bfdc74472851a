"""Scenario files and dotted-key overrides.

A scenario file is INI-style text read with :mod:`configparser`::

    [scenario]
    preset = large-disturbance     ; optional starting point
    strategy = matching
    base_load = 2.25
    t_end = 10

    [integrator]
    dt = 1e-5

    [event.1]
    time = 0.5
    kind = load-step
    bus = 7
    dp = 0.9

    [control]
    k_iv = 10

    [machine.exciter]
    k_a = 200

    [sweep]
    start = 0.2
    step = 0.007
    count = 100

Section ``[scenario]`` holds top-level :class:`ScenarioConfig` fields; any
other section name is a dotted path into the nested dataclasses
(``control``, ``machine``, ``machine.pss``, ``converter``, ``integrator``,
``thresholds``). ``[event.N]`` sections replace the preset's events, in
order of ``N``. Values are per unit unless the field says otherwise
(times in seconds, converter plant values in SI).
"""
from __future__ import annotations

import configparser
import dataclasses
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any

import numpy as np

from .scenarios import Event, ScenarioConfig, preset, sweep_grid


class ConfigError(ValueError):
    """Invalid scenario file or override; the message names the key."""


@dataclass(frozen=True)
class SweepSpec:
    start: float = 0.2
    step: float = 0.007
    count: int = 100
    dps: tuple[float, ...] | None = None

    def values(self) -> np.ndarray:
        if self.dps is not None:
            return np.array(self.dps, dtype=float)
        return sweep_grid(self.start, self.step, self.count)


def parse_value(text: str) -> Any:
    """Literal from text: none, booleans, numbers, comma lists, else string."""
    s = text.strip()
    low = s.lower()
    if low in ("none", "null", ""):
        return None
    if low in ("true", "yes", "on"):
        return True
    if low in ("false", "no", "off"):
        return False
    if "," in s:
        return tuple(parse_value(p) for p in s.split(",") if p.strip())
    for kind in (int, float):
        try:
            return kind(s)
        except ValueError:
            pass
    return s


def _coerce(current: Any, value: Any, key: str) -> Any:
    if value is None:
        return None
    if isinstance(current, bool):
        if not isinstance(value, bool):
            raise ConfigError(f"{key}: expected true or false")
        return value
    if isinstance(current, (int, float)) and not isinstance(current, bool):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{key}: expected a number, got {value!r}")
        if isinstance(current, int) and not float(value).is_integer():
            raise ConfigError(f"{key}: expected an integer, got {value!r}")
        return type(current)(value)
    if isinstance(current, tuple) and not isinstance(value, tuple):
        return (value,)
    if isinstance(current, str) and not isinstance(value, str):
        return str(value)
    return value


def set_path(obj: Any, path: list[str], value: Any, key: str) -> Any:
    """Copy of the dataclass ``obj`` with the field at ``path`` replaced."""
    name = path[0]
    names = {f.name for f in dataclasses.fields(obj)}
    if name not in names:
        raise ConfigError(f"unknown key {key!r}")
    current = getattr(obj, name)
    if len(path) > 1:
        if not dataclasses.is_dataclass(current):
            raise ConfigError(f"unknown key {key!r}")
        new = set_path(current, path[1:], value, key)
    else:
        if dataclasses.is_dataclass(current):
            raise ConfigError(f"{key!r} is a section, not a value")
        new = _coerce(current, value, key)
    try:
        return replace(obj, **{name: new})
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{key}: {exc}") from exc


def apply_overrides(cfg: ScenarioConfig, overrides: dict[str, Any]) -> ScenarioConfig:
    """Apply ``{"control.k_iv": 20, "t_end": 5, ...}``; string values are parsed."""
    for key, value in overrides.items():
        if isinstance(value, str):
            value = parse_value(value)
        path = key.split(".")
        if path[0] == "scenario":
            path = path[1:]
        if not path:
            raise ConfigError(f"unknown key {key!r}")
        cfg = set_path(cfg, path, value, key)
    return cfg


def parse_override(text: str) -> tuple[str, str]:
    if "=" not in text:
        raise ConfigError(f"override {text!r} is not of the form key=value")
    key, value = text.split("=", 1)
    return key.strip(), value.strip()


def _event(section: configparser.SectionProxy, name: str) -> Event:
    try:
        return Event(time=float(section["time"]), kind=section["kind"].strip(),
                     bus=section["bus"].strip(), dp=float(section.get("dp", "0")))
    except KeyError as exc:
        raise ConfigError(f"[{name}] is missing key {exc.args[0]!r}") from exc
    except ValueError as exc:
        raise ConfigError(f"[{name}]: {exc}") from exc


def loads(text: str, source: str = "<string>") -> tuple[ScenarioConfig, SweepSpec]:
    """Parse scenario-file text."""
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    parser.optionxform = str
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: {exc}") from exc
    scen = dict(parser["scenario"]) if parser.has_section("scenario") else {}
    name = scen.pop("preset", "large-disturbance")
    strategy = scen.get("strategy", "droop")
    try:
        cfg = preset(name, strategy=strategy)
    except ValueError as exc:
        raise ConfigError(f"preset: {exc}") from exc
    overrides: dict[str, Any] = dict(scen)
    events = []
    sweep = SweepSpec()
    for sec in parser.sections():
        if sec == "scenario":
            continue
        if sec.startswith("event."):
            events.append((sec, _event(parser[sec], sec)))
        elif sec == "sweep":
            for key, value in parser[sec].items():
                sweep = set_path(sweep, [key], parse_value(value), f"sweep.{key}")
            if sweep.dps is not None:
                dps = sweep.dps if isinstance(sweep.dps, tuple) else (sweep.dps,)
                sweep = replace(sweep, dps=tuple(float(d) for d in dps))
        else:
            for key, value in parser[sec].items():
                overrides[f"{sec}.{key}"] = value
    if events:
        cfg = replace(cfg, events=())
    cfg = apply_overrides(cfg, overrides)
    if events:
        def order(item):
            suffix = item[0].split(".", 1)[1]
            return (0, int(suffix)) if suffix.isdigit() else (1, suffix)
        try:
            cfg = replace(cfg, events=tuple(ev for _, ev in sorted(events, key=order)))
        except ValueError as exc:
            raise ConfigError(f"events: {exc}") from exc
    return cfg, sweep


def load(path: str | Path) -> tuple[ScenarioConfig, SweepSpec]:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {str(path)!r}: {exc.strerror}") from exc
    return loads(text, str(path))
