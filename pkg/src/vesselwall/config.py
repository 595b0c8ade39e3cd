"""Flat key=value configuration files.

One setting per line, '#' starts a comment, sections are dotted
prefixes (phantom.noise_sigma = 10).  Keys and their types come
straight from the parameter dataclasses, so the config file can tune
exactly what the API can and nothing else; unknown keys are errors,
not warnings.
"""

from __future__ import annotations

import dataclasses
from pathlib import Path

from .lumen import LumenParams
from .phantom import PhantomSpec
from .wallgraph import TrackingParams


class ConfigError(ValueError):
    """Bad config file: unknown key, unparsable value, or bad syntax."""


MPR_DEFAULTS = {"step_mm": 5.0, "extent_mm": 60.0, "resolution_mm": 1.0}

_SECTIONS = (("phantom", PhantomSpec), ("lumen", LumenParams),
             ("track", TrackingParams))


def _parse_bool(text: str) -> bool:
    low = text.lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _caster_for(default):
    if isinstance(default, bool):
        return _parse_bool
    if isinstance(default, int):
        return int
    if isinstance(default, float):
        return float
    return str


def known_keys() -> dict:
    """Every accepted dotted key mapped to its value parser."""
    table = {}
    for prefix, cls in _SECTIONS:
        inst = cls()
        for f in dataclasses.fields(cls):
            table[f"{prefix}.{f.name}"] = _caster_for(getattr(inst, f.name))
    for name, default in MPR_DEFAULTS.items():
        table[f"mpr.{name}"] = _caster_for(default)
    return table


def parse_config(text: str) -> dict:
    """Parse config text into {dotted_key: typed_value}."""
    table = known_keys()
    out: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in table:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        try:
            out[key] = table[key](value)
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad value for {key}: {exc}")
    return out


def load_config(path: str | Path) -> dict:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"no such config file: {path}")
    return parse_config(path.read_text())


def section(cfg: dict, prefix: str) -> dict:
    """Subset of cfg under 'prefix.', with the prefix stripped."""
    plen = len(prefix) + 1
    return {k[plen:]: v for k, v in cfg.items() if k.startswith(prefix + ".")}


def build_params(cfg: dict, overrides: dict | None = None):
    """Instantiate (PhantomSpec, LumenParams, TrackingParams, mpr dict).

    overrides maps dotted keys to values that beat the config file
    (used for CLI flags); None values are ignored.
    """
    merged = dict(cfg)
    for key, value in (overrides or {}).items():
        if value is not None:
            if key not in known_keys():
                raise ConfigError(f"unknown override {key!r}")
            merged[key] = value
    phantom = PhantomSpec(**section(merged, "phantom"))
    lumen = LumenParams(**section(merged, "lumen"))
    track = TrackingParams(**section(merged, "track"))
    mpr = dict(MPR_DEFAULTS)
    mpr.update(section(merged, "mpr"))
    return phantom, lumen, track, mpr
