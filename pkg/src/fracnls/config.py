"""Flat ``key = value`` configuration files.

Keys may carry a section prefix (``grid.n``, ``params.alpha``, ...).  Blank
lines and ``#`` comments are ignored.  Values are parsed as int, float,
comma-separated float lists, booleans, or left as strings.
"""
from __future__ import annotations

import re

_KEY = re.compile(r"^[A-Za-z_][A-Za-z0-9_.\-]*$")


class ConfigError(ValueError):
    def __init__(self, message, line=None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


def parse_value(text: str):
    t = text.strip()
    low = t.lower()
    if low in ("true", "yes", "on"):
        return True
    if low in ("false", "no", "off"):
        return False
    if "," in t:
        return [parse_value(part) for part in t.split(",") if part.strip()]
    for conv in (int, float):
        try:
            return conv(t)
        except ValueError:
            pass
    return t


class FlatConfig(dict):
    """Dict of parsed entries; ``lines`` maps each key to its source line."""

    def __init__(self, *args, **kw):
        super().__init__(*args, **kw)
        self.lines = {}

    def line(self, key):
        return self.lines.get(key)


def parse_flat(text: str, typed: bool = False, known=None) -> FlatConfig:
    """Parse flat config text (raw strings unless ``typed``).

    With ``known`` given, keys outside it are rejected.
    """
    out = FlatConfig()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", lineno)
        key, value = (s.strip() for s in line.split("=", 1))
        if not _KEY.match(key):
            raise ConfigError(f"invalid key {key!r}", lineno)
        if key in out:
            raise ConfigError(f"duplicate key {key!r}", lineno)
        if not value:
            raise ConfigError(f"missing value for {key!r}", lineno)
        if known is not None and key not in known:
            raise ConfigError(f"unknown key {key!r}", lineno)
        out[key] = parse_value(value) if typed else value
        out.lines[key] = lineno
    return out


def read_flat(path, known=None) -> FlatConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_flat(fh.read(), typed=True, known=known)


def section(config: dict, name: str) -> dict:
    prefix = name + "."
    return {k[len(prefix):]: v for k, v in config.items() if k.startswith(prefix)}


def format_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (list, tuple)):
        return ", ".join(format_value(x) for x in v)
    return str(v)


def dump_flat(config: dict) -> str:
    return "".join(f"{k} = {format_value(v)}\n" for k, v in config.items())
