"""Sectioned key-value config files.

Two layouts are accepted:

* INI text with ``[traffic]``, ``[channel]`` and ``[sim]`` sections whose keys
  are the snake-case field names of :class:`TrafficConfig`,
  :class:`ChannelConfig` and :class:`SimConfig` (plus ``stay_poor`` /
  ``stay_ideal`` in ``[channel]`` for a directly specified Markov channel).
* JSON, either with the same sections as objects or flat. A flat object is
  read as the ``[traffic]`` section; keys that only appear in an AoI report
  (``average_aoi``, ``term_*`` ...) are ignored so that ``eval`` output can be
  fed straight back in.

Precedence, lowest first: built-in defaults, config file, command-line flags.
"""

from __future__ import annotations

import configparser
import json
import math
from pathlib import Path
from typing import Callable

from .errors import ValidationError


class ConfigError(ValidationError):
    def __init__(self, message, key=None):
        super().__init__(message)
        self.key = key


def _float(text):
    value = float(text)
    if math.isnan(value):
        raise ValueError("NaN is not allowed")
    return value


def _int(text):
    value = float(text)
    if value != int(value):
        raise ValueError(f"{text!r} is not an integer")
    return int(value)


def _optional_float(text):
    if text is None or str(text).strip().lower() in ("", "none", "null"):
        return None
    return _float(text)


SECTIONS: dict[str, dict[str, Callable]] = {
    "traffic": {
        "service_rate": _float,
        "utilization": _float,
        "fleet_size": _int,
        "station_count": _int,
        "slot_interval": _float,
        "collision_window": _optional_float,
        "drop_prob": _float,
        "discipline": str,
        "collision_exponent_mode": str,
    },
    "channel": {
        "vehicle_speed": _float,
        "carrier_frequency": _float,
        "bit_rate": _float,
        "frame_size": _float,
        "fading_margin": _float,
        "fail_prob_poor": _float,
        "fail_prob_ideal": _float,
        "stay_poor": _float,
        "stay_ideal": _float,
    },
    "sim": {
        "fidelity": str,
        "horizon": _int,
        "warmup": _int,
        "replications": _int,
        "seed": _int,
        "queue_guard": _int,
        "slot_interval": _float,
        "workers": _int,
    },
}

# report-only keys tolerated (and dropped) when a flat JSON object is read
_REPORT_KEYS = {
    "average_aoi",
    "collision_prob",
    "penalty_factor",
    "beta",
    "arrival_rate",
}


def convert(section: str, key: str, value):
    try:
        converter = SECTIONS[section][key]
    except KeyError:
        raise ConfigError(f"unknown key {section}.{key}", key=f"{section}.{key}") from None
    try:
        return converter(value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad value for {section}.{key}: {value!r} ({exc})", key=f"{section}.{key}") from None


def _from_mapping(data: dict) -> dict[str, dict]:
    out = {name: {} for name in SECTIONS}
    if any(name in data for name in SECTIONS):
        for section, body in data.items():
            if section not in SECTIONS:
                raise ConfigError(f"unknown section [{section}]", key=section)
            if not isinstance(body, dict):
                raise ConfigError(f"section [{section}] must be an object", key=section)
            for key, value in body.items():
                out[section][key] = convert(section, key, value)
        return out
    for key, value in data.items():
        if key in _REPORT_KEYS or key.startswith("term_"):
            continue
        out["traffic"][key] = convert("traffic", key, value)
    return out


def parse_config_text(text: str, fmt: str = "ini") -> dict[str, dict]:
    """Parse config text into ``{section: {key: typed value}}``."""
    if fmt == "json":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON config: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("JSON config must be an object")
        return _from_mapping(data)
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"invalid config file: {exc}") from exc
    out = {name: {} for name in SECTIONS}
    for section in parser.sections():
        if section not in SECTIONS:
            raise ConfigError(f"unknown section [{section}]", key=section)
        for key, value in parser.items(section):
            out[section][key] = convert(section, key, value)
    return out


def load_config(path) -> dict[str, dict]:
    """Read a config file; ``.json`` files are parsed as JSON, anything else as INI."""
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    fmt = "json" if path.suffix.lower() == ".json" else "ini"
    return parse_config_text(text, fmt)


def merge(base: dict[str, dict], overrides: dict[str, dict]) -> dict[str, dict]:
    out = {name: dict(base.get(name, {})) for name in SECTIONS}
    for section, body in overrides.items():
        out[section].update({k: v for k, v in body.items() if v is not None})
    return out


def parse_assignment(text: str) -> tuple[str, str, object]:
    """Parse a ``section.key=value`` override."""
    if "=" not in text:
        raise ConfigError(f"override {text!r} is not of the form section.key=value")
    lhs, value = text.split("=", 1)
    if "." in lhs:
        section, key = lhs.split(".", 1)
    else:
        section, key = "traffic", lhs
    section, key = section.strip(), key.strip()
    if section not in SECTIONS:
        raise ConfigError(f"unknown section [{section}]", key=lhs)
    return section, key, convert(section, key, value.strip())
