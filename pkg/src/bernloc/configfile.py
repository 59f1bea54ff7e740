"""Flat key=value mission configuration files.

One ``key = value`` per line, ``#`` comment lines, vectors as
comma-separated pairs.  The key set is fixed; parsing is line-anchored
so operator typos are reported with their location.  ``format_config``
emits a canonical echo that parses back to an identical configuration.
"""

from __future__ import annotations

import hashlib

from .mission import MissionConfig
from .sensing import ChannelParams

__all__ = ["ConfigError", "CONFIG_KEYS", "parse_config", "load_config", "format_config", "config_hash"]

CONFIG_KEYS = (
    "target_pos",
    "vehicle_start",
    "zeta_min",
    "zeta_max",
    "sample_rate_hz",
    "replan_interval_s",
    "r_t_m",
    "tf_max_s",
    "channel.P",
    "channel.n_exp",
    "channel.noise_model",
    "channel.sigma0",
    "channel.noise_ref_range",
    "w1",
    "w2",
    "w3",
    "w4",
    "v_max",
    "degree_d",
    "rng_seed",
    "fim_enabled",
)

_REQUIRED = ("target_pos", "vehicle_start")
_PAIR_KEYS = ("target_pos", "vehicle_start")
_INT_KEYS = ("degree_d", "rng_seed")
_BOOL_KEYS = ("fim_enabled",)
_STR_KEYS = ("channel.noise_model",)


class ConfigError(ValueError):
    """Malformed or invalid configuration; message carries line context."""


def _parse_pair(raw: str, line_no: int, key: str) -> tuple[float, float]:
    parts = [p.strip() for p in raw.split(",")]
    if len(parts) != 2:
        raise ConfigError(f"line {line_no}: key {key!r} needs two comma-separated values")
    try:
        return (float(parts[0]), float(parts[1]))
    except ValueError:
        raise ConfigError(f"line {line_no}: key {key!r} has non-numeric components") from None


def _parse_scalar(raw: str, line_no: int, key: str):
    if key in _STR_KEYS:
        return raw
    if key in _BOOL_KEYS:
        lowered = raw.lower()
        if lowered in ("true", "1", "yes"):
            return True
        if lowered in ("false", "0", "no"):
            return False
        raise ConfigError(f"line {line_no}: key {key!r} must be true or false")
    try:
        return int(raw) if key in _INT_KEYS else float(raw)
    except ValueError:
        raise ConfigError(f"line {line_no}: key {key!r} has a non-numeric value") from None


def parse_config(text: str) -> MissionConfig:
    """Parse configuration text into a validated MissionConfig."""
    values = {}
    for line_no, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"line {line_no}: expected 'key = value', got {raw_line!r}")
        key, _, raw_value = line.partition("=")
        key = key.strip()
        raw_value = raw_value.strip()
        if key not in CONFIG_KEYS:
            raise ConfigError(f"line {line_no}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"line {line_no}: duplicate key {key!r}")
        if key in _PAIR_KEYS:
            values[key] = _parse_pair(raw_value, line_no, key)
        else:
            values[key] = _parse_scalar(raw_value, line_no, key)

    for key in _REQUIRED:
        if key not in values:
            raise ConfigError(f"missing required key {key!r}")

    channel_kwargs = {}
    for key, field in (
        ("channel.P", "P"),
        ("channel.n_exp", "n_exp"),
        ("channel.sigma0", "noise_sigma0"),
        ("channel.noise_model", "noise_model"),
        ("channel.noise_ref_range", "noise_ref_range"),
    ):
        if key in values:
            channel_kwargs[field] = values.pop(key)

    try:
        channel = ChannelParams(**channel_kwargs)
        return MissionConfig(channel=channel, **values)
    except ValueError as exc:
        raise ConfigError(f"invalid configuration: {exc}") from exc


def load_config(path) -> MissionConfig:
    """Read and parse a configuration file; errors name the file."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        return parse_config(text)
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}") from None


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, str):
        return value
    if isinstance(value, tuple):
        return f"{_fmt(float(value[0]))}, {_fmt(float(value[1]))}"
    return repr(float(value))


def format_config(config: MissionConfig) -> str:
    """Canonical echo: every key, fixed order, parseable back to `config`."""
    channel = config.channel
    pairs = [
        ("target_pos", tuple(config.target_pos)),
        ("vehicle_start", tuple(config.vehicle_start)),
        ("zeta_min", config.zeta_min),
        ("zeta_max", config.zeta_max),
        ("sample_rate_hz", config.sample_rate_hz),
        ("replan_interval_s", config.replan_interval_s),
        ("r_t_m", config.r_t_m),
        ("tf_max_s", config.tf_max_s),
        ("channel.P", channel.P),
        ("channel.n_exp", channel.n_exp),
        ("channel.noise_model", channel.noise_model),
        ("channel.sigma0", channel.noise_sigma0),
        ("channel.noise_ref_range", channel.noise_ref_range),
        ("w1", config.w1),
        ("w2", config.w2),
        ("w3", config.w3),
        ("w4", config.w4),
        ("v_max", config.v_max),
        ("degree_d", config.degree_d),
        ("rng_seed", config.rng_seed),
        ("fim_enabled", config.fim_enabled),
    ]
    lines = ["# bernloc mission configuration"]
    lines += [f"{key} = {_fmt(value)}" for key, value in pairs]
    return "\n".join(lines) + "\n"


def config_hash(config: MissionConfig) -> str:
    """Stable content hash of the canonical echo."""
    return hashlib.sha256(format_config(config).encode("utf-8")).hexdigest()
