"""Run configuration files: a documented key-value text format.

Syntax, one statement per line::

    # comment (also allowed after a value)
    method = es                # es | es-plain | gd
    fixture = multimodal       # named fixture, see exemplar.fixtures
    t = 50
    alpha = 0.3
    oracle_cmd = python -m exemplar.plugins fixture-oracle --fixture multimodal

    [sweep]                    # optional one-axis-at-a-time grid
    k = 5 10 20
    alpha = 0 0.3

Values run to the end of line (minus comments), so plugin commands need no
quoting.  Sweep values are whitespace- or comma-separated.  The same keys
can be overridden from the command line with ``--set key=value``; overrides
are type-checked against the same schema as the file.
"""

from __future__ import annotations

import dataclasses
import os
from dataclasses import dataclass, field

from .core import EsConfig, GdConfig, validate_config
from .errors import ConfigError

__all__ = ["RunSpec", "load_run_spec", "parse_config_text", "apply_overrides"]

_ES_FIELDS = {f.name: f.type for f in dataclasses.fields(EsConfig)}
_GD_FIELDS = {f.name: f.type for f in dataclasses.fields(GdConfig)}

_INT_KEYS = {"t", "k", "m", "max_calls", "latent_dim", "target_class"}
_FLOAT_KEYS = {"u", "s", "alpha", "threshold", "learning_rate", "momentum"}
_STR_KEYS = {"method", "fixture", "converge_on", "oracle_cmd", "generator_cmd"}
_ALL_KEYS = _INT_KEYS | _FLOAT_KEYS | _STR_KEYS

_METHODS = ("es", "es-plain", "gd")


@dataclass(frozen=True)
class RunSpec:
    """Everything a CLI command needs: method, fixture binding, and configs."""

    method: str = "es"
    fixture: str | None = None
    oracle_cmd: str | None = None
    generator_cmd: str | None = None
    converge_on: str = "elite"
    es: EsConfig = field(default_factory=EsConfig)
    gd: GdConfig = field(default_factory=GdConfig)
    sweep: tuple = ()
    explicit: frozenset = frozenset()  # keys set by file or override


def _parse_value(key: str, raw: str):
    raw = raw.strip()
    if key in _INT_KEYS:
        try:
            return int(raw)
        except ValueError:
            raise ConfigError(f"{key} must be an integer, got {raw!r}") from None
    if key in _FLOAT_KEYS:
        try:
            return float(raw)
        except ValueError:
            raise ConfigError(f"{key} must be a number, got {raw!r}") from None
    return raw


def _strip_comment(line: str) -> str:
    return line.split("#", 1)[0].strip()


def parse_config_text(text: str, origin: str = "<config>"):
    """Returns (assignments, sweep_axes); both preserve declaration order."""
    assignments: list[tuple[str, str]] = []
    sweep: list[tuple[str, list[str]]] = []
    in_sweep = False
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = _strip_comment(raw)
        if not line:
            continue
        if line.startswith("["):
            if line == "[sweep]":
                in_sweep = True
                continue
            raise ConfigError(f"{origin}:{lineno}: unknown section {line!r}")
        if "=" not in line:
            raise ConfigError(f"{origin}:{lineno}: expected 'key = value', got {line!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if in_sweep:
            sweep.append((key, value.replace(",", " ").split()))
        else:
            assignments.append((key, value))
    return assignments, sweep


def _apply(spec: RunSpec, key: str, raw: str, origin: str) -> RunSpec:
    if key not in _ALL_KEYS:
        raise ConfigError(f"{origin}: unknown config key {key!r}")
    value = _parse_value(key, raw)
    updates: dict = {"explicit": spec.explicit | {key}}
    if key == "method":
        if value not in _METHODS:
            raise ConfigError(f"{origin}: method must be one of {_METHODS}, got {value!r}")
        updates["method"] = value
    elif key == "converge_on":
        if value not in ("elite", "best"):
            raise ConfigError(f"{origin}: converge_on must be 'elite' or 'best', got {value!r}")
        updates["converge_on"] = value
    elif key in ("fixture", "oracle_cmd", "generator_cmd"):
        updates[key] = value
    else:
        if key in _ES_FIELDS:
            updates["es"] = dataclasses.replace(spec.es, **{key: value})
        if key in _GD_FIELDS:
            updates["gd"] = dataclasses.replace(spec.gd, **{key: value})
    return dataclasses.replace(spec, **updates)


def apply_overrides(spec: RunSpec, overrides) -> RunSpec:
    """Apply ``key=value`` strings, type-checked against the schema."""
    for item in overrides or ():
        if "=" not in item:
            raise ConfigError(f"override must look like key=value, got {item!r}")
        key, _, value = item.partition("=")
        spec = _apply(spec, key.strip(), value.strip(), origin=f"--set {item}")
    return spec


def load_run_spec(path, overrides=()) -> RunSpec:
    """Parse a config file, apply overrides, validate both config objects."""
    if not os.path.exists(path):
        raise ConfigError(f"config not found: {path}")
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    assignments, sweep_raw = parse_config_text(text, origin=str(path))
    spec = RunSpec()
    for key, value in assignments:
        spec = _apply(spec, key, value, origin=str(path))
    axes = []
    for param, values in sweep_raw:
        axes.append((param, tuple(_parse_value(param, v) for v in values)))
    spec = dataclasses.replace(spec, sweep=tuple(axes))
    spec = apply_overrides(spec, overrides)
    validate_config(spec.es)
    validate_config(spec.gd)
    return spec
