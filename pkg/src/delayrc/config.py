"""Experiment configuration: JSON documents plus key=value overrides.

A configuration is a nested JSON object merged over library defaults.  The
command line patches it with dotted keys (``laser.kappa=0.2``), and sweep
definitions name the axis parameter the same way.  Validation errors carry
the line of the offending key in the source file when it is known.

Delay times are snapped to the integration step grid here, so axis values
like tau = sqrt(2) * T are usable directly.
"""

from __future__ import annotations

import copy
import json
import math
from dataclasses import dataclass
from typing import Any, Iterator

import numpy as np

from .laser import LaserParams
from .reservoir import ReservoirClocking, make_mask

__all__ = [
    "ConfigError",
    "SweepAxis",
    "ExperimentConfig",
    "load_config",
    "parse_overrides",
    "DEFAULTS",
    "SWEEPABLE",
]

DEFAULTS: dict = {
    "laser": {
        "alpha": 0.0,
        "kappa": 0.0,
        "phi": 0.0,
        "tau": 0.0,
        "P": 0.05,
        "eta": 0.01,
        "T_LK": 1.0,
        "D_noise": 1e-7,
        "dt": 0.01,
    },
    "clocking": {"T": 220.0, "N_V": 10},
    "L": 20000,
    "buffer": 5000,
    "transient_time": 1e5,
    "tau_per_T": None,
    "capacity": {
        "D_max": 5,
        "max_delay": 100,
        "cutoff": 0.001,
        "window": 30,
        "stall_limit": 50,
    },
    "narma": {
        "enabled": False,
        "n_train": 10000,
        "n_test": 10000,
        "burn_in": 100,
        "regularization": 0.0,
    },
    "spectrum": {"N": 100, "refine": False},
    "simulate": {"duration": 1100.0, "stride": 10, "transient": 100.0},
    "seeds": {"mask": 1, "input": 2, "noise": 3, "narma_input": 5, "base": 0},
    "sweep": [],
    "spectra_only": False,
    "out": None,
}

# Parameters a sweep axis may address.  dt is deliberately absent: changing
# the step inside a grid breaks delay/clock grid alignment between points.
SWEEPABLE = (
    "laser.alpha",
    "laser.kappa",
    "laser.phi",
    "laser.tau",
    "laser.P",
    "laser.eta",
    "laser.T_LK",
    "laser.D_noise",
    "clocking.T",
    "clocking.N_V",
    "tau_per_T",
)

_AXIS_KEYS = {"parameter", "min", "max", "count", "spacing"}


class ConfigError(ValueError):
    """Invalid configuration, formatted as path:line: message when known."""

    def __init__(self, message: str, path: str | None = None,
                 line: int | None = None):
        self.message = message
        self.path = path
        self.line = line
        prefix = path or "config"
        if line is not None:
            prefix += f":{line}"
        super().__init__(f"{prefix}: {message}")


def _find_line(text: str | None, token: str) -> int | None:
    if text is None:
        return None
    needle = f'"{token}"'
    for i, line in enumerate(text.splitlines(), start=1):
        if needle in line:
            return i
    return None


def _is_number(x: Any) -> bool:
    return isinstance(x, (int, float)) and not isinstance(x, bool)


@dataclass(frozen=True)
class SweepAxis:
    parameter: str
    min: float
    max: float
    count: int
    spacing: str = "linear"

    def values(self) -> np.ndarray:
        if self.spacing == "log":
            return np.logspace(math.log10(self.min), math.log10(self.max),
                               self.count)
        return np.linspace(self.min, self.max, self.count)


def _deep_merge(base: dict, override: dict) -> dict:
    out = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _deep_merge(out[key], value)
        else:
            out[key] = copy.deepcopy(value)
    return out


def _set_dotted(doc: dict, dotted: str, value: Any) -> None:
    parts = dotted.split(".")
    node = doc
    for part in parts[:-1]:
        if not isinstance(node, dict) or part not in node:
            raise ConfigError(f"unknown configuration key '{dotted}'")
        node = node[part]
    if not isinstance(node, dict) or parts[-1] not in node:
        raise ConfigError(f"unknown configuration key '{dotted}'")
    node[parts[-1]] = value


def _get_dotted(doc: dict, dotted: str) -> Any:
    node: Any = doc
    for part in dotted.split("."):
        node = node[part]
    return node


def parse_overrides(pairs: list[str]) -> dict[str, Any]:
    """Turn ['laser.kappa=0.1', 'out=run.csv'] into a dotted-key mapping.

    Values parse as JSON where possible and fall back to raw strings, so
    numbers, booleans and null need no quoting.
    """
    updates: dict[str, Any] = {}
    for pair in pairs:
        if "=" not in pair:
            raise ConfigError(f"override '{pair}' is not of the form key=value")
        key, _, raw = pair.partition("=")
        key = key.strip()
        if not key:
            raise ConfigError(f"override '{pair}' has an empty key")
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        updates[key] = value
    return updates


class ExperimentConfig:
    """Validated configuration document with typed accessors."""

    def __init__(self, doc: dict | None = None, *, text: str | None = None,
                 path: str | None = None):
        merged = _deep_merge(DEFAULTS, doc or {})
        _validate(merged, doc or {}, text, path)
        self.doc = merged
        self.path = path

    @classmethod
    def from_file(cls, path: str) -> "ExperimentConfig":
        with open(path) as fh:
            text = fh.read()
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(exc.msg, path=path, line=exc.lineno) from exc
        if not isinstance(doc, dict):
            raise ConfigError("top level must be a JSON object", path=path,
                              line=1)
        return cls(doc, text=text, path=path)

    def with_updates(self, updates: dict[str, Any]) -> "ExperimentConfig":
        doc = copy.deepcopy(self.doc)
        for key, value in updates.items():
            _set_dotted(doc, key, value)
        return ExperimentConfig(doc, path=self.path)

    def paper_scale(self) -> "ExperimentConfig":
        """Full-size run: 250000 inputs, 1e5 buffer, 25000 benchmark inputs."""
        return self.with_updates({
            "L": 250000,
            "buffer": 100000,
            "narma.n_train": 25000,
            "narma.n_test": 25000,
        })

    def to_json(self) -> str:
        return json.dumps(self.doc, indent=2, sort_keys=True)

    def __getitem__(self, dotted: str) -> Any:
        return _get_dotted(self.doc, dotted)

    def laser_params(self) -> LaserParams:
        block = dict(self.doc["laser"])
        dt = block["dt"]
        if self.doc["tau_per_T"] is not None:
            block["tau"] = self.doc["tau_per_T"] * self.doc["clocking"]["T"]
        block["tau"] = round(block["tau"] / dt) * dt
        return LaserParams(**block)

    def clocking(self) -> ReservoirClocking:
        c = self.doc["clocking"]
        n_v = int(c["N_V"])
        mask = make_mask(n_v, int(self.doc["seeds"]["mask"]))
        return ReservoirClocking(T=float(c["T"]), N_V=n_v, mask=mask)

    @property
    def seeds(self) -> dict[str, int]:
        return {k: int(v) for k, v in self.doc["seeds"].items()}

    @property
    def sweep_axes(self) -> list[SweepAxis]:
        return [
            SweepAxis(
                parameter=a["parameter"],
                min=float(a["min"]),
                max=float(a["max"]),
                count=int(a["count"]),
                spacing=a.get("spacing", "linear"),
            )
            for a in self.doc["sweep"]
        ]

    def grid(self) -> Iterator[tuple[int, dict[str, float]]]:
        """Enumerate (index, {parameter: value}) over the sweep lattice.

        No axes yields the single empty point.  The last axis varies
        fastest, so CSV rows group by the first axis.
        """
        axes = self.sweep_axes
        if not axes:
            yield 0, {}
            return
        grids = [axis.values() for axis in axes]
        shape = [len(g) for g in grids]
        total = int(np.prod(shape))
        for idx in range(total):
            rem, point = idx, {}
            for axis, grid_vals, size in zip(
                reversed(axes), reversed(grids), reversed(shape)
            ):
                rem, pos = divmod(rem, size)
                value = float(grid_vals[pos])
                if axis.parameter == "clocking.N_V":
                    value = int(round(value))
                point[axis.parameter] = value
            yield idx, point


def _require_number(doc: dict, dotted: str, text: str | None,
                    path: str | None, minimum: float | None = None,
                    exclusive: bool = False) -> None:
    value = _get_dotted(doc, dotted)
    key = dotted.split(".")[-1]
    if not _is_number(value):
        raise ConfigError(f"'{dotted}' must be a number, got {value!r}",
                          path, _find_line(text, key))
    if minimum is not None:
        ok = value > minimum if exclusive else value >= minimum
        if not ok:
            op = ">" if exclusive else ">="
            raise ConfigError(f"'{dotted}' must be {op} {minimum}, got {value}",
                              path, _find_line(text, key))


def _check_unknown(section: dict, allowed: set[str], prefix: str,
                   text: str | None, path: str | None) -> None:
    for key in section:
        if key not in allowed:
            name = f"{prefix}.{key}" if prefix else key
            raise ConfigError(f"unknown configuration key '{name}'",
                              path, _find_line(text, key))


def _validate(doc: dict, user_doc: dict, text: str | None,
              path: str | None) -> None:
    _check_unknown(user_doc, set(DEFAULTS), "", text, path)
    for section in ("laser", "clocking", "capacity", "narma", "spectrum",
                    "simulate", "seeds"):
        user_section = user_doc.get(section, {})
        if not isinstance(user_section, dict):
            raise ConfigError(f"'{section}' must be an object",
                              path, _find_line(text, section))
        _check_unknown(user_section, set(DEFAULTS[section]), section,
                       text, path)

    for dotted in ("laser.alpha", "laser.kappa", "laser.phi", "laser.P",
                   "laser.eta", "laser.D_noise"):
        _require_number(doc, dotted, text, path)
    _require_number(doc, "laser.tau", text, path, minimum=0.0)
    _require_number(doc, "laser.T_LK", text, path, minimum=0.0, exclusive=True)
    _require_number(doc, "laser.dt", text, path, minimum=0.0, exclusive=True)
    _require_number(doc, "clocking.T", text, path, minimum=0.0, exclusive=True)
    _require_number(doc, "clocking.N_V", text, path, minimum=1)
    _require_number(doc, "L", text, path, minimum=1)
    _require_number(doc, "buffer", text, path, minimum=0)
    _require_number(doc, "transient_time", text, path, minimum=0.0)
    _require_number(doc, "capacity.D_max", text, path, minimum=1)
    _require_number(doc, "capacity.max_delay", text, path, minimum=1)
    _require_number(doc, "capacity.cutoff", text, path, minimum=0.0,
                    exclusive=True)
    _require_number(doc, "capacity.window", text, path, minimum=0)
    _require_number(doc, "capacity.stall_limit", text, path, minimum=1)
    _require_number(doc, "narma.n_train", text, path, minimum=1)
    _require_number(doc, "narma.n_test", text, path, minimum=1)
    _require_number(doc, "narma.burn_in", text, path, minimum=0)
    _require_number(doc, "narma.regularization", text, path, minimum=0.0)
    _require_number(doc, "spectrum.N", text, path, minimum=1)
    _require_number(doc, "simulate.duration", text, path, minimum=0.0,
                    exclusive=True)
    _require_number(doc, "simulate.stride", text, path, minimum=1)
    _require_number(doc, "simulate.transient", text, path, minimum=0.0)
    for key in DEFAULTS["seeds"]:
        _require_number(doc, f"seeds.{key}", text, path, minimum=0)

    if doc["buffer"] >= doc["L"]:
        raise ConfigError(
            f"'buffer' ({doc['buffer']}) must be smaller than 'L' ({doc['L']})",
            path, _find_line(text, "buffer"))
    if doc["tau_per_T"] is not None:
        tpt = doc["tau_per_T"]
        if not _is_number(tpt) or tpt <= 0.0:
            raise ConfigError(f"'tau_per_T' must be null or > 0, got {tpt!r}",
                              path, _find_line(text, "tau_per_T"))
    if not isinstance(doc["spectra_only"], bool):
        raise ConfigError("'spectra_only' must be true or false",
                          path, _find_line(text, "spectra_only"))
    if not isinstance(doc["narma"]["enabled"], bool):
        raise ConfigError("'narma.enabled' must be true or false",
                          path, _find_line(text, "enabled"))
    if doc["out"] is not None and not isinstance(doc["out"], str):
        raise ConfigError("'out' must be null or a path string",
                          path, _find_line(text, "out"))

    if not isinstance(doc["sweep"], list):
        raise ConfigError("'sweep' must be a list of axis objects",
                          path, _find_line(text, "sweep"))
    for i, axis in enumerate(doc["sweep"]):
        line = _find_line(text, "parameter")
        if not isinstance(axis, dict):
            raise ConfigError(f"sweep axis {i} must be an object", path, line)
        unknown = set(axis) - _AXIS_KEYS
        if unknown:
            raise ConfigError(
                f"sweep axis {i} has unknown keys {sorted(unknown)}",
                path, line)
        missing = {"parameter", "min", "max", "count"} - set(axis)
        if missing:
            raise ConfigError(
                f"sweep axis {i} is missing {sorted(missing)}", path, line)
        if axis["parameter"] not in SWEEPABLE:
            raise ConfigError(
                f"sweep axis {i} targets '{axis['parameter']}'; "
                f"valid parameters: {', '.join(SWEEPABLE)}", path,
                _find_line(text, axis["parameter"]) or line)
        if not (_is_number(axis["min"]) and _is_number(axis["max"])):
            raise ConfigError(f"sweep axis {i} bounds must be numbers",
                              path, line)
        if axis["min"] > axis["max"]:
            raise ConfigError(f"sweep axis {i} has min > max", path, line)
        count = axis["count"]
        if not isinstance(count, int) or isinstance(count, bool) or count < 1:
            raise ConfigError(
                f"sweep axis {i} count must be an integer >= 1", path, line)
        spacing = axis.get("spacing", "linear")
        if spacing not in ("linear", "log"):
            raise ConfigError(
                f"sweep axis {i} spacing must be 'linear' or 'log'",
                path, line)
        if spacing == "log" and axis["min"] <= 0.0:
            raise ConfigError(
                f"sweep axis {i} uses log spacing with min <= 0", path, line)


def load_config(path: str | None, overrides: list[str] | None = None,
                paper_scale: bool = False) -> ExperimentConfig:
    """Read, patch and validate a configuration.

    ``path`` may be None to start from the defaults.  Overrides apply after
    the paper-scale expansion so explicit values always win.
    """
    config = (ExperimentConfig.from_file(path) if path is not None
              else ExperimentConfig())
    if paper_scale:
        config = config.paper_scale()
    updates = parse_overrides(list(overrides or []))
    if updates:
        config = config.with_updates(updates)
    return config
