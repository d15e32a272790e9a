"""Run configuration: defaults < config file < command-line overrides.

Every model and agent-based setting is addressable by a dotted key such as
``params.beta`` or ``abm.n_agents``; sweep resolution lives under ``sweep.*``.
"""
from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Mapping, Optional, Union

import yaml

from .abm import AbmConfig
from .ode import ModelParams

FORMATS = ("csv", "json")


@dataclass(frozen=True)
class SweepSettings:
    replicates: Optional[int] = None     # None: each preset's own default
    n_k: int = 50
    k_min: float = 0.50
    k_max: float = 0.99
    n_crisis: int = 35
    crisis_max: float = 0.25
    statistic: str = "median"
    smoothing: bool = False
    grid_n: int = 100
    zoom_n: int = 120

    def __post_init__(self):
        if self.replicates is not None and self.replicates < 1:
            raise ValueError(f"replicates must be >= 1, got {self.replicates}")
        for name in ("n_k", "n_crisis", "grid_n", "zoom_n"):
            if getattr(self, name) < 2:
                raise ValueError(f"{name} must be >= 2, got {getattr(self, name)}")
        if not 0.0 <= self.k_min < self.k_max <= 1.2:
            raise ValueError(f"need 0 <= k_min < k_max <= 1.2, got [{self.k_min}, {self.k_max}]")
        if not 0.0 < self.crisis_max <= 1.0:
            raise ValueError(f"crisis_max must lie in (0, 1], got {self.crisis_max}")
        if self.statistic not in ("median", "mean"):
            raise ValueError(f"statistic must be median or mean, got {self.statistic!r}")


@dataclass(frozen=True)
class RunConfig:
    experiment: Optional[str] = None
    seed: int = 42
    threads: Optional[int] = None
    output_dir: str = "results"
    format: str = "csv"
    params: ModelParams = field(default_factory=ModelParams)
    abm: AbmConfig = field(default_factory=AbmConfig)
    sweep: SweepSettings = field(default_factory=SweepSettings)

    def __post_init__(self):
        if not 0 <= self.seed < 2**64:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        if self.threads is not None and self.threads < 1:
            raise ValueError(f"threads must be >= 1, got {self.threads}")
        if self.format not in FORMATS:
            raise ValueError(f"format must be one of {FORMATS}, got {self.format!r}")

    def abm_config(self) -> AbmConfig:
        """Agent-based configuration carrying this run's model parameters and seed."""
        return self.abm.replace(params=self.params, seed=self.seed)

    def to_dict(self) -> dict:
        abm = dataclasses.asdict(self.abm)
        abm.pop("params")
        abm.pop("seed")
        return dict(experiment=self.experiment, seed=self.seed, threads=self.threads,
                    output_dir=self.output_dir, format=self.format,
                    params=dataclasses.asdict(self.params), abm=abm, sweep=dataclasses.asdict(self.sweep))


class ConfigError(ValueError):
    pass


_TOP = {"experiment": (str, type(None)), "seed": int, "threads": (int, type(None)),
        "output_dir": str, "format": str}
_SECTIONS = {
    "params": ModelParams,
    "abm": AbmConfig,
    "sweep": SweepSettings,
}
_ABM_HIDDEN = ("params", "seed")


def _section_fields(section: str) -> dict:
    hints = {f.name: f.type for f in dataclasses.fields(_SECTIONS[section])}
    if section == "abm":
        for k in _ABM_HIDDEN:
            hints.pop(k)
    return hints


def valid_keys() -> list[str]:
    keys = list(_TOP)
    for sec in _SECTIONS:
        keys += [f"{sec}.{k}" for k in _section_fields(sec)]
    return keys


def _coerce(key: str, value: Any, default: Any) -> Any:
    """Convert ``value`` (possibly a command-line string) to the type of ``default``."""
    target = type(default)
    if isinstance(value, str) and target is not str:
        text = value.strip()
        if text.lower() in ("none", "null"):
            return None
        if target is bool:
            if text.lower() in ("true", "1", "yes", "on"):
                return True
            if text.lower() in ("false", "0", "no", "off"):
                return False
            raise ConfigError(f"{key}: expected a boolean, got {value!r}")
        try:
            value = yaml.safe_load(text)
        except yaml.YAMLError:
            raise ConfigError(f"{key}: cannot parse {value!r}") from None
    if default is None:
        return value
    if target is bool:
        if not isinstance(value, bool):
            raise ConfigError(f"{key}: expected a boolean, got {value!r}")
        return value
    if target is int:
        if isinstance(value, bool) or not isinstance(value, int):
            if isinstance(value, float) and value.is_integer():
                return int(value)
            raise ConfigError(f"{key}: expected an integer, got {value!r}")
        return value
    if target is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{key}: expected a number, got {value!r}")
        return float(value)
    if target is str and not isinstance(value, str):
        raise ConfigError(f"{key}: expected a string, got {value!r}")
    return value


def _flatten(tree: Mapping, prefix: str = "") -> dict:
    flat = {}
    for k, v in tree.items():
        key = f"{prefix}{k}"
        if isinstance(v, Mapping):
            flat.update(_flatten(v, key + "."))
        else:
            flat[key] = v
    return flat


def load_file(path: Union[str, Path]) -> dict:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file {path} does not exist")
    text = path.read_text(encoding="utf-8")
    try:
        data = json.loads(text) if path.suffix == ".json" else yaml.safe_load(text)
    except (json.JSONDecodeError, yaml.YAMLError) as exc:
        raise ConfigError(f"{path}: {exc}") from None
    if data is None:
        return {}
    if not isinstance(data, Mapping):
        raise ConfigError(f"{path}: top level must be a mapping")
    return _flatten(data)


def parse_assignments(items: Iterable[str]) -> dict:
    """``["params.beta=0.05", ...]`` to a flat dict of strings."""
    out = {}
    for item in items:
        if "=" not in item:
            raise ConfigError(f"expected KEY=VALUE, got {item!r}")
        k, v = item.split("=", 1)
        out[k.strip()] = v
    return out


def build(flat: Mapping[str, Any], base: Optional[RunConfig] = None) -> RunConfig:
    """Apply flat dotted-key settings on top of ``base`` (defaults if omitted)."""
    base = base or RunConfig()
    top = {k: getattr(base, k) for k in _TOP}
    sections = {"params": dataclasses.asdict(base.params), "sweep": dataclasses.asdict(base.sweep)}
    abm = dataclasses.asdict(base.abm)
    for k in _ABM_HIDDEN:
        abm.pop(k)
    sections["abm"] = abm
    defaults = {"params": ModelParams(), "abm": AbmConfig(), "sweep": SweepSettings()}
    unknown = []
    for key, value in flat.items():
        if key in _TOP:
            default = getattr(RunConfig(), key)
            if key in ("threads", "experiment"):
                default = 1 if key == "threads" else ""
                if value is None or (isinstance(value, str) and value.lower() in ("none", "null")):
                    top[key] = None
                    continue
            top[key] = _coerce(key, value, default)
            continue
        sec, _, name = key.partition(".")
        if sec not in sections or name not in sections[sec]:
            unknown.append(key)
            continue
        default = getattr(defaults[sec], name)
        sections[sec][name] = _coerce(key, value, 1 if default is None else default) if value is not None else None
    if unknown:
        raise ConfigError(f"unknown key(s): {', '.join(unknown)}; valid keys: {', '.join(valid_keys())}")
    try:
        params = ModelParams(**sections["params"])
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"params.{exc}") from None
    try:
        abm = AbmConfig(params=params, **sections["abm"])
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"abm.{exc}") from None
    try:
        sweep = SweepSettings(**sections["sweep"])
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"sweep.{exc}") from None
    try:
        return RunConfig(params=params, abm=abm, sweep=sweep, **top)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None


def parse_config(path: Optional[Union[str, Path]] = None, overrides: Optional[Mapping[str, Any]] = None,
                 defaults: Optional[Mapping[str, Any]] = None, **flags) -> RunConfig:
    """Resolve defaults, then the config file, then ``overrides``, then explicit flags.

    ``defaults`` replaces built-in defaults (e.g. a per-command output
    directory).  ``flags`` are top-level settings (seed, threads, output_dir,
    format, experiment); ``None`` values are ignored so unset command-line
    flags do not mask the file.
    """
    flat: dict = dict(defaults or {})
    if path is not None:
        flat.update(load_file(path))
    if overrides:
        flat.update(overrides)
    for k, v in flags.items():
        if k not in _TOP:
            raise ConfigError(f"unknown flag {k!r}")
        if v is not None:
            flat[k] = v
    return build(flat)
