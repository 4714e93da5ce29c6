"""Scenario configuration and its flat ``key = value`` text format.

Nested sections use dotted keys (``radio.bandwidth_hz = 1e6``); ``#`` starts
a comment. Keys that are not set keep their defaults.
"""
from __future__ import annotations

import copy
import dataclasses
import enum
import math
import types
import typing
from dataclasses import dataclass, field
from pathlib import Path

from .mobility import MobilityParams, Model, default_groups
from .radio import FailureParams, RadioParams


class ConfigError(ValueError):
    def __init__(self, message: str, key: str | None = None, line: int | None = None):
        self.key = key
        self.line = line
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)


class ReliabilityMode(str, enum.Enum):
    FRACTIONAL = "fractional"
    ALL_OR_NOTHING = "all_or_nothing"


class TieBreak(str, enum.Enum):
    LOWEST_ID = "lowest_id"
    AGENT_ORDER = "agent_order"  # each agent draws its own random node ranking


@dataclass
class ScenarioConfig:
    n_nodes: int = 25
    m_agents: int = 25
    q_runs: int = 200
    sp_total: int = 2
    max_fr: int = 20
    duration: float = 750.0  # minutes
    mobility: MobilityParams = field(default_factory=MobilityParams)
    radio: RadioParams = field(default_factory=RadioParams)
    failure: FailureParams = field(default_factory=FailureParams)
    observer_node: int | None = None  # None means the highest node id
    reliability_mode: ReliabilityMode = ReliabilityMode.FRACTIONAL
    seed: int = 0
    # steps over which arrivals count towards a node's incoming frequency
    fr_window: int = 6
    # steps an agent waits for its exhausted cluster to grow before stopping
    patience: int = 3
    max_retries: int = 3
    tie_break: TieBreak = TieBreak.AGENT_ORDER
    include_killed: bool = True
    spawn: bool = True
    edge_list: str | None = None

    def __post_init__(self) -> None:
        self.reliability_mode = ReliabilityMode(self.reliability_mode)
        self.tie_break = TieBreak(self.tie_break)

    @property
    def lfp(self) -> float:
        return self.failure.lfp

    @lfp.setter
    def lfp(self, value: float) -> None:
        self.failure.lfp = value

    @property
    def duration_s(self) -> float:
        return self.duration * 60.0

    @property
    def max_steps(self) -> int:
        return max(1, math.ceil(self.duration_s / self.mobility.delta_t - 1e-9))

    @property
    def observer(self) -> int:
        return self.n_nodes - 1 if self.observer_node is None else self.observer_node

    def group_map(self) -> dict[int, int]:
        return dict(self.mobility.group_map) or default_groups(self.n_nodes)

    def resolved_failure(self) -> FailureParams:
        """Failure parameters with duration-relative Weibull scales filled in."""
        fp = copy.copy(self.failure)
        if fp.node_weibull_scale is None:
            fp.node_weibull_scale = 10.0 * self.duration_s
        if fp.agent_weibull_scale is None:
            fp.agent_weibull_scale = 20.0 * self.duration_s
        return fp

    def resolved_mobility(self) -> MobilityParams:
        mp = copy.copy(self.mobility)
        if mp.model == Model.RPGM:
            mp.group_map = self.group_map()
        return mp

    def validate(self) -> "ScenarioConfig":
        def need(cond: bool, key: str, msg: str) -> None:
            if not cond:
                raise ConfigError(msg, key=key)

        for key in ("n_nodes", "m_agents", "q_runs", "max_fr", "fr_window", "max_retries"):
            need(getattr(self, key) >= 1, key, f"{key} must be >= 1")
        need(self.patience >= 0, "patience", "patience must be >= 0")
        try:
            self.reliability_mode = ReliabilityMode(self.reliability_mode)
            self.tie_break = TieBreak(self.tie_break)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        need(0 <= self.sp_total <= self.n_nodes, "sp_total", "sp_total must be in [0, n_nodes]")
        need(self.duration > 0, "duration", "duration must be > 0")
        need(self.observer_node is None or 0 <= self.observer_node < self.n_nodes,
             "observer_node", "observer_node must be a valid node id")
        for section, obj in (("radio", self.radio), ("failure", self.failure)):
            try:
                obj.validate()
            except ValueError as exc:
                raise ConfigError(str(exc), key=_guess_key(section, obj, str(exc))) from None
        try:
            self.mobility.validate(self.n_nodes)
        except ValueError as exc:
            raise ConfigError(str(exc), key=_guess_key("mobility", self.mobility, str(exc))) from None
        return self


def _guess_key(section: str, obj, message: str) -> str | None:
    for f in dataclasses.fields(obj):
        if f.name in message:
            if section == "failure" and f.name == "lfp":
                return "lfp"
            return f"{section}.{f.name}"
    return None


_SECTIONS = ("mobility", "radio", "failure")


def _field_types(cls) -> dict[str, typing.Any]:
    return typing.get_type_hints(cls)


def _keys() -> dict[str, tuple[str | None, str, typing.Any]]:
    """Map every config key to (section, attribute, type)."""
    keys: dict[str, tuple[str | None, str, typing.Any]] = {}
    hints = _field_types(ScenarioConfig)
    for f in dataclasses.fields(ScenarioConfig):
        if f.name in _SECTIONS:
            sub = hints[f.name]
            for name, tp in _field_types(sub).items():
                if f.name == "failure" and name == "lfp":
                    continue
                keys[f"{f.name}.{name}"] = (f.name, name, tp)
        else:
            keys[f.name] = (None, f.name, hints[f.name])
    keys["lfp"] = ("failure", "lfp", float)
    return keys


KEYS = _keys()


def _parse_bool(text: str) -> bool:
    low = text.lower()
    if low in ("true", "yes", "1", "on"):
        return True
    if low in ("false", "no", "0", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _parse_group_map(text: str) -> dict[int, int]:
    out: dict[int, int] = {}
    for item in filter(None, (p.strip() for p in text.split(","))):
        node, _, leader = item.partition(":")
        out[int(node)] = int(leader)
    return out


def _convert(text: str, tp) -> typing.Any:
    origin = typing.get_origin(tp)
    args = typing.get_args(tp)
    if origin in (typing.Union, types.UnionType) and type(None) in args:
        if text.lower() in ("none", "null", ""):
            return None
        (tp,) = [a for a in args if a is not type(None)]
        origin = typing.get_origin(tp)
    if tp is bool:
        return _parse_bool(text)
    if tp is int:
        return int(text)
    if tp is float:
        return float(text)
    if tp is str:
        return text
    if origin is dict:
        return _parse_group_map(text)
    if isinstance(tp, type) and issubclass(tp, enum.Enum):
        try:
            return tp(text)
        except ValueError:
            return tp(text.upper())
    raise TypeError(f"unsupported field type {tp!r}")


def set_value(cfg: ScenarioConfig, key: str, value) -> None:
    """Assign ``value`` (text or already typed) to a dotted key."""
    if key not in KEYS:
        raise ConfigError(f"unknown key {key!r}", key=key)
    section, name, tp = KEYS[key]
    if isinstance(value, str):
        value = _convert(value, tp)
    target = getattr(cfg, section) if section else cfg
    if isinstance(target, MobilityParams) and name == "model":
        value = Model(value)
    if target is cfg and name == "reliability_mode":
        value = ReliabilityMode(value)
    setattr(target, name, value)


def get_value(cfg: ScenarioConfig, key: str):
    if key not in KEYS:
        raise ConfigError(f"unknown key {key!r}", key=key)
    section, name, _ = KEYS[key]
    return getattr(getattr(cfg, section) if section else cfg, name)


def with_value(cfg: ScenarioConfig, key: str, value) -> ScenarioConfig:
    out = copy.deepcopy(cfg)
    set_value(out, key, value)
    return out.validate()


def _strip_comment(line: str) -> str:
    if line.lstrip().startswith("#"):
        return ""
    idx = line.find(" #")
    return line[:idx] if idx >= 0 else line


def parse_config(text: str) -> ScenarioConfig:
    """Parse config text into a validated :class:`ScenarioConfig`."""
    cfg = ScenarioConfig()
    where: dict[str, int] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = _strip_comment(raw).strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", line=lineno)
        if key not in KEYS:
            raise ConfigError(f"unknown key {key!r}", key=key, line=lineno)
        try:
            set_value(cfg, key, value)
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"bad value for {key}: {exc}", key=key, line=lineno) from None
        where[key] = lineno
    try:
        cfg.validate()
    except ConfigError as exc:
        line = where.get(exc.key) if exc.key else None
        raise ConfigError(str(exc), key=exc.key, line=line) from None
    return cfg


def load_config(path: str | Path | None) -> ScenarioConfig:
    if path is None:
        return ScenarioConfig().validate()
    return parse_config(Path(path).read_text())


def _format(value) -> str:
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, enum.Enum):
        return str(value.value)
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, dict):
        return ",".join(f"{k}:{v}" for k, v in sorted(value.items()))
    return str(value)


def serialize(cfg: ScenarioConfig) -> str:
    """Render every key, so ``parse_config(serialize(cfg)) == cfg``."""
    return "".join(f"{key} = {_format(get_value(cfg, key))}\n" for key in KEYS)
