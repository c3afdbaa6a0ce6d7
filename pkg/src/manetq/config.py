"""Scenario configuration: flat ``key: value`` files with dotted section keys.

Example::

    # three-protocol comparison, congested
    nodes: 30
    protocol: nfpqr-clustered
    nfpqr.alpha: 1.0
    queue.kendall: [M/M/1]:{10/inf/FCFS}
"""

from __future__ import annotations

import dataclasses
import logging
import math
import typing
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Optional

from .queueing.kendall import INF, ParseError as KendallParseError, parse_kendall

log = logging.getLogger(__name__)

PROTOCOLS = ("dsr", "nfpqr", "nfpqr-clustered")


class ConfigError(ValueError):
    pass


class ConfigParseError(ConfigError):
    def __init__(self, lineno: int, msg: str):
        self.lineno = lineno
        super().__init__(f"line {lineno}: {msg}")


class UnknownKey(ConfigError):
    def __init__(self, key: str, lineno: Optional[int] = None):
        self.key = key
        where = f"line {lineno}: " if lineno else ""
        super().__init__(f"{where}unknown key {key!r}")


class InvalidValue(ConfigError):
    def __init__(self, key: str, msg: str):
        self.key = key
        super().__init__(f"invalid value for {key!r}: {msg}")


@dataclass(frozen=True)
class AreaConfig:
    width: float = 1000.0
    height: float = 1000.0


@dataclass(frozen=True)
class TrafficConfig:
    flows: int = 10
    rate: Optional[float] = None  # packets/s per flow; None calibrates from load
    load: float = 0.7  # target busiest-node offered load as a fraction of mu
    packet_bytes: int = 512
    control_bytes: int = 64
    start: float = 1.0
    stop: Optional[float] = None  # stop generating here; None runs to sim_time


@dataclass(frozen=True)
class MobilityConfig:
    speed_min: float = 1.0
    speed_max: float = 5.0
    pause: float = 5.0


@dataclass(frozen=True)
class QueueConfig:
    capacity: int = 10
    service_rate: float = 10.0
    discipline: str = "FIFO"
    servers: int = 1
    dsr_capacity: int = 50
    kendall: Optional[str] = None


@dataclass(frozen=True)
class DsrConfig:
    max_ttl: int = 16
    cache_reply: bool = True
    promiscuous: bool = True
    retransmit_limit: int = 3
    cache_size: int = 4
    seen_expiry: float = 30.0
    buffer_capacity: int = 64
    buffer_timeout: float = 10.0
    request_timeout: float = 0.5
    max_request_timeout: float = 10.0


@dataclass(frozen=True)
class NfpqrConfig:
    alpha: float = 1.0
    beta: float = 1.0
    theta_q: float = 0.8
    theta_e: float = 0.1
    w_ref: Optional[float] = None
    window: int = 50
    replies: int = 3
    reelect_interval: float = 5.0


@dataclass(frozen=True)
class EnergyConfig:
    p_tx: float = 1.4
    p_rx: float = 1.0
    p_idle: float = 0.83
    p_sleep: float = 0.13
    initial: float = 100.0
    link_rate: float = 2e6


@dataclass(frozen=True)
class BehaviorConfig:
    mode: str = "selfish"
    selfish_fraction: float = 0.0
    drop_probability: float = 1.0


@dataclass(frozen=True)
class PowerConfig:
    sleep_planning: bool = False
    interval: float = 5.0


@dataclass(frozen=True)
class ScenarioConfig:
    nodes: int = 30
    range: float = 250.0
    interference_range: float = 500.0
    sim_time: float = 100.0
    periods: int = 5
    protocol: str = "dsr"
    seed: int = 1
    tick: float = 0.1
    placement: Optional[str] = None
    area: AreaConfig = field(default_factory=AreaConfig)
    traffic: TrafficConfig = field(default_factory=TrafficConfig)
    mobility: MobilityConfig = field(default_factory=MobilityConfig)
    queue: QueueConfig = field(default_factory=QueueConfig)
    dsr: DsrConfig = field(default_factory=DsrConfig)
    nfpqr: NfpqrConfig = field(default_factory=NfpqrConfig)
    energy: EnergyConfig = field(default_factory=EnergyConfig)
    behavior: BehaviorConfig = field(default_factory=BehaviorConfig)
    power: PowerConfig = field(default_factory=PowerConfig)

    def with_values(self, **dotted: Any) -> "ScenarioConfig":
        """Copy with overrides given as ``section__key=value`` or top-level keys."""
        cfg = self
        for k, v in dotted.items():
            cfg = set_key(cfg, k.replace("__", "."), v)
        return cfg

    def flat(self) -> dict[str, Any]:
        out: dict[str, Any] = {}
        for f in fields(self):
            v = getattr(self, f.name)
            if dataclasses.is_dataclass(v):
                for g in fields(v):
                    out[f"{f.name}.{g.name}"] = getattr(v, g.name)
            else:
                out[f.name] = v
        return out


SECTIONS = {f.name: f.type for f in fields(ScenarioConfig) if f.name in (
    "area", "traffic", "mobility", "queue", "dsr", "nfpqr", "energy", "behavior", "power")}
_HINTS = typing.get_type_hints(ScenarioConfig)
_SECTION_HINTS = {name: typing.get_type_hints(_HINTS[name]) for name in SECTIONS}


def _coerce(key: str, raw: Any, hint) -> Any:
    optional = False
    if typing.get_origin(hint) is typing.Union:
        args = [a for a in typing.get_args(hint) if a is not type(None)]
        optional, hint = True, args[0]
    if isinstance(raw, str):
        text = raw.strip()
        if optional and text.lower() in ("none", "auto", ""):
            return None
        try:
            if hint is bool:
                low = text.lower()
                if low in ("true", "yes", "on", "1"):
                    return True
                if low in ("false", "no", "off", "0"):
                    return False
                raise ValueError(f"expected boolean, got {text!r}")
            if hint is int:
                return int(text)
            if hint is float:
                value = float(text)
                if math.isnan(value):
                    raise ValueError("NaN not allowed")
                return value
            return text
        except ValueError as exc:
            raise InvalidValue(key, str(exc)) from None
    if raw is None:
        if optional:
            return None
        raise InvalidValue(key, "value required")
    if hint is float and isinstance(raw, (int, float)) and not isinstance(raw, bool):
        return float(raw)
    if hint is int and isinstance(raw, int) and not isinstance(raw, bool):
        return raw
    if hint is bool and isinstance(raw, bool):
        return raw
    if hint is str and isinstance(raw, str):
        return raw
    raise InvalidValue(key, f"expected {hint.__name__}, got {raw!r}")


def set_key(cfg: ScenarioConfig, key: str, raw: Any, lineno: Optional[int] = None) -> ScenarioConfig:
    if "." in key:
        section, name = key.split(".", 1)
        if section not in SECTIONS or name not in _SECTION_HINTS[section]:
            raise UnknownKey(key, lineno)
        value = _coerce(key, raw, _SECTION_HINTS[section][name])
        return replace(cfg, **{section: replace(getattr(cfg, section), **{name: value})})
    if key not in _HINTS or key in SECTIONS:
        raise UnknownKey(key, lineno)
    return replace(cfg, **{key: _coerce(key, raw, _HINTS[key])})


def _positive(cfg_key: str, v: float) -> None:
    if not v > 0:
        raise InvalidValue(cfg_key, f"must be positive, got {v}")


def validate(cfg: ScenarioConfig) -> ScenarioConfig:
    _positive("nodes", cfg.nodes)
    _positive("range", cfg.range)
    _positive("sim_time", cfg.sim_time)
    _positive("periods", cfg.periods)
    _positive("tick", cfg.tick)
    _positive("area.width", cfg.area.width)
    _positive("area.height", cfg.area.height)
    if cfg.interference_range < cfg.range:
        raise InvalidValue("interference_range", "must be >= range")
    if cfg.protocol not in PROTOCOLS:
        raise InvalidValue("protocol", f"expected one of {', '.join(PROTOCOLS)}, got {cfg.protocol!r}")
    if not 0 <= cfg.seed < 2 ** 64:
        raise InvalidValue("seed", "must be a 64-bit unsigned integer")
    t = cfg.traffic
    if t.flows < 0:
        raise InvalidValue("traffic.flows", "must be >= 0")
    if t.flows and cfg.nodes < 2:
        raise InvalidValue("traffic.flows", "traffic needs at least two nodes")
    if t.rate is not None:
        _positive("traffic.rate", t.rate)
    _positive("traffic.load", t.load)
    _positive("traffic.packet_bytes", t.packet_bytes)
    _positive("traffic.control_bytes", t.control_bytes)
    if t.start < 0:
        raise InvalidValue("traffic.start", "must be >= 0")
    if t.stop is not None and t.stop < t.start:
        raise InvalidValue("traffic.stop", "must not precede traffic.start")
    m = cfg.mobility
    if m.speed_min < 0 or m.speed_max < m.speed_min:
        raise InvalidValue("mobility.speed_max", "need 0 <= speed_min <= speed_max")
    if m.pause < 0:
        raise InvalidValue("mobility.pause", "must be >= 0")
    q = cfg.queue
    _positive("queue.capacity", q.capacity)
    _positive("queue.service_rate", q.service_rate)
    _positive("queue.servers", q.servers)
    _positive("queue.dsr_capacity", q.dsr_capacity)
    if q.discipline.upper() not in ("FIFO", "FCFS", "LIFO", "LCFS", "PRIORITY", "PRI"):
        raise InvalidValue("queue.discipline", f"unknown discipline {q.discipline!r}")
    if q.kendall is not None:
        try:
            spec = parse_kendall(q.kendall)
        except KendallParseError as exc:
            raise InvalidValue("queue.kendall", str(exc)) from None
        if spec.arrival != "M" or spec.service != "M":
            raise InvalidValue("queue.kendall", "only M/M forwarding queues are executable")
    d = cfg.dsr
    _positive("dsr.max_ttl", d.max_ttl)
    _positive("dsr.cache_size", d.cache_size)
    _positive("dsr.buffer_capacity", d.buffer_capacity)
    _positive("dsr.request_timeout", d.request_timeout)
    if d.retransmit_limit < 0:
        raise InvalidValue("dsr.retransmit_limit", "must be >= 0")
    n = cfg.nfpqr
    if n.alpha < 0 or n.beta < 0 or n.alpha + n.beta <= 0:
        raise InvalidValue("nfpqr.alpha", "alpha, beta >= 0 and alpha + beta > 0")
    if not 0 <= n.theta_q <= 1 or not 0 <= n.theta_e <= 1:
        raise InvalidValue("nfpqr.theta_q", "thresholds must lie in [0, 1]")
    if n.w_ref is not None:
        _positive("nfpqr.w_ref", n.w_ref)
    _positive("nfpqr.window", n.window)
    _positive("nfpqr.replies", n.replies)
    _positive("nfpqr.reelect_interval", n.reelect_interval)
    e = cfg.energy
    if not (e.p_tx >= e.p_rx > e.p_idle > e.p_sleep >= 0):
        raise InvalidValue("energy.p_idle", "need p_tx >= p_rx > p_idle > p_sleep >= 0")
    _positive("energy.initial", e.initial)
    _positive("energy.link_rate", e.link_rate)
    b = cfg.behavior
    if b.mode not in ("selfish", "faulty"):
        raise InvalidValue("behavior.mode", "expected selfish or faulty")
    if not 0 <= b.selfish_fraction <= 1:
        raise InvalidValue("behavior.selfish_fraction", "must lie in [0, 1]")
    if not 0 <= b.drop_probability <= 1:
        raise InvalidValue("behavior.drop_probability", "must lie in [0, 1]")
    _positive("power.interval", cfg.power.interval)
    return cfg


def queue_capacity(cfg: ScenarioConfig) -> float:
    """Forwarding queue capacity K for the configured protocol."""
    if cfg.protocol == "dsr":
        return cfg.queue.dsr_capacity
    if cfg.queue.kendall is not None:
        cap = parse_kendall(cfg.queue.kendall).capacity
        return math.inf if cap == INF else cap
    return cfg.queue.capacity


def queue_shape(cfg: ScenarioConfig) -> tuple[int, str]:
    """(servers, discipline) honouring an optional Kendall string."""
    if cfg.queue.kendall is not None:
        spec = parse_kendall(cfg.queue.kendall)
        return spec.servers, {"FCFS": "FIFO", "LCFS": "LIFO", "PRI": "PRIORITY"}[spec.ranking]
    return cfg.queue.servers, cfg.queue.discipline


def parse_config(text: str) -> ScenarioConfig:
    cfg = ScenarioConfig()
    seen: dict[str, int] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if ":" not in line:
            raise ConfigParseError(lineno, f"expected 'key: value', got {raw.strip()!r}")
        key, value = line.split(":", 1)
        key = key.strip()
        if not key or " " in key:
            raise ConfigParseError(lineno, f"malformed key {key!r}")
        if key in seen:
            raise ConfigParseError(lineno, f"duplicate key {key!r} (first on line {seen[key]})")
        seen[key] = lineno
        cfg = set_key(cfg, key, value.strip(), lineno)
    cfg = validate(cfg)
    if cfg.protocol == "dsr":
        ignored = sorted(k for k in seen if k.startswith("nfpqr."))
        if ignored:
            log.warning("protocol dsr ignores %s", ", ".join(ignored))
    return cfg


def load_config(path) -> ScenarioConfig:
    return parse_config(Path(path).read_text(encoding="utf-8"))


def dump_config(cfg: ScenarioConfig) -> str:
    lines = []
    for k, v in cfg.flat().items():
        if v is None:
            v = "auto"
        elif isinstance(v, bool):
            v = "true" if v else "false"
        lines.append(f"{k}: {v}")
    return "\n".join(lines) + "\n"
