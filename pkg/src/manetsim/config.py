"""Run configuration: defaults, plain-text config parsing, validation.

The config file is flat ``key = value`` text with dotted section prefixes
(``mac.slot``, ``mobility.v_max`` ...).  Durations in the file are seconds;
everything is converted to integer microseconds at load so the simulator
core never touches float time.  One file (plus the seed inside it) fully
determines a run.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

US = 1_000_000  # microseconds per second

PROTOCOLS = ("zd-aomdv", "aomdv")


class ConfigError(ValueError):
    pass


def _us(seconds):
    return int(round(seconds * US))


@dataclass
class MobilityConfig:
    v_min: float = 1.0            # m/s; floor avoids waypoint speed decay
    v_max: float = 5.0            # m/s; 0 disables movement
    pause_s: float = 1.0
    link_sample_s: float = 0.1    # topology-change detection tick


@dataclass
class MacConfig:
    bitrate: int = 2_000_000      # bit/s
    slot_us: int = 20
    sifs_us: int = 10
    difs_us: int = 50
    cw_min: int = 31
    cw_max: int = 1023
    retry_limit: int = 7
    rts_bytes: int = 20
    cts_bytes: int = 14
    ack_bytes: int = 14
    header_bytes: int = 28        # framing added to every payload frame
    rts_cts: str = "auto"         # on | off | auto (auto = threshold rule)
    rts_threshold: int = 256      # bytes; auto mode arms RTS/CTS above this
    broadcast_jitter_s: float = 0.005
    ideal_channel: bool = False   # lossless ordered delivery, no contention/energy


@dataclass
class RoutingConfig:
    k_paths: int = 3
    query_timer_s: float = 0.015
    rrep_wait_s: float = 0.100
    rreq_retry_timeout_s: float = 1.0
    rreq_retries: int = 3
    rebroadcast_cap: int = 3
    ttl_max: int = 16
    rreq_seen_lifetime_s: float = 5.0
    path_idle_lifetime_s: float = 10.0
    buffer_limit: int = 64        # data packets queued per destination during discovery
    reply_jitter_s: float = 0.003  # de-synchronizes query answers; 0 on ideal channel
    rediscovery_holddown_s: float = 0.2
    flush_spacing_s: float = 0.006  # pacing of buffered-data drain after selection


@dataclass
class SizesConfig:
    rreq_base: int = 44
    rreq_per_hop: int = 4
    rrep: int = 36
    query: int = 24
    query_reply: int = 20
    data_header: int = 28
    data_payload: int = 512


@dataclass
class TrafficConfig:
    flows: list = field(default_factory=list)  # "src>dst@rate_bps" strings
    random_flows: int = 0
    rate_bps: int = 35_000
    start_s: float = 1.0
    stop_s: float = -1.0          # <0 means run horizon


@dataclass
class EnergyConfig:
    initial_j: float = 50.0
    p_tx_w: float = 1.4
    p_rx_w: float = 1.0
    p_overhear_w: float = 1.0
    p_idle_w: float = 0.05
    idle_tick_s: float = 1.0


@dataclass
class RunConfig:
    protocol: str = "zd-aomdv"
    seed: int = 1
    nodes: int = 50
    horizon_s: float = 300.0
    arena_width: float = 750.0
    arena_height: float = 750.0
    radio_range: float = 250.0
    topology_file: str = ""       # static adjacency fixture; bypasses mobility
    mobility: MobilityConfig = field(default_factory=MobilityConfig)
    mac: MacConfig = field(default_factory=MacConfig)
    routing: RoutingConfig = field(default_factory=RoutingConfig)
    sizes: SizesConfig = field(default_factory=SizesConfig)
    traffic: TrafficConfig = field(default_factory=TrafficConfig)
    energy: EnergyConfig = field(default_factory=EnergyConfig)

    # --- derived microsecond views -------------------------------------
    @property
    def horizon_us(self):
        return _us(self.horizon_s)

    def validate(self):
        if self.protocol not in PROTOCOLS:
            raise ConfigError(f"protocol: unknown value {self.protocol!r} (use {'|'.join(PROTOCOLS)})")
        if self.seed < 0:
            raise ConfigError("seed: must be >= 0")
        if self.nodes < 2 and not self.topology_file:
            raise ConfigError("nodes: need at least 2")
        if self.horizon_s < 0:
            raise ConfigError("horizon: must be >= 0")
        for name in ("arena_width", "arena_height", "radio_range"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name}: must be > 0")
        if self.mobility.v_max < 0 or self.mobility.v_min < 0:
            raise ConfigError("mobility.v_min/v_max: must be >= 0")
        if self.mobility.v_max > 0 and self.mobility.v_min > self.mobility.v_max:
            raise ConfigError("mobility.v_min: exceeds v_max")
        for name in ("pause_s", "link_sample_s"):
            if getattr(self.mobility, name) <= 0:
                raise ConfigError(f"mobility.{name[:-2]}: must be > 0")
        if self.mac.rts_cts not in ("on", "off", "auto"):
            raise ConfigError("mac.rts_cts: use on|off|auto")
        for name in ("bitrate", "slot_us", "sifs_us", "difs_us"):
            if getattr(self.mac, name) <= 0:
                raise ConfigError(f"mac.{name}: must be > 0")
        if self.mac.cw_min < 0 or self.mac.cw_max < self.mac.cw_min:
            raise ConfigError("mac.cw_max: must be >= cw_min >= 0")
        if self.routing.k_paths < 1:
            raise ConfigError("routing.k_paths: must be >= 1")
        if self.routing.reply_jitter_s < 0 or self.routing.rediscovery_holddown_s < 0 \
                or self.routing.flush_spacing_s < 0:
            raise ConfigError("routing.reply_jitter/rediscovery_holddown/flush_spacing: must be >= 0")
        if self.routing.reply_jitter_s >= self.routing.query_timer_s:
            raise ConfigError("routing.reply_jitter: must be below query_timer")
        for name in ("query_timer_s", "rrep_wait_s", "rreq_retry_timeout_s",
                     "rreq_seen_lifetime_s", "path_idle_lifetime_s"):
            if getattr(self.routing, name) <= 0:
                raise ConfigError(f"routing.{name[:-2]}: must be > 0")
        if self.routing.rebroadcast_cap < 1:
            raise ConfigError("routing.rebroadcast_cap: must be >= 1")
        if self.routing.ttl_max < 1:
            raise ConfigError("routing.ttl_max: must be >= 1")
        for f in dataclasses.fields(self.sizes):
            if getattr(self.sizes, f.name) < 0:
                raise ConfigError(f"sizes.{f.name}: must be >= 0")
        if self.traffic.rate_bps <= 0:
            raise ConfigError("traffic.rate: must be > 0")
        for spec in self.traffic.flows:
            parse_flow_spec(spec)
        if self.energy.initial_j <= 0:
            raise ConfigError("energy.initial: must be > 0")
        for name in ("p_tx_w", "p_rx_w", "p_overhear_w", "p_idle_w"):
            if getattr(self.energy, name) < 0:
                raise ConfigError(f"energy.{name}: must be >= 0")
        if self.energy.idle_tick_s <= 0:
            raise ConfigError("energy.idle_tick: must be > 0")
        return self


def parse_flow_spec(spec):
    """Parse 'src>dst@rate_bps[@start_s]' into (src, dst, rate, start or None)."""
    try:
        parts = spec.split("@")
        if len(parts) == 2:
            route, rate_s, start = parts[0], parts[1], None
        elif len(parts) == 3:
            route, rate_s, start = parts
            start = float(start)
        else:
            raise ValueError
        src, dst = route.split(">")
        rate = int(rate_s)
    except ValueError:
        raise ConfigError(f"traffic.flows: bad flow spec {spec!r} (want src>dst@rate_bps[@start_s])")
    if not src or not dst or src == dst or rate <= 0 or (start is not None and start < 0):
        raise ConfigError(f"traffic.flows: bad flow spec {spec!r}")
    return src.strip(), dst.strip(), rate, start


# Mapping of config-file keys to (object path, python type).  Durations take
# seconds in the file; *_us fields take microseconds directly.
_BOOL_TRUE = ("1", "true", "on", "yes")
_BOOL_FALSE = ("0", "false", "off", "no")

_KEYS = {
    "protocol": ("protocol", str),
    "seed": ("seed", int),
    "nodes": ("nodes", int),
    "horizon": ("horizon_s", float),
    "arena.width": ("arena_width", float),
    "arena.height": ("arena_height", float),
    "arena.radio_range": ("radio_range", float),
    "topology": ("topology_file", str),
    "mobility.v_min": ("mobility.v_min", float),
    "mobility.v_max": ("mobility.v_max", float),
    "mobility.pause": ("mobility.pause_s", float),
    "mobility.link_sample": ("mobility.link_sample_s", float),
    "mac.bitrate": ("mac.bitrate", int),
    "mac.slot_us": ("mac.slot_us", int),
    "mac.sifs_us": ("mac.sifs_us", int),
    "mac.difs_us": ("mac.difs_us", int),
    "mac.cw_min": ("mac.cw_min", int),
    "mac.cw_max": ("mac.cw_max", int),
    "mac.retry_limit": ("mac.retry_limit", int),
    "mac.header_bytes": ("mac.header_bytes", int),
    "mac.rts_cts": ("mac.rts_cts", str),
    "mac.rts_threshold": ("mac.rts_threshold", int),
    "mac.broadcast_jitter": ("mac.broadcast_jitter_s", float),
    "mac.ideal_channel": ("mac.ideal_channel", bool),
    "routing.k_paths": ("routing.k_paths", int),
    "routing.query_timer": ("routing.query_timer_s", float),
    "routing.rrep_wait": ("routing.rrep_wait_s", float),
    "routing.rreq_retry_timeout": ("routing.rreq_retry_timeout_s", float),
    "routing.rreq_retries": ("routing.rreq_retries", int),
    "routing.rebroadcast_cap": ("routing.rebroadcast_cap", int),
    "routing.ttl_max": ("routing.ttl_max", int),
    "routing.reply_jitter": ("routing.reply_jitter_s", float),
    "routing.flush_spacing": ("routing.flush_spacing_s", float),
    "routing.rediscovery_holddown": ("routing.rediscovery_holddown_s", float),
    "routing.rreq_seen_lifetime": ("routing.rreq_seen_lifetime_s", float),
    "routing.path_idle_lifetime": ("routing.path_idle_lifetime_s", float),
    "routing.buffer_limit": ("routing.buffer_limit", int),
    "sizes.rreq_base": ("sizes.rreq_base", int),
    "sizes.rreq_per_hop": ("sizes.rreq_per_hop", int),
    "sizes.rrep": ("sizes.rrep", int),
    "sizes.query": ("sizes.query", int),
    "sizes.query_reply": ("sizes.query_reply", int),
    "sizes.data_header": ("sizes.data_header", int),
    "sizes.data_payload": ("sizes.data_payload", int),
    "traffic.flows": ("traffic.flows", list),
    "traffic.random_flows": ("traffic.random_flows", int),
    "traffic.rate": ("traffic.rate_bps", int),
    "traffic.start": ("traffic.start_s", float),
    "traffic.stop": ("traffic.stop_s", float),
    "energy.initial": ("energy.initial_j", float),
    "energy.p_tx": ("energy.p_tx_w", float),
    "energy.p_rx": ("energy.p_rx_w", float),
    "energy.p_overhear": ("energy.p_overhear_w", float),
    "energy.p_idle": ("energy.p_idle_w", float),
    "energy.idle_tick": ("energy.idle_tick_s", float),
}


def _assign(cfg, path, value):
    obj = cfg
    parts = path.split(".")
    for p in parts[:-1]:
        obj = getattr(obj, p)
    setattr(obj, parts[-1], value)


def _coerce(key, raw, typ):
    raw = raw.strip()
    if typ is bool:
        low = raw.lower()
        if low in _BOOL_TRUE:
            return True
        if low in _BOOL_FALSE:
            return False
        raise ConfigError(f"{key}: expected on/off, got {raw!r}")
    if typ is list:
        return [tok.strip() for tok in raw.split(";") if tok.strip()]
    try:
        return typ(raw)
    except ValueError:
        raise ConfigError(f"{key}: expected {typ.__name__}, got {raw!r}")


def parse_config_text(text, base=None):
    """Build a RunConfig from config-file text.  Unknown keys are rejected."""
    cfg = base if base is not None else RunConfig()
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value, got {line!r}")
        key, raw = (part.strip() for part in line.split("=", 1))
        if key not in _KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        path, typ = _KEYS[key]
        _assign(cfg, path, _coerce(key, raw, typ))
    cfg.validate()
    return cfg


def load_config(path):
    import os

    with open(path, "r", encoding="utf-8") as fh:
        cfg = parse_config_text(fh.read())
    if cfg.topology_file and not os.path.isabs(cfg.topology_file):
        cfg.topology_file = os.path.join(os.path.dirname(os.path.abspath(path)), cfg.topology_file)
    return cfg


def set_axis(cfg, key, value):
    """Set a numeric config field by its config-file key (sweep support)."""
    if key not in _KEYS:
        raise ConfigError(f"axis: unknown key {key!r}")
    path, typ = _KEYS[key]
    if typ not in (int, float):
        raise ConfigError(f"axis: {key} is not numeric")
    _assign(cfg, path, typ(value))
    cfg.validate()
    return cfg


def flat_dict(cfg):
    """Config echo for reports: stable key order, file-key naming."""
    out = {}
    for key in sorted(_KEYS):
        path, typ = _KEYS[key]
        obj = cfg
        for p in path.split("."):
            obj = getattr(obj, p)
        out[key] = list(obj) if typ is list else obj
    return out
